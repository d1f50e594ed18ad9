"""Closed-form expectation of MRC soft-estimated symbols.

For a fixed data-symbol vector, the soft symbol of a target UE has a
closed-form mean built from arcsine-law covariances of the quantized
data and pilot signals. This module provides the scalar building blocks
(the normalized correlations and the arcsine map), the data/pilot
cross-covariance, the expectation itself, and exhaustive expectation
tables over every data-symbol vector of an alphabet.

UE indices in the public API are 1-based, matching the convention that
UE 1 owns the most significant digit of a table encoding; antenna and
pilot-symbol indices are 0-based.
"""

import csv
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .blmmse import EstimatorState, build_estimator
from .channel import CovarianceSet
from .constellation import Constellation
from .errors import ConsistencyError
from .pilots import PilotMatrix

OMEGA_DOMAIN_TOL = 1e-9
DEFAULT_TABLE_CAP = 1_000_000


def omega(x):
    """The arcsine-law map (2/pi) * arcsin(x), clamped to [-1, 1].

    Inputs may exceed unit magnitude by at most 1e-9 (rounding); anything
    larger raises, since the argument is a correlation coefficient.
    """
    arr = np.asarray(x, dtype=np.float64)
    peak = np.abs(arr).max() if arr.size else 0.0
    if peak > 1.0 + OMEGA_DOMAIN_TOL:
        raise ValueError(f"omega argument magnitude {peak!r} exceeds 1 + 1e-9")
    out = (2.0 / np.pi) * np.arcsin(np.clip(arr, -1.0, 1.0))
    return float(out) if np.isscalar(x) else out


def alpha_vector(cov: CovarianceSet, rho: float) -> np.ndarray:
    """Per-antenna variance of the received pilot signal (length M)."""
    return rho * cov.diagonals.sum(axis=0) + 1.0


def beta_vector(cov: CovarianceSet, rho: float, x: np.ndarray) -> np.ndarray:
    """Per-antenna variance of the received data signal for symbols ``x``."""
    x = np.asarray(x)
    if x.shape != (cov.K,):
        raise ValueError(f"x must have shape ({cov.K},), got {x.shape}")
    return rho * (np.abs(x) ** 2 @ cov.diagonals) + 1.0


@dataclass(frozen=True)
class ScalarKernels:
    """The per-antenna variance vectors entering every normalization."""

    alpha: np.ndarray
    beta: np.ndarray


def scalar_kernels(cov: CovarianceSet, rho: float, x) -> ScalarKernels:
    return ScalarKernels(alpha_vector(cov, rho), beta_vector(cov, rho, np.asarray(x)))


def zeta(cov: CovarianceSet, pm: PilotMatrix, rho, m: int, n: int, u: int, v: int) -> complex:
    """Normalized pilot/pilot correlation coefficient (0-based indices).

    Note the transpose: the (m, n) entry of sum_k C_k^T P[u,k] conj(P[v,k]),
    scaled by rho / sqrt(alpha_m alpha_n).
    """
    alpha = alpha_vector(cov, rho)
    acc = 0j
    for k in range(cov.K):
        acc += cov.per_ue[k][n, m] * pm.P[u, k] * np.conj(pm.P[v, k])
    return rho * acc / np.sqrt(alpha[m] * alpha[n])


def eta(cov: CovarianceSet, pm: PilotMatrix, rho, x, m: int, n: int, u: int) -> complex:
    """Normalized data/pilot correlation coefficient (0-based indices).

    No transpose here, and the denominators pair beta_m with alpha_n.
    """
    x = np.asarray(x)
    alpha = alpha_vector(cov, rho)
    beta = beta_vector(cov, rho, x)
    acc = 0j
    for k in range(cov.K):
        acc += cov.per_ue[k][m, n] * x[k] * pm.P[u, k]
    return rho * acc / np.sqrt(alpha[n] * beta[m])


def crrp_closed_form(cov: CovarianceSet, pm: PilotMatrix, rho: float, x) -> np.ndarray:
    """Closed-form cross-covariance E[r r_p^H] for data symbols ``x``.

    Entry (m, u*M + n) is (rho*K+1) * (omega(Re eta) + j*omega(Im eta));
    the imaginary part enters with a plus sign, unlike the pilot
    covariance. Shape (M, M*tau).
    """
    x = np.asarray(x, dtype=np.complex128)
    if pm.K != cov.K:
        raise ValueError(f"pilot matrix has K={pm.K}, covariances have K={cov.K}")
    if x.shape != (cov.K,):
        raise ValueError(f"x must have shape ({cov.K},), got {x.shape}")
    q = rho * cov.K + 1.0
    alpha = alpha_vector(cov, rho)
    beta = beta_vector(cov, rho, x)
    b = np.einsum("uk,kmn->umn", pm.P * x[None, :], cov.stack)
    grid = rho * b / (np.sqrt(beta)[None, :, None] * np.sqrt(alpha)[None, None, :])
    re, im, excess = _kernels._clip_excess(grid.real, grid.imag)
    if excess > OMEGA_DOMAIN_TOL:
        raise ConsistencyError(
            f"data/pilot correlation coefficient exceeds unit modulus by {excess:.3e}"
        )
    out = q * (_kernels._omega_np(re) + 1j * _kernels._omega_np(im))
    return out.transpose(1, 0, 2).reshape(cov.M, cov.M * pm.tau)


@dataclass
class Theorem1Context:
    """Precomputed arrays shared by all expectation evaluations.

    ``w_conj`` holds conj(W_k) reshaped to (K, tau, M, M) blocks so the
    trace pairing with the cross-covariance is a flat elementwise sum.
    """

    cov: CovarianceSet
    pm: PilotMatrix
    rho: float
    state: EstimatorState
    alpha: np.ndarray = field(init=False)
    diag_c: np.ndarray = field(init=False)
    c_stack: np.ndarray = field(init=False)
    w_conj: np.ndarray = field(init=False)

    def __post_init__(self):
        M, K, tau = self.cov.M, self.cov.K, self.pm.tau
        self.alpha = alpha_vector(self.cov, self.rho)
        self.diag_c = np.ascontiguousarray(self.cov.diagonals)
        self.c_stack = np.ascontiguousarray(self.cov.stack)
        self.w_conj = np.ascontiguousarray(
            self.state.w.conj().reshape(K, M, tau, M).transpose(0, 2, 1, 3)
        )

    @property
    def q(self) -> float:
        return self.rho * self.cov.K + 1.0


def make_context(
    cov: CovarianceSet, pm: PilotMatrix, rho: float, state: EstimatorState | None = None
) -> Theorem1Context:
    """Bundle covariances, pilots, and estimator for expectation work."""
    if state is None:
        state = build_estimator(cov, pm, rho)
    return Theorem1Context(cov=cov, pm=pm, rho=rho, state=state)


def expected_soft_symbol(k: int, x, ctx: Theorem1Context) -> complex:
    """Expected MRC soft symbol of UE ``k`` (1-based) for symbols ``x``.

    Evaluated as the trace pairing of the precomputed estimator map with
    the closed-form cross-covariance, entrywise, never forming the
    (M*tau, M*tau) product.
    """
    K = ctx.cov.K
    if not 1 <= k <= K:
        raise ValueError(f"UE index must satisfy 1 <= k <= {K}, got {k}")
    x = np.asarray(x, dtype=np.complex128)
    if x.shape != (K,):
        raise ValueError(f"x must have shape ({K},), got {x.shape}")
    value, excess = _kernels._expectation_one_np(
        ctx.c_stack,
        ctx.pm.P,
        ctx.alpha,
        ctx.diag_c,
        ctx.w_conj[k - 1],
        x,
        ctx.rho,
        ctx.q,
    )
    if excess > OMEGA_DOMAIN_TOL:
        raise ConsistencyError(
            f"data/pilot correlation coefficient exceeds unit modulus by {excess:.3e}"
        )
    return complex(value)


def decode_digits(encodings, K: int, L: int) -> np.ndarray:
    """Radix-L digits of table encodings, UE 1 most significant.

    Returns shape (..., K) with digit j (0-based) belonging to UE j+1.
    """
    encodings = np.asarray(encodings)
    pows = L ** np.arange(K - 1, -1, -1)
    return (encodings[..., None] // pows) % L


def encode_digits(digits, L: int) -> np.ndarray:
    """Inverse of :func:`decode_digits` over the trailing axis."""
    digits = np.asarray(digits)
    K = digits.shape[-1]
    pows = L ** np.arange(K - 1, -1, -1)
    return digits @ pows


@dataclass
class ExpectationTable:
    """Expected soft symbols of one UE over all data-symbol vectors.

    ``entries[enc]`` is the expectation for the symbol vector whose
    radix-L encoding is ``enc`` (UE 1 = most significant digit), and
    ``class_means[l]`` averages the entries with the target UE fixed to
    symbol l (the heuristic detector's centroids).
    """

    ue: int
    K: int
    symbols: np.ndarray
    entries: np.ndarray
    class_means: np.ndarray

    @property
    def L(self) -> int:
        return self.symbols.size

    @property
    def target_stride(self) -> int:
        return self.L ** (self.K - self.ue)

    def target_digits(self) -> np.ndarray:
        """Target-UE symbol index of every encoding."""
        return (np.arange(self.entries.size) // self.target_stride) % self.L

    def class_indices(self, l: int) -> np.ndarray:
        """Encodings whose target-UE symbol index equals ``l``."""
        return np.nonzero(self.target_digits() == l)[0]


def build_expectation_table(
    k: int,
    constellation: Constellation,
    ctx: Theorem1Context,
    max_entries: int = DEFAULT_TABLE_CAP,
) -> ExpectationTable:
    """Evaluate the expectation for every x in S^K, in radix-L order."""
    K = ctx.cov.K
    if not 1 <= k <= K:
        raise ValueError(f"UE index must satisfy 1 <= k <= {K}, got {k}")
    L = constellation.L
    total = L**K
    if total > max_entries:
        raise ValueError(
            f"expectation table needs L^K = {total} entries, over the cap of"
            f" {max_entries}; raise max_entries to proceed"
        )
    entries, excess = _kernels.expectation_values(
        ctx.c_stack,
        ctx.pm.P,
        ctx.alpha,
        ctx.diag_c,
        ctx.w_conj[k - 1],
        constellation.symbols,
        K,
        ctx.rho,
        ctx.q,
    )
    if excess > OMEGA_DOMAIN_TOL:
        raise ConsistencyError(
            f"data/pilot correlation coefficient exceeds unit modulus by {excess:.3e}"
        )
    digits = (np.arange(total) // (L ** (K - k))) % L
    class_means = np.array([entries[digits == l].mean() for l in range(L)])
    return ExpectationTable(
        ue=k, K=K, symbols=constellation.symbols, entries=entries, class_means=class_means
    )


def export_expectation_csv(table: ExpectationTable, path) -> None:
    """Columns: x_encoding, ue, re_E, im_E (one row per symbol vector)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x_encoding", "ue", "re_E", "im_E"])
        for enc, value in enumerate(table.entries):
            writer.writerow([enc, table.ue, repr(float(value.real)), repr(float(value.imag))])


def export_class_means_csv(table: ExpectationTable, path) -> None:
    """Columns: ue, l, re_Ebar, im_Ebar (one row per target symbol)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["ue", "l", "re_Ebar", "im_Ebar"])
        for l, value in enumerate(table.class_means):
            writer.writerow([table.ue, l, repr(float(value.real)), repr(float(value.imag))])
