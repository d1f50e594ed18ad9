"""Bussgang LMMSE channel estimation from 1-bit quantized pilot signals.

The estimator is linear in the quantized pilot vector: column k of the
channel estimate is W_k r_p, where the per-UE maps W_k fold together the
Bussgang gain, the UE covariance, the pilot structure, and the inverse
of the quantized pilot covariance. That covariance is built from its
arcsine-law closed form rather than estimated, and is only ever used
through a Hermitian factorization (no explicit inverse).
"""

import hashlib
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from . import _kernels
from .channel import CovarianceSet
from .errors import ConsistencyError
from .pilots import PilotMatrix

# Overshoot beyond this in a correlation coefficient is a bug, not rounding.
CLAMP_TOL = 1e-9
_JITTER = 1e-9


def cyp_diag(cov: CovarianceSet, tau: int, rho: float) -> np.ndarray:
    """Diagonal of the unquantized pilot covariance E[y_p y_p^H].

    With unit-modulus pilots, entry u*M + m is rho * sum_k C_k[m, m] + 1,
    independent of the pilot symbol index u; only the diagonal is formed.
    """
    if tau < 1:
        raise ValueError(f"tau must be >= 1, got {tau}")
    alpha = rho * cov.diagonals.sum(axis=0) + 1.0
    return np.tile(alpha, tau)


def crp_closed_form(
    cov: CovarianceSet, pm: PilotMatrix, rho: float, *, _omega=None
) -> np.ndarray:
    """Closed-form covariance of the quantized pilot signal.

    Diagonal entries equal rho*K + 1 exactly; off-diagonal entries apply
    the arcsine law to the normalized pilot-phase correlations. ``_omega``
    is a test-only hook replacing the arcsine map (forces the numpy path).
    """
    if pm.K != cov.K:
        raise ValueError(f"pilot matrix has K={pm.K}, covariances have K={cov.K}")
    q = rho * cov.K + 1.0
    ct_stack = np.ascontiguousarray(cov.stack.transpose(0, 2, 1))
    alpha = rho * cov.diagonals.sum(axis=0) + 1.0
    if _omega is not None:
        out, excess = _kernels._crp_numpy(ct_stack, pm.P, alpha, rho, q, omega=_omega)
    else:
        out, excess = _kernels.crp_entries(ct_stack, pm.P, alpha, rho, q)
    if excess > CLAMP_TOL:
        raise ConsistencyError(
            f"pilot correlation coefficient exceeds unit modulus by {excess:.3e}"
        )
    return out


@dataclass
class EstimatorState:
    """Precomputed BLMMSE quantities; immutable after build.

    ``w`` stacks the per-UE estimator maps W_k as (K, M, M*tau); ``crp``
    keeps the closed-form quantized pilot covariance and ``a_diag`` the
    diagonal Bussgang gain. Linear solves against crp go through the
    stored Hermitian factorization.
    """

    M: int
    K: int
    tau: int
    rho: float
    a_diag: np.ndarray
    crp: np.ndarray
    w: np.ndarray
    _cho: tuple

    @property
    def q(self) -> float:
        return self.rho * self.K + 1.0

    def solve(self, b: np.ndarray) -> np.ndarray:
        """Solve crp @ x = b through the factorization."""
        return sla.cho_solve(self._cho, b)

    def save(self, path) -> None:
        np.savez_compressed(
            path,
            meta=np.array([self.M, self.K, self.tau], dtype=np.int64),
            rho=np.float64(self.rho),
            a_diag=self.a_diag,
            crp=self.crp,
            w=self.w,
            cho=self._cho[0],
            lower=np.bool_(self._cho[1]),
        )

    @classmethod
    def load(cls, path) -> "EstimatorState":
        data = np.load(path)
        M, K, tau = (int(v) for v in data["meta"])
        return cls(
            M=M,
            K=K,
            tau=tau,
            rho=float(data["rho"]),
            a_diag=data["a_diag"],
            crp=data["crp"],
            w=data["w"],
            _cho=(data["cho"], bool(data["lower"])),
        )


def state_key(cov: CovarianceSet, pm: PilotMatrix, rho: float) -> str:
    """Content hash of (covariances, pilots, rho) for estimator caching."""
    h = hashlib.sha256()
    h.update(np.array([cov.M, cov.K, pm.tau], dtype=np.int64).tobytes())
    h.update(np.float64(rho).tobytes())
    h.update(np.ascontiguousarray(cov.stack).tobytes())
    h.update(np.ascontiguousarray(pm.P).tobytes())
    return h.hexdigest()


def build_estimator(cov: CovarianceSet, pm: PilotMatrix, rho: float) -> EstimatorState:
    """Assemble the Bussgang gain, quantized pilot covariance, and W_k maps.

    W_k is obtained by solving crp X = (sqrt(rho) C_k pbar_k^T A_p)^H and
    conjugate-transposing; the Kronecker pilot structure reduces the right
    hand side to scalar-weighted copies of the scaled covariance.
    """
    M, K, tau = cov.M, cov.K, pm.tau
    q = rho * K + 1.0
    crp = crp_closed_form(cov, pm, rho)
    a_diag = np.sqrt((2.0 / np.pi) * q / cyp_diag(cov, tau, rho))
    try:
        cho = sla.cho_factor(crp)
    except np.linalg.LinAlgError:
        # PD in exact arithmetic; one jitter retry absorbs rounding only.
        cho = sla.cho_factor(crp + _JITTER * q * np.eye(M * tau))
    a_block = a_diag[:M]
    w = np.empty((K, M, M * tau), dtype=np.complex128)
    for k in range(K):
        scaled = cov.per_ue[k] * a_block[None, :]
        b_k = np.sqrt(rho) * np.kron(pm.P[:, k].reshape(1, tau), scaled)
        w[k] = sla.cho_solve(cho, b_k.conj().T).conj().T
    return EstimatorState(
        M=M, K=K, tau=tau, rho=rho, a_diag=a_diag, crp=crp, w=w, _cho=cho
    )


def estimate(state: EstimatorState, rp: np.ndarray) -> np.ndarray:
    """Channel estimate from quantized pilots: column k is W_k rp.

    Accepts leading batch dimensions on ``rp``; returns (..., M, K).
    """
    rp = np.asarray(rp)
    if rp.shape[-1] != state.M * state.tau:
        raise ValueError(
            f"rp has length {rp.shape[-1]}, expected M*tau = {state.M * state.tau}"
        )
    return np.einsum("kmi,...i->...mk", state.w, rp)
