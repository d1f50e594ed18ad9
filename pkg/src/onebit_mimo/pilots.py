"""Unit-modulus orthogonal pilot matrices built from Zadoff-Chu sequences."""

from dataclasses import dataclass

import numpy as np

ORTHOGONALITY_TOL = 1e-9


def _is_odd_prime(n: int) -> bool:
    if n < 3 or n % 2 == 0:
        return False
    d = 3
    while d * d <= n:
        if n % d == 0:
            return False
        d += 2
    return True


def zadoff_chu(tau: int, root: int) -> np.ndarray:
    """Root Zadoff-Chu sequence of odd prime length ``tau``.

    Entry n is exp(-j*pi*root*n*(n+1)/tau). Unit modulus, and at prime
    length the cyclic autocorrelation vanishes at every nonzero lag, so
    distinct cyclic shifts are mutually orthogonal.
    """
    if not _is_odd_prime(tau):
        raise ValueError(f"tau must be an odd prime, got {tau}")
    if not 1 <= root < tau:
        raise ValueError(f"root must satisfy 1 <= root < tau, got {root}")
    n = np.arange(tau)
    return np.exp(-1j * np.pi * root * n * (n + 1) / tau)


@dataclass(frozen=True)
class PilotMatrix:
    """tau x K unit-modulus pilot matrix with P^H P = tau * I_K."""

    P: np.ndarray
    tau: int
    root: int

    def __post_init__(self):
        P = np.asarray(self.P, dtype=np.complex128)
        P.setflags(write=False)
        object.__setattr__(self, "P", P)
        tau, K = P.shape
        if tau != self.tau:
            raise ValueError("tau field does not match matrix shape")
        if tau < K:
            raise ValueError(f"need tau >= K, got tau={tau}, K={K}")
        if np.abs(np.abs(P) - 1.0).max() > 1e-12:
            raise ValueError("pilot entries must be unit modulus")
        gram = P.conj().T @ P
        if np.abs(gram - tau * np.eye(K)).max() > ORTHOGONALITY_TOL:
            raise ValueError("pilot columns are not orthogonal: P^H P != tau * I")

    @property
    def K(self) -> int:
        return self.P.shape[1]

    def column(self, k: int) -> np.ndarray:
        """Pilot sequence of UE k (0-based)."""
        return self.P[:, k]


def pilot_matrix(tau: int, K: int, root: int = 1) -> PilotMatrix:
    """Orthogonal pilots: column k is the root ZC sequence cyclically
    shifted by k*floor(tau/K) positions (maximal shift separation)."""
    if K > tau:
        raise ValueError(f"cannot fit K={K} orthogonal pilots in tau={tau}")
    base = zadoff_chu(tau, root)
    stride = tau // K
    cols = [np.roll(base, k * stride) for k in range(K)]
    return PilotMatrix(np.stack(cols, axis=1), tau=tau, root=root)


def dft_pilot_matrix(tau: int, K: int) -> PilotMatrix:
    """DFT-column pilots; orthogonal for any tau (test fallback, root=0)."""
    if K > tau:
        raise ValueError(f"cannot fit K={K} orthogonal pilots in tau={tau}")
    n = np.arange(tau)
    cols = [np.exp(-2j * np.pi * n * k / tau) for k in range(K)]
    return PilotMatrix(np.stack(cols, axis=1), tau=tau, root=0)


def expand(pm: PilotMatrix, M: int):
    """Dense antenna-expanded pilots: P_bar = P (x) I_M and the per-UE
    blocks pbar_k = p_k (x) I_M.

    Defines the reference layout for tests; hot paths never materialize
    these (Kronecker products reduce to scalar-weighted block copies).
    """
    if M < 1:
        raise ValueError(f"M must be >= 1, got {M}")
    eye = np.eye(M)
    pbar_full = np.kron(pm.P, eye)
    pbar_per_ue = [np.kron(pm.P[:, k : k + 1], eye) for k in range(pm.K)]
    return pbar_full, pbar_per_ue
