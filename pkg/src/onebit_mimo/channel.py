"""One-ring spatial covariances and correlated Rayleigh channel sampling."""

import csv
from dataclasses import dataclass, field

import numpy as np

from .config import SystemConfig

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-9
# Fixed quadrature resolution keeps covariance construction deterministic.
QUAD_POINTS = 2048

# UE center angles (degrees, broadside = 0) per scenario; separations of
# 120 deg (2 UEs) and 60 deg (3 UEs), symmetric about broadside.
SCENARIO_ANGLES = {
    "two_ue": (-60.0, 60.0),
    "three_ue": (-60.0, 0.0, 60.0),
}
ANGULAR_SPREAD_DEG = 30.0


def complex_normal(rng: np.random.Generator, shape) -> np.ndarray:
    """Circularly-symmetric complex Gaussian draws with unit variance."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def one_ring_covariance(
    M: int,
    center_angle: float,
    angular_spread: float,
    spacing: float = 0.5,
    n_quad: int = QUAD_POINTS,
) -> np.ndarray:
    """Spatial covariance of a ULA under a uniform ring of scatterers.

    Entry (m, n) averages exp(j*2*pi*spacing*(m-n)*sin(phi)) over the
    angular interval [center - spread, center + spread] (degrees) with a
    fixed midpoint rule, then the matrix is rescaled so its trace equals M.

    Parameters
    ----------
    M : int
        Number of antennas.
    center_angle : float
        Nominal arrival angle in degrees (0 = broadside).
    angular_spread : float
        Half-width of the arrival interval in degrees; must be in (0, 180].
    spacing : float
        Antenna spacing in wavelengths (default half-wavelength).

    Returns
    -------
    np.ndarray
        Hermitian PSD matrix of shape (M, M) with trace M.
    """
    if M < 1:
        raise ValueError(f"M must be >= 1, got {M}")
    if not 0.0 < angular_spread <= 180.0:
        raise ValueError(f"angular_spread must be in (0, 180], got {angular_spread}")
    if spacing <= 0:
        raise ValueError(f"spacing must be positive, got {spacing}")
    theta = np.deg2rad(center_angle)
    delta = np.deg2rad(angular_spread)
    step = 2.0 * delta / n_quad
    phi = theta - delta + (np.arange(n_quad) + 0.5) * step
    # Midpoint rule as a positive mixture of rank-1 terms: exactly PSD.
    steering = np.exp(
        2j * np.pi * spacing * np.arange(M)[:, None] * np.sin(phi)[None, :]
    )
    cov = (steering @ steering.conj().T) / n_quad
    cov = 0.5 * (cov + cov.conj().T)
    return cov * (M / np.trace(cov).real)


@dataclass
class CovarianceSet:
    """Per-UE spatial covariance matrices; treat as immutable once built."""

    per_ue: tuple
    M: int = field(init=False)
    K: int = field(init=False)

    def __post_init__(self):
        mats = tuple(np.asarray(c, dtype=np.complex128) for c in self.per_ue)
        if not mats:
            raise ValueError("need at least one covariance matrix")
        M = mats[0].shape[0]
        for c in mats:
            if c.shape != (M, M):
                raise ValueError("all covariance matrices must share shape (M, M)")
            if np.abs(c - c.conj().T).max() > HERMITIAN_TOL * max(1.0, np.abs(c).max()):
                raise ValueError("covariance matrix is not Hermitian")
            if abs(np.trace(c).real - M) > TRACE_TOL * M:
                raise ValueError(f"trace must equal M={M}, got {np.trace(c).real!r}")
        for c in mats:
            c.setflags(write=False)
        self.per_ue = mats
        self.M = M
        self.K = len(mats)
        self._stack = None
        self._sqrt = None

    @property
    def stack(self) -> np.ndarray:
        """(K, M, M) view of the per-UE matrices."""
        if self._stack is None:
            self._stack = np.stack(self.per_ue)
        return self._stack

    @property
    def diagonals(self) -> np.ndarray:
        """(K, M) real diagonals of the per-UE matrices."""
        return np.stack([c.diagonal().real for c in self.per_ue])

    def block_diag(self) -> np.ndarray:
        """Assemble the (MK, MK) block-diagonal covariance on demand."""
        out = np.zeros((self.M * self.K, self.M * self.K), dtype=np.complex128)
        for k, c in enumerate(self.per_ue):
            out[k * self.M : (k + 1) * self.M, k * self.M : (k + 1) * self.M] = c
        return out

    def sqrt_factors(self) -> np.ndarray:
        """(K, M, M) factors F_k with F_k F_k^H = C_k, via eigendecomposition.

        Eigenvalues below zero (quadrature rounding) are clipped to 0.
        """
        if self._sqrt is None:
            factors = []
            for c in self.per_ue:
                vals, vecs = np.linalg.eigh(c)
                vals = np.clip(vals, 0.0, None)
                factors.append(vecs * np.sqrt(vals)[None, :])
            self._sqrt = np.stack(factors)
        return self._sqrt


def scenario_covariances(config: SystemConfig, scenario: str) -> CovarianceSet:
    """One-ring covariances for the built-in 2-UE / 3-UE scenarios."""
    if scenario not in SCENARIO_ANGLES:
        raise ValueError(f"unknown scenario {scenario!r}; choose from {sorted(SCENARIO_ANGLES)}")
    angles = SCENARIO_ANGLES[scenario]
    if config.K != len(angles):
        raise ValueError(
            f"scenario {scenario!r} implies K={len(angles)}, config has K={config.K}"
        )
    mats = tuple(
        one_ring_covariance(config.M, angle, ANGULAR_SPREAD_DEG) for angle in angles
    )
    return CovarianceSet(mats)


@dataclass(frozen=True)
class ChannelRealization:
    """One uplink channel draw; ``h`` is the column-stacked form of ``H``."""

    H: np.ndarray

    @property
    def h(self) -> np.ndarray:
        return self.H.ravel(order="F")


def sample_channel_batch(cov: CovarianceSet, rng: np.random.Generator, n: int) -> np.ndarray:
    """Draw ``n`` i.i.d. channel matrices, shape (n, M, K).

    Column k is F_k g with g standard complex Gaussian; one (n, M) block of
    Gaussians is drawn per UE, in UE order, so the stream usage is fixed.
    """
    factors = cov.sqrt_factors()
    out = np.empty((n, cov.M, cov.K), dtype=np.complex128)
    for k in range(cov.K):
        g = complex_normal(rng, (n, cov.M))
        out[:, :, k] = g @ factors[k].T
    return out


def sample_channels(cov: CovarianceSet, rng: np.random.Generator) -> ChannelRealization:
    """Draw a single correlated Rayleigh realization H (M x K)."""
    return ChannelRealization(sample_channel_batch(cov, rng, 1)[0])


def export_covariances_csv(cov: CovarianceSet, path) -> None:
    """Dump all covariance matrices for cross-implementation diffing.

    One CSV row per matrix row; columns interleave real and imaginary
    parts: re(c[0]), im(c[0]), re(c[1]), im(c[1]), ...
    """
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for c in cov.per_ue:
            for row in c:
                interleaved = np.empty(2 * row.size)
                interleaved[0::2] = row.real
                interleaved[1::2] = row.imag
                writer.writerow([repr(float(v)) for v in interleaved])
