"""Scenario scalars shared by all modules."""

from dataclasses import dataclass


@dataclass(frozen=True)
class SystemConfig:
    """Core scenario parameters.

    ``rho`` is the linear SNR; dB conversion belongs to the CLI layer.
    """

    M: int
    K: int
    tau: int
    rho: float
    seed: int = 0

    def __post_init__(self):
        if self.M < 1:
            raise ValueError(f"M must be >= 1, got {self.M}")
        if self.K < 1:
            raise ValueError(f"K must be >= 1, got {self.K}")
        if self.tau < self.K:
            raise ValueError(f"tau ({self.tau}) must be >= K ({self.K})")
        if self.rho <= 0:
            raise ValueError(f"rho must be positive (linear scale), got {self.rho}")
