"""Finite data-symbol alphabets and the minimum-distance symbol mapper."""

from dataclasses import dataclass, field

import numpy as np

_POWER_TOL = 1e-12


@dataclass(frozen=True)
class Constellation:
    """An ordered alphabet of complex data symbols with unit average power."""

    symbols: np.ndarray
    label: str = field(default="custom")

    def __post_init__(self):
        symbols = np.asarray(self.symbols, dtype=np.complex128)
        symbols.setflags(write=False)
        object.__setattr__(self, "symbols", symbols)
        if symbols.ndim != 1 or symbols.size < 2:
            raise ValueError("constellation needs at least 2 symbols in a 1-D array")
        if len(set(symbols.tolist())) != symbols.size:
            raise ValueError("constellation symbols must be distinct")
        power = np.mean(np.abs(symbols) ** 2)
        if abs(power - 1.0) > _POWER_TOL:
            raise ValueError(f"average symbol power must be 1, got {power!r}")

    @property
    def L(self) -> int:
        return self.symbols.size

    def __len__(self) -> int:
        return self.symbols.size


def make_qam16() -> Constellation:
    """16-QAM, scaled by 1/sqrt(10) so the mean symbol power is exactly 1.

    Symbol order is row-major over (Re, Im) with both real and imaginary
    levels ascending through {-3, -1, 1, 3}: index = 4*re_level + im_level.
    """
    levels = np.array([-3.0, -1.0, 1.0, 3.0])
    grid = levels[:, None] + 1j * levels[None, :]
    return Constellation(grid.ravel() / np.sqrt(10.0), label="qam16")


def make_qpsk() -> Constellation:
    """QPSK, scaled by 1/sqrt(2); same row-major (Re, Im) ordering as 16-QAM."""
    levels = np.array([-1.0, 1.0])
    grid = levels[:, None] + 1j * levels[None, :]
    return Constellation(grid.ravel() / np.sqrt(2.0), label="qpsk")


_FACTORIES = {"qam16": make_qam16, "qpsk": make_qpsk}


def by_name(name: str) -> Constellation:
    try:
        return _FACTORIES[name]()
    except KeyError:
        raise ValueError(
            f"unknown constellation {name!r}; choose from {sorted(_FACTORIES)}"
        ) from None


def nearest(point: complex, candidates) -> int:
    """Index of the candidate closest to ``point`` in Euclidean distance.

    Ties are broken by the lowest index so results are reproducible.
    """
    cand = np.asarray(candidates, dtype=np.complex128)
    if cand.size == 0:
        raise ValueError("candidate list must be non-empty")
    return int(np.argmin(np.abs(cand - point)))
