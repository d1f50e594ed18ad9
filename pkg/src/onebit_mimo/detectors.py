"""Minimum-distance data detection over expectation tables.

Three strategies share the same decision rule (closest expected value)
but differ in the candidate set: the exhaustive search scans all L^K
table entries, the heuristic compares against the L per-symbol class
means, and the genie-aided bound restricts the exhaustive scan to the L
entries consistent with the true interferer symbols. Ties always break
toward the lowest encoding or index.

Scalar functions mirror the per-trial decision; the *_batch variants
vectorize over probe arrays and are what the Monte-Carlo harness uses.
"""

from dataclasses import dataclass

import numpy as np

from .theorem1 import ExpectationTable

_SYMBOL_MATCH_TOL = 1e-9


@dataclass(frozen=True)
class DetectionResult:
    """Outcome of one symbol decision for one UE."""

    ue: int
    symbol_index: int
    strategy: str
    distance: float


def _check_table(table: ExpectationTable) -> None:
    if table.entries.size == 0:
        raise ValueError("expectation table is empty")


def detect_exhaustive(xhat_k: complex, table: ExpectationTable) -> DetectionResult:
    """Scan all L^K expected values; report the target-UE digit of the winner."""
    _check_table(table)
    enc, dist = _argmin_scalar(xhat_k, table.entries)
    l_star = (enc // table.target_stride) % table.L
    return DetectionResult(table.ue, int(l_star), "exhaustive", dist)


def detect_heuristic(xhat_k: complex, table: ExpectationTable) -> DetectionResult:
    """Scan the L class means (search size L instead of L^K)."""
    _check_table(table)
    l_star, dist = _argmin_scalar(xhat_k, table.class_means)
    return DetectionResult(table.ue, int(l_star), "heuristic", dist)


def detect_genie(xhat_k: complex, true_interferers, table: ExpectationTable) -> DetectionResult:
    """Exhaustive scan restricted to entries matching the true interferers.

    ``true_interferers`` lists the K-1 interfering UEs' transmitted
    symbols (values from the alphabet, in UE order with the target
    omitted); each must match an alphabet symbol to within 1e-9.
    """
    _check_table(table)
    interferers = np.atleast_1d(np.asarray(true_interferers, dtype=np.complex128))
    if interferers.shape != (table.K - 1,):
        raise ValueError(
            f"expected {table.K - 1} interferer symbols, got shape {interferers.shape}"
        )
    digits = np.empty(table.K - 1, dtype=np.int64)
    for j, symbol in enumerate(interferers):
        dist = np.abs(table.symbols - symbol)
        idx = int(np.argmin(dist))
        if dist[idx] > _SYMBOL_MATCH_TOL:
            raise ValueError(f"interferer symbol {symbol!r} is not in the alphabet")
        digits[j] = idx
    candidates = genie_slice(table, digits[None, :])[0]
    l_star, dist = _argmin_scalar(xhat_k, table.entries[candidates])
    return DetectionResult(table.ue, int(l_star), "genie", dist)


def genie_slice(table: ExpectationTable, interferer_digits: np.ndarray) -> np.ndarray:
    """Encodings of the L candidates per row of interferer symbol indices.

    ``interferer_digits`` has shape (B, K-1), ordered by UE with the
    target UE omitted; the result has shape (B, L), ascending in the
    target digit l.
    """
    L, K, ue = table.L, table.K, table.ue
    strides = L ** np.arange(K - 1, -1, -1)
    other = np.delete(strides, ue - 1)
    base = interferer_digits @ other
    return base[:, None] + strides[ue - 1] * np.arange(L)[None, :]


def _argmin_scalar(probe: complex, candidates: np.ndarray):
    d = np.abs(np.asarray(candidates) - probe)
    idx = int(np.argmin(d))
    return idx, float(d[idx])


def detect_exhaustive_batch(xhat: np.ndarray, table: ExpectationTable) -> np.ndarray:
    """Vectorized exhaustive detection; returns symbol indices, shape (B,)."""
    _check_table(table)
    enc = np.argmin(np.abs(xhat[:, None] - table.entries[None, :]), axis=1)
    return (enc // table.target_stride) % table.L


def detect_heuristic_batch(xhat: np.ndarray, table: ExpectationTable) -> np.ndarray:
    """Vectorized heuristic detection; returns symbol indices, shape (B,)."""
    _check_table(table)
    return np.argmin(np.abs(xhat[:, None] - table.class_means[None, :]), axis=1)


def detect_genie_batch(
    xhat: np.ndarray, interferer_digits: np.ndarray, table: ExpectationTable
) -> np.ndarray:
    """Vectorized genie detection from interferer symbol indices (B, K-1)."""
    _check_table(table)
    candidates = genie_slice(table, interferer_digits)
    return np.argmin(np.abs(xhat[:, None] - table.entries[candidates]), axis=1)
