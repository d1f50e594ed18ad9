import numpy as np
import pytest

from onebit_mimo import detectors, theorem1
from onebit_mimo.channel import CovarianceSet
from onebit_mimo.constellation import make_qam16, make_qpsk
from onebit_mimo.pilots import pilot_matrix


def _naive_exhaustive(probe, table):
    """Independent flat scan, first minimum wins."""
    best, best_d = 0, abs(probe - table.entries[0])
    for enc in range(1, table.entries.size):
        d = abs(probe - table.entries[enc])
        if d < best_d:
            best, best_d = enc, d
    return (best // table.target_stride) % table.L


def _naive_heuristic(probe, table):
    best, best_d = 0, abs(probe - table.class_means[0])
    for l in range(1, table.L):
        d = abs(probe - table.class_means[l])
        if d < best_d:
            best, best_d = l, d
    return best


def _naive_genie(probe, interferer_digits, table):
    """Filter the full table by the interferer digits, then scan."""
    L, K, ue = table.L, table.K, table.ue
    best_l, best_d = None, None
    for enc in range(table.entries.size):
        digits = theorem1.decode_digits(enc, K, L)
        others = np.delete(digits, ue - 1)
        if not np.array_equal(others, interferer_digits):
            continue
        d = abs(probe - table.entries[enc])
        if best_d is None or d < best_d:
            best_l, best_d = digits[ue - 1], d
    return int(best_l)


@pytest.fixture(scope="module")
def table_k2(small_ctx_module):
    return theorem1.build_expectation_table(1, make_qam16(), small_ctx_module)


@pytest.fixture(scope="module")
def small_ctx_module():
    from onebit_mimo.channel import scenario_covariances
    from onebit_mimo.config import SystemConfig

    cfg = SystemConfig(M=4, K=2, tau=5, rho=1.0)
    cov = scenario_covariances(cfg, "two_ue")
    return theorem1.make_context(cov, pilot_matrix(5, 2), 1.0)


@pytest.fixture(scope="module")
def table_k1():
    cov = CovarianceSet((np.eye(4, dtype=np.complex128),))
    ctx = theorem1.make_context(cov, pilot_matrix(5, 1), 1.0)
    return theorem1.build_expectation_table(1, make_qpsk(), ctx)


def _probe_cloud(table, rng, n):
    scale = np.abs(table.entries).max()
    return scale * (rng.standard_normal(n) + 1j * rng.standard_normal(n))


class TestExhaustive:
    def test_exact_table_entry(self, table_k2):
        enc = 37
        result = detectors.detect_exhaustive(table_k2.entries[enc], table_k2)
        assert result.symbol_index == (enc // 16) % 16
        assert result.distance == 0.0
        assert result.strategy == "exhaustive"

    def test_matches_naive_scan(self, table_k2, rng):
        for probe in _probe_cloud(table_k2, rng, 200):
            got = detectors.detect_exhaustive(probe, table_k2)
            assert got.symbol_index == _naive_exhaustive(probe, table_k2)


class TestHeuristic:
    def test_exact_class_mean(self, table_k2):
        for l in (0, 7, 15):
            result = detectors.detect_heuristic(table_k2.class_means[l], table_k2)
            assert result.symbol_index == l
            assert result.distance == 0.0

    def test_matches_naive_scan(self, table_k2, rng):
        for probe in _probe_cloud(table_k2, rng, 200):
            got = detectors.detect_heuristic(probe, table_k2)
            assert got.symbol_index == _naive_heuristic(probe, table_k2)


class TestGenie:
    def test_zero_distance_on_slice(self, table_k2):
        symbols = table_k2.symbols
        enc = 7 * 16 + 11  # x1 = s_7, x2 = s_11
        result = detectors.detect_genie(
            table_k2.entries[enc], [symbols[11]], table_k2
        )
        assert result.symbol_index == 7
        assert result.distance == 0.0

    def test_matches_filter_then_scan_oracle(self, table_k2, rng):
        symbols = table_k2.symbols
        for probe in _probe_cloud(table_k2, rng, 100):
            digit = int(rng.integers(0, 16))
            got = detectors.detect_genie(probe, [symbols[digit]], table_k2)
            want = _naive_genie(probe, np.array([digit]), table_k2)
            assert got.symbol_index == want

    def test_rejects_symbol_outside_alphabet(self, table_k2):
        with pytest.raises(ValueError, match="not in the alphabet"):
            detectors.detect_genie(0j, [0.5 + 0.5j], table_k2)

    def test_genie_distance_dominates_exhaustive(self, table_k2, rng):
        symbols = table_k2.symbols
        for probe in _probe_cloud(table_k2, rng, 100):
            digit = int(rng.integers(0, 16))
            genie = detectors.detect_genie(probe, [symbols[digit]], table_k2)
            exhaustive = detectors.detect_exhaustive(probe, table_k2)
            assert genie.distance >= exhaustive.distance - 1e-15


class TestSingleUeDegeneracy:
    def test_all_strategies_agree(self, table_k1, rng):
        for probe in _probe_cloud(table_k1, rng, 200):
            a = detectors.detect_exhaustive(probe, table_k1).symbol_index
            b = detectors.detect_heuristic(probe, table_k1).symbol_index
            c = detectors.detect_genie(probe, [], table_k1).symbol_index
            assert a == b == c


class TestBatchEquivalence:
    def test_batch_matches_scalar(self, table_k2, rng):
        probes = _probe_cloud(table_k2, rng, 300)
        digits = rng.integers(0, 16, (300, 1))
        exh = detectors.detect_exhaustive_batch(probes, table_k2)
        heu = detectors.detect_heuristic_batch(probes, table_k2)
        gen = detectors.detect_genie_batch(probes, digits, table_k2)
        symbols = table_k2.symbols
        for i, probe in enumerate(probes):
            assert exh[i] == detectors.detect_exhaustive(probe, table_k2).symbol_index
            assert heu[i] == detectors.detect_heuristic(probe, table_k2).symbol_index
            want = detectors.detect_genie(probe, [symbols[digits[i, 0]]], table_k2)
            assert gen[i] == want.symbol_index

    def test_deterministic(self, table_k2, rng):
        probes = _probe_cloud(table_k2, rng, 64)
        a = detectors.detect_exhaustive_batch(probes, table_k2)
        b = detectors.detect_exhaustive_batch(probes, table_k2)
        assert np.array_equal(a, b)


def test_empty_table_rejected(table_k2):
    import dataclasses

    crippled = dataclasses.replace(table_k2, entries=np.array([], dtype=np.complex128))
    with pytest.raises(ValueError, match="empty"):
        detectors.detect_exhaustive(0j, crippled)
