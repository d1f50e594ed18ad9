import csv

import numpy as np
import pytest
from scipy.integrate import quad

from onebit_mimo.channel import (
    CovarianceSet,
    one_ring_covariance,
    export_covariances_csv,
    sample_channel_batch,
    sample_channels,
    scenario_covariances,
)
from onebit_mimo.config import SystemConfig


def _quad_oracle(M, theta_deg, spread_deg, spacing=0.5):
    """Independent high-accuracy integrator for the one-ring entries."""
    theta = np.deg2rad(theta_deg)
    delta = np.deg2rad(spread_deg)
    out = np.empty((M, M), dtype=np.complex128)
    for m in range(M):
        for n in range(M):
            d = m - n
            re = quad(
                lambda p: np.cos(2 * np.pi * spacing * d * np.sin(p)),
                theta - delta,
                theta + delta,
                limit=200,
            )[0]
            im = quad(
                lambda p: np.sin(2 * np.pi * spacing * d * np.sin(p)),
                theta - delta,
                theta + delta,
                limit=200,
            )[0]
            out[m, n] = (re + 1j * im) / (2 * delta)
    return out * (M / np.trace(out).real)


class TestOneRing:
    def test_unit_diagonal_after_normalization(self):
        for M, theta in ((3, 0.0), (8, 45.0), (16, -60.0)):
            cov = one_ring_covariance(M, theta, 30.0)
            assert np.allclose(cov.diagonal(), 1.0, atol=1e-12)

    def test_zero_spread_limit_is_rank_one(self):
        cov = one_ring_covariance(2, 0.0, 1e-3)
        assert np.allclose(cov, np.ones((2, 2)), atol=1e-8)

    def test_against_quadrature_oracle(self):
        cov = one_ring_covariance(4, 30.0, 30.0)
        oracle = _quad_oracle(4, 30.0, 30.0)
        assert np.abs(cov - oracle).max() < 1e-5
        assert np.abs(cov[~np.eye(4, dtype=bool)]).max() < 1.0
        assert np.linalg.eigvalsh(cov).min() >= -1e-9 * 4

    def test_mirror_angle_conjugates(self):
        a = one_ring_covariance(6, 40.0, 30.0)
        b = one_ring_covariance(6, -40.0, 30.0)
        assert np.allclose(a, b.conj(), atol=1e-12)

    def test_rejects_bad_arguments(self):
        with pytest.raises(ValueError, match="angular_spread"):
            one_ring_covariance(4, 0.0, 0.0)
        with pytest.raises(ValueError, match="angular_spread"):
            one_ring_covariance(4, 0.0, -5.0)
        with pytest.raises(ValueError, match="spacing"):
            one_ring_covariance(4, 0.0, 30.0, spacing=0.0)
        with pytest.raises(ValueError, match="M"):
            one_ring_covariance(0, 0.0, 30.0)


class TestScenarios:
    def test_two_ue_center_angles(self):
        cfg = SystemConfig(M=6, K=2, tau=5, rho=1.0)
        cov = scenario_covariances(cfg, "two_ue")
        assert cov.K == 2
        assert np.allclose(cov.per_ue[0], one_ring_covariance(6, -60.0, 30.0))
        assert np.allclose(cov.per_ue[1], one_ring_covariance(6, 60.0, 30.0))

    def test_three_ue_center_angles(self):
        cfg = SystemConfig(M=4, K=3, tau=7, rho=1.0)
        cov = scenario_covariances(cfg, "three_ue")
        assert cov.K == 3
        assert np.allclose(cov.per_ue[1], one_ring_covariance(4, 0.0, 30.0))

    def test_traces_equal_m(self):
        cfg = SystemConfig(M=12, K=3, tau=7, rho=1.0)
        cov = scenario_covariances(cfg, "three_ue")
        for c in cov.per_ue:
            assert abs(np.trace(c).real - 12) < 1e-9

    def test_scenario_k_mismatch(self):
        cfg = SystemConfig(M=4, K=3, tau=7, rho=1.0)
        with pytest.raises(ValueError, match="scenario"):
            scenario_covariances(cfg, "two_ue")

    def test_block_diag_assembly(self):
        cfg = SystemConfig(M=3, K=2, tau=5, rho=1.0)
        cov = scenario_covariances(cfg, "two_ue")
        blk = cov.block_diag()
        assert blk.shape == (6, 6)
        assert np.allclose(blk[:3, :3], cov.per_ue[0])
        assert np.allclose(blk[3:, 3:], cov.per_ue[1])
        assert np.allclose(blk[:3, 3:], 0.0)


class TestCovarianceSet:
    def test_rejects_non_hermitian(self):
        bad = np.array([[1.0, 1.0], [0.0, 1.0]], dtype=np.complex128)
        with pytest.raises(ValueError, match="Hermitian"):
            CovarianceSet((bad,))

    def test_rejects_bad_trace(self):
        with pytest.raises(ValueError, match="trace"):
            CovarianceSet((2.0 * np.eye(3, dtype=np.complex128),))


class TestSampling:
    def test_white_case_unit_variance(self):
        cov = CovarianceSet((np.eye(4, dtype=np.complex128),))
        draws = sample_channel_batch(cov, np.random.default_rng(1), 100_000)
        var = np.mean(np.abs(draws[:, :, 0]) ** 2, axis=0)
        assert np.allclose(var, 1.0, atol=0.02)

    def test_empirical_covariance_matches(self):
        cfg = SystemConfig(M=4, K=2, tau=5, rho=1.0)
        cov = scenario_covariances(cfg, "two_ue")
        draws = sample_channel_batch(cov, np.random.default_rng(2), 100_000)
        for k in range(2):
            h = draws[:, :, k]
            emp = (h.T @ h.conj()) / h.shape[0]
            assert np.abs(emp - cov.per_ue[k]).max() < 0.03

    def test_fixed_seed_reproducible(self):
        cfg = SystemConfig(M=4, K=2, tau=5, rho=1.0)
        cov = scenario_covariances(cfg, "two_ue")
        a = sample_channels(cov, np.random.default_rng(7))
        b = sample_channels(cov, np.random.default_rng(7))
        assert np.array_equal(a.H, b.H)

    def test_vec_stacks_columns(self):
        cfg = SystemConfig(M=3, K=2, tau=5, rho=1.0)
        cov = scenario_covariances(cfg, "two_ue")
        real = sample_channels(cov, np.random.default_rng(3))
        assert np.array_equal(real.h[:3], real.H[:, 0])
        assert np.array_equal(real.h[3:], real.H[:, 1])


def test_export_covariances_csv(tmp_path):
    cfg = SystemConfig(M=3, K=2, tau=5, rho=1.0)
    cov = scenario_covariances(cfg, "two_ue")
    path = tmp_path / "cov.csv"
    export_covariances_csv(cov, path)
    with open(path, newline="") as fh:
        rows = [[float(v) for v in row] for row in csv.reader(fh)]
    assert len(rows) == 6  # K * M rows
    rebuilt = np.array(rows[0])[0::2] + 1j * np.array(rows[0])[1::2]
    assert np.allclose(rebuilt, cov.per_ue[0][0])
