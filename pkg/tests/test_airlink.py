import numpy as np
import pytest

from onebit_mimo.airlink import (
    mrc_soft_symbols,
    quantize,
    uplink_data_block,
    uplink_pilot_block,
    vec_columns,
)
from onebit_mimo.pilots import PilotMatrix, dft_pilot_matrix, expand, pilot_matrix


class TestQuantize:
    def test_sign_evaluation(self):
        out = quantize(np.array(3.0 - 0.5j), rho=1.0, K=2)
        assert out == np.sqrt(1.5) * (1 - 1j)

    def test_sign_of_zero_is_plus_one(self):
        assert quantize(np.array(0j), rho=1.0, K=1) == 1 + 1j

    def test_output_modulus_matches_input_variance(self, rng):
        x = rng.standard_normal(5000) + 1j * rng.standard_normal(5000)
        out = quantize(x, rho=2.5, K=3)
        assert np.allclose(np.abs(out) ** 2, 2.5 * 3 + 1, rtol=1e-14)

    def test_idempotent_up_to_scale(self, rng):
        x = rng.standard_normal(1000) + 1j * rng.standard_normal(1000)
        once = quantize(x, rho=1.0, K=2)
        assert np.array_equal(quantize(once, rho=1.0, K=2), once)

    def test_positive_scaling_invariance(self, rng):
        x = rng.standard_normal(1000) + 1j * rng.standard_normal(1000)
        assert np.array_equal(quantize(3.7 * x, 1.0, 2), quantize(x, 1.0, 2))

    def test_rejects_bad_parameters(self):
        with pytest.raises(ValueError, match="rho"):
            quantize(np.array(1j), rho=0.0, K=1)
        with pytest.raises(ValueError, match="K"):
            quantize(np.array(1j), rho=1.0, K=0)


class TestDataBlock:
    def test_pure_noise_case(self):
        H = np.zeros((4, 2), dtype=np.complex128)
        x = np.zeros(2, dtype=np.complex128)
        block = uplink_data_block(
            np.broadcast_to(H, (100_000, 4, 2)),
            np.broadcast_to(x, (100_000, 2)),
            rho=1.0,
            rng=np.random.default_rng(0),
        )
        assert abs(np.mean(np.abs(block.y) ** 2) - 1.0) < 0.02

    def test_noiseless_hook_is_exact(self, rng):
        H = rng.standard_normal((4, 2)) + 1j * rng.standard_normal((4, 2))
        x = np.array([1 + 1j, -1 + 0.5j]) / np.sqrt(2)
        block = uplink_data_block(H, x, rho=4.0, noise=np.zeros(4, dtype=np.complex128))
        assert np.allclose(block.y, 2.0 * H @ x, atol=1e-15)

    def test_quantized_codomain(self, rng):
        H = rng.standard_normal((4, 2)) + 1j * rng.standard_normal((4, 2))
        x = np.array([1.0 + 0j, 1j])
        block = uplink_data_block(H, x, rho=1.0, rng=np.random.default_rng(5))
        lattice = np.sqrt(1.5) * np.array([1 + 1j, 1 - 1j, -1 + 1j, -1 - 1j])
        assert np.all(np.isin(block.r, lattice))

    def test_dimension_mismatch(self, rng):
        H = np.zeros((4, 2), dtype=np.complex128)
        with pytest.raises(ValueError, match="symbols"):
            uplink_data_block(H, np.zeros(3, dtype=np.complex128), 1.0, rng)


class TestPilotBlock:
    def test_rank_one_pilot_structure(self, rng):
        # Constant all-ones pilot, no noise: every column of Yp is sqrt(rho) h1.
        H = (rng.standard_normal((4, 1)) + 1j * rng.standard_normal((4, 1)))
        pm = dft_pilot_matrix(5, 1)
        block = uplink_pilot_block(
            H, pm, rho=4.0, noise=np.zeros((4, 5), dtype=np.complex128)
        )
        for u in range(5):
            assert np.allclose(block.Yp[:, u], 2.0 * H[:, 0], atol=1e-14)

    def test_vectorization_identity(self, rng):
        # vec(sqrt(rho) H P^H) equals sqrt(rho) conj(Pbar) h elementwise.
        M, tau, K, rho = 3, 5, 2, 2.0
        H = rng.standard_normal((M, K)) + 1j * rng.standard_normal((M, K))
        pm = pilot_matrix(tau, K)
        block = uplink_pilot_block(H, pm, rho, noise=np.zeros((M, tau), dtype=np.complex128))
        pbar, _ = expand(pm, M)
        h = H.ravel(order="F")
        assert np.abs(block.yp - np.sqrt(rho) * pbar.conj() @ h).max() < 1e-12

    def test_conditional_covariance_mc(self, rng):
        M, tau, K, rho = 2, 5, 2, 1.0
        H = rng.standard_normal((M, K)) + 1j * rng.standard_normal((M, K))
        pm = pilot_matrix(tau, K)
        n = 100_000
        block = uplink_pilot_block(
            np.broadcast_to(H, (n, M, K)), pm, rho, rng=np.random.default_rng(11)
        )
        emp = (block.yp.T @ block.yp.conj()) / n
        pbar, _ = expand(pm, M)
        h = H.ravel(order="F")
        mean = np.sqrt(rho) * pbar.conj() @ h
        expected = np.outer(mean, mean.conj()) + np.eye(M * tau)
        assert np.abs(emp - expected).max() < 0.03

    def test_vec_columns_layout(self):
        a = np.arange(6).reshape(2, 3)
        assert np.array_equal(vec_columns(a), np.array([0, 3, 1, 4, 2, 5]))


class TestMrc:
    def test_unit_vector_combiner_selects_antenna(self, rng):
        r = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        H_hat = np.zeros((4, 2), dtype=np.complex128)
        H_hat[0, 0] = 1.0
        xhat = mrc_soft_symbols(H_hat, r)
        assert xhat[0] == r[0]
        assert xhat[1] == 0

    def test_zero_signal_gives_zero(self):
        H_hat = np.ones((4, 2), dtype=np.complex128)
        assert np.array_equal(
            mrc_soft_symbols(H_hat, np.zeros(4, dtype=np.complex128)), np.zeros(2)
        )

    def test_matches_naive_double_loop(self, rng):
        M, K = 6, 3
        H_hat = rng.standard_normal((M, K)) + 1j * rng.standard_normal((M, K))
        r = rng.standard_normal(M) + 1j * rng.standard_normal(M)
        naive = np.zeros(K, dtype=np.complex128)
        for k in range(K):
            for m in range(M):
                naive[k] += np.conj(H_hat[m, k]) * r[m]
        assert np.abs(mrc_soft_symbols(H_hat, r) - naive).max() < 1e-12

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="rows"):
            mrc_soft_symbols(np.ones((4, 2)), np.ones(3))


def test_blocks_are_pure_functions_of_seed(rng):
    H = rng.standard_normal((4, 2)) + 1j * rng.standard_normal((4, 2))
    pm = pilot_matrix(5, 2)
    x = np.array([1.0 + 0j, 1j])
    a = uplink_data_block(H, x, 1.0, np.random.default_rng(42))
    b = uplink_data_block(H, x, 1.0, np.random.default_rng(42))
    assert np.array_equal(a.y, b.y) and np.array_equal(a.r, b.r)
    c = uplink_pilot_block(H, pm, 1.0, np.random.default_rng(43))
    d = uplink_pilot_block(H, pm, 1.0, np.random.default_rng(43))
    assert np.array_equal(c.rp, d.rp)
