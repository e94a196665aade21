import numpy as np
import pytest
from conftest import crandn, random_psd

from ris_obsmat.channel import (
    ArrayGeometry,
    ChannelKernel,
    ChannelRealization,
    CorrelationModel,
    cascade_channel,
    cascade_kernel,
    cov_factor,
    draw_realization,
    observe,
    sample_gaussian,
    separable_f_kernel,
    spatial_covariance,
)

SINC = CorrelationModel("isotropic-sinc")
IDENT = CorrelationModel("identity")


class TestCorrelationModel:
    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError, match="unknown correlation kind"):
            CorrelationModel("gaussian")

    def test_exponential_rho_range(self):
        with pytest.raises(ValueError, match="rho"):
            CorrelationModel("exponential", rho=1.0)
        with pytest.raises(ValueError, match="rho"):
            CorrelationModel("exponential", rho=-0.1)
        CorrelationModel("exponential", rho=0.0)  # boundary is legal


class TestArrayGeometry:
    def test_ula_upa_shapes(self):
        geom = ArrayGeometry.ula_upa(4, 2, 3, 0.25)
        assert geom.m == 4 and geom.n == 6
        d = np.linalg.norm(geom.bs_positions[1] - geom.bs_positions[0])
        assert d == pytest.approx(0.25)

    def test_grid_size_must_match(self):
        with pytest.raises(ValueError, match="n1 \\* n2"):
            ArrayGeometry(np.zeros((2, 3)), np.zeros((5, 3)), 2, 3, 0.25)

    def test_nonfinite_positions_rejected(self):
        bs = np.zeros((2, 3))
        bs[1, 0] = np.inf
        with pytest.raises(ValueError, match="non-finite"):
            ArrayGeometry(bs, np.zeros((1, 3)), 1, 1, 0.25)


class TestSpatialCovariance:
    def test_single_element_any_model(self):
        for model in (SINC, IDENT, CorrelationModel("exponential", 0.9)):
            c = spatial_covariance(np.zeros((1, 3)), model, spacing=0.25)
            assert np.allclose(c, [[1.0]])

    def test_sinc_zero_crossing_at_half_wavelength(self):
        pos = np.array([[0.0, 0, 0], [0.5, 0, 0]])
        c = spatial_covariance(pos, SINC)
        assert abs(c[0, 1]) < 1e-15
        assert c[0, 0] == pytest.approx(1.0)

    def test_exponential_matches_entrywise_oracle(self):
        spacing, rho = 0.25, 0.9
        pos = np.zeros((8, 3))
        pos[:, 0] = spacing * np.arange(8)
        c = spatial_covariance(pos, CorrelationModel("exponential", rho), spacing=spacing)
        for i in range(8):
            for j in range(8):
                d = abs(i - j) * spacing
                assert c[i, j] == pytest.approx(rho ** (d / spacing), abs=1e-12)

    def test_identity_model(self):
        pos = np.random.default_rng(0).random((5, 3))
        assert np.array_equal(spatial_covariance(pos, IDENT), np.eye(5))

    def test_hermitian_psd_on_random_geometries(self):
        rng = np.random.default_rng(1)
        for model in (SINC, CorrelationModel("exponential", 0.95)):
            for _ in range(10):
                pos = rng.random((12, 3)) * 2.0
                c = spatial_covariance(pos, model, spacing=0.25)
                assert np.linalg.norm(c - c.conj().T) < 1e-10 * np.linalg.norm(c)
                w = np.linalg.eigvalsh(c)
                assert w[0] >= -1e-8 * w[-1]
                assert np.allclose(np.diag(c).real, 1.0, atol=1e-10)

    def test_nonfinite_positions_rejected(self):
        pos = np.array([[0.0, 0, 0], [np.nan, 0, 0]])
        with pytest.raises(ValueError, match="invalid geometry"):
            spatial_covariance(pos, SINC)

    def test_empty_positions_rejected(self):
        with pytest.raises(ValueError, match="nonempty"):
            spatial_covariance(np.zeros((0, 3)), SINC)


class TestSeparableFKernel:
    def test_identity_inputs(self):
        assert np.array_equal(separable_f_kernel(np.eye(3), np.eye(4)), np.eye(12))

    def test_single_antenna_scalar_factor(self):
        rng = np.random.default_rng(2)
        sigma_ris = random_psd(4, rng)
        out = separable_f_kernel(np.array([[2.0]]), sigma_ris)
        assert np.allclose(out, 2.0 * sigma_ris)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="square"):
            separable_f_kernel(np.ones((2, 3)), np.eye(2))

    def test_monte_carlo_covariance_oracle(self):
        # F = L_ris G R with L_ris L_ris^H = Sigma_ris and R^H R = Sigma_bs
        # gives Cov(vec F) = conj(Sigma_bs) kron Sigma_ris.
        m, n, draws = 2, 3, 20_000
        rng = np.random.default_rng(3)
        sigma_bs = random_psd(m, rng) + 0.5 * np.eye(m)
        sigma_ris = random_psd(n, rng) + 0.5 * np.eye(n)
        target = separable_f_kernel(sigma_bs, sigma_ris)
        l_ris = cov_factor(sigma_ris)
        r_bs = cov_factor(sigma_bs).conj().T
        acc = np.zeros((m * n, m * n), dtype=complex)
        for _ in range(draws):
            f = l_ris @ crandn((n, m), rng) @ r_bs
            vec = f.T.reshape(-1)  # stack columns F[:, 0], F[:, 1], ...
            acc += np.outer(vec, vec.conj())
        sample = acc / draws
        rel = np.linalg.norm(sample - target) / np.linalg.norm(target)
        assert rel < 0.05


class TestCascadeKernel:
    def test_all_ones_sigma_f_tiles_sigma_g(self):
        rng = np.random.default_rng(4)
        m, n = 2, 3
        sigma_g = random_psd(n, rng)
        kernel = cascade_kernel(np.ones((m * n, m * n)), sigma_g, m, n)
        for bm in range(m):
            for bn in range(m):
                block = kernel.sigma_h[bm * n:(bm + 1) * n, bn * n:(bn + 1) * n]
                assert np.allclose(block, sigma_g, atol=1e-12)

    def test_identity_sigma_f_masks_off_diagonal(self):
        rng = np.random.default_rng(5)
        m, n = 2, 4
        sigma_g = random_psd(n, rng)
        np.fill_diagonal(sigma_g, 1.0)
        kernel = cascade_kernel(np.eye(m * n), sigma_g, m, n)
        assert np.allclose(kernel.sigma_h, np.eye(m * n), atol=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="sigma_g shape"):
            cascade_kernel(np.eye(6), np.eye(2), 2, 3)

    def test_monte_carlo_cascade_covariance(self):
        m, n, draws = 2, 3, 20_000
        rng = np.random.default_rng(6)
        sigma_g = random_psd(n, rng) + 0.5 * np.eye(n)
        sigma_bs = random_psd(m, rng) + 0.5 * np.eye(m)
        sigma_ris = random_psd(n, rng) + 0.5 * np.eye(n)
        sigma_f = separable_f_kernel(sigma_bs, sigma_ris)
        kernel = cascade_kernel(sigma_f, sigma_g, m, n)
        acc = np.zeros((m * n, m * n), dtype=complex)
        for _ in range(draws):
            h = draw_realization(sigma_g, sigma_f, m, n, rng).h
            acc += np.outer(h, h.conj())
        sample = acc / draws
        rel = np.linalg.norm(sample - kernel.sigma_h) / np.linalg.norm(kernel.sigma_h)
        assert rel < 0.05


class TestChannelKernelType:
    def test_rejects_non_hermitian(self):
        bad = np.eye(4, dtype=complex)
        bad[0, 1] = 1.0  # asymmetric
        with pytest.raises(ValueError, match="Hermitian"):
            ChannelKernel(bad, 2, 2)

    def test_repairs_small_negative_eigenvalues(self):
        sig = np.eye(4) * 1.0
        sig[3, 3] = -1e-12
        kernel = ChannelKernel(sig, 2, 2)
        assert np.linalg.eigvalsh(kernel.sigma_h)[0] >= 0.0

    def test_rejects_indefinite(self):
        sig = np.diag([1.0, 1.0, 1.0, -0.5])
        with pytest.raises(ValueError, match="not PSD"):
            ChannelKernel(sig, 2, 2)


class TestSampleGaussian:
    def test_zero_covariance_gives_zero(self):
        out = sample_gaussian(np.zeros((3, 3)), np.random.default_rng(0))
        assert np.array_equal(out, np.zeros(3))

    def test_identity_unit_variance(self):
        rng = np.random.default_rng(7)
        draws = np.array([sample_gaussian(np.eye(4), rng) for _ in range(100_000)])
        var = np.mean(np.abs(draws) ** 2, axis=0)
        assert np.all(var > 0.97) and np.all(var < 1.03)

    def test_degenerate_diagonal(self):
        rng = np.random.default_rng(8)
        draws = np.array([sample_gaussian(np.diag([4.0, 0.0]), rng) for _ in range(20_000)])
        assert np.all(draws[:, 1] == 0)
        assert np.mean(np.abs(draws[:, 0]) ** 2) == pytest.approx(4.0, rel=0.05)

    def test_covariance_reproduction(self):
        rng = np.random.default_rng(9)
        sigma = random_psd(16, rng) + 0.25 * np.eye(16)
        draws = np.array([sample_gaussian(sigma, rng) for _ in range(20_000)])
        sample = draws.T @ draws.conj() / draws.shape[0]
        rel = np.linalg.norm(sample - sigma) / np.linalg.norm(sigma)
        assert rel < 0.05

    def test_rejects_non_hermitian(self):
        with pytest.raises(ValueError, match="Hermitian"):
            sample_gaussian(np.array([[1.0, 1.0], [0.0, 1.0]]), np.random.default_rng(0))


class TestCascadeChannel:
    def test_all_ones_passthrough(self):
        n, m = 3, 2
        h = cascade_channel(np.ones(n), np.ones((n, m)))
        assert np.array_equal(h, np.ones(m * n))

    def test_zero_user_channel(self):
        h = cascade_channel(np.zeros(3), np.ones((3, 2)))
        assert np.array_equal(h, np.zeros(6))

    def test_block_layout(self):
        g = np.array([1.0, 2.0])
        f = np.array([[1j, 2.0], [3.0, 4j]])
        h = cascade_channel(g, f)
        # block m: conj(F[:, m]) * g
        assert np.allclose(h, [-1j * 1, 3 * 2, 2 * 1, -4j * 2])

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="dimension mismatch"):
            cascade_channel(np.ones(3), np.ones((2, 2)))

    def test_received_pilot_identity(self):
        # w^H F^H diag(theta) g == (w kron conj(theta))^H h, 1000 random draws
        rng = np.random.default_rng(10)
        worst = 0.0
        for _ in range(1000):
            m = int(rng.integers(1, 9))
            n = int(rng.integers(1, 9))
            g = crandn(n, rng)
            f = crandn((n, m), rng)
            w = crandn(m, rng)
            theta = np.exp(2j * np.pi * rng.random(n))
            lhs = np.conj(w) @ (f.conj().T @ (np.diag(theta) @ g))
            rhs = np.vdot(np.kron(w, np.conj(theta)), cascade_channel(g, f))
            worst = max(worst, abs(lhs - rhs))
        assert worst < 1e-10


class TestChannelRealization:
    def test_inconsistent_cascade_rejected(self):
        rng = np.random.default_rng(11)
        real = draw_realization(np.eye(3), np.eye(6), 2, 3, rng)
        with pytest.raises(ValueError, match="cascade"):
            ChannelRealization(real.g, real.f, real.h + 1.0)


class TestObserve:
    def test_noiseless_identity(self):
        rng = np.random.default_rng(12)
        h = crandn(6, rng)
        y = observe(h, np.eye(6), 0.0, rng)
        assert np.allclose(y, h)

    def test_zero_channel_zero_noise(self):
        y = observe(np.zeros(4), np.eye(4), 0.0, np.random.default_rng(0))
        assert np.array_equal(y, np.zeros(4))

    def test_noise_power(self):
        rng = np.random.default_rng(13)
        h = crandn(4, rng)
        x = crandn((4, 4), rng)
        clean = x.conj().T @ h
        sigma2 = 0.5
        noise = np.concatenate([observe(h, x, sigma2, rng) - clean for _ in range(25_000)])
        var = float(np.mean(np.abs(noise) ** 2))
        assert 0.485 < var < 0.515

    def test_negative_noise_power_rejected(self):
        with pytest.raises(ValueError, match="nonnegative"):
            observe(np.ones(2), np.eye(2), -0.1, np.random.default_rng(0))

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="dimension mismatch"):
            observe(np.ones(3), np.eye(2), 0.0, np.random.default_rng(0))
