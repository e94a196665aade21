import numpy as np
import pytest
from conftest import crandn, random_psd

from ris_obsmat.manifold import (
    CmqpProblem,
    SolverOptions,
    euclidean_gradient,
    largest_eigenvalue,
    retract,
    riemannian_gradient,
    solve_cmqp,
    step_parameters,
)
from ris_obsmat.validation import cmqp_grid_optimum


def torus_point(k, rho, rng):
    return rho * np.exp(2j * np.pi * rng.random(k))


class TestLargestEigenvalue:
    def test_diagonal(self):
        assert largest_eigenvalue(np.diag([1.0, 2.0, 3.0]).astype(complex)) == pytest.approx(3.0, rel=1e-8)

    def test_identity(self):
        assert largest_eigenvalue(np.eye(5, dtype=complex)) == pytest.approx(1.0, rel=1e-10)

    def test_zero_matrix(self):
        assert largest_eigenvalue(np.zeros((4, 4), dtype=complex)) == 0.0

    def test_matches_dense_eigensolver(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            k = int(rng.integers(1, 17))
            u = random_psd(k, rng)
            ref = float(np.linalg.eigvalsh(u)[-1])
            assert largest_eigenvalue(u) == pytest.approx(ref, rel=1e-6)

    def test_restart_when_ones_start_is_null(self):
        # all-ones start lies in the null space; the rotated restart recovers
        u = np.array([[1.0, -1.0], [-1.0, 1.0]], dtype=complex)
        assert largest_eigenvalue(u) == pytest.approx(2.0, rel=1e-8)


class TestStepParameters:
    def test_direct_substitution(self):
        alpha, beta = step_parameters(4.0, 8)
        assert alpha == 8.0 and beta == pytest.approx(0.05)

    def test_flat_objective(self):
        assert step_parameters(0.0, 5) == (0.0, 1.0)

    def test_monotonicity_conditions(self):
        lam, k = 1.0, 2
        alpha, beta = step_parameters(lam, k)
        assert alpha == 0.5 and beta == 0.5
        assert alpha >= k / 8 * lam
        assert 0 < beta < 1.0 / (lam + alpha)

    def test_negative_lambda_rejected(self):
        with pytest.raises(ValueError, match="nonnegative"):
            step_parameters(-1.0, 2)


class TestEuclideanGradient:
    def test_identity_form(self):
        rng = np.random.default_rng(0)
        v = torus_point(4, 1.0, rng)
        problem = CmqpProblem(np.eye(4, dtype=complex), 1.0, 4)
        assert np.allclose(euclidean_gradient(problem, 1.0, v), 2.0 * v)

    def test_zero_point_rejected(self):
        problem = CmqpProblem(np.eye(3, dtype=complex), 1.0, 3)
        with pytest.raises(ValueError, match="modulus"):
            euclidean_gradient(problem, 0.5, np.zeros(3, dtype=complex))

    def test_finite_difference(self):
        rng = np.random.default_rng(1)
        k, alpha, t = 5, 0.7, 1e-6
        u = random_psd(k, rng)
        problem = CmqpProblem(u, 1.0, k)
        v = torus_point(k, 1.0, rng)
        grad = euclidean_gradient(problem, alpha, v)

        def f(vec):
            return float(np.real(np.vdot(vec, u @ vec))) + alpha * float(np.real(np.vdot(vec, vec)))

        for _ in range(10):
            delta = crandn(k, rng)
            fd = (f(v + t * delta) - f(v - t * delta)) / (2 * t)
            analytic = 2.0 * float(np.real(np.vdot(grad, delta)))
            assert fd == pytest.approx(analytic, abs=1e-5 * max(1.0, abs(analytic)))


class TestRiemannianGradient:
    def test_radial_gradient_projects_to_zero(self):
        rng = np.random.default_rng(2)
        v = torus_point(6, 1.0, rng)
        d = riemannian_gradient(v, 3.0 * v, 1.0)
        assert np.max(np.abs(d)) < 1e-14

    def test_tangency(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            k = int(rng.integers(1, 17))
            rho = float(rng.uniform(0.3, 2.0))
            v = torus_point(k, rho, rng)
            d = riemannian_gradient(v, crandn(k, rng), rho)
            assert np.max(np.abs(np.real(np.conj(v) * d))) < 1e-12

    def test_hand_computed_case(self):
        v = np.array([1.0, 1.0], dtype=complex)
        egrad = np.array([1j, 1.0 + 1j])
        d = riemannian_gradient(v, egrad, 1.0)
        assert np.allclose(d, [1j, 1j])

    def test_rho_must_be_positive(self):
        with pytest.raises(ValueError, match="rho"):
            riemannian_gradient(np.ones(2, dtype=complex), np.ones(2, dtype=complex), 0.0)


class TestRetract:
    def test_zero_direction_is_fixed_point(self):
        rng = np.random.default_rng(4)
        v = torus_point(5, 0.7, rng)
        assert np.allclose(retract(v, np.zeros(5), 0.3, 0.7), v, atol=1e-15)

    def test_modulus_restored(self):
        rng = np.random.default_rng(5)
        v = torus_point(8, 2.0, rng)
        out = retract(v, crandn(8, rng), 0.5, 2.0)
        assert np.max(np.abs(np.abs(out) - 2.0)) < 1e-12

    def test_quarter_turn(self):
        rho = 1.5
        v = np.array([rho, rho], dtype=complex)
        out = retract(v, np.array([1j * rho, 0.0]), 1.0, rho)
        assert np.allclose(out, [rho * np.exp(1j * np.pi / 4), rho])

    def test_zero_coordinate_keeps_phase(self):
        v = np.array([np.exp(1j * 0.4), 1.0 + 0j])
        direction = np.array([-v[0], 0.0])
        out = retract(v, direction, 1.0, 1.0)  # first coordinate lands on 0
        assert out[0] == v[0]
        assert out[1] == v[1]


class TestSolveCmqp:
    def test_flat_objective_on_identity(self):
        rng = np.random.default_rng(6)
        k = 4
        problem = CmqpProblem(np.eye(k, dtype=complex), 1.0, k)
        v0 = torus_point(k, 1.0, rng)
        res = solve_cmqp(problem, v0)
        alpha = k * 1.0 / 4
        assert res.f_final == pytest.approx(k * (1 + alpha), rel=1e-12)
        assert res.iterations <= 2

    def test_infeasible_start_rejected(self):
        problem = CmqpProblem(np.eye(2, dtype=complex), 1.0, 2)
        with pytest.raises(ValueError, match="modulus"):
            solve_cmqp(problem, np.array([2.0, 1.0], dtype=complex))

    def test_analytic_two_by_two(self):
        u = np.array([[2.0, 1.0], [1.0, 1.0]], dtype=complex)
        problem = CmqpProblem(u, 1.0, 2)
        lam = float(np.linalg.eigvalsh(u)[-1])
        alpha = 2 * lam / 4
        grid = cmqp_grid_optimum(u, 1.0, 64, fix_first=False)  # 4096-point grid
        for seed in range(5):
            v0 = torus_point(2, 1.0, np.random.default_rng(seed))
            res = solve_cmqp(problem, v0)
            raw = res.f_final - 2 * alpha
            assert raw == pytest.approx(5.0, abs=1e-4)
            assert raw >= grid - 1e-4  # grid contains the exact optimum here

    def test_reaches_grid_optimum_small_k(self):
        rng = np.random.default_rng(7)
        for k in (2, 3, 4):
            for _ in range(5):
                u = random_psd(k, rng)
                rho = float(rng.uniform(0.5, 1.5))
                problem = CmqpProblem(u, rho, k)
                res = solve_cmqp(problem, torus_point(k, rho, rng))
                lam = float(np.linalg.eigvalsh(u)[-1])
                alpha = k * lam / 4
                raw = res.f_final - alpha * k * rho**2
                grid = cmqp_grid_optimum(u, rho, 64)
                assert raw >= 0.99 * grid

    def test_monotone_trace_and_feasibility(self):
        rng = np.random.default_rng(8)
        for _ in range(100):
            k = int(rng.integers(2, 17))
            u = random_psd(k, rng)
            rho = float(rng.uniform(0.5, 1.5))
            problem = CmqpProblem(u, rho, k)
            res = solve_cmqp(problem, torus_point(k, rho, rng))
            trace = res.f_trace
            assert np.all(trace[1:] >= trace[:-1] - 1e-9 * np.abs(trace[:-1]))
            assert np.max(np.abs(np.abs(res.v) - rho)) < 1e-12 * rho + 1e-15

    def test_alpha_shift_leaves_maximizer_set(self):
        # f_alpha(v) - f_0(v) = alpha * K * rho^2 for every feasible v
        rng = np.random.default_rng(9)
        k, rho = 5, 1.3
        u = random_psd(k, rng)
        alpha = 0.8
        for _ in range(20):
            v = torus_point(k, rho, rng)
            f0 = float(np.real(np.vdot(v, u @ v)))
            fa = f0 + alpha * float(np.real(np.vdot(v, v)))
            assert fa - f0 == pytest.approx(alpha * k * rho**2, rel=1e-12)

    def test_global_phase_invariance(self):
        rng = np.random.default_rng(10)
        k = 6
        u = random_psd(k, rng)
        v = torus_point(k, 1.0, rng)
        f = float(np.real(np.vdot(v, u @ v)))
        for _ in range(10):
            phi = rng.uniform(0, 2 * np.pi)
            vp = np.exp(1j * phi) * v
            fp = float(np.real(np.vdot(vp, u @ vp)))
            assert fp == pytest.approx(f, rel=1e-12)


class TestProblemValidation:
    def test_non_hermitian_rejected(self):
        u = np.array([[1.0, 1.0], [0.0, 1.0]], dtype=complex)
        with pytest.raises(ValueError, match="Hermitian"):
            CmqpProblem(u, 1.0, 2)

    def test_nonpositive_rho_rejected(self):
        with pytest.raises(ValueError, match="rho"):
            CmqpProblem(np.eye(2, dtype=complex), 0.0, 2)

    def test_solver_options_validated(self):
        with pytest.raises(ValueError, match="tol_f"):
            SolverOptions(tol_f=0.0)
        with pytest.raises(ValueError, match="max_iter"):
            SolverOptions(max_iter=0)
