"""Oracle identity suite: exact-math checks the whole pipeline must satisfy.

Each check pits an implementation path against an independent route to the
same quantity (Kronecker identity, log-det chain rule, batch posterior vs
rank-one recursion, exhaustive phase grids) and reports the worst observed
error. The CLI `validate` subcommand runs all of them and fails the process
if any tolerance is exceeded.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelKernel, cascade_channel, complex_randn, herm
from .design import (
    PosteriorState,
    batch_mi,
    mi_increment,
    posterior_update,
)
from .estimators import posterior_covariance, random_plan
from .manifold import CmqpProblem, SolverOptions, riemannian_gradient, solve_cmqp


@dataclass(frozen=True)
class CheckResult:
    name: str
    max_error: float
    tolerance: float
    passed: bool


def _result(name: str, max_error: float, tolerance: float) -> CheckResult:
    return CheckResult(name, float(max_error), float(tolerance), bool(max_error <= tolerance))


def random_psd(k: int, rng: np.random.Generator) -> np.ndarray:
    """Random Hermitian PSD matrix with O(1) eigenvalues."""
    a = (rng.standard_normal((k, k)) + 1j * rng.standard_normal((k, k))) / np.sqrt(2.0)
    return herm(a @ a.conj().T / k)


def random_kernel(m: int, n: int, rng: np.random.Generator) -> ChannelKernel:
    return ChannelKernel(random_psd(m * n, rng), m, n)


def cmqp_grid_optimum(u: np.ndarray, rho: float, n_phases: int,
                      fix_first: bool = True) -> float:
    """Exhaustive raw objective max over a per-coordinate phase grid.

    With fix_first the first coordinate is pinned to phase 0 (the objective
    is invariant to a global phase), shrinking the grid by one dimension.
    """
    k = u.shape[0]
    angles = 2.0 * np.pi * np.arange(n_phases) / n_phases
    free = k - 1 if fix_first else k
    if free == 0:
        v = np.array([[rho]], dtype=complex)
        return float(np.real(np.vdot(v[:, 0], u @ v[:, 0])))
    grids = np.meshgrid(*([angles] * free), indexing="ij")
    phases = np.stack([g.reshape(-1) for g in grids])  # (free, P)
    if fix_first:
        phases = np.vstack([np.zeros(phases.shape[1]), phases])
    v = rho * np.exp(1j * phases)  # (K, P)
    vals = np.real(np.einsum("kp,kl,lp->p", v.conj(), u, v, optimize=True))
    return float(vals.max())


def check_kron_identity(trials: int = 1000, tol: float = 1e-10, seed: int = 101) -> CheckResult:
    """Received-pilot identity: w^H F^H diag(theta) g == (w kron conj(theta))^H h."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        m = int(rng.integers(1, 9))
        n = int(rng.integers(1, 9))
        g = complex_randn(n, rng)
        f = complex_randn(n * m, rng).reshape(n, m)
        w = complex_randn(m, rng)
        theta = np.exp(2j * np.pi * rng.random(n))
        lhs = np.conj(w) @ (f.conj().T @ (np.diag(theta) @ g))
        h = cascade_channel(g, f)
        rhs = np.vdot(np.kron(w, np.conj(theta)), h)
        worst = max(worst, abs(lhs - rhs))
    return _result("kron-identity", worst, tol)


def check_chain_rule(n_kernels: int = 50, m: int = 2, n: int = 4, q: int = 8,
                     tol: float = 1e-6, seed: int = 202,
                     update_fn=posterior_update) -> CheckResult:
    """Greedy increments must telescope to the batch log-det objective."""
    rng = np.random.default_rng(seed)
    sigma2 = 0.1
    worst = 0.0
    for _ in range(n_kernels):
        kernel = random_kernel(m, n, rng)
        plan = random_plan(m, n, q, rng)
        state = PosteriorState.from_kernel(kernel)
        total = 0.0
        for col in range(q):
            x = plan.x_cols[:, col]
            total += mi_increment(state, x, sigma2)
            state = update_fn(state, x, sigma2)
        batch = batch_mi(kernel, plan.x_cols, sigma2)
        worst = max(worst, abs(total - batch) / max(abs(batch), 1e-300))
    return _result("mi-chain-rule", worst, tol)


def check_batch_posterior(n_instances: int = 10, m: int = 2, n: int = 4, q: int = 8,
                          tol: float = 1e-8, seed: int = 303) -> CheckResult:
    """Sequential rank-one downdates must reproduce the batch posterior covariance."""
    rng = np.random.default_rng(seed)
    sigma2 = 0.25
    worst = 0.0
    for _ in range(n_instances):
        kernel = random_kernel(m, n, rng)
        plan = random_plan(m, n, q, rng)
        state = PosteriorState.from_kernel(kernel)
        for col in range(q):
            state = posterior_update(state, plan.x_cols[:, col], sigma2)
        batch = posterior_covariance(kernel, plan.x_cols, sigma2)
        err = np.linalg.norm(state.sigma_t - batch) / max(np.linalg.norm(batch), 1e-300)
        worst = max(worst, err)
    return _result("posterior-recursion", worst, tol)


def check_cmqp_analytic(tol: float = 1e-4, seed: int = 404) -> CheckResult:
    """2x2 instance with a known optimum of 5.0 at equal phases."""
    u = np.array([[2.0, 1.0], [1.0, 1.0]], dtype=complex)
    problem = CmqpProblem(u, 1.0, 2)
    rng = np.random.default_rng(seed)
    v0 = np.exp(2j * np.pi * rng.random(2))
    res = solve_cmqp(problem, v0, SolverOptions())
    lam = max(np.linalg.eigvalsh(u))
    alpha = 2 * lam / 4.0
    raw = res.f_final - alpha * 2.0
    grid = cmqp_grid_optimum(u, 1.0, 64, fix_first=False)
    err = max(abs(raw - 5.0), max(0.0, grid - raw))
    return _result("cmqp-analytic", err, tol)


def check_cmqp_grid(tol: float = 0.01, n_phases: int = 64, seed: int = 505) -> CheckResult:
    """Solver must reach >= 99% of the exhaustive grid optimum for K <= 4."""
    rng = np.random.default_rng(seed)
    opts = SolverOptions()
    worst = 0.0
    for k in (2, 3, 4):
        for _ in range(4):
            u = random_psd(k, rng)
            rho = 1.0 if k % 2 else 1.0 / np.sqrt(k)
            problem = CmqpProblem(u, rho, k)
            v0 = rho * np.exp(2j * np.pi * rng.random(k))
            res = solve_cmqp(problem, v0, opts)
            alpha, _ = _alpha_for(problem, opts)
            raw = res.f_final - alpha * k * rho**2
            grid = cmqp_grid_optimum(u, rho, n_phases)
            shortfall = max(0.0, 1.0 - raw / grid) if grid > 0 else 0.0
            worst = max(worst, shortfall)
    return _result("cmqp-grid", worst, tol)


def _alpha_for(problem: CmqpProblem, opts: SolverOptions):
    from .manifold import largest_eigenvalue, step_parameters

    lam = largest_eigenvalue(problem.u, opts)
    return step_parameters(lam, problem.k)


def check_tangency(trials: int = 200, tol: float = 1e-12, seed: int = 606) -> CheckResult:
    """Riemannian gradients live in the tangent space: Re(conj(v) * d) = 0."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        k = int(rng.integers(1, 17))
        rho = float(rng.uniform(0.3, 2.0))
        v = rho * np.exp(2j * np.pi * rng.random(k))
        egrad = complex_randn(k, rng)
        d = riemannian_gradient(v, egrad, rho)
        worst = max(worst, float(np.max(np.abs(np.real(np.conj(v) * d)))))
    return _result("tangency", worst, tol)


def check_monotonicity(n_instances: int = 40, tol: float = 1e-9, seed: int = 707) -> CheckResult:
    """Objective traces of the manifold solver never decrease (relative)."""
    rng = np.random.default_rng(seed)
    opts = SolverOptions()
    worst = 0.0
    for _ in range(n_instances):
        k = int(rng.integers(2, 9))
        u = random_psd(k, rng)
        rho = float(rng.uniform(0.5, 1.5))
        problem = CmqpProblem(u, rho, k)
        v0 = rho * np.exp(2j * np.pi * rng.random(k))
        trace = solve_cmqp(problem, v0, opts).f_trace
        drops = trace[:-1] - trace[1:]
        rel = drops / np.maximum(np.abs(trace[:-1]), 1e-300)
        worst = max(worst, float(np.max(rel, initial=0.0)))
    return _result("solver-monotonicity", worst, tol)


def run_validation() -> list[CheckResult]:
    """All oracle checks at fixed small dimensions and fixed seeds."""
    return [
        check_kron_identity(),
        check_chain_rule(),
        check_batch_posterior(),
        check_cmqp_analytic(),
        check_cmqp_grid(),
        check_tangency(),
        check_monotonicity(),
    ]


def format_report(results: list[CheckResult]) -> str:
    lines = []
    for res in results:
        status = "PASS" if res.passed else "FAIL"
        lines.append(f"{status}  {res.name}: max error {res.max_error:.3e} (tolerance {res.tolerance:.1e})")
    n_fail = sum(not r.passed for r in results)
    lines.append(f"{len(results) - n_fail}/{len(results)} checks passed")
    return "\n".join(lines)


def validation_to_csv(results: list[CheckResult]) -> str:
    lines = ["check,max_error,tolerance,passed"]
    for res in results:
        lines.append(f"{res.name},{res.max_error!r},{res.tolerance!r},{str(res.passed).lower()}")
    return "\n".join(lines) + "\n"
