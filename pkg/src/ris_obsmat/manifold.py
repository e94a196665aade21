"""Riemannian gradient ascent for modulus-constant quadratic programs.

Solves max_v v^H U v subject to |v_k| = rho for Hermitian PSD U, by ascent
on the product-of-circles manifold: Euclidean gradient of the shifted
objective v^H (U + alpha I) v, projection onto the tangent space, and a
phase retraction back onto the torus. With alpha = K * lambda_max(U) / 4 and
step beta = 1 / (lambda_max + 2 alpha) every iteration is nonincreasing in
-f, i.e. the objective trace is monotone.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import hermitian_defect

FEASIBILITY_RTOL = 1e-6


@dataclass(frozen=True)
class SolverOptions:
    """Convergence controls for the inner solver and the alternating outer loop.

    n_starts is the number of random restarts of the per-pilot alternation
    (a spectral initialization always runs in addition).
    """

    tol_f: float = 1e-6
    max_iter: int = 200
    eig_tol: float = 1e-8
    eig_max_iter: int = 500
    outer_tol: float = 1e-4
    outer_max_iter: int = 20
    n_starts: int = 3

    def __post_init__(self):
        if not self.tol_f > 0:
            raise ValueError(f"tol_f must be positive, got {self.tol_f}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")
        if not self.eig_tol > 0 or self.eig_max_iter < 1:
            raise ValueError("invalid power-iteration controls")
        if not self.outer_tol > 0 or self.outer_max_iter < 1:
            raise ValueError("invalid outer-loop controls")
        if self.n_starts < 0:
            raise ValueError(f"n_starts must be nonnegative, got {self.n_starts}")


@dataclass(frozen=True)
class CmqpProblem:
    """Quadratic form U on the torus {|v_k| = rho, k = 1..K}."""

    u: np.ndarray
    rho: float
    k: int

    def __post_init__(self):
        u = np.asarray(self.u, dtype=complex)
        object.__setattr__(self, "u", u)
        if u.shape != (self.k, self.k):
            raise ValueError(f"u shape {u.shape} does not match k = {self.k}")
        defect = hermitian_defect(u)
        if defect > 1e-10:
            raise ValueError(f"u is not Hermitian: relative defect {defect:.3e}")
        if not self.rho > 0:
            raise ValueError(f"rho must be positive, got {self.rho}")


@dataclass(frozen=True)
class SolverResult:
    v: np.ndarray
    f_final: float
    iterations: int
    f_trace: np.ndarray


def require_feasible(v: np.ndarray, rho: float, rtol: float = FEASIBILITY_RTOL):
    v = np.asarray(v)
    if np.max(np.abs(np.abs(v) - rho)) > rtol * rho:
        raise ValueError(f"point violates the modulus-{rho:g} constraint")


def _power_iteration(u: np.ndarray, v0: np.ndarray, tol: float, max_iter: int) -> float:
    v = v0
    lam_prev = None
    lam = 0.0
    for _ in range(max_iter):
        w = u @ v
        lam = float(np.real(np.vdot(v, w)))
        norm_w = float(np.linalg.norm(w))
        if norm_w == 0.0:
            return 0.0  # start vector lies in the null space
        v = w / norm_w
        if lam_prev is not None and abs(lam - lam_prev) <= tol * max(abs(lam), 1e-300):
            break
        lam_prev = lam
    return max(lam, 0.0)


def largest_eigenvalue(u: np.ndarray, opts: SolverOptions | None = None) -> float:
    """Dominant eigenvalue of a Hermitian PSD matrix by power iteration.

    Starts from the normalized all-ones vector; if the Rayleigh quotient
    stalls at zero (start orthogonal to the range), restarts from rotated
    deterministic vectors. A zero matrix legitimately returns 0.
    """
    opts = opts or SolverOptions()
    u = np.asarray(u, dtype=complex)
    k = u.shape[0]
    if not np.any(u):
        return 0.0
    starts = [
        np.ones(k, dtype=complex) / np.sqrt(k),
        np.exp(2j * np.pi * np.arange(k) / max(k, 1)) / np.sqrt(k),
    ]
    e1 = np.zeros(k, dtype=complex)
    e1[0] = 1.0
    starts.append(e1)
    # last resort: a fixed-seed random start, still deterministic
    rng = np.random.default_rng(0)
    starts.append((rng.standard_normal(k) + 1j * rng.standard_normal(k)) / np.sqrt(2 * k))
    for v0 in starts:
        lam = _power_iteration(u, v0, opts.eig_tol, opts.eig_max_iter)
        if lam > 0.0:
            return lam
    return 0.0


def step_parameters(lambda_max: float, k: int) -> tuple[float, float]:
    """Shift alpha = K lambda / 4 and step beta = 1 / (lambda + 2 alpha).

    These satisfy alpha >= (K/8) lambda and 0 < beta < 1 / (lambda + alpha),
    the monotonicity conditions. lambda = 0 means a flat objective on the
    torus; (0, 1) is returned and the solver exits after one sweep.
    """
    if lambda_max < 0:
        raise ValueError(f"lambda_max must be nonnegative, got {lambda_max}")
    if lambda_max == 0.0:
        return 0.0, 1.0
    alpha = k * lambda_max / 4.0
    return alpha, 1.0 / (lambda_max + 2.0 * alpha)


def euclidean_gradient(problem: CmqpProblem, alpha: float, v: np.ndarray) -> np.ndarray:
    """Gradient of v^H (U + alpha I) v, namely (U + alpha I) v."""
    v = np.asarray(v, dtype=complex)
    if v.shape != (problem.k,):
        raise ValueError(f"dimension mismatch: v {v.shape}, k = {problem.k}")
    require_feasible(v, problem.rho)
    return problem.u @ v + alpha * v


def riemannian_gradient(v: np.ndarray, egrad: np.ndarray, rho: float) -> np.ndarray:
    """Project the Euclidean gradient onto the tangent space of the torus."""
    if not rho > 0:
        raise ValueError(f"rho must be positive, got {rho}")
    v = np.asarray(v, dtype=complex)
    egrad = np.asarray(egrad, dtype=complex)
    return egrad - v * (np.real(np.conj(v) * egrad) / rho**2)


def retract(v: np.ndarray, direction: np.ndarray, beta: float, rho: float) -> np.ndarray:
    """Step in the tangent direction and project back by per-entry phase.

    A coordinate where v + beta * direction lands exactly on 0 has no
    defined phase; it keeps its previous one.
    """
    v = np.asarray(v, dtype=complex)
    w = v + beta * np.asarray(direction, dtype=complex)
    out = rho * np.exp(1j * np.angle(w))
    dead = w == 0
    if np.any(dead):
        out[dead] = v[dead]
    return out


def _objective(problem: CmqpProblem, alpha: float, v: np.ndarray) -> float:
    return float(np.real(np.vdot(v, problem.u @ v))) + alpha * float(np.real(np.vdot(v, v)))


def solve_cmqp(problem: CmqpProblem, v0: np.ndarray,
               opts: SolverOptions | None = None) -> SolverResult:
    """Ascend v^H (U + alpha I) v from a feasible start until f stalls.

    Stops when the relative objective change drops below opts.tol_f or
    after opts.max_iter sweeps. The returned trace is nondecreasing up to
    floating-point noise and every iterate is feasible.
    """
    opts = opts or SolverOptions()
    v = np.asarray(v0, dtype=complex).copy()
    require_feasible(v, problem.rho)
    lam = largest_eigenvalue(problem.u, opts)
    alpha, beta = step_parameters(lam, problem.k)
    f = _objective(problem, alpha, v)
    trace = [f]
    if lam == 0.0:
        # objective constant on the torus
        return SolverResult(v, f, 0, np.asarray(trace))
    iterations = 0
    for it in range(1, opts.max_iter + 1):
        egrad = euclidean_gradient(problem, alpha, v)
        d = riemannian_gradient(v, egrad, problem.rho)
        v = retract(v, d, beta, problem.rho)
        f_new = _objective(problem, alpha, v)
        trace.append(f_new)
        iterations = it
        converged = abs(f_new - f) <= opts.tol_f * max(abs(f), 1e-300)
        f = f_new
        if converged:
            break
    return SolverResult(v, f, iterations, np.asarray(trace))
