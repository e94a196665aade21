"""Channel estimators and baseline observation plans.

LS, Bayesian posterior-mean (MMSE) estimation with a known kernel, OMP over
a Kronecker DFT dictionary, plus the plan constructors the benchmark
compares against: DFT-column plans, random constant-modulus plans, and a
combiner-only greedy proxy that freezes random RIS phases and optimizes
only the receive combiner.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelKernel, herm
from .design import (
    ObservationPlan,
    PosteriorState,
    build_combiner_problem,
    mi_increment,
    posterior_update,
)
from .manifold import SolverOptions, solve_cmqp


@dataclass(frozen=True)
class EstimationResult:
    h_hat: np.ndarray
    posterior_cov: np.ndarray | None
    scheme: str


def ls_estimate(x_mat: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Minimum-norm least-squares solution of X^H h = y.

    Rank-revealing: singular values below 1e-10 of the largest are treated
    as zero, so rank-deficient plans degrade instead of blowing up.
    """
    x_mat = np.asarray(x_mat, dtype=complex)
    y = np.asarray(y, dtype=complex)
    if x_mat.ndim != 2 or y.shape != (x_mat.shape[1],):
        raise ValueError(f"dimension mismatch: X {x_mat.shape}, y {y.shape}")
    if x_mat.shape[1] == 0:
        return np.zeros(x_mat.shape[0], dtype=complex)
    sol, *_ = np.linalg.lstsq(x_mat.conj().T, y, rcond=1e-10)
    return sol


def mmse_estimate(sigma_h: ChannelKernel, x_mat: np.ndarray, y: np.ndarray, sigma2: float,
                  with_covariance: bool = False, scheme: str = "mmse") -> EstimationResult:
    """Posterior mean Sigma X (X^H Sigma X + sigma2 I)^{-1} y, optionally with Eq.-(7)-style covariance."""
    if not sigma2 > 0:
        raise ValueError(f"noise power must be positive, got {sigma2}")
    x_mat = np.asarray(x_mat, dtype=complex)
    y = np.asarray(y, dtype=complex)
    q = x_mat.shape[1]
    if x_mat.shape[0] != sigma_h.mn or y.shape != (q,):
        raise ValueError(f"dimension mismatch: X {x_mat.shape}, y {y.shape}")
    if q == 0:
        cov = sigma_h.sigma_h.copy() if with_covariance else None
        return EstimationResult(np.zeros(sigma_h.mn, dtype=complex), cov, scheme)
    sx = sigma_h.sigma_h @ x_mat
    a = herm(x_mat.conj().T @ sx) + sigma2 * np.eye(q)
    h_hat = sx @ np.linalg.solve(a, y)
    cov = None
    if with_covariance:
        cov = herm(sigma_h.sigma_h - sx @ np.linalg.solve(a, sx.conj().T))
    return EstimationResult(h_hat, cov, scheme)


def posterior_covariance(sigma_h: ChannelKernel, x_mat: np.ndarray, sigma2: float) -> np.ndarray:
    """Posterior covariance Sigma - Sigma X (X^H Sigma X + sigma2 I)^{-1} X^H Sigma."""
    if not sigma2 > 0:
        raise ValueError(f"noise power must be positive, got {sigma2}")
    x_mat = np.asarray(x_mat, dtype=complex)
    if x_mat.shape[0] != sigma_h.mn:
        raise ValueError(f"dimension mismatch: X {x_mat.shape}, kernel {sigma_h.mn}")
    if x_mat.shape[1] == 0:
        return sigma_h.sigma_h.copy()
    sx = sigma_h.sigma_h @ x_mat
    a = herm(x_mat.conj().T @ sx) + sigma2 * np.eye(x_mat.shape[1])
    return herm(sigma_h.sigma_h - sx @ np.linalg.solve(a, sx.conj().T))


def dft_matrix(k: int) -> np.ndarray:
    """Unnormalized K-point DFT matrix, entries exp(-2j pi a b / K)."""
    idx = np.arange(k)
    return np.exp(-2j * np.pi * np.outer(idx, idx) / k)


def dft_plan(m: int, n: int, q: int) -> ObservationPlan:
    """Deterministic baseline plan from DFT columns.

    Pilot q pairs BS DFT column floor(q/N) mod M with RIS DFT column
    q mod N, so the phase index advances fastest. At Q = MN the plan's
    Gram matrix is N * I.
    """
    if q < 1:
        raise ValueError(f"pilot count must be >= 1, got {q}")
    fm = dft_matrix(m)
    fn = dft_matrix(n)
    idx = np.arange(q)
    w_cols = fm[:, (idx // n) % m] / np.sqrt(m)
    theta_cols = fn[:, idx % n]
    return ObservationPlan.from_columns(w_cols, theta_cols)


def random_plan(m: int, n: int, q: int, rng: np.random.Generator) -> ObservationPlan:
    """Plan with i.i.d. uniform phases at the required moduli."""
    if q < 1:
        raise ValueError(f"pilot count must be >= 1, got {q}")
    w_cols = np.exp(2j * np.pi * rng.random((m, q))) / np.sqrt(m)
    theta_cols = np.exp(2j * np.pi * rng.random((n, q)))
    return ObservationPlan.from_columns(w_cols, theta_cols)


def ice_filling_proxy(sigma_h: ChannelKernel, q: int, sigma2: float,
                      opts: SolverOptions | None = None,
                      rng: np.random.Generator | None = None) -> ObservationPlan:
    """Combiner-only greedy design: random frozen RIS phases, optimized combiners.

    Each pilot draws theta at random, solves the combiner quadratic program
    against the current posterior kernel, then downdates the kernel.
    """
    if q < 1:
        raise ValueError(f"pilot count must be >= 1, got {q}")
    if not sigma2 > 0:
        raise ValueError(f"noise power must be positive, got {sigma2}")
    opts = opts or SolverOptions()
    rng = rng if rng is not None else np.random.default_rng()
    state = PosteriorState.from_kernel(sigma_h)
    rho_w = 1.0 / np.sqrt(sigma_h.m)
    w_cols = np.empty((sigma_h.m, q), dtype=complex)
    theta_cols = np.empty((sigma_h.n, q), dtype=complex)
    mi_trace = np.empty(q)
    for t in range(q):
        theta = np.exp(2j * np.pi * rng.random(sigma_h.n))
        w0 = rho_w * np.exp(2j * np.pi * rng.random(sigma_h.m))
        w = solve_cmqp(build_combiner_problem(state, theta), w0, opts).v
        x = np.kron(w, np.conj(theta))
        mi_trace[t] = mi_increment(state, x, sigma2)
        state = posterior_update(state, x, sigma2)
        w_cols[:, t] = w
        theta_cols[:, t] = theta
    return ObservationPlan.from_columns(w_cols, theta_cols, mi_trace)


def kron_dft_dictionary(m: int, n: int) -> np.ndarray:
    """Unitary Kronecker DFT dictionary for the cascaded-channel space."""
    return np.kron(dft_matrix(m) / np.sqrt(m), dft_matrix(n) / np.sqrt(n))


def omp_estimate(x_mat: np.ndarray, y: np.ndarray, max_atoms: int,
                 residual_tol: float, dictionary: np.ndarray | None = None) -> np.ndarray:
    """Orthogonal matching pursuit over the effective sensing matrix X^H D.

    Greedy atom selection by maximal absolute correlation with the residual,
    least-squares refit on the selected support each step, stopping at
    max_atoms or when the residual norm falls below residual_tol. The
    estimate returned is D times the sparse coefficient vector. With no
    dictionary given, the normalized MN-point DFT is used; pass
    kron_dft_dictionary(m, n) to match a ULA x UPA array split.
    """
    x_mat = np.asarray(x_mat, dtype=complex)
    y = np.asarray(y, dtype=complex)
    mn, q = x_mat.shape
    if y.shape != (q,):
        raise ValueError(f"dimension mismatch: X {x_mat.shape}, y {y.shape}")
    if not 0 <= max_atoms <= min(q, mn):
        raise ValueError(f"max_atoms must be in [0, min(Q, MN)] = [0, {min(q, mn)}], got {max_atoms}")
    if dictionary is None:
        dictionary = kron_dft_dictionary(1, mn)
    d = np.asarray(dictionary, dtype=complex)
    a = x_mat.conj().T @ d  # (Q, n_atoms) sensing matrix
    n_atoms = a.shape[1]
    # effective columns have unequal norms; select by normalized correlation
    col_norms = np.linalg.norm(a, axis=0)
    col_norms[col_norms == 0.0] = 1.0
    residual = y.copy()
    support: list[int] = []
    coef = np.zeros(n_atoms, dtype=complex)
    sol = np.zeros(0, dtype=complex)
    for _ in range(max_atoms):
        if np.linalg.norm(residual) < residual_tol:
            break
        corr = np.abs(a.conj().T @ residual) / col_norms
        if support:
            corr[support] = 0.0
        best = int(np.argmax(corr))
        if corr[best] == 0.0:
            break  # nothing left to explain (e.g. y = 0)
        support.append(best)
        sub = a[:, support]
        sol, *_ = np.linalg.lstsq(sub, y, rcond=None)
        residual = y - sub @ sol
    if support:
        coef[support] = sol
    return d @ coef


def nmse(h: np.ndarray, h_hat: np.ndarray) -> float:
    """Per-sample normalized squared error ||h - h_hat||^2 / ||h||^2."""
    h = np.asarray(h)
    h_hat = np.asarray(h_hat)
    denom = float(np.real(np.vdot(h, h)))
    if denom == 0.0:
        raise ValueError("true channel has zero norm")
    err = h - h_hat
    return float(np.real(np.vdot(err, err))) / denom
