"""Adaptive kernel acquisition across frames.

The tracker starts from an identity kernel, and each frame designs pilots
with the current sample kernel, estimates the channel, and folds the
estimate back in: a running mean of outer products while fewer than R
estimates exist, a sliding R-frame window afterwards.

A literal rank-one bootstrap would trap the estimator in the span of the
first estimate, so the kernel actually handed to the designer/estimator is
diagonally loaded; the stored sample kernel follows the plain update law.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelKernel, complex_randn, cov_factor, herm, observe
from .design import armo_design, batch_mi
from .estimators import mmse_estimate, nmse
from .manifold import SolverOptions

KERNEL_FLOOR = 1e-8


@dataclass(frozen=True)
class KernelTracker:
    """Sliding-window sample-kernel state."""

    r: int
    window_r: int
    buffer: tuple  # last <= R channel estimates, oldest first
    sigma_hat: np.ndarray
    m: int  # array split carried so the sample kernel can feed the designer

    @property
    def mn(self) -> int:
        return self.sigma_hat.shape[0]


def init_tracker(mn: int, window_r: int, m: int = 1) -> KernelTracker:
    """Fresh tracker: identity kernel, empty window."""
    if window_r < 1:
        raise ValueError(f"window length must be >= 1, got {window_r}")
    if mn < 1 or mn % m:
        raise ValueError(f"mn = {mn} is not divisible by m = {m}")
    return KernelTracker(0, window_r, (), np.eye(mn, dtype=complex), m)


def push_estimate(tracker: KernelTracker, h_hat: np.ndarray) -> KernelTracker:
    """Fold one channel estimate into the sample kernel.

    Running mean of outer products up to window_r estimates, plain mean
    over the buffered window beyond that (recomputed from the buffer, so
    no FIFO drift accumulates).
    """
    h_hat = np.asarray(h_hat, dtype=complex)
    if h_hat.shape != (tracker.mn,):
        raise ValueError(f"dimension mismatch: estimate {h_hat.shape}, kernel {tracker.mn}")
    r = tracker.r + 1
    buffer = (tracker.buffer + (h_hat.copy(),))[-tracker.window_r:]
    if r <= tracker.window_r:
        sigma = ((r - 1) / r) * tracker.sigma_hat + np.outer(h_hat, h_hat.conj()) / r
    else:
        stack = np.stack(buffer)  # (R, MN)
        sigma = stack.T @ stack.conj() / tracker.window_r
    # FMA complex products and BLAS leave ~1e-17 conjugate-symmetry residue
    return KernelTracker(r, tracker.window_r, buffer, herm(sigma), tracker.m)


def regularized_kernel(tracker: KernelTracker, epsilon: float) -> ChannelKernel:
    """Diagonally loaded copy of the sample kernel, safe for design/estimation.

    Adds (epsilon * trace / MN + floor) * I so a rank-deficient sample
    kernel still spans the full space.
    """
    if epsilon < 0:
        raise ValueError(f"loading factor must be nonnegative, got {epsilon}")
    mn = tracker.mn
    load = epsilon * float(np.real(np.trace(tracker.sigma_hat))) / mn + KERNEL_FLOOR
    return ChannelKernel(tracker.sigma_hat + load * np.eye(mn), tracker.m, mn // tracker.m)


@dataclass(frozen=True)
class FrameRecord:
    frame: int
    nmse: float
    kernel_error: float
    mi_bits: float


def adaptive_loop(true_kernel: ChannelKernel, frames: int, q: int, sigma2: float,
                  window_r: int, epsilon: float,
                  opts: SolverOptions | None = None,
                  rng: np.random.Generator | None = None,
                  oracle_push: bool = False) -> list[FrameRecord]:
    """Joint channel estimation and kernel training over `frames` frames.

    Per frame: design pilots on the loaded sample kernel, draw the true
    channel, observe, estimate with the same loaded kernel, push the
    estimate (or the true channel when oracle_push is set) into the
    tracker. Each frame consumes two child streams spawned from `rng`, in
    order: channel draws, then design initialization -- ideal_reference_loop
    mirrors this so both loops see identical channels and noise.

    Records per-frame NMSE, the relative Frobenius error of the raw sample
    kernel, and the plan's mutual information against the true kernel.
    """
    if frames < 1:
        raise ValueError(f"frames must be >= 1, got {frames}")
    opts = opts or SolverOptions()
    rng = rng if rng is not None else np.random.default_rng()
    tracker = init_tracker(true_kernel.mn, window_r, m=true_kernel.m)
    l_true = cov_factor(true_kernel.sigma_h)
    true_norm = float(np.linalg.norm(true_kernel.sigma_h))
    records = []
    for frame in range(1, frames + 1):
        ch_rng, des_rng = rng.spawn(2)
        design_kernel = regularized_kernel(tracker, epsilon)
        plan = armo_design(design_kernel, q, sigma2, opts, des_rng)
        h = l_true @ complex_randn(true_kernel.mn, ch_rng)
        y = observe(h, plan.x_cols, sigma2, ch_rng)
        h_hat = mmse_estimate(design_kernel, plan.x_cols, y, sigma2).h_hat
        tracker = push_estimate(tracker, h if oracle_push else h_hat)
        records.append(FrameRecord(
            frame,
            nmse(h, h_hat),
            float(np.linalg.norm(tracker.sigma_hat - true_kernel.sigma_h)) / true_norm,
            batch_mi(true_kernel, plan.x_cols, sigma2),
        ))
    return records


def ideal_reference_loop(true_kernel: ChannelKernel, frames: int, q: int, sigma2: float,
                         opts: SolverOptions | None = None,
                         rng: np.random.Generator | None = None) -> list[FrameRecord]:
    """Reference run with the true kernel: one plan, same channel draws.

    Spawns the same two child streams per frame as adaptive_loop so the
    channel and noise realizations match frame for frame; the design
    stream is consumed only once, for the single plan.
    """
    if frames < 1:
        raise ValueError(f"frames must be >= 1, got {frames}")
    opts = opts or SolverOptions()
    rng = rng if rng is not None else np.random.default_rng()
    l_true = cov_factor(true_kernel.sigma_h)
    plan = None
    mi = 0.0
    records = []
    for frame in range(1, frames + 1):
        ch_rng, des_rng = rng.spawn(2)
        if plan is None:
            plan = armo_design(true_kernel, q, sigma2, opts, des_rng)
            mi = batch_mi(true_kernel, plan.x_cols, sigma2)
        h = l_true @ complex_randn(true_kernel.mn, ch_rng)
        y = observe(h, plan.x_cols, sigma2, ch_rng)
        h_hat = mmse_estimate(true_kernel, plan.x_cols, y, sigma2).h_hat
        records.append(FrameRecord(frame, nmse(h, h_hat), 0.0, mi))
    return records
