"""Monte Carlo benchmark harness: SNR sweeps, pilot sweeps, kernel training.

Seeding discipline: the channel/noise stream of a trial is derived from
(master seed, sweep-point index, trial index) only, so every scheme at a
sweep point sees the same channel and noise realizations (common random
numbers, which sharpens paired ordering comparisons). Scheme-specific
randomness (plan initialization) comes from separate streams keyed by the
scheme's canonical index. Observation plans for kernel-based schemes are
designed once per sweep point and reused across trials; the mutual
information objective does not depend on the channel realization.

Wall-clock timing is reported through ResultRow and run-meta.json; the CSV
keeps its wall_ms column empty so that identical (config, seed) runs
produce byte-identical files.
"""

from __future__ import annotations

import json
import math
import platform
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .channel import (
    ArrayGeometry,
    ChannelKernel,
    cascade_kernel,
    complex_randn,
    cov_factor,
    separable_f_kernel,
    spatial_covariance,
)
from .config import ALL_SCHEMES, SimConfig, snr_db_to_sigma2
from .design import ObservationPlan, armo_design, batch_mi
from .estimators import (
    dft_plan,
    ice_filling_proxy,
    kron_dft_dictionary,
    ls_estimate,
    nmse,
    omp_estimate,
    random_plan,
)
from .manifold import SolverOptions
from .training import adaptive_loop

SCHEME_INDEX = {name: i for i, name in enumerate(ALL_SCHEMES)}

CSV_HEADER = "scheme,snr_db,q,trials,nmse_mean,nmse_db,mi_bits_mean,wall_ms"
TRAINING_CSV_HEADER = "frame,nmse_db,kernel_error"

# spawn-key namespaces for the master seed
_KEY_TRIAL = 1
_KEY_DESIGN = 2
_KEY_TRAINING = 3

# armo-trained rows average this many trailing frames
TRAINED_TAIL = 50


@dataclass(frozen=True)
class ResultRow:
    scheme: str
    snr_db: float
    q: int
    trials: int
    nmse_mean: float
    nmse_db: float
    mi_bits_mean: float
    wall_ms: float


def build_kernel(cfg: SimConfig) -> ChannelKernel:
    """Cascaded-channel kernel for the configured arrays and correlation models."""
    geom = ArrayGeometry.ula_upa(cfg.m, cfg.n1, cfg.n2, cfg.spacing_wavelengths)
    sig_bs = spatial_covariance(geom.bs_positions, cfg.corr_bs, spacing=geom.spacing)
    sig_ris = spatial_covariance(geom.ris_positions, cfg.corr_ris, spacing=geom.spacing)
    sig_g = spatial_covariance(geom.ris_positions, cfg.corr_user_ris, spacing=geom.spacing)
    sig_f = separable_f_kernel(sig_bs, sig_ris)
    return cascade_kernel(sig_f, sig_g, geom.m, geom.n)


def trial_rng(seed: int, point: int, trial: int) -> np.random.Generator:
    """Channel/noise stream: shared by all schemes at a sweep point."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(_KEY_TRIAL, point, trial)))


def design_rng(seed: int, scheme: str, point: int) -> np.random.Generator:
    """Plan-design stream: scheme-specific."""
    return np.random.default_rng(
        np.random.SeedSequence(seed, spawn_key=(_KEY_DESIGN, SCHEME_INDEX[scheme], point))
    )


def training_rng(seed: int, point: int = 0) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(_KEY_TRAINING, point)))


def _build_plan(scheme: str, kernel: ChannelKernel, q: int, sigma2: float,
                opts: SolverOptions, rng: np.random.Generator) -> ObservationPlan:
    if scheme in ("ls", "mmse-dft"):
        return dft_plan(kernel.m, kernel.n, q)
    if scheme == "omp":
        return random_plan(kernel.m, kernel.n, q, rng)
    if scheme == "ice-filling":
        return ice_filling_proxy(kernel, q, sigma2, opts, rng)
    if scheme == "armo-ideal":
        return armo_design(kernel, q, sigma2, opts, rng)
    raise ValueError(f"no plan constructor for scheme {scheme!r}")


def _make_estimator(scheme: str, kernel: ChannelKernel, plan: ObservationPlan,
                    sigma2: float, cfg: SimConfig):
    """Per-trial estimator closure with the plan-dependent work hoisted out."""
    x = plan.x_cols
    if scheme == "ls":
        pinv = np.linalg.pinv(x.conj().T, rcond=1e-10)
        return lambda y: pinv @ y
    if scheme == "omp":
        q = x.shape[1]
        atoms = cfg.omp_max_atoms if cfg.omp_max_atoms is not None else math.ceil(q / 4)
        atoms = min(atoms, q, kernel.mn)
        tol = cfg.omp_residual_tol if cfg.omp_residual_tol is not None else math.sqrt(q * sigma2)
        dictionary = kron_dft_dictionary(kernel.m, kernel.n)
        return lambda y: omp_estimate(x, y, atoms, tol, dictionary)
    # kernel-based posterior mean: precompute the MMSE weighting matrix
    sx = kernel.sigma_h @ x
    gram = 0.5 * (x.conj().T @ sx + (x.conj().T @ sx).conj().T)
    a = gram + sigma2 * np.eye(x.shape[1])
    weights = np.linalg.solve(a, sx.conj().T).conj().T
    return lambda y: weights @ y


def _run_cell(cfg: SimConfig, kernel: ChannelKernel, scheme: str, q: int,
              snr_db: float, point: int, opts: SolverOptions) -> ResultRow:
    sigma2 = snr_db_to_sigma2(snr_db)
    t0 = time.perf_counter()
    if scheme == "armo-trained":
        records = adaptive_loop(kernel, cfg.frames, q, sigma2, cfg.window_r,
                                cfg.epsilon, opts, training_rng(cfg.seed, point))
        tail = records[-min(TRAINED_TAIL, len(records)):]
        nmse_mean = float(np.mean([r.nmse for r in tail]))
        mi_mean = float(np.mean([r.mi_bits for r in tail]))
        trials = len(tail)
    else:
        plan = _build_plan(scheme, kernel, q, sigma2, opts, design_rng(cfg.seed, scheme, point))
        mi_mean = batch_mi(kernel, plan.x_cols, sigma2)
        estimator = _make_estimator(scheme, kernel, plan, sigma2, cfg)
        l_true = cov_factor(kernel.sigma_h)
        xh = plan.x_cols.conj().T
        noise_scale = math.sqrt(sigma2)
        errs = np.empty(cfg.trials)
        for trial in range(cfg.trials):
            rng = trial_rng(cfg.seed, point, trial)
            h = l_true @ complex_randn(kernel.mn, rng)
            y = xh @ h + noise_scale * complex_randn(q, rng)
            errs[trial] = nmse(h, estimator(y))
        nmse_mean = float(errs.mean())
        trials = cfg.trials
    wall_ms = (time.perf_counter() - t0) * 1e3
    nmse_db = 10.0 * math.log10(nmse_mean) if nmse_mean > 0 else -math.inf
    return ResultRow(scheme, float(snr_db), int(q), trials, nmse_mean, nmse_db, mi_mean, wall_ms)


def run_sweep_snr(cfg: SimConfig, opts: SolverOptions | None = None) -> list[ResultRow]:
    """NMSE of each scheme across the configured SNR grid, at the first q."""
    opts = opts or SolverOptions()
    kernel = build_kernel(cfg)
    q = cfg.q[0]
    rows = [
        _run_cell(cfg, kernel, scheme, q, snr, point, opts)
        for point, snr in enumerate(cfg.snr_db)
        for scheme in cfg.schemes
    ]
    rows.sort(key=lambda r: (r.scheme, r.snr_db))
    return rows


def run_sweep_q(cfg: SimConfig, opts: SolverOptions | None = None) -> list[ResultRow]:
    """NMSE of each scheme across the configured pilot lengths, at the first SNR."""
    opts = opts or SolverOptions()
    kernel = build_kernel(cfg)
    snr = cfg.snr_db[0]
    rows = [
        _run_cell(cfg, kernel, scheme, q, snr, point, opts)
        for point, q in enumerate(cfg.q)
        for scheme in cfg.schemes
    ]
    rows.sort(key=lambda r: (r.scheme, r.q))
    return rows


def run_kernel_training(cfg: SimConfig, opts: SolverOptions | None = None):
    """Adaptive kernel-training trace at the first (q, SNR) point."""
    opts = opts or SolverOptions()
    kernel = build_kernel(cfg)
    sigma2 = snr_db_to_sigma2(cfg.snr_db[0])
    return adaptive_loop(kernel, cfg.frames, cfg.q[0], sigma2, cfg.window_r,
                         cfg.epsilon, opts, training_rng(cfg.seed))


def _fmt(value) -> str:
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "-inf" if value < 0 else "inf"
        return repr(value)
    return str(value)


def rows_to_csv(rows: list[ResultRow]) -> str:
    lines = [CSV_HEADER]
    for r in rows:
        lines.append(
            f"{r.scheme},{_fmt(r.snr_db)},{r.q},{r.trials},"
            f"{_fmt(r.nmse_mean)},{_fmt(r.nmse_db)},{_fmt(r.mi_bits_mean)},"
        )
    return "\n".join(lines) + "\n"


def training_to_csv(records) -> str:
    lines = [TRAINING_CSV_HEADER]
    for rec in records:
        nmse_db = 10.0 * math.log10(rec.nmse) if rec.nmse > 0 else -math.inf
        lines.append(f"{rec.frame},{_fmt(nmse_db)},{_fmt(rec.kernel_error)}")
    return "\n".join(lines) + "\n"


def write_run_meta(out_dir: Path, command: str, cfg: SimConfig | None,
                   wall_ms: float, outputs: list[str]):
    from . import __version__  # deferred: the package imports this module

    meta = {
        "command": command,
        "config": cfg.as_dict() if cfg is not None else None,
        "seed": cfg.seed if cfg is not None else None,
        "versions": {
            "ris-obsmat": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
        },
        "wall_ms": wall_ms,
        "outputs": outputs,
    }
    with open(Path(out_dir) / "run-meta.json", "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
