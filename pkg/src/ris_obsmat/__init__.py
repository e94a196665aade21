"""Observation-matrix design and channel estimation for RIS-aided uplinks.

Greedy mutual-information pilot design via alternating Riemannian manifold
optimization, Bayesian (MMSE) / LS / OMP estimators, adaptive kernel
training, and a reproducible Monte Carlo benchmark harness.
"""

__version__ = "0.1.0"

from .channel import (
    ArrayGeometry,
    ChannelKernel,
    ChannelRealization,
    CorrelationModel,
    cascade_channel,
    cascade_kernel,
    draw_realization,
    observe,
    sample_gaussian,
    separable_f_kernel,
    spatial_covariance,
)
from .config import ConfigError, SimConfig, load_config, snr_db_to_sigma2
from .design import (
    ObservationPlan,
    PosteriorState,
    armo_design,
    batch_mi,
    build_combiner_problem,
    build_phase_problem,
    design_next_pilot,
    mi_increment,
    posterior_update,
)
from .estimators import (
    EstimationResult,
    dft_plan,
    ice_filling_proxy,
    kron_dft_dictionary,
    ls_estimate,
    mmse_estimate,
    nmse,
    omp_estimate,
    posterior_covariance,
    random_plan,
)
from .harness import ResultRow, build_kernel, run_kernel_training, run_sweep_q, run_sweep_snr
from .manifold import (
    CmqpProblem,
    SolverOptions,
    SolverResult,
    euclidean_gradient,
    largest_eigenvalue,
    retract,
    riemannian_gradient,
    solve_cmqp,
    step_parameters,
)
from .training import (
    FrameRecord,
    KernelTracker,
    adaptive_loop,
    ideal_reference_loop,
    init_tracker,
    push_estimate,
    regularized_kernel,
)
from .validation import CheckResult, run_validation
