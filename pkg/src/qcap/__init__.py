"""Constrained classical and entanglement-assisted capacities of quantum
channels: dense operator algebra, Kraus channels (including a truncated
bosonic classical-noise channel), entropy functionals with independent
cross-check routes, and certified constrained maximization."""

__version__ = "0.1.0"

from .channels import (
    KrausChannel,
    amplitude_damping,
    build_standard,
    choi_matrix,
    compose,
    constraint_tensor,
    dephasing,
    depolarizing,
    identity_channel,
    random_channel,
    reduce_kraus_rank,
    replacement,
    tensor,
)
from .entropy import (
    Ensemble,
    binary_entropy,
    entropy,
    entropy_exchange,
    entropy_upper_bound,
    free_energy_residual,
    holevo_chi,
    log_partition,
    mutual_information,
    mutual_information_via_relent,
    relative_entropy,
    thermal_entropy,
)
from .errors import (
    ConsistencyError,
    ConvergenceError,
    DimensionMismatchError,
    InfeasibleError,
    ProblemFormatError,
    QcapError,
    SizeCapError,
    ValidationError,
)
from .gaussian import (
    GaussianNoiseSpec,
    annihilation_operator,
    displacement_operator,
    gaussian_classical_noise,
    thermal_state,
)
from .operators import (
    ConstraintObservable,
    DensityMatrix,
    Spectrum,
    expected_value,
    gibbs_state,
    hermitian_eig,
    make_density,
    maximally_mixed,
    number_operator,
    partial_trace,
    pure_density,
    purify,
    random_density,
    solve_beta,
    trace_distance,
    trace_norm,
    truncate_state,
)
from .optimize import (
    AttainmentReport,
    CapacityResult,
    ConstraintSpec,
    LinearOracleResult,
    SolverOptions,
    TruncationSeries,
    TwoCopyReport,
    attainment_check,
    linear_oracle,
    maximize_chi,
    maximize_mutual_info,
    mutual_info_gradient,
    truncation_sweep,
    two_copy_check,
)

__all__ = [name for name in dir() if not name.startswith("_")]
