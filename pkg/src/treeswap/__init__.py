"""Ranked tree shapes as constrained ordered matchings.

Exact enumeration of labeled and unlabeled ranked tree shapes, adjacent
transposition Markov chains on both spaces with their stationary laws,
mixing diagnostics (total variation curves, spectral gaps, Dirichlet
bounds), a coalescent urn sampler with closed-form moments, and a
monotone coupling with simulation and exact hitting-time tools.
"""

from .analysis import (
    MIX_THRESHOLD,
    SpectralReport,
    TVCurve,
    dirichlet_form,
    iterative_gap,
    phi_mean_exact,
    phi_values,
    phi_variance_exact,
    relaxation_lower_bound,
    spectral_report,
    tv_curve,
    write_curve_csv,
)
from .coupling import (
    CoupledState,
    Coupling,
    CouplingResult,
    CouplingTimes,
    JointLaw,
    MarginalReport,
    analyze,
    coupled_step,
    coupling_hitting_times,
    coupling_time_bound,
    joint_move_law,
    label_time_bound,
    lazy_move_law,
    leaf_phase_step,
    line_walk_expectation,
    line_walk_expectations,
    marginal_check,
    run_coupling,
    simulate_line_walks,
    write_replicates_csv,
)
from .enumeration import (
    DEFAULT_MAX_N,
    DEFAULT_MAX_STATES,
    StateSpace,
    enumerate_space,
    euler_zigzag,
    fibers,
    labeled_count,
    predicted_count,
    read_states,
    unlabeled_count,
    write_states,
)
from .errors import (
    CapExceeded,
    DegenerateSizeError,
    InvalidMatchingError,
    InvalidParamError,
    InvalidStateError,
    NotReversibleError,
    PhaseError,
    TreeswapError,
)
from .kernel import (
    Distribution,
    Kernel,
    LumpingReport,
    is_aperiodic,
    is_irreducible,
    propose_step,
    stationary_law,
    transition_matrix,
    uniform_law,
    verify_detailed_balance,
    verify_lumping,
    write_kernel,
)
from .matchings import (
    LABELED,
    MODES,
    UNLABELED,
    Matching,
    cherry_count,
    erase_leaf_labels,
    interior,
    internal_tree_length,
    is_interior,
    is_leaf,
    label_from_str,
    label_key,
    label_to_str,
    named_leaf,
    validate,
)
from .sampler import (
    UrnTrace,
    phi_moments,
    red_ball_cov,
    red_ball_mean,
    red_ball_moments,
    red_cross_sum,
    red_square_sum,
    state_red_counts,
    urn_sample,
    urn_sample_batch,
)

__version__ = "0.1.0"

__all__ = [
    "MIX_THRESHOLD",
    "SpectralReport",
    "TVCurve",
    "dirichlet_form",
    "iterative_gap",
    "phi_mean_exact",
    "phi_values",
    "phi_variance_exact",
    "relaxation_lower_bound",
    "spectral_report",
    "tv_curve",
    "write_curve_csv",
    "CoupledState",
    "Coupling",
    "CouplingResult",
    "CouplingTimes",
    "JointLaw",
    "MarginalReport",
    "analyze",
    "coupled_step",
    "coupling_hitting_times",
    "coupling_time_bound",
    "joint_move_law",
    "label_time_bound",
    "lazy_move_law",
    "leaf_phase_step",
    "line_walk_expectation",
    "line_walk_expectations",
    "marginal_check",
    "run_coupling",
    "simulate_line_walks",
    "write_replicates_csv",
    "DEFAULT_MAX_N",
    "DEFAULT_MAX_STATES",
    "StateSpace",
    "enumerate_space",
    "euler_zigzag",
    "fibers",
    "labeled_count",
    "predicted_count",
    "read_states",
    "unlabeled_count",
    "write_states",
    "CapExceeded",
    "DegenerateSizeError",
    "InvalidMatchingError",
    "InvalidParamError",
    "InvalidStateError",
    "NotReversibleError",
    "PhaseError",
    "TreeswapError",
    "Distribution",
    "Kernel",
    "LumpingReport",
    "is_aperiodic",
    "is_irreducible",
    "propose_step",
    "stationary_law",
    "transition_matrix",
    "uniform_law",
    "verify_detailed_balance",
    "verify_lumping",
    "write_kernel",
    "LABELED",
    "MODES",
    "UNLABELED",
    "Matching",
    "cherry_count",
    "erase_leaf_labels",
    "interior",
    "internal_tree_length",
    "is_interior",
    "is_leaf",
    "label_from_str",
    "label_key",
    "label_to_str",
    "named_leaf",
    "validate",
    "UrnTrace",
    "phi_moments",
    "red_ball_cov",
    "red_ball_mean",
    "red_ball_moments",
    "red_cross_sum",
    "red_square_sum",
    "state_red_counts",
    "urn_sample",
    "urn_sample_batch",
    "__version__",
]
