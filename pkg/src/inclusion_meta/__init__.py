"""Exact and Monte Carlo analysis of metastability in reversible inclusion processes."""

from .errors import *  # noqa: F401,F403
from .model import (
    InclusionModel,
    SiteGraph,
    StateSpace,
    ValidationReport,
    count_configurations,
    enumerate_configurations,
    graph_distance,
    jump_rate,
    sigma_move,
    validate_model,
)
from .measure import MeasureTable, WeightTable, stationary_measure, valley_mass, weight_sequence
from .potential import (
    CapacityReport,
    DiscreteFlow,
    InclusionChain,
    PotentialField,
    capacity,
    dirichlet_form,
    divergence,
    exact_mean_hitting,
    flow_inner,
    flow_norm,
    flow_of_function,
    generalized_thomson_bound,
    mean_hitting_field,
    solve_equilibrium_potential,
    tube_flatness_check,
    tube_residual_check,
)
from .variational import (
    ResistanceSet,
    SandwichReport,
    SigmaDecomposition,
    TestFunction,
    build_test_flow,
    build_test_function,
    capacity_sandwich,
    classify_edges,
    dirichlet_decomposition,
    kernel_K,
    kernel_L,
    resistance_continuum,
    resistance_discrete,
    resistance_set,
)
from .simulate import (
    SimulationRun,
    Trajectory,
    TraceStatistics,
    hitting_time_samples,
    occupation_fraction,
    simulate_path,
    thermalization_exact,
    thermalization_probability,
    trace_on_valleys,
)
from .analysis import (
    LimitChain,
    RateMatrixReport,
    h1_ratio,
    level3_partition,
    limit_generator,
    limit_marginals,
    marginal_check,
    mean_rate_via_capacities,
)
from .io import load_model, parse_model, parse_schedule

__version__ = "0.1.0"
