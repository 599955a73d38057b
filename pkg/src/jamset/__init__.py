"""Greedy independent sets on configuration-model random graphs.

Simulation of the greedy (random sequential adsorption) process on random
multigraphs and simple graphs with given degrees, and numerical evaluation
of its limiting theory: jamming constant, per-degree composition, and the
full fluid trajectory.
"""

__version__ = "0.1.0"

from .degree_model import (
    DegreeSequence,
    LimitModel,
    ModelError,
    ParityError,
    SequenceSpecError,
    UnsupportedRegimeError,
    build_sequence,
    empirical,
    limit_model,
    limit_model_from_spec,
)
from .config_model import (
    MatchingOracle,
    Multigraph,
    RejectionExhaustionError,
    enumerate_matchings,
    is_simple,
    sample_matching,
    sample_simple,
)
from .greedy_sim import (
    ReplicaAggregate,
    SimResult,
    SimState,
    Trajectory,
    TrajectoryConfig,
    exact_s_distribution,
    replica_generator,
    run_dynamic,
    run_replicas,
    run_static,
)
from .theory import (
    FluidTrajectory,
    NumericalError,
    TheoryResult,
    closed_form_poisson,
    closed_form_regular,
    degree_mass,
    drift,
    integrand,
    jamming_constant,
    limit_trajectory,
    p_connect,
    tau_infinity,
    time_change,
    weighted_series,
)
from .experiments import (
    ConvergenceReport,
    Scenario,
    convergence_study,
    coverage_study,
    low_degree_coverage,
    preset,
    trajectory_compare,
)
