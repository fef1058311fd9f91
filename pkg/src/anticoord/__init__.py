"""Anti-coordination network games on bipartite graphs.

Agents repeatedly drop dominated actions against worst/best-case views of
their neighbors; pinning a few agents to the costly action triggers a
decision cascade that deactivates edges. This package provides the
dynamics engine, the control-set objective with greedy and exhaustive
solvers, Monte-Carlo verifiers for the structural guarantees behind the
greedy bound, and a reproducible sweep harness.
"""

from .analysis import (
    BoundReport,
    DistanceReport,
    InfluenceMethod,
    InfluenceQuery,
    ViolationReport,
    check_expected_submodularity,
    check_greedy_bound,
    check_influence_submodularity,
    check_selection_rule_distribution,
    influence,
    shadow_constant,
)
from .dynamics import (
    Action,
    ConvergenceError,
    Profile,
    Trace,
    initial_profile,
    run,
    run_selection_rule,
    run_staged,
    step,
)
from .experiments import ExperimentRecord, SweepConfig, sweep, write_csv
from .instance import (
    CMode,
    Instance,
    child_seed,
    complete_bipartite,
    draw_well_behaved_c,
    fig1,
    generate_random,
    is_well_behaved,
    parse_instance,
    random_well_behaved,
    serialize_instance,
)
from .solver import (
    EnumerationCapError,
    GreedyResult,
    OptResult,
    SideRestriction,
    brute_force,
    greedy,
    inactivation_ratio,
    objective,
)

__version__ = "0.1.0"
