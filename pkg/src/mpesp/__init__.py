"""Multiperiodic event scheduling toolkit.

Models event-activity networks where every event recurs at its own period,
constructs sharp spanning trees and fundamental cycle bases, builds arc- and
cycle-based integer programs, solves desk-scale instances exactly,
reconstructs timetables from duration vectors via simultaneous congruences,
and evaluates timetables with passenger routing.
"""

__version__ = "0.1.0"

from .congruence import (
    Congruence,
    CongruenceSystem,
    ReconstructionLimit,
    SimultaneousConflict,
    SimultaneousSolution,
    extended_gcd,
    solve_simultaneous,
    timetable_from_tension,
    timetable_from_tension_tree,
)
from .formulations import (
    ExpansionMap,
    MipModel,
    NonSharpBasisError,
    add_headway,
    add_local_sync,
    add_transfer,
    build_arc_model,
    build_cycle_model,
    expand_to_pesp,
)
from .network import (
    Activity,
    ActivityKind,
    Event,
    EventActivityNetwork,
    FeasibilityReport,
    NetworkError,
    Tension,
    Timetable,
    arc_period,
    check_tension,
    check_timetable,
    cycle_period,
    normalize_timetable,
    tension_from_timetable,
)
from .pipeline import PipelineResult, prepare_tree, solve_instance
from .quotient import (
    Classification,
    NotHarmonicError,
    NotRootedError,
    QuotientGraph,
    RootingReport,
    assign_leaders,
    build_quotient,
    classify,
    root_instance,
)
from .routing import (
    IterationConfig,
    ODMatrix,
    RoutingState,
    evaluate_exact,
    iterate_timetable_routing,
    route_passengers,
    trim_transfer_arcs,
)
from .solver import (
    SolveConfig,
    SolveResult,
    branch_and_bound,
    brute_force_optimum,
    enumerate_arc_model_optimum,
    solve_fixed_tension,
)
from .trees import (
    CycleBasis,
    FundamentalCycle,
    SpanningTree,
    fundamental_basis,
    is_sharp,
    sharp_tree_harmonic,
    sharp_tree_rooted,
)
