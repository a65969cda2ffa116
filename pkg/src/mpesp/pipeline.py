"""End-to-end solving: classify, root if necessary, build a sharp tree,
and run the exact search.  The CLI and the routing heuristic both go
through here."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .network import EventActivityNetwork, Tension, Timetable
from .quotient import RootingReport, classify, root_instance
from .solver import (
    SolveConfig,
    SolveResult,
    branch_and_bound,
    enumerate_arc_model_optimum,
)
from .trees import CycleBasis, SpanningTree, fundamental_basis, sharp_tree_harmonic, sharp_tree_rooted


@dataclass(frozen=True)
class PipelineResult:
    status: str
    objective: Optional[Fraction]
    timetable: Optional[Timetable]
    tension: Optional[Tension]
    rooting: Optional[RootingReport]
    tree: Optional[SpanningTree]
    basis: Optional[CycleBasis]
    node_count: int = 0
    elapsed: float = 0.0


def prepare_tree(net: EventActivityNetwork, strategy: str = "auto"):
    """A sharp spanning tree, rooting the instance first when needed.

    Returns ``(working_net, tree, rooting_report)``; the working network is
    the input unless rooting had to add an anchor event or virtual arcs.
    """
    if strategy not in ("auto", "harmonic", "rooted"):
        raise ValueError(f"unknown tree strategy {strategy!r}")
    cls = classify(net)
    rooting = None
    work = net
    if strategy == "harmonic" or (strategy == "auto" and cls.harmonic):
        return work, sharp_tree_harmonic(work), rooting
    if not cls.rooted:
        work, rooting = root_instance(net)
    return work, sharp_tree_rooted(work), rooting


def _lift_warm_start(net, work, warm):
    """Extend a warm start from the original network to its rooted version.

    The anchor event and virtual arcs never restrict anything, so any time
    works for them; unusable warm starts degrade to None rather than fail.
    """
    from .congruence import timetable_from_tension
    from .network import tension_from_timetable

    if isinstance(warm, Tension):
        outcome = timetable_from_tension(net, warm)
        if not outcome.ok:
            return None
        warm = outcome.timetable
    if not isinstance(warm, Timetable):
        return None  # cycle-value maps do not translate across rooting
    times = dict(warm.times)
    for eid in work.event_ids:
        times.setdefault(eid, 0)
    tt = Timetable(times)
    x, report = tension_from_timetable(work, tt)
    return x if report.feasible else None


def solve_instance(
    net: EventActivityNetwork,
    *,
    formulation: str = "cycle",
    tree_strategy: str = "auto",
    node_limit: Optional[int] = None,
    time_limit: Optional[float] = None,
    warm_start=None,
) -> PipelineResult:
    """Solve to optimality with the built-in exact solver.

    The cycle path is the real solver; the arc path enumerates the arc
    model's integer variables and exists as a desk-scale cross-check.
    Timetables and durations are reported on the original network, with any
    rooting anchor stripped back out.
    """
    if formulation == "arc":
        found = enumerate_arc_model_optimum(net)
        if found is None:
            return PipelineResult("infeasible", None, None, None, None, None, None)
        objective, tt = found
        from .network import tension_from_timetable

        x, _ = tension_from_timetable(net, tt)
        return PipelineResult("optimal", objective, tt, x, None, None, None)
    if formulation != "cycle":
        raise ValueError(f"unknown formulation {formulation!r}")

    work, tree, rooting = prepare_tree(net, tree_strategy)
    basis = fundamental_basis(work, tree)
    if warm_start is not None and work is not net:
        warm_start = _lift_warm_start(net, work, warm_start)
    result = branch_and_bound(
        work, basis, SolveConfig(node_limit, time_limit, warm_start)
    )
    timetable = result.timetable
    tension = result.tension
    if timetable is not None and work is not net:
        timetable = Timetable({e: timetable[e] for e in net.event_ids})
        tension = Tension({a: tension[a] for a in net.activity_ids})
    return PipelineResult(
        result.status,
        result.objective,
        timetable,
        tension,
        rooting,
        tree,
        basis,
        result.node_count,
        result.elapsed,
    )
