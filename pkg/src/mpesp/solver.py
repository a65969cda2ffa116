"""Exact solving: branch-and-bound over cycle variables plus a brute oracle.

The search fixes one fundamental-cycle variable at a time (smallest window
first) and bounds each node with the exact minimum-cost tension relaxation
in which unfixed cycles are simply dropped; dropping constraints can only
lower the optimum, so the bound is valid for every completion and grows
monotonically along a search path.  With integer data the fully fixed
subproblem has an integral optimal vertex, so optimal timetables come out
integral.  All arithmetic is rational; no floating tolerance ever decides
feasibility.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Optional, Union

from .congruence import timetable_from_tension_tree
from .network import (
    EventActivityNetwork,
    NetworkError,
    Tension,
    Timetable,
    check_timetable,
    frac_mod,
    tension_from_timetable,
)
from .tension import TensionEdge, min_cost_tension
from .trees import CycleBasis, is_sharp


class SolverError(ValueError):
    pass


@dataclass(frozen=True)
class SolveConfig:
    node_limit: Optional[int] = None
    time_limit: Optional[float] = None  # seconds
    warm_start: Union[None, Tension, Timetable, Mapping] = None


@dataclass(frozen=True)
class SolveResult:
    status: str  # "optimal" | "infeasible" | "limit-reached"
    objective: Optional[Fraction] = None
    tension: Optional[Tension] = None
    timetable: Optional[Timetable] = None
    z_values: Optional[Mapping] = None
    node_count: int = 0
    elapsed: float = 0.0


def solve_fixed_tension(
    net: EventActivityNetwork,
    basis: CycleBasis,
    z: Mapping,
) -> Optional[tuple[Fraction, Tension]]:
    """Minimum-weight durations with the given cycle values pinned.

    Cycles absent from ``z`` are unconstrained, so the value is a valid lower
    bound for any completion.  Returns None when the pinned cycles admit no
    durations within bounds.  Values outside a cycle's window are rejected.
    """
    basis.validate_for(net)
    by_cotree = {c.co_tree_arc: c for c in basis.cycles}
    for aid, value in z.items():
        cyc = by_cotree.get(aid)
        if cyc is None:
            raise SolverError(f"{aid!r} is not a co-tree arc of the basis")
        if not (cyc.odijk_lower <= value <= cyc.odijk_upper):
            raise SolverError(
                f"z={value} outside window [{cyc.odijk_lower}, {cyc.odijk_upper}] "
                f"for cycle of {aid!r}"
            )

    edges = []
    constant = Fraction(0)
    involved = set()
    for aid in basis.tree.arcs:
        act = net.activity(aid)
        edges.append(TensionEdge(aid, act.tail, act.head, act.lower, act.upper, act.weight))
        involved.add(aid)
    for aid, value in z.items():
        act = net.activity(aid)
        cyc = by_cotree[aid]
        shift = cyc.period * value
        edges.append(
            TensionEdge(
                aid, act.tail, act.head, act.lower - shift, act.upper - shift, act.weight
            )
        )
        constant += act.weight * shift
        involved.add(aid)

    solution = min_cost_tension(net.event_ids, edges)
    if solution is None:
        return None

    values = {}
    objective = solution.objective + constant
    for aid in involved:
        shift = by_cotree[aid].period * z[aid] if aid in z else 0
        values[aid] = solution.differences[aid] + shift
    for act in net.activities:
        if act.id not in involved:
            values[act.id] = Fraction(act.lower)  # free co-tree arc, weight >= 0
            objective += act.weight * act.lower
    return objective, Tension(values)


def _warm_start_assignment(net, basis, warm) -> Optional[dict]:
    """Translate a warm start into cycle values, if consistent."""
    if warm is None:
        return None
    if isinstance(warm, Timetable):
        x, report = tension_from_timetable(net, warm)
        if not report.feasible:
            return None
        warm = x
    if isinstance(warm, Tension):
        z = {}
        try:
            for cyc in basis.cycles:
                total = sum(
                    (sign * warm[aid] for aid, sign in cyc.oriented_arcs), Fraction(0)
                )
                q = total / cyc.period
                if q.denominator != 1:
                    return None
                z[cyc.co_tree_arc] = int(q)
        except KeyError:
            return None  # warm start does not cover this network's arcs
        return z
    return dict(warm)


def branch_and_bound(
    net: EventActivityNetwork,
    basis: CycleBasis,
    config: SolveConfig = SolveConfig(),
) -> SolveResult:
    """Depth-first search over the cycle variables of a sharp-tree basis.

    Cycles are fixed in order of ascending window; candidate values are tried
    nearest-first around the relaxation's suggestion.  Nodes prune as soon as
    the relaxation bound reaches the incumbent.  The optimal timetable is
    rebuilt by tree traversal and re-verified before it is returned.

    Single-threaded and deterministic.  Sibling subtrees are independent, so
    a parallel variant only needs a monotone, atomically updated incumbent;
    nothing here relies on exploration order for correctness.
    """
    sharp, witness = is_sharp(net, basis.tree)
    if not sharp:
        raise SolverError(f"basis tree is not sharp: {witness}")

    t0 = time.perf_counter()
    cycles = sorted(basis.cycles, key=lambda c: (c.window, str(c.co_tree_arc)))
    for cyc in cycles:
        if cyc.odijk_lower > cyc.odijk_upper:
            return SolveResult("infeasible", node_count=0,
                               elapsed=time.perf_counter() - t0)

    incumbent: Optional[tuple[Fraction, dict]] = None
    warm = _warm_start_assignment(net, basis, config.warm_start)
    if warm is not None and all(c.co_tree_arc in warm for c in cycles):
        try:
            solved = solve_fixed_tension(net, basis, warm)
        except SolverError:
            solved = None
        if solved is not None:
            incumbent = (solved[0], dict(warm))

    node_count = 0
    limit_hit = False

    def out_of_budget() -> bool:
        if config.node_limit is not None and node_count >= config.node_limit:
            return True
        if config.time_limit is not None and time.perf_counter() - t0 > config.time_limit:
            return True
        return False

    stack: list[dict] = [{}]
    while stack:
        fixed = stack.pop()
        if out_of_budget():
            limit_hit = True
            break
        node_count += 1
        solved = solve_fixed_tension(net, basis, fixed)
        if solved is None:
            continue
        bound, relaxed = solved
        if incumbent is not None and bound >= incumbent[0]:
            continue
        if len(fixed) == len(cycles):
            incumbent = (bound, dict(fixed))
            continue
        cyc = cycles[len(fixed)]
        total = sum(
            (sign * relaxed[aid] for aid, sign in cyc.oriented_arcs), Fraction(0)
        )
        target = total / cyc.period
        candidates = sorted(
            range(cyc.odijk_lower, cyc.odijk_upper + 1),
            key=lambda v: (abs(v - target), v),
        )
        for value in reversed(candidates):  # stack pop order = nearest first
            child = dict(fixed)
            child[cyc.co_tree_arc] = value
            stack.append(child)

    elapsed = time.perf_counter() - t0
    if incumbent is None:
        return SolveResult(
            "limit-reached" if limit_hit else "infeasible",
            node_count=node_count, elapsed=elapsed,
        )

    objective, z = incumbent
    final = solve_fixed_tension(net, basis, z)
    assert final is not None and final[0] == objective
    x = final[1]
    tt = timetable_from_tension_tree(net, x, basis.tree)
    report = check_timetable(net, tt)
    if not report.feasible:
        raise AssertionError(f"sharp-tree traversal produced violations: {report}")
    return SolveResult(
        "limit-reached" if limit_hit else "optimal",
        objective, x, tt, dict(z), node_count, elapsed,
    )


def brute_force_optimum(
    net: EventActivityNetwork, *, cap: int = 10**7
) -> Optional[tuple[Fraction, Timetable]]:
    """Enumerate all integral timetables; the independent oracle.

    Integer enumeration suffices because with integer windows the linear
    subproblems have integral optima, so some optimal timetable is integral.
    The grid size (product of periods over the non-root events) must stay
    under ``cap``.
    """
    ids = list(net.event_ids)
    root = net.root_event()
    others = [e for e in ids if e != root]
    size = 1
    for e in others:
        size *= net.period(e)
        if size > cap:
            raise SolverError(f"search grid exceeds cap {cap}")

    arcs = [
        (
            a.id,
            a.tail,
            a.head,
            a.lower,
            a.upper,
            net.arc_period(a.id),
            a.weight,
        )
        for a in net.activities
    ]

    best: Optional[tuple[Fraction, dict]] = None
    for combo in itertools.product(*(range(net.period(e)) for e in others)):
        times = dict(zip(others, combo))
        times[root] = 0
        objective = Fraction(0)
        feasible = True
        for aid, tail, head, lo, hi, t, w in arcs:
            x = lo + (times[head] - times[tail] - lo) % t
            if x > hi:
                feasible = False
                break
            if w:
                objective += w * x
        if feasible and (best is None or objective < best[0]):
            best = (objective, dict(times))
    if best is None:
        return None
    return best[0], Timetable(best[1])


def enumerate_arc_model_optimum(
    net: EventActivityNetwork, *, combo_cap: int = 500_000
) -> Optional[tuple[Fraction, Timetable]]:
    """Optimum via the arc model's integer variables: fix the modulo vector,
    solve the remaining window system exactly, keep the best.

    An independent cross-check of the cycle search: same answers, different
    formulation.  Partial assignments are pruned by window consistency.
    """
    from .formulations import build_arc_model  # bounds derivation lives there

    model = build_arc_model(net)
    p_bounds = {}
    for v in model.variables:
        if v.integer:
            p_bounds[model.metadata[v.name][1]] = (int(v.lower), int(v.upper))

    acts = list(net.activities)
    root = net.root_event()
    best: Optional[tuple[Fraction, dict]] = None
    combos_seen = 0

    def window_edges(assign):
        edges = []
        for act in acts:
            if act.id not in assign:
                continue
            shift = net.arc_period(act.id) * assign[act.id]
            edges.append(
                TensionEdge(
                    act.id, act.tail, act.head,
                    act.lower - shift, act.upper - shift, act.weight,
                )
            )
        # anchor: every time sits in [0, T_i - 1] relative to the root
        for e in net.event_ids:
            hi = 0 if e == root else net.period(e) - 1
            edges.append(TensionEdge(("box", e), root, e, 0, hi, Fraction(0)))
        return edges

    def feasible_prefix(assign) -> bool:
        from .tension import _initial_potentials

        nodes = net.event_ids
        return _initial_potentials(nodes, window_edges(assign)) is not None

    def recurse(k, assign):
        nonlocal best, combos_seen
        if k == len(acts):
            combos_seen += 1
            solution = min_cost_tension(net.event_ids, window_edges(assign))
            if solution is None:
                return
            objective = solution.objective + sum(
                (
                    act.weight * net.arc_period(act.id) * assign[act.id]
                    for act in acts
                ),
                Fraction(0),
            )
            if best is None or objective < best[0]:
                times = {
                    e: frac_mod(solution.potentials[e] - solution.potentials[root],
                                net.period(e))
                    for e in net.event_ids
                }
                best = (objective, times)
            return
        if combos_seen > combo_cap:
            raise SolverError("modulo enumeration exceeded cap")
        act = acts[k]
        lo, hi = p_bounds[act.id]
        for value in range(lo, hi + 1):
            assign[act.id] = value
            if feasible_prefix(assign):
                recurse(k + 1, assign)
            del assign[act.id]

    recurse(0, {})
    if best is None:
        return None
    return best[0], Timetable(best[1])
