"""Passenger routing, roll-out-exact evaluation, and the alternating
timetabling/routing heuristic.

Routing on the compact multiperiodic graph underestimates journeys with two
or more transfers, because consecutive short transfers need not be jointly
realizable in one run.  ``evaluate_exact`` therefore routes on the full
hyperperiod roll-out, where every copy pair carries its realized duration.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence

from .formulations import expand_to_pesp
from .network import (
    ActivityId,
    ActivityKind,
    EventActivityNetwork,
    EventId,
    NetworkError,
    Tension,
    Timetable,
    as_fraction,
    check_timetable,
    frac_mod,
    tension_from_timetable,
)

ROUTABLE = (ActivityKind.DRIVE, ActivityKind.DWELL, ActivityKind.TRANSFER)


class RoutingError(ValueError):
    pass


@dataclass(frozen=True)
class ODMatrix:
    """Demand per (origin station, destination station), plus which events
    board/alight at each station."""

    entries: Mapping[tuple, Fraction]
    boarding: Mapping[object, tuple]   # station -> event ids
    alighting: Mapping[object, tuple]  # station -> event ids

    def __post_init__(self):
        cleaned = {}
        for (o, d), count in dict(self.entries).items():
            q = as_fraction(count)
            if q < 0:
                raise RoutingError(f"negative demand for {(o, d)!r}")
            cleaned[(o, d)] = q
        object.__setattr__(self, "entries", cleaned)
        object.__setattr__(
            self, "boarding", {k: tuple(v) for k, v in dict(self.boarding).items()}
        )
        object.__setattr__(
            self, "alighting", {k: tuple(v) for k, v in dict(self.alighting).items()}
        )

    def restricted_to(self, stations) -> "ODMatrix":
        keep = set(stations)
        return ODMatrix(
            {k: v for k, v in self.entries.items() if k[0] in keep and k[1] in keep},
            {k: v for k, v in self.boarding.items() if k in keep},
            {k: v for k, v in self.alighting.items() if k in keep},
        )


@dataclass(frozen=True)
class RoutingState:
    weights: Mapping[ActivityId, Fraction]
    travel_time_total: Fraction
    unreachable: tuple = ()


def _dijkstra_best(net, lengths, sources, targets):
    """Shortest routable path from any source to any target.

    Ties break lexicographically on the arc-id sequence so regression tests
    see one canonical path.  Returns (cost, arc ids) or None.
    """
    outgoing: dict[EventId, list] = {}
    for act in net.activities:
        if act.kind not in ROUTABLE:
            continue
        length = lengths.get(act.id)
        if length is None:
            raise RoutingError(f"missing length for activity {act.id!r}")
        if length < 0:
            raise RoutingError(f"negative length on activity {act.id!r}")
        outgoing.setdefault(act.tail, []).append((act.id, act.head, length))

    best: dict[EventId, tuple] = {}
    heap = []
    for s in sources:
        key = (Fraction(0), ())
        if s not in best or key < best[s]:
            best[s] = key
            heapq.heappush(heap, (Fraction(0), (), s))
    target_set = set(targets)
    while heap:
        dist, path, node = heapq.heappop(heap)
        if best.get(node, None) != (dist, path):
            continue
        for aid, head, length in outgoing.get(node, ()):
            cand = (dist + length, path + (str(aid),))
            if head not in best or cand < best[head]:
                best[head] = cand
                heapq.heappush(heap, (cand[0], cand[1], head))

    winner = None
    for t in target_set:
        if t in best and (winner is None or best[t] < winner):
            winner = best[t]
    return winner


def route_passengers(
    net: EventActivityNetwork,
    od: ODMatrix,
    lengths: Mapping[ActivityId, Fraction],
) -> RoutingState:
    """Shortest-path assignment of all demand over drive/dwell/transfer arcs.

    ``lengths`` is any nonnegative per-arc vector: lower bounds before a
    timetable exists, realized durations afterwards.  Headway, sync, and
    virtual arcs never carry passengers.  Unreachable pairs are reported and
    skipped.
    """
    lengths = {k: as_fraction(v) for k, v in lengths.items()}
    weights: dict[ActivityId, Fraction] = {a.id: Fraction(0) for a in net.activities}
    id_map = {str(a.id): a.id for a in net.activities}
    total = Fraction(0)
    unreachable = []
    for (origin, destination), demand in sorted(
        od.entries.items(), key=lambda kv: (str(kv[0][0]), str(kv[0][1]))
    ):
        if demand == 0:
            continue
        sources = [e for e in od.boarding.get(origin, ()) if net.has_event(e)]
        targets = [e for e in od.alighting.get(destination, ()) if net.has_event(e)]
        if not sources or not targets:
            unreachable.append((origin, destination))
            continue
        found = _dijkstra_best(net, lengths, sources, targets)
        if found is None:
            unreachable.append((origin, destination))
            continue
        cost, path = found
        total += demand * cost
        for token in path:
            weights[id_map[token]] += demand
    for act in net.activities:
        if act.kind is ActivityKind.VIRTUAL:
            weights[act.id] = Fraction(0)
    return RoutingState(weights, total, tuple(unreachable))


def lengths_from_lower_bounds(net: EventActivityNetwork) -> dict:
    return {a.id: Fraction(a.lower) for a in net.activities}


def expanded_od(od: ODMatrix, mapping) -> ODMatrix:
    """Attach OD stations to every rolled-out copy of their events."""
    boarding = {
        s: tuple(cid for e in evs for cid in mapping.event_copies.get(e, ()))
        for s, evs in od.boarding.items()
    }
    alighting = {
        s: tuple(cid for e in evs for cid in mapping.event_copies.get(e, ()))
        for s, evs in od.alighting.items()
    }
    return ODMatrix(od.entries, boarding, alighting)


def evaluate_exact(
    net: EventActivityNetwork,
    tt: Timetable,
    od: ODMatrix,
    *,
    max_expanded_arcs: int = 200_000,
) -> Fraction:
    """Passenger-minutes of ``tt`` measured on the hyperperiod roll-out.

    All copy pairs are materialized so every transfer opportunity is visible;
    each duplicate's length is its realized duration under the timetable.
    Never below the compact-graph routing value, and strictly above it when
    a shortest journey chains two or more transfers that cannot co-occur.
    """
    report = check_timetable(net, tt)
    if not report.feasible:
        raise RoutingError("timetable is infeasible; evaluation needs a feasible one")

    size = sum(
        (net.hyperperiod() // net.arc_period(a.id))
        * (net.hyperperiod() // math.lcm(net.period(a.tail), net.period(a.head)))
        for a in net.activities
    )
    if size > max_expanded_arcs:
        raise RoutingError(
            f"roll-out would have about {size} arcs, over the cap {max_expanded_arcs}"
        )

    expanded, mapping = expand_to_pesp(net, all_pairs=True)
    copy_times = mapping.copy_times(net, tt)
    big_l = mapping.hyperperiod
    lengths = {}
    for act in expanded.activities:
        if act.kind not in ROUTABLE:
            continue
        delta = copy_times[act.head] - copy_times[act.tail]
        value = act.lower + frac_mod(delta - act.lower, big_l)
        if value > act.upper:
            raise AssertionError("feasible timetable left a duplicate out of window")
        lengths[act.id] = value

    state = route_passengers(expanded, expanded_od(od, mapping), lengths)
    if state.unreachable:
        raise RoutingError(f"unreachable pairs on the roll-out: {state.unreachable}")
    return state.travel_time_total


def trim_transfer_arcs(
    net: EventActivityNetwork,
    weights: Mapping[ActivityId, Fraction],
    fraction,
) -> EventActivityNetwork:
    """Keep the heaviest ``fraction`` of transfer activities, all else intact.

    ``ceil(fraction * count)`` transfers survive; ties prefer the smaller
    activity id.  Removing full-window transfers never changes the set of
    feasible timetables.
    """
    frac = as_fraction(fraction)
    if not 0 < frac <= 1:
        raise RoutingError(f"fraction must be in (0, 1], got {fraction!r}")
    transfers = [a for a in net.activities if a.kind is ActivityKind.TRANSFER]
    if not transfers:
        return net
    keep_count = -((-len(transfers) * frac.numerator) // frac.denominator)
    ranked = sorted(
        transfers,
        key=lambda a: (-as_fraction(weights.get(a.id, 0)), str(a.id)),
    )
    dropped = {a.id for a in ranked[keep_count:]}
    return net.without_activities(dropped)


@dataclass(frozen=True)
class IterationConfig:
    formulation: str = "cycle"  # or "arc" (naive; desk-scale only)
    k_start: int = 1
    k_end: int = 10
    node_limit: Optional[int] = None
    time_limit: Optional[float] = None


@dataclass(frozen=True)
class IterationRecord:
    k: int
    fraction: Fraction
    solver_status: str
    solver_objective: Optional[Fraction]
    routed_total: Optional[Fraction]
    converged: bool


def iterate_timetable_routing(
    net: EventActivityNetwork,
    od: ODMatrix,
    config: IterationConfig = IterationConfig(),
):
    """Alternate routing and timetabling, widening the transfer pool.

    Iteration ``k`` routes on the current durations, keeps the top ``10k``
    percent of transfer arcs by load, re-solves the trimmed instance with
    routed loads as weights, then re-routes on the new durations.  Stops on
    two identical consecutive load vectors or after ``k_end``; a solver that
    hits its limit ends the loop with the best answer so far.

    Returns ``(timetable, routing_state, history)``.
    """
    from .pipeline import solve_instance  # local import to avoid a cycle

    lengths = lengths_from_lower_bounds(net)
    history: list[IterationRecord] = []
    timetable = None
    state = None

    for k in range(config.k_start, config.k_end + 1):
        before = route_passengers(net, od, lengths)
        frac = Fraction(min(10 * k, 100), 100)
        trimmed = trim_transfer_arcs(net, before.weights, frac)
        weighted = trimmed.with_weights(
            {a.id: before.weights.get(a.id, Fraction(0)) for a in trimmed.activities}
        )
        result = solve_instance(
            weighted,
            formulation=config.formulation,
            node_limit=config.node_limit,
            time_limit=config.time_limit,
        )
        if result.timetable is None:
            history.append(
                IterationRecord(k, frac, result.status, result.objective, None, False)
            )
            break
        timetable = Timetable(
            {e: result.timetable[e] for e in net.event_ids}
        )
        x, _ = tension_from_timetable(net, timetable)
        lengths = {a.id: x[a.id] for a in net.activities}
        state = route_passengers(net, od, lengths)
        # converged when two routings in a row assign identical loads; the
        # next iteration's opening routing would repeat this one exactly
        converged = before.weights == state.weights
        history.append(
            IterationRecord(
                k, frac, result.status, result.objective,
                state.travel_time_total, converged,
            )
        )
        if converged or result.status == "limit-reached":
            break

    return timetable, state, history
