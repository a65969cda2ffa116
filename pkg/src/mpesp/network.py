"""Event-activity networks with per-event periods.

An event recurs every ``period`` minutes.  An activity ``a = (i, j)`` carries
an integer duration window ``[lower, upper]`` that is read modulo
``arc_period(a) = gcd(T_i, T_j)``: a timetable ``pi`` is feasible when for
every activity some duration ``x_a`` in the window satisfies
``pi_j - pi_i = x_a  (mod arc_period(a))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Hashable, Iterable, Mapping, Optional, Sequence

EventId = Hashable
ActivityId = Hashable


class NetworkError(ValueError):
    """Raised when a network or one of its elements violates an invariant."""


class ActivityKind(str, Enum):
    DRIVE = "drive"
    DWELL = "dwell"
    TRANSFER = "transfer"
    HEADWAY = "headway"
    SYNC = "sync"
    VIRTUAL = "virtual"


def as_fraction(value) -> Fraction:
    """Coerce ints, strings like '3/4', and Fractions to an exact Fraction."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise NetworkError(f"not a number: {value!r}")
    if isinstance(value, (int, str)):
        return Fraction(value)
    if isinstance(value, float):
        if not value.is_integer():
            raise NetworkError(f"non-integral float {value!r}; pass exact rationals")
        return Fraction(int(value))
    raise NetworkError(f"cannot interpret {value!r} as a rational")


def frac_mod(value, modulus: int) -> Fraction:
    """Representative of ``value`` mod ``modulus`` in [0, modulus)."""
    v = as_fraction(value)
    return v - modulus * (v / modulus).__floor__()


@dataclass(frozen=True)
class Event:
    id: EventId
    period: int
    label: str = ""

    def __post_init__(self):
        if not isinstance(self.period, int) or isinstance(self.period, bool):
            raise NetworkError(f"event {self.id!r}: period must be an integer")
        if self.period < 1:
            raise NetworkError(f"event {self.id!r}: period {self.period} < 1")


@dataclass(frozen=True)
class Activity:
    id: ActivityId
    tail: EventId
    head: EventId
    lower: int
    upper: int
    weight: Fraction = Fraction(0)
    kind: ActivityKind = ActivityKind.DRIVE

    def __post_init__(self):
        for name in ("lower", "upper"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool):
                raise NetworkError(
                    f"activity {self.id!r}: {name}={v!r} is not an integer "
                    "(rational bounds must be scaled to integers first)"
                )
        object.__setattr__(self, "weight", as_fraction(self.weight))
        if self.weight < 0:
            raise NetworkError(f"activity {self.id!r}: negative weight {self.weight}")
        object.__setattr__(self, "kind", ActivityKind(self.kind))

    @property
    def span(self) -> int:
        return self.upper - self.lower


class EventActivityNetwork:
    """Directed multigraph of events and activities.

    Loops, parallel and antiparallel activities are allowed.  The underlying
    undirected graph must be connected unless ``require_connected=False``
    (useful for raw benchmark files which become connected after rooting).

    Duration windows must satisfy ``0 <= upper - lower <= arc_period - 1``;
    with ``strict_spans=False`` offending activities are recorded in
    ``span_warnings`` instead of rejected, so imperfect real-world data can
    still be inspected.
    """

    def __init__(
        self,
        events: Iterable[Event],
        activities: Iterable[Activity] = (),
        *,
        require_connected: bool = True,
        strict_spans: bool = True,
    ):
        self._events: dict[EventId, Event] = {}
        for ev in events:
            if ev.id in self._events:
                raise NetworkError(f"duplicate event id {ev.id!r}")
            self._events[ev.id] = ev
        if not self._events:
            raise NetworkError("network needs at least one event")

        self._activities: dict[ActivityId, Activity] = {}
        warnings: list[ActivityId] = []
        for act in activities:
            if act.id in self._activities:
                raise NetworkError(f"duplicate activity id {act.id!r}")
            for end in (act.tail, act.head):
                if end not in self._events:
                    raise NetworkError(
                        f"activity {act.id!r} references unknown event {end!r}"
                    )
            t = math.gcd(self._events[act.tail].period, self._events[act.head].period)
            if act.span < 0 or act.span > t - 1:
                if strict_spans:
                    raise NetworkError(
                        f"activity {act.id!r}: span {act.span} outside [0, {t - 1}] "
                        f"for arc period {t}"
                    )
                warnings.append(act.id)
            self._activities[act.id] = act
        self.span_warnings: tuple[ActivityId, ...] = tuple(warnings)
        self._require_connected = require_connected

        if require_connected and not self.is_connected():
            raise NetworkError("event-activity network is not connected")

    # -- basic access ------------------------------------------------------

    def event(self, eid: EventId) -> Event:
        try:
            return self._events[eid]
        except KeyError:
            raise NetworkError(f"unknown event {eid!r}") from None

    def activity(self, aid: ActivityId) -> Activity:
        try:
            return self._activities[aid]
        except KeyError:
            raise NetworkError(f"unknown activity {aid!r}") from None

    @property
    def events(self) -> tuple[Event, ...]:
        return tuple(self._events[k] for k in sorted(self._events))

    @property
    def activities(self) -> tuple[Activity, ...]:
        return tuple(self._activities[k] for k in sorted(self._activities))

    @property
    def event_ids(self) -> tuple[EventId, ...]:
        return tuple(sorted(self._events))

    @property
    def activity_ids(self) -> tuple[ActivityId, ...]:
        return tuple(sorted(self._activities))

    @property
    def n_events(self) -> int:
        return len(self._events)

    @property
    def n_activities(self) -> int:
        return len(self._activities)

    def has_event(self, eid) -> bool:
        return eid in self._events

    def has_activity(self, aid) -> bool:
        return aid in self._activities

    def period(self, eid: EventId) -> int:
        return self.event(eid).period

    def arc_period(self, aid: ActivityId) -> int:
        act = self.activity(aid)
        return math.gcd(self.period(act.tail), self.period(act.head))

    def root_event(self) -> EventId:
        """Lowest event id; the canonical anchor for timetables."""
        return min(self._events)

    def hyperperiod(self) -> int:
        return math.lcm(*(ev.period for ev in self._events.values()))

    # -- structure ---------------------------------------------------------

    def incident(self, eid: EventId) -> tuple[Activity, ...]:
        return tuple(
            a for a in self.activities if a.tail == eid or a.head == eid
        )

    def neighbors(self, eid: EventId) -> set[EventId]:
        out = set()
        for a in self._activities.values():
            if a.tail == eid and a.head != eid:
                out.add(a.head)
            elif a.head == eid and a.tail != eid:
                out.add(a.tail)
        return out

    def undirected_adjacency(self) -> dict[EventId, set[EventId]]:
        adj: dict[EventId, set[EventId]] = {e: set() for e in self._events}
        for a in self._activities.values():
            if a.tail != a.head:
                adj[a.tail].add(a.head)
                adj[a.head].add(a.tail)
        return adj

    def is_connected(self) -> bool:
        adj = self.undirected_adjacency()
        start = next(iter(self._events))
        seen = {start}
        stack = [start]
        while stack:
            v = stack.pop()
            for w in adj[v]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return len(seen) == len(self._events)

    # -- derived networks ----------------------------------------------------

    def with_added(
        self,
        events: Iterable[Event] = (),
        activities: Iterable[Activity] = (),
        *,
        require_connected: Optional[bool] = None,
    ) -> "EventActivityNetwork":
        if require_connected is None:
            require_connected = self._require_connected
        return EventActivityNetwork(
            list(self._events.values()) + list(events),
            list(self._activities.values()) + list(activities),
            require_connected=require_connected,
            strict_spans=not self.span_warnings,
        )

    def without_activities(self, drop: Iterable[ActivityId]) -> "EventActivityNetwork":
        dropped = set(drop)
        return EventActivityNetwork(
            self._events.values(),
            [a for a in self._activities.values() if a.id not in dropped],
            require_connected=False,
            strict_spans=not self.span_warnings,
        )

    def with_weights(self, weights: Mapping[ActivityId, Fraction]) -> "EventActivityNetwork":
        acts = []
        for a in self._activities.values():
            w = as_fraction(weights.get(a.id, a.weight))
            acts.append(Activity(a.id, a.tail, a.head, a.lower, a.upper, w, a.kind))
        return EventActivityNetwork(
            self._events.values(), acts,
            require_connected=False,
            strict_spans=not self.span_warnings,
        )

    def __repr__(self):
        return (
            f"EventActivityNetwork({self.n_events} events, "
            f"{self.n_activities} activities)"
        )


# -- solutions ---------------------------------------------------------------


@dataclass(frozen=True)
class Timetable:
    """Per-event times in minutes; values are exact rationals."""

    times: Mapping[EventId, Fraction]

    def __post_init__(self):
        object.__setattr__(
            self, "times", {k: as_fraction(v) for k, v in dict(self.times).items()}
        )

    def __getitem__(self, eid) -> Fraction:
        return self.times[eid]


@dataclass(frozen=True)
class Tension:
    """Per-activity durations; values are exact rationals."""

    values: Mapping[ActivityId, Fraction]

    def __post_init__(self):
        object.__setattr__(
            self, "values", {k: as_fraction(v) for k, v in dict(self.values).items()}
        )

    def __getitem__(self, aid) -> Fraction:
        return self.values[aid]


@dataclass(frozen=True)
class ArcViolation:
    activity: ActivityId
    value: Fraction
    lower: int
    upper: int


@dataclass(frozen=True)
class CycleViolation:
    """An oriented closed walk whose duration sum is not 0 mod its period."""

    arcs: tuple[tuple[ActivityId, int], ...]
    total: Fraction
    modulus: int


@dataclass(frozen=True)
class FeasibilityReport:
    arc_violations: tuple[ArcViolation, ...] = ()
    cycle_violations: tuple[CycleViolation, ...] = ()

    @property
    def feasible(self) -> bool:
        return not self.arc_violations and not self.cycle_violations


# -- operations ----------------------------------------------------------------


def arc_period(net: EventActivityNetwork, aid: ActivityId) -> int:
    """gcd of the endpoint periods of activity ``aid``."""
    return net.arc_period(aid)


OrientedWalk = Sequence[tuple[ActivityId, int]]


def _walk_endpoints(net, aid, sign):
    act = net.activity(aid)
    if sign == 1:
        return act.tail, act.head
    if sign == -1:
        return act.head, act.tail
    raise NetworkError(f"orientation sign must be +1 or -1, got {sign!r}")


def validate_closed_walk(net: EventActivityNetwork, walk: OrientedWalk) -> None:
    if not walk:
        raise NetworkError("empty arc sequence is not a closed walk")
    start, cursor = None, None
    for aid, sign in walk:
        frm, to = _walk_endpoints(net, aid, sign)
        if cursor is None:
            start, cursor = frm, to
        else:
            if frm != cursor:
                raise NetworkError(
                    f"arc sequence breaks at {aid!r}: expected tail {cursor!r}, got {frm!r}"
                )
            cursor = to
    if cursor != start:
        raise NetworkError("arc sequence does not return to its start")


def cycle_period(net: EventActivityNetwork, walk: OrientedWalk) -> int:
    """gcd of ``arc_period`` over a closed walk of oriented arcs.

    Equals the gcd of the node periods visited by the walk.
    """
    validate_closed_walk(net, walk)
    return math.gcd(*(net.arc_period(aid) for aid, _ in walk))


def walk_tension_sum(net, walk: OrientedWalk, x: Tension) -> Fraction:
    return sum((sign * x[aid] for aid, sign in walk), Fraction(0))


def canonical_duration(net: EventActivityNetwork, aid: ActivityId, delta) -> Fraction:
    """The unique value congruent to ``delta`` mod arc period in [lower, lower + T_a)."""
    act = net.activity(aid)
    t = net.arc_period(aid)
    return act.lower + frac_mod(as_fraction(delta) - act.lower, t)


def tension_from_timetable(
    net: EventActivityNetwork, tt: Timetable
) -> tuple[Tension, FeasibilityReport]:
    """Canonical per-arc durations induced by a timetable.

    For each activity the representative of ``pi_head - pi_tail`` in
    ``[lower, lower + T_a)`` is returned; the report lists every activity
    whose representative exceeds ``upper``.  Infeasibility is data here, not
    an error.
    """
    values = {}
    violations = []
    for act in net.activities:
        delta = tt[act.head] - tt[act.tail]
        x = canonical_duration(net, act.id, delta)
        values[act.id] = x
        if x > act.upper:
            violations.append(ArcViolation(act.id, x, act.lower, act.upper))
    return Tension(values), FeasibilityReport(arc_violations=tuple(violations))


def check_timetable(net: EventActivityNetwork, tt: Timetable) -> FeasibilityReport:
    """Report every activity whose duration window cannot be met by ``tt``."""
    missing = [e for e in net.event_ids if e not in tt.times]
    if missing:
        raise NetworkError(f"timetable misses events {missing!r}")
    _, report = tension_from_timetable(net, tt)
    return report


def check_tension(
    net: EventActivityNetwork,
    x: Tension,
    basis=None,
    *,
    path_limit: int = 10_000,
) -> FeasibilityReport:
    """Check bounds and cycle periodicity of a duration vector.

    With ``basis`` (a fundamental cycle basis), only the basis cycles are
    checked; that certifies all cycles exactly when the basis comes from a
    sharp spanning tree.  Without a basis the full periodicity property is
    decided via timetable reconstruction, which succeeds if and only if every
    cycle is periodic; on failure a violated cycle is reported.
    """
    missing = [a for a in net.activity_ids if a not in x.values]
    if missing:
        raise NetworkError(f"tension misses activities {missing!r}")

    arc_violations = []
    for act in net.activities:
        v = x[act.id]
        if v < act.lower or v > act.upper:
            arc_violations.append(ArcViolation(act.id, v, act.lower, act.upper))

    cycle_violations: list[CycleViolation] = []
    if basis is not None:
        basis.validate_for(net)
        for cyc in basis.cycles:
            total = walk_tension_sum(net, cyc.oriented_arcs, x)
            if frac_mod(total, cyc.period) != 0:
                cycle_violations.append(
                    CycleViolation(tuple(cyc.oriented_arcs), total, cyc.period)
                )
    else:
        from . import congruence  # late import; congruence builds on this module

        outcome = congruence.timetable_from_tension(net, x, path_limit=path_limit)
        if outcome.timetable is None:
            cycle_violations.append(outcome.violation)

    return FeasibilityReport(tuple(arc_violations), tuple(cycle_violations))


def normalize_timetable(net: EventActivityNetwork, tt: Timetable) -> Timetable:
    """Shift so the lowest event id sits at 0, then reduce each time mod its period."""
    shift = tt[net.root_event()]
    out = {}
    for ev in net.events:
        out[ev.id] = frac_mod(tt[ev.id] - shift, ev.period)
    return Timetable(out)
