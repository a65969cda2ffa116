"""Integer-program builders, the PESP roll-out, and modeling helpers.

Two model shapes are produced for any instance: the arc model (durations,
event times, and one integer modulo variable per activity) and the cycle
model (durations plus one integer per fundamental cycle of a sharp spanning
tree, with window cuts on each cycle variable).  ``expand_to_pesp`` rolls a
multiperiodic instance out to a single-period one over the hyperperiod.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Optional, Sequence

from .network import (
    Activity,
    ActivityId,
    ActivityKind,
    Event,
    EventActivityNetwork,
    EventId,
    NetworkError,
    as_fraction,
)
from .trees import CycleBasis, is_sharp
from .quotient import _id_key


class ModelError(ValueError):
    pass


class NonSharpBasisError(ModelError):
    """The cycle model is only valid over a sharp tree's fundamental basis."""


@dataclass(frozen=True)
class MipVar:
    name: str
    lower: Optional[Fraction]
    upper: Optional[Fraction]
    integer: bool


@dataclass(frozen=True)
class MipConstraint:
    name: str
    coeffs: tuple[tuple[str, Fraction], ...]
    sense: str  # "=", "<=", ">="
    rhs: Fraction


@dataclass(frozen=True)
class MipModel:
    name: str
    variables: tuple[MipVar, ...]
    constraints: tuple[MipConstraint, ...]
    objective: tuple[tuple[str, Fraction], ...]
    metadata: Mapping[str, tuple[str, object]]  # var name -> (kind, source id)

    def __post_init__(self):
        declared = {v.name for v in self.variables}
        for con in self.constraints:
            for name, _ in con.coeffs:
                if name not in declared:
                    raise ModelError(f"constraint {con.name} uses undeclared {name}")
        for name, _ in self.objective:
            if name not in declared:
                raise ModelError(f"objective uses undeclared {name}")
        missing = declared - set(self.metadata)
        if missing:
            raise ModelError(f"metadata missing for {sorted(missing)}")

    @property
    def n_integer(self) -> int:
        return sum(1 for v in self.variables if v.integer)

    @property
    def n_continuous(self) -> int:
        return sum(1 for v in self.variables if not v.integer)

    def variable(self, name: str) -> MipVar:
        for v in self.variables:
            if v.name == name:
                return v
        raise KeyError(name)


def _sanitize(token) -> str:
    return "".join(ch if ch.isalnum() or ch in "._" else "_" for ch in str(token))


def var_name(kind: str, source) -> str:
    return f"{kind}_{_sanitize(source)}"


def build_arc_model(net: EventActivityNetwork) -> MipModel:
    """Arc model: ``x_a = pi_head - pi_tail + T_a p_a`` with ``p_a`` integer.

    Event times live in ``[0, T_i - 1]`` with the lowest event id pinned to
    zero; the modulo variables get the tightest integer windows consistent
    with those boxes, which external solvers are free to ignore.
    """
    variables: list[MipVar] = []
    meta: dict[str, tuple[str, object]] = {}
    root = net.root_event()

    pi_names = {}
    for ev in net.events:
        name = var_name("pi", ev.id)
        hi = Fraction(0) if ev.id == root else Fraction(ev.period - 1)
        variables.append(MipVar(name, Fraction(0), hi, False))
        meta[name] = ("time", ev.id)
        pi_names[ev.id] = name

    constraints: list[MipConstraint] = []
    objective: list[tuple[str, Fraction]] = []
    for act in net.activities:
        t = net.arc_period(act.id)
        xn = var_name("x", act.id)
        variables.append(MipVar(xn, Fraction(act.lower), Fraction(act.upper), False))
        meta[xn] = ("tension", act.id)
        pn = var_name("p", act.id)
        pi_tail_hi = 0 if act.tail == root else net.period(act.tail) - 1
        pi_head_hi = 0 if act.head == root else net.period(act.head) - 1
        p_lo = -((pi_head_hi - act.lower) // t)  # ceil((l - pi_head_max)/t)
        p_hi = (act.upper + pi_tail_hi) // t
        variables.append(MipVar(pn, Fraction(p_lo), Fraction(p_hi), True))
        meta[pn] = ("modulo", act.id)

        coeffs = [(xn, Fraction(1)), (pn, Fraction(-t))]
        if act.head != act.tail:
            coeffs.append((pi_names[act.head], Fraction(-1)))
            coeffs.append((pi_names[act.tail], Fraction(1)))
        constraints.append(
            MipConstraint(f"link_{_sanitize(act.id)}", tuple(coeffs), "=", Fraction(0))
        )
        if act.weight:
            objective.append((xn, act.weight))

    return MipModel(
        "arc-model", tuple(variables), tuple(constraints), tuple(objective), meta
    )


def build_cycle_model(net: EventActivityNetwork, basis: CycleBasis) -> MipModel:
    """Cycle model over a sharp tree: durations plus one bounded integer per
    fundamental cycle; rejects bases whose tree is not sharp, since the
    formulation is only valid there."""
    basis.validate_for(net)
    sharp, witness = is_sharp(net, basis.tree)
    if not sharp:
        raise NonSharpBasisError(
            f"tree is not sharp: activity {witness.activity!r} has period "
            f"{witness.arc_period} but its cycle has period {witness.cycle_period}"
        )

    variables: list[MipVar] = []
    meta: dict[str, tuple[str, object]] = {}
    objective: list[tuple[str, Fraction]] = []
    for act in net.activities:
        xn = var_name("x", act.id)
        variables.append(MipVar(xn, Fraction(act.lower), Fraction(act.upper), False))
        meta[xn] = ("tension", act.id)
        if act.weight:
            objective.append((xn, act.weight))

    constraints: list[MipConstraint] = []
    for cyc in basis.cycles:
        zn = var_name("z", cyc.co_tree_arc)
        variables.append(
            MipVar(zn, Fraction(cyc.odijk_lower), Fraction(cyc.odijk_upper), True)
        )
        meta[zn] = ("cycle", cyc.co_tree_arc)
        coeffs: dict[str, Fraction] = {}
        for aid, sign in cyc.oriented_arcs:
            name = var_name("x", aid)
            coeffs[name] = coeffs.get(name, Fraction(0)) + sign
        coeffs[zn] = Fraction(-cyc.period)
        constraints.append(
            MipConstraint(
                f"cycle_{_sanitize(cyc.co_tree_arc)}",
                tuple((k, v) for k, v in coeffs.items() if v != 0),
                "=",
                Fraction(0),
            )
        )

    return MipModel(
        "cycle-model", tuple(variables), tuple(constraints), tuple(objective), meta
    )


# -- roll-out ------------------------------------------------------------------


@dataclass(frozen=True)
class ExpansionMap:
    """Bookkeeping for a roll-out: original ids to copy ids, plus the exact
    constant separating the rolled-out objective from the original one under
    the even weight split."""

    hyperperiod: int
    event_copies: Mapping[EventId, tuple]
    activity_copies: Mapping[ActivityId, tuple]
    sync_arcs: tuple
    objective_offset: Fraction

    def copy_times(self, net: EventActivityNetwork, timetable) -> dict:
        """Times for every copy implied by an original timetable."""
        out = {}
        for eid, copies in self.event_copies.items():
            t = net.period(eid)
            for m, cid in enumerate(copies):
                out[cid] = timetable[eid] + m * t
        return out


def _copy_id(base, k) -> str:
    return f"{base}@{k}"


def expand_to_pesp(
    net: EventActivityNetwork, *, all_pairs: bool = False
) -> tuple[EventActivityNetwork, ExpansionMap]:
    """Roll the instance out to the hyperperiod ``L``.

    Every event gets ``L / T_i`` copies chained by fixed offset-``T_i`` sync
    arcs.  Every activity is duplicated once per congruence class of copy
    pairs (``L / T_a`` duplicates; with ``all_pairs=True`` every copy pair,
    which routing needs), each carrying the window ``[lower, upper + L - T_a]``
    so that the conjunction over the duplicates enforces exactly the original
    modulo constraint.  Weights are split evenly across duplicates in exact
    arithmetic; the timetable-independent objective shift that the splitting
    introduces is reported as ``objective_offset``.
    """
    big_l = net.hyperperiod()
    events: list[Event] = []
    acts: list[Activity] = []
    event_copies: dict[EventId, tuple] = {}
    sync_ids = []

    for ev in net.events:
        n_copies = big_l // ev.period
        ids = tuple(_copy_id(ev.id, m) for m in range(n_copies))
        event_copies[ev.id] = ids
        for m, cid in enumerate(ids):
            events.append(Event(cid, big_l, label=ev.label))
        for m in range(n_copies - 1):
            aid = f"sync:{_sanitize(ev.id)}@{m}"
            acts.append(
                Activity(aid, ids[m], ids[m + 1], ev.period, ev.period,
                         Fraction(0), ActivityKind.SYNC)
            )
            sync_ids.append(aid)

    activity_copies: dict[ActivityId, tuple] = {}
    offset = Fraction(0)
    for act in net.activities:
        t_a = net.arc_period(act.id)
        n_cls = big_l // t_a
        tail_copies = event_copies[act.tail]
        head_copies = event_copies[act.head]
        t_tail = net.period(act.tail)
        t_head = net.period(act.head)

        chosen: list[tuple[int, int, int]] = []  # (class, m, n)
        seen: set[int] = set()
        for m in range(len(tail_copies)):
            for n in range(len(head_copies)):
                cls = ((n * t_head - m * t_tail) % big_l) // t_a
                if all_pairs or cls not in seen:
                    seen.add(cls)
                    chosen.append((cls, m, n))
        if len(seen) != n_cls:
            raise AssertionError("copy pairs failed to cover all classes")

        share = act.weight / len(chosen)
        ids = []
        for k, (cls, m, n) in enumerate(sorted(chosen)):
            aid = _copy_id(act.id, k)
            acts.append(
                Activity(
                    aid,
                    tail_copies[m],
                    head_copies[n],
                    act.lower,
                    act.upper + big_l - t_a,
                    share,
                    act.kind,
                )
            )
            ids.append(aid)
        activity_copies[act.id] = tuple(ids)
        # duplicates realize x + cls*T_a for a permutation of the classes
        offset += share * t_a * sum(range(n_cls)) * (len(chosen) // n_cls)

    expanded = EventActivityNetwork(
        events, acts,
        require_connected=net.is_connected(),
        strict_spans=not net.span_warnings,
    )
    return expanded, ExpansionMap(
        big_l, event_copies, activity_copies, tuple(sync_ids), offset
    )


# -- modeling helpers ----------------------------------------------------------


def _fresh_aid(net: EventActivityNetwork, stem: str):
    ids = net.activity_ids
    if ids and all(isinstance(a, int) for a in ids):
        return max(ids) + 1
    existing = set(map(str, ids))
    k = 0
    while f"{stem}{k}" in existing:
        k += 1
    return f"{stem}{k}"


def add_transfer(
    net: EventActivityNetwork,
    i: EventId,
    j: EventId,
    tau_minus: int,
    tau_plus: Optional[int] = None,
    *,
    weight=0,
) -> tuple[EventActivityNetwork, Activity]:
    """Transfer from ``i`` to ``j`` taking at least ``tau_minus`` minutes.

    Without an upper bound the window spans the full arc period, so the
    transfer never restricts the timetable and only prices waiting time.
    """
    t = math.gcd(net.period(i), net.period(j))
    upper = tau_minus + t - 1 if tau_plus is None else tau_plus
    if upper - tau_minus > t - 1:
        raise ModelError(
            f"transfer window [{tau_minus}, {upper}] spans more than {t - 1}"
        )
    act = Activity(
        _fresh_aid(net, "transfer"), i, j, tau_minus, upper,
        as_fraction(weight), ActivityKind.TRANSFER,
    )
    return net.with_added(activities=[act]), act


def add_headway(
    net: EventActivityNetwork, i: EventId, j: EventId, h: int
) -> tuple[EventActivityNetwork, Activity]:
    """Minimum separation ``h`` between the services of ``i`` and ``j``.

    The window ``[h, T_a - h]`` separates *every* pair of rolled-out copies
    by at least ``h``, not just the canonical pair.  ``h = 0`` is a no-op and
    gets a full window plus a warning.
    """
    t = math.gcd(net.period(i), net.period(j))
    if 2 * h > t:
        raise ModelError(f"headway {h} leaves empty window for arc period {t}")
    if h == 0:
        warnings.warn("headway 0 does not constrain anything", stacklevel=2)
        lower, upper = 0, t - 1
    else:
        lower, upper = h, t - h
    act = Activity(
        _fresh_aid(net, "headway"), i, j, lower, upper,
        Fraction(0), ActivityKind.HEADWAY,
    )
    return net.with_added(activities=[act]), act


def add_local_sync(
    net: EventActivityNetwork,
    i: EventId,
    j: EventId,
    target_offset: int,
    dwell_span: int,
) -> tuple[EventActivityNetwork, Activity]:
    """Soft synchronization: offset ``target_offset`` give or take the dwell
    span, e.g. alternating services on a shared segment."""
    t = math.gcd(net.period(i), net.period(j))
    if 2 * dwell_span > t - 1:
        raise ModelError(
            f"sync window of span {2 * dwell_span} does not fit arc period {t}"
        )
    act = Activity(
        _fresh_aid(net, "sync"), i, j,
        target_offset - dwell_span, target_offset + dwell_span,
        Fraction(0), ActivityKind.SYNC,
    )
    return net.with_added(activities=[act]), act
