"""Quotient graphs, harmonic/rooted classification, leaders, and rooting.

Grouping same-period events into connected components yields the quotient
graph.  An instance is *harmonic* when its period set is totally ordered by
divisibility, and *rooted* when (i) the lcm of all periods occurs as a
period, (ii) the events carrying that lcm form a single component, and
(iii) every other component neighbors a component whose period is a proper
multiple of its own.  Rooted structure is what the sharp-tree construction
needs; any instance can be made rooted by adding at most one event and one
unrestricted zero-weight arc per component.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Optional

from .network import (
    Activity,
    ActivityKind,
    Event,
    EventActivityNetwork,
    EventId,
    NetworkError,
)


class NotRootedError(ValueError):
    pass


class NotHarmonicError(ValueError):
    pass


@dataclass(frozen=True)
class QuotientNode:
    """A connected component of same-period events; the id is the smallest
    member event id, which is unique across the whole quotient."""

    id: EventId
    period: int
    events: frozenset


@dataclass(frozen=True)
class QuotientGraph:
    nodes: tuple[QuotientNode, ...]
    # unordered component pair -> activity ids crossing it
    edges: Mapping[frozenset, tuple]
    component_of: Mapping[EventId, EventId]

    def node(self, cid) -> QuotientNode:
        for n in self.nodes:
            if n.id == cid:
                return n
        raise KeyError(cid)

    def neighbors(self, cid) -> set:
        out = set()
        for pair in self.edges:
            if cid in pair:
                out.update(pair - {cid})
        return out


def build_quotient(net: EventActivityNetwork) -> QuotientGraph:
    """Components of equal-period events, linked when any activity crosses."""
    parent: dict[EventId, EventId] = {e: e for e in net.event_ids}

    def find(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    def union(a, b):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb

    for act in net.activities:
        if net.period(act.tail) == net.period(act.head):
            union(act.tail, act.head)

    members: dict[EventId, set] = {}
    for e in net.event_ids:
        members.setdefault(find(e), set()).add(e)

    component_of = {}
    nodes = []
    for root, evs in members.items():
        cid = min(evs)
        nodes.append(QuotientNode(cid, net.period(cid), frozenset(evs)))
        for e in evs:
            component_of[e] = cid
    nodes.sort(key=lambda n: _id_key(n.id))

    edges: dict[frozenset, list] = {}
    for act in net.activities:
        ca, cb = component_of[act.tail], component_of[act.head]
        if ca != cb:
            edges.setdefault(frozenset((ca, cb)), []).append(act.id)
    return QuotientGraph(
        tuple(nodes),
        {k: tuple(sorted(v, key=str)) for k, v in edges.items()},
        component_of,
    )


@dataclass(frozen=True)
class Classification:
    kind: str  # "harmonic" | "rooted" | "neither"
    lcm: int
    periods: tuple[int, ...]
    lcm_missing: bool = False  # condition (i) fails
    lcm_components: int = 0
    unled_components: tuple = ()  # condition (iii) failures
    connected: bool = True
    rooted: bool = False  # rooted conditions hold (regardless of kind)

    @property
    def harmonic(self) -> bool:
        return self.kind == "harmonic"


def _rooted_conditions(net, quotient):
    big_l = net.hyperperiod()
    periods = sorted({ev.period for ev in net.events})
    lcm_missing = big_l not in periods
    lcm_components = sum(1 for n in quotient.nodes if n.period == big_l)
    unled = []
    for n in quotient.nodes:
        if n.period == big_l:
            continue
        has_leader = any(
            quotient.node(c).period % n.period == 0
            and quotient.node(c).period > n.period
            for c in quotient.neighbors(n.id)
        )
        if not has_leader:
            unled.append(n.id)
    return big_l, tuple(periods), lcm_missing, lcm_components, tuple(unled)


def classify(net: EventActivityNetwork) -> Classification:
    """Decide whether the instance is harmonic, rooted, or neither.

    ``neither`` carries which rooted condition fails: the lcm period being
    absent, the lcm events being split into several components, or specific
    components having no multiple-period neighbor.
    """
    quotient = build_quotient(net)
    big_l, periods, lcm_missing, lcm_comps, unled = _rooted_conditions(net, quotient)
    connected = net.is_connected()
    rooted_ok = not lcm_missing and lcm_comps == 1 and not unled and connected

    chain = all(periods[k + 1] % periods[k] == 0 for k in range(len(periods) - 1))
    if chain and connected:
        kind = "harmonic"  # reporting precedence: harmonic may also be rooted
    elif rooted_ok:
        kind = "rooted"
    else:
        kind = "neither"
    return Classification(
        kind, big_l, periods, lcm_missing, lcm_comps, unled, connected, rooted_ok
    )


def assign_leaders(net: EventActivityNetwork, quotient: Optional[QuotientGraph] = None):
    """Map every non-lcm component to its leader: the neighboring component
    whose period is the smallest proper multiple, ties to the smaller id.

    Raises :class:`NotRootedError` when some component has no admissible
    neighbor or the lcm component is absent/split.
    """
    if quotient is None:
        quotient = build_quotient(net)
    big_l = net.hyperperiod()
    lcm_nodes = [n for n in quotient.nodes if n.period == big_l]
    if len(lcm_nodes) != 1:
        raise NotRootedError(
            f"expected exactly one component with period {big_l}, found {len(lcm_nodes)}"
        )
    leaders: dict = {}
    for n in quotient.nodes:
        if n.period == big_l:
            continue
        candidates = []
        for cid in quotient.neighbors(n.id):
            p = quotient.node(cid).period
            if p > n.period and p % n.period == 0:
                candidates.append((p // n.period, _id_key(cid), cid))
        if not candidates:
            raise NotRootedError(
                f"component {n.id!r} (period {n.period}) has no multiple-period neighbor"
            )
        candidates.sort()
        leaders[n.id] = candidates[0][2]
    return leaders


def _id_key(x):
    return (isinstance(x, str), x) if isinstance(x, (int, str)) else (2, str(x))


@dataclass(frozen=True)
class RootingReport:
    added_event: Optional[Event]
    added_activities: tuple[Activity, ...]
    already_rooted: bool

    def to_lines(self) -> list[str]:
        lines = ["already-rooted; yes" if self.already_rooted else "already-rooted; no"]
        if self.added_event is not None:
            lines.append(f"added-event; {self.added_event.id}; {self.added_event.period}")
        for act in self.added_activities:
            lines.append(
                f"added-activity; {act.id}; {act.tail}; {act.head}; "
                f"{act.lower}; {act.upper}"
            )
        return lines


def _fresh_event_id(net: EventActivityNetwork):
    ids = net.event_ids
    if all(isinstance(e, int) for e in ids):
        return max(ids) + 1
    base = "lcm"
    k = 0
    while f"{base}{k}" in set(map(str, ids)):
        k += 1
    return f"{base}{k}"


def _fresh_activity_ids(net: EventActivityNetwork, count: int):
    ids = net.activity_ids
    if not ids or all(isinstance(a, int) for a in ids):
        start = (max(ids) + 1) if ids else 0
        return [start + k for k in range(count)]
    existing = set(map(str, ids))
    out, k = [], 0
    while len(out) < count:
        cand = f"virtual{k}"
        if cand not in existing:
            out.append(cand)
        k += 1
    return out


def root_instance(net: EventActivityNetwork) -> tuple[EventActivityNetwork, RootingReport]:
    """Make the instance rooted with at most one new event and one
    full-window zero-weight arc per quotient component.

    The added arcs have bounds ``[0, T_a - 1]`` so they never restrict any
    timetable; optimal objective values are unchanged.  Disconnected inputs
    come out connected, since every stranded component gains a link to the
    lcm anchor.
    """
    cls = classify(net)
    if cls.rooted:
        return net, RootingReport(None, (), True)

    quotient = build_quotient(net)
    big_l = net.hyperperiod()
    new_events: list[Event] = []
    new_acts: list[Activity] = []

    lcm_nodes = sorted(
        (n for n in quotient.nodes if n.period == big_l), key=lambda n: _id_key(n.id)
    )
    if not lcm_nodes:
        anchor = _fresh_event_id(net)
        new_events.append(Event(anchor, big_l, label="lcm anchor"))
        anchor_known = False
    else:
        anchor = lcm_nodes[0].id
        anchor_known = True

    need_arcs: list[EventId] = []  # component anchors to tie to the lcm event
    # condition (ii): chain surplus lcm components to the first
    for extra in lcm_nodes[1:]:
        need_arcs.append(extra.id)
    # condition (iii): components with no multiple-period neighbor
    for cid in cls.unled_components:
        need_arcs.append(cid)
    # a brand-new anchor starts disconnected; guarantee at least one tie
    if not anchor_known and not need_arcs:
        need_arcs.append(min(quotient.nodes, key=lambda n: _id_key(n.id)).id)
    # stranded graph components (disconnected raw input) also need a tie;
    # any component already receiving an arc covers its graph component
    covered = _graph_components_covered(
        net, anchor if anchor_known else None, need_arcs
    )
    for cid in covered:
        need_arcs.append(cid)

    aids = _fresh_activity_ids(net, len(need_arcs))
    for aid, cid in zip(aids, sorted(set(need_arcs), key=_id_key)):
        t = math.gcd(net.period(cid), big_l)
        new_acts.append(
            Activity(aid, cid, anchor, 0, t - 1, Fraction(0), ActivityKind.VIRTUAL)
        )

    rooted = net.with_added(new_events, new_acts, require_connected=True)
    report = RootingReport(new_events[0] if new_events else None, tuple(new_acts), False)
    out_cls = classify(rooted)
    if not out_cls.rooted:
        raise AssertionError(f"rooting failed: {out_cls}")
    return rooted, report


def _graph_components_covered(net, anchor, need_arcs):
    """Smallest event of each whole-graph component not yet touched by a
    planned virtual arc (or containing the anchor)."""
    adj = net.undirected_adjacency()
    comp_of = {}
    for start in net.event_ids:
        if start in comp_of:
            continue
        stack, seen = [start], {start}
        while stack:
            v = stack.pop()
            for w in adj[v]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        rep = min(seen)
        for v in seen:
            comp_of[v] = rep

    touched = set()
    if anchor is not None and anchor in comp_of:
        touched.add(comp_of[anchor])
    for cid in need_arcs:
        touched.add(comp_of[cid])
    extra = []
    for rep in sorted(set(comp_of.values()), key=_id_key):
        if rep not in touched:
            extra.append(rep)
    return extra
