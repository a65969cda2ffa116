"""Sharp spanning trees, fundamental cycle bases, and cycle-variable bounds.

A spanning tree is *sharp* when every co-tree activity's fundamental cycle
has the same period as the activity itself.  Sharp trees are exactly the
trees whose traversal turns any basis-periodic duration vector into a
feasible timetable, which makes their fundamental bases the valid ones for
the cycle-based integer program.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .network import (
    ActivityId,
    EventActivityNetwork,
    EventId,
    NetworkError,
)
from .quotient import (
    NotHarmonicError,
    NotRootedError,
    assign_leaders,
    build_quotient,
    classify,
    _id_key,
)

WIDTH_SENTINEL = 2**63 - 1


@dataclass(frozen=True)
class SpanningTree:
    arcs: frozenset
    root: EventId

    def __post_init__(self):
        object.__setattr__(self, "arcs", frozenset(self.arcs))


@dataclass(frozen=True)
class SharpnessWitness:
    activity: ActivityId
    arc_period: int
    cycle_period: int


@dataclass(frozen=True)
class FundamentalCycle:
    co_tree_arc: ActivityId
    oriented_arcs: tuple[tuple[ActivityId, int], ...]  # co-tree arc first, sign +1
    period: int
    odijk_lower: int
    odijk_upper: int

    @property
    def window(self) -> int:
        return self.odijk_upper - self.odijk_lower


@dataclass(frozen=True)
class CycleBasis:
    tree: SpanningTree
    cycles: tuple[FundamentalCycle, ...]

    @property
    def width_exact(self) -> int:
        w = 1
        for c in self.cycles:
            w *= c.window
        return w

    @property
    def width(self) -> int:
        """Product of cycle windows, saturated at 2**63 - 1 (diagnostic only)."""
        w = self.width_exact
        return w if abs(w) < WIDTH_SENTINEL else WIDTH_SENTINEL

    @property
    def width_saturated(self) -> bool:
        return abs(self.width_exact) >= WIDTH_SENTINEL

    def validate_for(self, net: EventActivityNetwork) -> None:
        tree_arcs = set(self.tree.arcs)
        if len(tree_arcs) != net.n_events - 1:
            raise NetworkError("basis tree does not span the network")
        for a in tree_arcs:
            if not net.has_activity(a):
                raise NetworkError(f"basis tree uses unknown activity {a!r}")
        co_tree = {a for a in net.activity_ids if a not in tree_arcs}
        if {c.co_tree_arc for c in self.cycles} != co_tree:
            raise NetworkError("basis cycles do not match the network's co-tree arcs")


def _tree_structure(net: EventActivityNetwork, tree: SpanningTree):
    """Parent pointers and depths from the tree root; rejects non-trees."""
    arcs = [net.activity(a) for a in tree.arcs]
    if len(arcs) != net.n_events - 1:
        raise NetworkError(
            f"tree has {len(arcs)} arcs for {net.n_events} events; not spanning"
        )
    adj: dict[EventId, list] = {e: [] for e in net.event_ids}
    for act in arcs:
        if act.tail == act.head:
            raise NetworkError(f"loop {act.id!r} cannot be a tree arc")
        adj[act.tail].append((act, 1))
        adj[act.head].append((act, -1))

    parent: dict[EventId, Optional[tuple]] = {tree.root: None}
    depth = {tree.root: 0}
    stack = [tree.root]
    while stack:
        v = stack.pop()
        for act, sign in adj[v]:
            w = act.head if sign == 1 else act.tail
            if w in parent:
                continue
            parent[w] = (act, sign)  # sign: +1 when the arc points v -> w
            depth[w] = depth[v] + 1
            stack.append(w)
    if len(parent) != net.n_events:
        raise NetworkError("tree does not span the network (or contains a cycle)")
    return parent, depth


def _tree_path(parent, depth, a: EventId, b: EventId):
    """Oriented tree walk from ``a`` to ``b`` as (activity, sign) pairs."""
    up_a, up_b = [], []
    va, vb = a, b
    while depth[va] > depth[vb]:
        act, sign = parent[va]
        up_a.append((act, -sign))  # walking child -> parent
        va = act.tail if sign == 1 else act.head
    while depth[vb] > depth[va]:
        act, sign = parent[vb]
        up_b.append((act, sign))  # parent -> child, recorded for the way down
        vb = act.tail if sign == 1 else act.head
    while va != vb:
        act, sign = parent[va]
        up_a.append((act, -sign))
        va = act.tail if sign == 1 else act.head
        act, sign = parent[vb]
        up_b.append((act, sign))
        vb = act.tail if sign == 1 else act.head
    return up_a + list(reversed(up_b))


def is_sharp(
    net: EventActivityNetwork, tree: SpanningTree
) -> tuple[bool, Optional[SharpnessWitness]]:
    """Whether every co-tree activity's fundamental cycle keeps its period.

    Returns ``(True, None)`` or ``(False, witness)`` with the first offending
    activity and both periods.  In a uniform-period network every spanning
    tree is sharp.
    """
    parent, depth = _tree_structure(net, tree)
    for act in net.activities:
        if act.id in tree.arcs:
            continue
        t_arc = net.arc_period(act.id)
        if act.tail == act.head:
            continue  # loop cycles always have period == arc period
        t_cycle = t_arc
        for path_act, _ in _tree_path(parent, depth, act.head, act.tail):
            t_cycle = math.gcd(t_cycle, net.arc_period(path_act.id))
        if t_cycle != t_arc:
            return False, SharpnessWitness(act.id, t_arc, t_cycle)
    return True, None


class _UnionFind:
    def __init__(self, items):
        self.parent = {x: x for x in items}

    def find(self, x):
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a, b) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[ra] = rb
        return True


def sharp_tree_harmonic(net: EventActivityNetwork) -> SpanningTree:
    """Greedy tree for harmonic instances: periods descending, spans ascending.

    Any maximum-weight spanning tree with respect to arc periods is sharp on
    a harmonic instance; the span tie-break keeps cycle windows small.
    """
    cls = classify(net)
    if not cls.harmonic:
        raise NotHarmonicError(f"instance is {cls.kind}, not harmonic")
    ordered = sorted(
        (a for a in net.activities if a.tail != a.head),
        key=lambda a: (-net.arc_period(a.id), a.span, _id_key(a.id)),
    )
    uf = _UnionFind(net.event_ids)
    chosen = []
    for act in ordered:
        if uf.union(act.tail, act.head):
            chosen.append(act.id)
    if len(chosen) != net.n_events - 1:
        raise NetworkError("network is not connected")
    return SpanningTree(frozenset(chosen), net.root_event())


def sharp_tree_rooted(net: EventActivityNetwork) -> SpanningTree:
    """Sharp tree for a rooted instance via per-component forests and leaders.

    Within each same-period component a minimum spanning forest by span;
    across components only arcs between a component and its leader are
    admissible, smallest span first.  Harmonic instances that fail the rooted
    conditions fall back to the harmonic construction.  Fails loudly if the
    result is not sharp, since the admissibility rule is what guarantees it.
    """
    cls = classify(net)
    if not cls.rooted:
        if cls.harmonic:
            return sharp_tree_harmonic(net)
        raise NotRootedError(
            f"instance is {cls.kind} and not rooted; root it first"
        )

    quotient = build_quotient(net)
    leaders = assign_leaders(net, quotient)
    comp_of = quotient.component_of

    uf = _UnionFind(net.event_ids)
    chosen = []
    internal = sorted(
        (
            a
            for a in net.activities
            if a.tail != a.head and comp_of[a.tail] == comp_of[a.head]
        ),
        key=lambda a: (a.span, _id_key(a.id)),
    )
    for act in internal:
        if uf.union(act.tail, act.head):
            chosen.append(act.id)

    def admissible(act):
        ca, cb = comp_of[act.tail], comp_of[act.head]
        return leaders.get(ca) == cb or leaders.get(cb) == ca

    crossing = sorted(
        (
            a
            for a in net.activities
            if a.tail != a.head and comp_of[a.tail] != comp_of[a.head] and admissible(a)
        ),
        key=lambda a: (a.span, _id_key(a.id)),
    )
    for act in crossing:
        if uf.union(act.tail, act.head):
            chosen.append(act.id)
    if len(chosen) != net.n_events - 1:
        raise NetworkError("leader arcs failed to span the network")

    big_l = net.hyperperiod()
    lcm_events = [e for e in net.event_ids if net.period(e) == big_l]
    tree = SpanningTree(frozenset(chosen), min(lcm_events))
    sharp, witness = is_sharp(net, tree)
    if not sharp:
        raise AssertionError(f"constructed tree is not sharp: {witness}")
    return tree


def _ceil_div(num: int, den: int) -> int:
    return -((-num) // den)


def fundamental_basis(net: EventActivityNetwork, tree: SpanningTree) -> CycleBasis:
    """One oriented fundamental cycle per co-tree activity, with integer
    bounds on the cycle variable derived from the duration windows:

        lower = ceil((sum of forward lowers - sum of backward uppers) / T_C)
        upper = floor((sum of forward uppers - sum of backward lowers) / T_C)
    """
    parent, depth = _tree_structure(net, tree)
    cycles = []
    for act in net.activities:
        if act.id in tree.arcs:
            continue
        oriented: list[tuple[ActivityId, int]] = [(act.id, 1)]
        if act.tail != act.head:
            for path_act, sign in _tree_path(parent, depth, act.head, act.tail):
                oriented.append((path_act.id, sign))
        t_cycle = math.gcd(*(net.arc_period(a) for a, _ in oriented))
        lo_sum, hi_sum = 0, 0
        for aid, sign in oriented:
            arc = net.activity(aid)
            if sign == 1:
                lo_sum += arc.lower
                hi_sum += arc.upper
            else:
                lo_sum -= arc.upper
                hi_sum -= arc.lower
        cycles.append(
            FundamentalCycle(
                act.id,
                tuple(oriented),
                t_cycle,
                _ceil_div(lo_sum, t_cycle),
                hi_sum // t_cycle,
            )
        )
    cycles.sort(key=lambda c: _id_key(c.co_tree_arc))
    return CycleBasis(tree, tuple(cycles))
