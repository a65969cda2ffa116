"""Simultaneous congruences and timetable reconstruction from tensions.

A duration vector is realizable by a timetable exactly when every cycle's
signed duration sum vanishes modulo the cycle's period.  The reconstruction
here is constructive: nodes are placed one at a time in a
maximum-cardinality-search order, each new time solved from the simultaneous
congruences against already-placed neighbors.  On chordal networks the order
is a perfect elimination ordering and no backtracking is ever needed; on
non-chordal networks a failed merge triggers a path-congruence repair that
inserts a helper adjacency and restarts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .network import (
    ActivityId,
    CycleViolation,
    EventActivityNetwork,
    EventId,
    NetworkError,
    Tension,
    Timetable,
    as_fraction,
    frac_mod,
    normalize_timetable,
    walk_tension_sum,
)


class CongruenceError(ValueError):
    pass


class ReconstructionLimit(RuntimeError):
    """Path enumeration exceeded its cap; use a sharp-tree basis instead."""


def extended_gcd(a: int, b: int) -> tuple[int, int, int]:
    """Return ``(g, s, t)`` with ``g = gcd(a, b) = s*a + t*b``.

    ``g`` is positive; raises when both inputs are zero.
    """
    if a == 0 and b == 0:
        raise CongruenceError("gcd(0, 0) is undefined")
    old_r, r = a, b
    old_s, s = 1, 0
    old_t, t = 0, 1
    while r != 0:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_s, s = s, old_s - q * s
        old_t, t = t, old_t - q * t
    if old_r < 0:
        old_r, old_s, old_t = -old_r, -old_s, -old_t
    return old_r, old_s, old_t


@dataclass(frozen=True)
class Congruence:
    """``value = residue (mod modulus)`` with a positive integer modulus."""

    residue: Fraction
    modulus: int

    def __post_init__(self):
        object.__setattr__(self, "residue", as_fraction(self.residue))
        if not isinstance(self.modulus, int) or self.modulus < 1:
            raise CongruenceError(f"modulus must be a positive integer, got {self.modulus!r}")


@dataclass(frozen=True)
class CongruenceSystem:
    items: tuple[Congruence, ...]

    def __post_init__(self):
        items = tuple(self.items)
        if not items:
            raise CongruenceError("empty congruence system")
        object.__setattr__(self, "items", items)


@dataclass(frozen=True)
class SimultaneousSolution:
    """Solution class ``value (mod modulus)``; ``value`` is the least
    representative that is >= 0."""

    value: Fraction
    modulus: Fraction


@dataclass(frozen=True)
class SimultaneousConflict:
    """0-based indices of two congruences incompatible modulo their gcd."""

    first: int
    second: int


def _merge_int(r1: int, m1: int, r2: int, m2: int) -> Optional[tuple[int, int]]:
    # combine value = r1 (mod m1) and value = r2 (mod m2) over the integers
    g, s, _ = extended_gcd(m1, m2)
    if (r2 - r1) % g != 0:
        return None
    lcm = m1 // g * m2
    step = ((r2 - r1) // g * s) % (m2 // g)
    return (r1 + m1 * step) % lcm, lcm


def solve_simultaneous(system: CongruenceSystem):
    """Solve all congruences at once, Chinese-remainder style.

    Returns a :class:`SimultaneousSolution` whose modulus is the lcm of all
    moduli, or a :class:`SimultaneousConflict` naming an incompatible pair
    (the pairwise condition is also sufficient).  Rational residues are
    handled by clearing the common denominator, so results stay exact.
    """
    items = system.items
    denom = math.lcm(*(c.residue.denominator for c in items))
    residues = [int(c.residue * denom) for c in items]
    moduli = [c.modulus * denom for c in items]

    r, m = residues[0], moduli[0]
    for k in range(1, len(items)):
        merged = _merge_int(r, m, residues[k], moduli[k])
        if merged is None:
            for j in range(k):
                g = math.gcd(moduli[j], moduli[k])
                if (residues[j] - residues[k]) % g != 0:
                    return SimultaneousConflict(j, k)
            raise AssertionError("merge failed but all pairs compatible")
        r, m = merged
    return SimultaneousSolution(Fraction(r, denom), Fraction(m, denom))


# -- reconstruction -----------------------------------------------------------


@dataclass(frozen=True)
class ReconstructionOutcome:
    timetable: Optional[Timetable]
    violation: Optional[CycleViolation] = None

    @property
    def ok(self) -> bool:
        return self.timetable is not None


@dataclass(frozen=True)
class _WorkArc:
    aid: object
    tail: object
    head: object
    value: Fraction
    modulus: int
    virtual: bool
    # oriented real-arc expansion of a virtual adjacency, for certificates
    walk: tuple[tuple[ActivityId, int], ...] = ()


def _mcs_order(nodes, adjacency) -> list:
    """Maximum-cardinality-search visit order, ties to the smallest id.

    On chordal graphs each visited node's earlier neighbors form a clique,
    which is exactly what the incremental congruence placement needs.
    """
    weight = {v: 0 for v in nodes}
    unvisited = set(nodes)
    order = []
    while unvisited:
        v = min(unvisited, key=lambda u: (-weight[u], _sort_key(u)))
        order.append(v)
        unvisited.remove(v)
        for w in adjacency[v]:
            if w in unvisited:
                weight[w] += 1
    return order


def _sort_key(x):
    return (str(type(x)), x if isinstance(x, (int, str)) else str(x))


def _violated(net, walk, x) -> Optional[CycleViolation]:
    total = walk_tension_sum(net, walk, x)
    modulus = math.gcd(*(net.arc_period(aid) for aid, _ in walk))
    if frac_mod(total, modulus) != 0:
        return CycleViolation(tuple(walk), total, modulus)
    return None


def enumerate_simple_cycles(net: EventActivityNetwork, limit: int = 100_000):
    """Yield every simple cycle of the underlying multigraph as an oriented walk.

    Loops and two-arc cycles from parallel or antiparallel activities are
    included; each cycle appears in exactly one of its two directions.
    """
    order = {e: k for k, e in enumerate(net.event_ids)}
    incident: dict = {e: [] for e in net.event_ids}
    for act in net.activities:
        if act.tail == act.head:
            continue
        incident[act.tail].append((act, 1))
        incident[act.head].append((act, -1))

    count = 0
    for act in net.activities:
        if act.tail == act.head:
            count += 1
            yield [(act.id, 1)]

    for base in net.event_ids:
        stack = [(base, [], {base})]
        while stack:
            node, walk, visited = stack.pop()
            for act, sign in incident[node]:
                if walk and act.id == walk[-1][0]:
                    continue
                nxt = act.head if sign == 1 else act.tail
                if order[nxt] < order[base]:
                    continue
                cand = walk + [(act.id, sign)]
                if nxt == base:
                    if len(cand) >= 2 and _sort_key(cand[0][0]) < _sort_key(cand[-1][0]):
                        count += 1
                        if count > limit:
                            raise ReconstructionLimit(
                                f"cycle enumeration exceeded {limit} cycles"
                            )
                        yield cand
                elif nxt not in visited:
                    stack.append((nxt, cand, visited | {nxt}))


def find_violated_cycle(
    net: EventActivityNetwork, x: Tension, limit: int = 100_000
) -> Optional[CycleViolation]:
    """Search simple cycles for a periodicity violation, exhaustively up to
    ``limit``; used for certificates when the incremental reconstruction fails
    through helper adjacencies."""
    for walk in enumerate_simple_cycles(net, limit):
        v = _violated(net, walk, x)
        if v:
            return v
    return None


def _enumerate_paths(arcs_by_node, source, target, limit):
    """All simple source-target paths as lists of (_WorkArc, sign)."""
    paths = []
    stack = [(source, [], {source})]
    while stack:
        node, walk, visited = stack.pop()
        for arc, sign in arcs_by_node[node]:
            other = arc.head if sign == 1 else arc.tail
            if other == node:
                continue
            if other == target:
                paths.append(walk + [(arc, sign)])
                if len(paths) > limit:
                    raise ReconstructionLimit(
                        f"path enumeration exceeded {limit} simple paths; "
                        "reconstruct via a sharp spanning tree instead"
                    )
            elif other not in visited:
                stack.append((other, walk + [(arc, sign)], visited | {other}))
    return paths


def _expand_walk(oriented_work_arcs) -> list[tuple[ActivityId, int]]:
    """Flatten (work arc, sign) pairs to real oriented activities."""
    out = []
    for arc, sign in oriented_work_arcs:
        if not arc.virtual:
            out.append((arc.aid, sign))
        else:
            inner = arc.walk if sign == 1 else [(a, -s) for a, s in reversed(arc.walk)]
            out.extend(inner)
    return out


def _certificate(net, x, walk_pairs, *, limit) -> CycleViolation:
    """Turn a failing walk over work arcs into a violated-cycle certificate."""
    walk = _expand_walk(walk_pairs)
    direct = _violated(net, walk, x)
    if direct is not None:
        return direct
    # expansion through helper adjacencies diluted the modulus; fall back to
    # an exhaustive search, which must succeed by the periodicity theorem
    found = find_violated_cycle(net, x, limit=limit)
    if found is None:
        raise AssertionError("reconstruction failed but no violated cycle exists")
    return found


def timetable_from_tension(
    net: EventActivityNetwork,
    x: Tension,
    *,
    path_limit: int = 10_000,
) -> ReconstructionOutcome:
    """Construct a timetable realizing ``x``, or certify that none exists.

    Succeeds if and only if ``x`` satisfies cycle periodicity on every cycle.
    Nodes are placed in maximum-cardinality-search order; each new node's time
    is a simultaneous congruence over its placed neighbors.  When a merge
    fails between two non-adjacent placed neighbors, the congruence system for
    the missing adjacency is solved over all simple paths between them (capped
    at ``path_limit``) and the procedure restarts with the helper adjacency
    added.  The helper carries no bounds; only the original network's arcs are
    ever reported in certificates.
    """
    missing = [a for a in net.activity_ids if a not in x.values]
    if missing:
        raise NetworkError(f"tension misses activities {missing!r}")

    work: list[_WorkArc] = []
    for act in net.activities:
        if act.tail == act.head:
            if frac_mod(x[act.id], net.period(act.tail)) != 0:
                return ReconstructionOutcome(
                    None,
                    CycleViolation(((act.id, 1),), x[act.id], net.period(act.tail)),
                )
            continue
        work.append(
            _WorkArc(act.id, act.tail, act.head, x[act.id], net.arc_period(act.id), False)
        )

    fresh = 0
    while True:
        arcs_by_node: dict = {e: [] for e in net.event_ids}
        adjacency: dict = {e: set() for e in net.event_ids}
        for arc in work:
            arcs_by_node[arc.tail].append((arc, 1))
            arcs_by_node[arc.head].append((arc, -1))
            adjacency[arc.tail].add(arc.head)
            adjacency[arc.head].add(arc.tail)

        order = _mcs_order(net.event_ids, adjacency)
        times: dict[EventId, Fraction] = {}
        failure = None

        for node in order:
            # (arc, sign) at `node` with sign=+1 when node is the arc's tail;
            # the placed neighbor is then head (resp. tail for sign=-1)
            incoming = [
                (arc, sign)
                for arc, sign in arcs_by_node[node]
                if (arc.head if sign == 1 else arc.tail) in times
            ]
            if not incoming:
                times[node] = Fraction(0)
                continue
            congruences = []
            for arc, sign in incoming:
                other = arc.head if sign == 1 else arc.tail
                congruences.append(
                    Congruence(times[other] - sign * arc.value, arc.modulus)
                )
            result = solve_simultaneous(CongruenceSystem(tuple(congruences)))
            if isinstance(result, SimultaneousSolution):
                times[node] = result.value
                continue
            failure = (node, incoming[result.first], incoming[result.second])
            break

        if failure is None:
            tt = normalize_timetable(net, Timetable(times))
            report_ok = all(
                frac_mod(tt[a.head] - tt[a.tail] - x[a.id], net.arc_period(a.id)) == 0
                for a in net.activities
            )
            if not report_ok:
                raise AssertionError("reconstructed timetable violates an arc")
            return ReconstructionOutcome(tt)

        node, (arc_i, sign_i), (arc_j, sign_j) = failure
        i = arc_i.head if sign_i == 1 else arc_i.tail
        j = arc_j.head if sign_j == 1 else arc_j.tail

        if i == j or j in adjacency[i]:
            # conflicting pair closes a short walk i -> node -> j (-> i)
            walk_pairs = [(arc_i, -sign_i), (arc_j, sign_j)]
            if i != j:
                linking = next(
                    (a, s) for a, s in arcs_by_node[j] if (a.head if s == 1 else a.tail) == i
                )
                walk_pairs.append(linking)
            return ReconstructionOutcome(
                None, _certificate(net, x, walk_pairs, limit=path_limit * 10)
            )

        # non-chordal conflict: derive a duration for the missing adjacency
        # from congruences along every simple i-j path, then restart
        paths = _enumerate_paths(arcs_by_node, i, j, path_limit)
        congruences = []
        for path in paths:
            total = sum((s * a.value for a, s in path), Fraction(0))
            nodes_on_path = {i}
            for a, s in path:
                nodes_on_path.add(a.head if s == 1 else a.tail)
            modulus = math.gcd(*(net.period(v) for v in nodes_on_path))
            congruences.append(Congruence(total, modulus))
        solved = solve_simultaneous(CongruenceSystem(tuple(congruences)))
        if isinstance(solved, SimultaneousConflict):
            p, q = paths[solved.first], paths[solved.second]
            walk_pairs = list(p) + [(a, -s) for a, s in reversed(q)]
            return ReconstructionOutcome(
                None, _certificate(net, x, walk_pairs, limit=path_limit * 10)
            )
        fresh += 1
        defining = paths[0]
        work.append(
            _WorkArc(
                ("helper", fresh),
                i,
                j,
                solved.value,
                math.gcd(net.period(i), net.period(j)),
                True,
                tuple(_expand_walk(defining)),
            )
        )


def timetable_from_tension_tree(
    net: EventActivityNetwork, x: Tension, tree
) -> Timetable:
    """Timetable by traversing a spanning tree, times reduced per period.

    The result is guaranteed feasible only when the tree is sharp and ``x``
    satisfies periodicity on the tree's fundamental cycles; otherwise run
    :func:`mpesp.network.check_timetable` on the result.
    """
    tree_arcs = [net.activity(a) for a in tree.arcs]
    if len(tree_arcs) != net.n_events - 1:
        raise NetworkError(
            f"tree has {len(tree_arcs)} arcs for {net.n_events} events; not spanning"
        )
    adj: dict[EventId, list] = {e: [] for e in net.event_ids}
    for act in tree_arcs:
        adj[act.tail].append((act, 1))
        adj[act.head].append((act, -1))

    root = tree.root
    times = {root: Fraction(0)}
    stack = [root]
    while stack:
        v = stack.pop()
        for act, sign in adj[v]:
            w = act.head if sign == 1 else act.tail
            if w in times:
                continue
            # raw signed path sums; per-event reduction happens only at the
            # end, since reducing mid-walk would shift whole subtrees and
            # silently repair arcs with larger periods
            times[w] = times[v] + sign * x[act.id]
            stack.append(w)
    if len(times) != net.n_events:
        raise NetworkError("tree does not span the network")
    return normalize_timetable(net, Timetable(times))
