"""Exact minimum-cost tension solving via the dual minimum-cost flow.

The subproblem throughout the solver is: assign a potential ``theta_v`` to
every node so that each edge's difference ``theta_head - theta_tail`` lands
in an integer window ``[lower, upper]``, minimizing a nonnegative weighted
sum of the differences.  The linear-programming dual is an uncapacitated
minimum-cost flow; successive shortest paths with node potentials solve it
in pure integer arithmetic, so feasibility and optimality are exact and the
optimal potentials are integers.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Hashable, Iterable, Optional

from .network import as_fraction


class TensionSolveError(RuntimeError):
    pass


@dataclass(frozen=True)
class TensionEdge:
    key: Hashable
    tail: Hashable
    head: Hashable
    lower: int
    upper: int
    weight: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "weight", as_fraction(self.weight))
        if self.weight < 0:
            raise TensionSolveError(f"edge {self.key!r}: negative weight")
        if self.lower > self.upper:
            raise TensionSolveError(f"edge {self.key!r}: empty window")


@dataclass(frozen=True)
class TensionSolution:
    potentials: dict
    differences: dict  # edge key -> integer theta_head - theta_tail
    objective: Fraction


def _initial_potentials(nodes, edges) -> Optional[dict]:
    """Bellman-Ford over the window-constraint graph; None on negative cycle."""
    dist = {v: 0 for v in nodes}
    arcs = []
    for e in edges:
        arcs.append((e.tail, e.head, e.upper))   # theta_h <= theta_t + U
        arcs.append((e.head, e.tail, -e.lower))  # theta_t <= theta_h - L
    for _ in range(len(nodes)):
        changed = False
        for u, v, c in arcs:
            if dist[u] + c < dist[v]:
                dist[v] = dist[u] + c
                changed = True
        if not changed:
            return dist
    for u, v, c in arcs:
        if dist[u] + c < dist[v]:
            return None
    return dist


def min_cost_tension(
    nodes: Iterable[Hashable], edges: Iterable[TensionEdge]
) -> Optional[TensionSolution]:
    """Minimize ``sum w_e (theta_head - theta_tail)`` over all windows.

    Returns None when the windows admit no potential at all (a negative cycle
    in the constraint graph).  Weights may be rational; they are cleared to
    integers internally, which leaves the flow network integral.
    """
    nodes = list(nodes)
    edges = list(edges)
    index = {v: k for k, v in enumerate(nodes)}
    n = len(nodes)

    pot = _initial_potentials(nodes, edges)
    if pot is None:
        return None
    pi = [pot[v] for v in nodes]

    scale = math.lcm(*(e.weight.denominator for e in edges)) if edges else 1
    w_int = [int(e.weight * scale) for e in edges]

    # dual flow: supply at a node = weighted in-degree minus out-degree
    excess = [0] * n
    for e, w in zip(edges, w_int):
        excess[index[e.head]] += w
        excess[index[e.tail]] -= w

    flow = [0] * len(edges)  # net dual flow per edge; sign encodes direction

    incident: list[list[int]] = [[] for _ in range(n)]
    for k, e in enumerate(edges):
        incident[index[e.tail]].append(k)
        incident[index[e.head]].append(k)

    def residual_arcs(v):
        # yields (to, unit cost, edge idx, direction, remaining cap or None);
        # cost of raising the net flow is `lower` below zero and `upper` above
        for k in incident[v]:
            e = edges[k]
            t, h = index[e.tail], index[e.head]
            f = flow[k]
            if v == t and t != h:
                if f < 0:
                    yield h, e.lower, k, 1, -f
                else:
                    yield h, e.upper, k, 1, None
            if v == h and t != h:
                if f > 0:
                    yield t, -e.upper, k, -1, f
                else:
                    yield t, -e.lower, k, -1, None

    guard = 10_000 * (n + len(edges) + 1)
    rounds = 0
    while True:
        sources = [v for v in range(n) if excess[v] > 0]
        if not sources:
            break
        rounds += 1
        if rounds > guard:
            raise TensionSolveError("flow augmentation failed to converge")
        s = sources[0]

        dist = [None] * n
        prev: list[Optional[tuple]] = [None] * n
        dist[s] = 0
        heap = [(0, s)]
        while heap:
            d, v = heapq.heappop(heap)
            if dist[v] != d:
                continue
            for to, cost, k, direction, cap in residual_arcs(v):
                if cost is None or cap == 0:
                    continue
                nd = d + cost + pi[v] - pi[to]
                if nd < 0:
                    raise TensionSolveError("negative reduced cost; potential invariant broken")
                if dist[to] is None or nd < dist[to]:
                    dist[to] = nd
                    prev[to] = (v, k, direction)
                    heapq.heappush(heap, (nd, to))

        target = None
        best = None
        for v in range(n):
            if excess[v] < 0 and dist[v] is not None:
                if best is None or dist[v] < best:
                    best, target = dist[v], v
        if target is None:
            raise TensionSolveError("excess cannot reach any deficit")

        # step size: excesses and the nearest breakpoint along the path
        delta = min(excess[s], -excess[target])
        v = target
        while v != s:
            u, k, direction = prev[v]
            f = flow[k]
            if direction == 1 and f < 0:
                delta = min(delta, -f)
            elif direction == -1 and f > 0:
                delta = min(delta, f)
            v = u
        v = target
        while v != s:
            u, k, direction = prev[v]
            flow[k] += direction * delta
            v = u
        excess[s] -= delta
        excess[target] += delta

        d_t = dist[target]
        for v in range(n):
            pi[v] += dist[v] if dist[v] is not None and dist[v] < d_t else d_t

    potentials = {v: pi[index[v]] for v in nodes}
    differences = {}
    objective = Fraction(0)
    for e in edges:
        diff = potentials[e.head] - potentials[e.tail]
        if diff < e.lower or diff > e.upper:
            raise TensionSolveError(
                f"window violated after optimization on edge {e.key!r}"
            )
        differences[e.key] = diff
        objective += e.weight * diff
    return TensionSolution(potentials, differences, objective)
