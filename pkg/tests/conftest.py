"""Shared instances, random generators, and independent oracles.

The oracles here (cycle enumeration, modular checks) are deliberately
written from scratch against the mathematical definitions, not by calling
the package's own machinery, so they can referee it.
"""

from __future__ import annotations

import math
import random
from fractions import Fraction

import pytest

from mpesp import Activity, Event, EventActivityNetwork, Tension, Timetable


# -- canonical hand instances ---------------------------------------------------


def square_instance():
    """Four events on a square with a chord; periods (20, 10, 10, 20).

    The classic dichotomy instance: the duration vector (1, 7, 2, 16, 6) is
    periodic on every cycle, one spanning tree reconstructs a feasible
    timetable and another does not.
    """
    events = [Event(k, p) for k, p in [(1, 20), (2, 10), (3, 10), (4, 20)]]
    acts = [
        Activity("a1", 1, 2, 1, 1),
        Activity("a2", 2, 3, 7, 7),
        Activity("a3", 3, 1, 2, 2),
        Activity("a4", 3, 4, 16, 16),
        Activity("a5", 4, 1, 6, 6),
    ]
    return EventActivityNetwork(events, acts)


SQUARE_TENSION = Tension({"a1": 1, "a2": 7, "a3": 2, "a4": 16, "a5": 6})


def incomparable_triangle(l=(0, 0, 0), u=(1, 4, 2)):
    """Triangle with periods (6, 10, 15): every arc period exceeds 1 but the
    cycle period is 1, so no sharp spanning tree exists before rooting."""
    events = [Event(1, 6), Event(2, 10), Event(3, 15)]
    acts = [
        Activity(1, 1, 2, l[0], u[0]),
        Activity(2, 2, 3, l[1], u[1]),
        Activity(3, 3, 1, l[2], u[2]),
    ]
    return EventActivityNetwork(events, acts)


def two_line_transfer_net():
    """Slow line (period 60) A-B-C-D plus a fast line (period 30) B-C with a
    transfer on and off; the double transfer is never realizable in one run."""
    events = [
        Event(1, 60, "dep A slow"),
        Event(2, 60, "arr B slow"),
        Event(3, 60, "dep B slow"),
        Event(4, 60, "arr C slow"),
        Event(5, 60, "dep C slow"),
        Event(6, 60, "arr D slow"),
        Event(7, 30, "dep B fast"),
        Event(8, 30, "arr C fast"),
    ]
    acts = [
        Activity("drive-ab", 1, 2, 5, 5, 0, "drive"),
        Activity("dwell-b", 2, 3, 5, 5, 0, "dwell"),
        Activity("drive-bc", 3, 4, 35, 35, 0, "drive"),
        Activity("dwell-c", 4, 5, 5, 5, 0, "dwell"),
        Activity("drive-cd", 5, 6, 5, 5, 0, "drive"),
        Activity("drive-fast", 7, 8, 5, 5, 0, "drive"),
        Activity("xfer-b", 2, 7, 5, 34, 0, "transfer"),
        Activity("xfer-c", 8, 5, 5, 34, 0, "transfer"),
    ]
    return EventActivityNetwork(events, acts)


TWO_LINE_TIMETABLE = Timetable({1: 0, 2: 5, 3: 10, 4: 45, 5: 50, 6: 55, 7: 10, 8: 15})


@pytest.fixture
def square():
    return square_instance()


# -- random generators ----------------------------------------------------------


def rand_net(
    rng: random.Random,
    n_events: int,
    extra_arcs: int,
    periods,
    *,
    weight_max: int = 5,
    tight: bool = False,
    multi: bool = False,
):
    """Connected random multigraph; spans respect each arc's period."""
    events = [Event(i, rng.choice(list(periods))) for i in range(1, n_events + 1)]
    per = {e.id: e.period for e in events}
    ids = [e.id for e in events]
    rng.shuffle(ids)
    acts = []
    aid = 0

    def add_arc(u, v):
        nonlocal aid
        t = math.gcd(per[u], per[v])
        lo = rng.randrange(-t, 2 * t)
        hi = lo if tight else lo + rng.randrange(0, t)
        aid += 1
        acts.append(Activity(aid, u, v, lo, hi, rng.randrange(0, weight_max + 1)))

    reached = [ids[0]]
    for v in ids[1:]:
        add_arc(rng.choice(reached), v)
        reached.append(v)
    for _ in range(extra_arcs):
        if multi and rng.random() < 0.3 and acts:
            tpl = rng.choice(acts)
            u, v = tpl.tail, tpl.head
            if rng.random() < 0.5:
                u, v = v, u
        else:
            u, v = rng.sample([e.id for e in events], 2)
        add_arc(u, v)
    return EventActivityNetwork(events, acts)


def rand_harmonic_net(rng: random.Random, max_events: int = 20):
    chains = [(5, 10, 20, 60), (2, 4, 8, 24), (3, 6, 12, 60), (5, 15, 30, 60), (10, 20, 60)]
    chain = rng.choice(chains)
    n = rng.randrange(2, max_events + 1)
    return rand_net(rng, n, rng.randrange(0, n), chain)


def rand_rooted_net(rng: random.Random, max_events: int = 20):
    """Build a component tree under divisibility so the rooted conditions
    hold by construction; extra arcs may cross components arbitrarily."""
    families = [
        (12, [1, 2, 3, 4, 6, 12]),
        (24, [2, 3, 4, 6, 8, 12, 24]),
        (30, [2, 3, 5, 6, 10, 15, 30]),
        (60, [4, 6, 10, 12, 20, 30, 60]),
    ]
    big_l, divisors = rng.choice(families)
    n_comps = rng.randrange(2, 6)
    comp_periods = [big_l]
    for _ in range(n_comps - 1):
        comp_periods.append(rng.choice([d for d in divisors if d < big_l]))

    events = []
    acts = []
    eid = 0
    aid = 0
    comp_events: list[list[int]] = []
    for period in comp_periods:
        size = rng.randrange(1, max(2, max_events // n_comps) + 1)
        members = []
        for _ in range(size):
            eid += 1
            events.append(Event(eid, period))
            members.append(eid)
        for k in range(1, len(members)):
            aid += 1
            lo = rng.randrange(0, period)
            acts.append(
                Activity(aid, members[rng.randrange(0, k)], members[k], lo,
                         lo + rng.randrange(0, period), rng.randrange(0, 5))
            )
        comp_events.append(members)

    per = {e.id: e.period for e in events}
    # tie every non-root component to a component with a multiple period
    for k in range(1, n_comps):
        parents = [
            j for j in range(n_comps)
            if j != k and comp_periods[j] > comp_periods[k]
            and comp_periods[j] % comp_periods[k] == 0
        ]
        parent = rng.choice(parents) if parents else 0
        u = rng.choice(comp_events[k])
        v = rng.choice(comp_events[parent])
        t = math.gcd(per[u], per[v])
        lo = rng.randrange(0, t)
        aid += 1
        acts.append(Activity(aid, u, v, lo, lo + rng.randrange(0, t), rng.randrange(0, 5)))
    # a few arbitrary crossings for cycle structure
    for _ in range(rng.randrange(0, 4)):
        u, v = rng.sample([e.id for e in events], 2)
        t = math.gcd(per[u], per[v])
        lo = rng.randrange(0, t)
        aid += 1
        acts.append(Activity(aid, u, v, lo, lo + rng.randrange(0, t), rng.randrange(0, 5)))
    return EventActivityNetwork(events, acts)


def rand_nonrooted_net(rng: random.Random, max_events: int = 5):
    """Small instances whose period set has an absent lcm, so they always
    fail the first rooted condition; lcm stays at most 12."""
    period_pools = [(2, 3), (3, 4), (2, 3, 4), (4, 6), (2, 3, 6, 4)]
    pool = rng.choice(period_pools)
    while True:
        n = rng.randrange(3, max_events + 1)
        net = rand_net(rng, n, rng.randrange(0, 3), pool, weight_max=4)
        periods = {e.period for e in net.events}
        if math.lcm(*periods) not in periods:
            return net


def rand_small_solver_net(rng: random.Random):
    """Instances small enough for the brute-force oracle: lcm <= 24 and a
    modest timetable grid."""
    while True:
        n = rng.randrange(3, 6)
        periods = [2, 3, 4, 6] if rng.random() < 0.7 else [2, 3, 4, 6, 8, 12]
        net = rand_net(rng, n, rng.randrange(0, 3), periods, weight_max=6, multi=True)
        grid = 1
        for e in net.events:
            grid *= e.period
        if grid <= 4000:
            return net


# -- independent oracles --------------------------------------------------------


def oracle_simple_cycles(net):
    """Every simple cycle as an oriented arc walk, one direction each;
    written against the definition, independently of the package."""
    acts = list(net.activities)
    if len(acts) > 40:
        raise ValueError("oracle is for small nets")
    cycles = []
    for a in acts:
        if a.tail == a.head:
            cycles.append([(a.id, 1)])
    node_order = {e: k for k, e in enumerate(net.event_ids)}

    def walk(base, node, used, visited, path):
        for a in acts:
            if a.id in used or a.tail == a.head:
                continue
            for sign, frm, to in ((1, a.tail, a.head), (-1, a.head, a.tail)):
                if frm != node:
                    continue
                if to == base and len(path) >= 1:
                    cycles.append(path + [(a.id, sign)])
                elif to not in visited and node_order[to] > node_order[base]:
                    walk(base, to, used | {a.id}, visited | {to}, path + [(a.id, sign)])

    for base in net.event_ids:
        walk(base, base, set(), {base}, [])
    # each cycle shows up once per direction; keep one
    seen = set()
    out = []
    for cyc in cycles:
        key = frozenset((aid, s) for aid, s in cyc)
        rev = frozenset((aid, -s) for aid, s in cyc)
        if key in seen or rev in seen:
            continue
        seen.add(key)
        out.append(cyc)
    return out


def oracle_cycle_periodicity(net, x: Tension) -> bool:
    """Does the duration vector sum to 0 mod the cycle period on *every*
    simple cycle?  Brute force over the oracle's own cycle list."""
    for cyc in oracle_simple_cycles(net):
        total = sum(Fraction(s) * x[aid] for aid, s in cyc)
        modulus = math.gcd(*(net.arc_period(aid) for aid, _ in cyc))
        if (total % modulus) != 0:
            return False
    return True


def oracle_violated_cycles(net, x: Tension):
    bad = []
    for cyc in oracle_simple_cycles(net):
        total = sum(Fraction(s) * x[aid] for aid, s in cyc)
        modulus = math.gcd(*(net.arc_period(aid) for aid, _ in cyc))
        if (total % modulus) != 0:
            bad.append(cyc)
    return bad


def oracle_feasible_timetables(net):
    """All integral timetables (root pinned at 0) passing every window."""
    import itertools

    root = net.root_event()
    others = [e for e in net.event_ids if e != root]
    out = []
    for combo in itertools.product(*(range(net.period(e)) for e in others)):
        times = dict(zip(others, combo))
        times[root] = 0
        ok = True
        for a in net.activities:
            t = net.arc_period(a.id)
            x = a.lower + (times[a.head] - times[a.tail] - a.lower) % t
            if x > a.upper:
                ok = False
                break
        if ok:
            out.append(times)
    return out


def random_feasible_timetable(rng, net):
    """Some random integral timetable, feasible or not: used where only the
    derived canonical durations matter."""
    return Timetable({e: rng.randrange(0, net.period(e)) for e in net.event_ids})
