import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mpesp import (
    Activity,
    ActivityKind,
    Event,
    EventActivityNetwork,
    NetworkError,
    Tension,
    Timetable,
    arc_period,
    check_tension,
    check_timetable,
    cycle_period,
    normalize_timetable,
    tension_from_timetable,
)
from mpesp.network import canonical_duration, frac_mod

from conftest import (
    SQUARE_TENSION,
    oracle_cycle_periodicity,
    rand_net,
    square_instance,
)


def two_node_net(p1, p2, lower, upper):
    return EventActivityNetwork(
        [Event(1, p1), Event(2, p2)], [Activity("a", 1, 2, lower, upper)]
    )


class TestInvariants:
    def test_period_must_be_positive(self):
        with pytest.raises(NetworkError):
            Event(1, 0)

    def test_bounds_must_be_integers(self):
        with pytest.raises(NetworkError):
            Activity("a", 1, 2, Fraction(1, 2), 3)  # type: ignore[arg-type]

    def test_negative_weight_rejected(self):
        with pytest.raises(NetworkError):
            Activity("a", 1, 2, 0, 1, -1)

    def test_span_window_checked_against_arc_period(self):
        with pytest.raises(NetworkError):
            two_node_net(20, 10, 0, 10)  # span 10 > gcd - 1 = 9

    def test_span_flagging_mode(self):
        net = EventActivityNetwork(
            [Event(1, 20), Event(2, 10)],
            [Activity("a", 1, 2, 0, 10)],
            strict_spans=False,
        )
        assert net.span_warnings == ("a",)

    def test_unknown_endpoint_rejected(self):
        with pytest.raises(NetworkError):
            EventActivityNetwork([Event(1, 10)], [Activity("a", 1, 2, 0, 1)])

    def test_disconnected_rejected_by_default(self):
        events = [Event(1, 10), Event(2, 10), Event(3, 10)]
        acts = [Activity("a", 1, 2, 0, 1)]
        with pytest.raises(NetworkError):
            EventActivityNetwork(events, acts)
        net = EventActivityNetwork(events, acts, require_connected=False)
        assert not net.is_connected()

    def test_loops_and_antiparallel_arcs_allowed(self):
        net = EventActivityNetwork(
            [Event(1, 6), Event(2, 6)],
            [
                Activity("fwd", 1, 2, 0, 3),
                Activity("bwd", 2, 1, 0, 3),
                Activity("loop", 1, 1, 0, 5),
            ],
        )
        assert net.n_activities == 3


class TestArcPeriod:
    def test_gcd_of_endpoints(self):
        assert arc_period(two_node_net(20, 10, 0, 5), "a") == 10

    def test_equal_periods(self):
        assert arc_period(two_node_net(60, 60, 0, 59), "a") == 60

    def test_metro_periods(self):
        assert arc_period(two_node_net(75, 100, 0, 24), "a") == 25

    def test_unknown_activity(self):
        with pytest.raises(NetworkError):
            arc_period(two_node_net(10, 10, 0, 0), "nope")


class TestCyclePeriod:
    def triangle(self, periods):
        events = [Event(i + 1, p) for i, p in enumerate(periods)]
        per = dict((e.id, e.period) for e in events)
        acts = [
            Activity(1, 1, 2, 0, 0),
            Activity(2, 2, 3, 0, 0),
            Activity(3, 3, 1, 0, 0),
        ]
        return EventActivityNetwork(events, acts)

    def test_uniformish_triangle(self):
        net = self.triangle([20, 10, 10])
        assert cycle_period(net, [(1, 1), (2, 1), (3, 1)]) == 10

    def test_coprime_arc_periods(self):
        # arc periods 2, 5, 3 -> the cycle period collapses to 1
        net = self.triangle([6, 10, 15])
        assert cycle_period(net, [(1, 1), (2, 1), (3, 1)]) == 1

    def test_equals_gcd_of_node_periods(self):
        net = self.triangle([6, 10, 15])
        assert cycle_period(net, [(1, 1), (2, 1), (3, 1)]) == math.gcd(6, 10, 15)

    def test_open_sequence_rejected(self):
        net = self.triangle([10, 10, 10])
        with pytest.raises(NetworkError):
            cycle_period(net, [(1, 1)])

    def test_loop_is_a_closed_walk(self):
        net = EventActivityNetwork([Event(1, 12)], [Activity(9, 1, 1, 0, 11)])
        assert cycle_period(net, [(9, 1)]) == 12


class TestTensionFromTimetable:
    def test_plain_difference(self):
        net = two_node_net(10, 10, 1, 5)
        x, report = tension_from_timetable(net, Timetable({1: 0, 2: 1}))
        assert x["a"] == 1 and report.feasible

    def test_square_chord_value(self, square):
        # times (0, 1, 8, 14): the chord 3->4 realizes 16 because 14-8 = 6 = 16 mod 10
        tt = Timetable({1: 0, 2: 1, 3: 8, 4: 14})
        x, report = tension_from_timetable(square, tt)
        assert x["a4"] == 16 and report.feasible

    def test_over_upper_reported_not_raised(self):
        net = two_node_net(20, 20, 6, 6)
        x, report = tension_from_timetable(net, Timetable({1: 0, 2: 24}))
        assert x["a"] == 24
        assert not report.feasible
        (violation,) = report.arc_violations
        assert violation.activity == "a" and violation.upper == 6

    def test_representative_idempotent(self):
        rng = random.Random(5)
        for _ in range(50):
            net = rand_net(rng, 4, 2, [4, 6, 12])
            tt = Timetable({e: rng.randrange(0, 30) for e in net.event_ids})
            x, _ = tension_from_timetable(net, tt)
            for act in net.activities:
                again = canonical_duration(net, act.id, x[act.id])
                assert again == x[act.id]


class TestCheckTimetable:
    def test_square_feasible_traversal(self, square):
        assert check_timetable(square, Timetable({1: 0, 2: 1, 3: 8, 4: 14})).feasible

    def test_square_infeasible_exactly_at_closing_arc(self, square):
        report = check_timetable(square, Timetable({1: 0, 2: 1, 3: 8, 4: 4}))
        assert [v.activity for v in report.arc_violations] == ["a5"]

    def test_full_window_arcs_always_feasible(self):
        rng = random.Random(6)
        events = [Event(i, rng.choice([6, 12])) for i in range(1, 5)]
        per = {e.id: e.period for e in events}
        acts = []
        for k, (u, v) in enumerate([(1, 2), (2, 3), (3, 4), (4, 1)]):
            t = math.gcd(per[u], per[v])
            acts.append(Activity(k, u, v, 0, t - 1))
        net = EventActivityNetwork(events, acts)
        for _ in range(20):
            tt = Timetable({e: rng.randrange(0, per[e]) for e in per})
            assert check_timetable(net, tt).feasible

    def test_missing_event_is_an_error(self, square):
        with pytest.raises(NetworkError):
            check_timetable(square, Timetable({1: 0}))


class TestCheckTension:
    def test_square_tension_periodic(self, square):
        report = check_tension(square, SQUARE_TENSION)
        assert report.feasible

    def test_triangle_sum_is_multiple_of_period(self, square):
        # 1 + 7 + 2 = 10, one full turn of the 10-minute cycle
        total = SQUARE_TENSION["a1"] + SQUARE_TENSION["a2"] + SQUARE_TENSION["a3"]
        assert total == 10

    def test_all_zero_tension_feasible(self):
        net = EventActivityNetwork(
            [Event(1, 6), Event(2, 6), Event(3, 6)],
            [
                Activity(1, 1, 2, 0, 3),
                Activity(2, 2, 3, 0, 3),
                Activity(3, 3, 1, 0, 3),
            ],
        )
        assert check_tension(net, Tension({1: 0, 2: 0, 3: 0})).feasible

    def test_perturbing_one_arc_breaks_a_cycle(self, square):
        values = dict(SQUARE_TENSION.values)
        values["a2"] += 1
        report = check_tension(square, Tension(values))
        assert report.cycle_violations

    def test_basis_certificate_matches_general(self, square):
        from mpesp import SpanningTree, fundamental_basis

        basis = fundamental_basis(square, SpanningTree({"a1", "a2", "a5"}, 1))
        assert check_tension(square, SQUARE_TENSION, basis).feasible
        values = dict(SQUARE_TENSION.values)
        values["a4"] += 1
        assert not check_tension(square, Tension(values), basis).feasible

    def test_bounds_violations_reported(self, square):
        values = dict(SQUARE_TENSION.values)
        values["a1"] = 0  # below lower bound 1
        report = check_tension(square, Tension(values))
        assert any(v.activity == "a1" for v in report.arc_violations)

    def test_foreign_basis_rejected(self, square):
        from mpesp import SpanningTree, fundamental_basis

        other = EventActivityNetwork(
            [Event(1, 10), Event(2, 10)], [Activity("z", 1, 2, 0, 5)]
        )
        foreign = fundamental_basis(other, SpanningTree({"z"}, 1))
        with pytest.raises(NetworkError):
            check_tension(square, SQUARE_TENSION, foreign)


class TestDerivedTensionIsAlwaysPeriodic:
    def test_against_cycle_enumeration(self):
        rng = random.Random(42)
        for _ in range(60):
            net = rand_net(rng, rng.randrange(3, 6), rng.randrange(0, 4), [4, 6, 12], multi=True)
            if net.n_activities > 8:
                continue
            tt = Timetable({e: rng.randrange(0, net.period(e)) for e in net.event_ids})
            x, _ = tension_from_timetable(net, tt)
            assert oracle_cycle_periodicity(net, x)

    def test_periods_divide(self):
        rng = random.Random(43)
        for _ in range(30):
            net = rand_net(rng, 5, 3, [6, 10, 15, 30])
            for act in net.activities:
                t = net.arc_period(act.id)
                assert net.period(act.tail) % t == 0
                assert net.period(act.head) % t == 0


class TestTimetableTensionEquivalence:
    def test_feasibility_agrees_on_the_canonical_representative(self):
        rng = random.Random(45)
        for _ in range(60):
            net = rand_net(rng, rng.randrange(3, 6), rng.randrange(0, 3), [4, 6, 12])
            tt = Timetable({e: rng.randrange(0, net.period(e)) for e in net.event_ids})
            x, derived_report = tension_from_timetable(net, tt)
            tt_report = check_timetable(net, tt)
            x_report = check_tension(net, x)
            assert tt_report.feasible == derived_report.feasible
            assert not x_report.cycle_violations  # derived: always periodic
            assert tt_report.feasible == (not x_report.arc_violations)


class TestNormalization:
    def test_root_pinned_and_reduced(self, square):
        tt = normalize_timetable(square, Timetable({1: 25, 2: 13, 3: 9, 4: 70}))
        assert tt[1] == 0
        for ev in square.events:
            assert 0 <= tt[ev.id] < ev.period

    def test_normalization_preserves_feasibility(self):
        rng = random.Random(44)
        for _ in range(30):
            net = rand_net(rng, 4, 2, [4, 6, 12])
            tt = Timetable({e: rng.randrange(0, 24) for e in net.event_ids})
            before = check_timetable(net, tt)
            after = check_timetable(net, normalize_timetable(net, tt))
            assert before.feasible == after.feasible


@given(st.integers(min_value=-300, max_value=300), st.integers(min_value=1, max_value=60))
def test_frac_mod_range_and_congruence(value, modulus):
    r = frac_mod(value, modulus)
    assert 0 <= r < modulus
    assert (value - r) % modulus == 0
