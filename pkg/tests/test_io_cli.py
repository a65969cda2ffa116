import io
import subprocess
import sys
from fractions import Fraction
from pathlib import Path

import pytest

from mpesp import (
    Activity,
    Event,
    EventActivityNetwork,
    ODMatrix,
    SpanningTree,
    Timetable,
    build_arc_model,
    build_cycle_model,
    check_timetable,
    fundamental_basis,
    solve_instance,
)
from mpesp.cli import main
from mpesp.instance_io import (
    ParseError,
    SolutionFile,
    read_instance,
    read_solution,
    write_instance,
    write_solution,
)
from mpesp.mip import read_mps, solve_naive, write_lp, write_mps

from conftest import square_instance, two_line_transfer_net, TWO_LINE_TIMETABLE


@pytest.fixture
def square_file(tmp_path):
    path = tmp_path / "square.mpesp"
    write_instance(square_instance(), path)
    return path


@pytest.fixture
def two_line_file(tmp_path):
    path = tmp_path / "twoline.mpesp"
    od = ODMatrix({("A", "D"): 1}, {"A": (1,)}, {"D": (6,)})
    write_instance(two_line_transfer_net(), path, od)
    return path


class TestInstanceRoundTrip:
    def test_identity(self, tmp_path):
        net = square_instance()
        p1 = tmp_path / "a.mpesp"
        p2 = tmp_path / "b.mpesp"
        write_instance(net, p1)
        loaded, od = read_instance(p1)
        assert od is None
        write_instance(loaded, p2)
        assert p1.read_text() == p2.read_text()
        assert loaded.n_events == net.n_events
        assert [a.id for a in loaded.activities] == [a.id for a in net.activities]

    def test_od_round_trip(self, two_line_file, tmp_path):
        net, od = read_instance(two_line_file)
        assert od is not None and od.entries[("A", "D")] == 1
        p2 = tmp_path / "again.mpesp"
        write_instance(net, p2, od)
        assert two_line_file.read_text() == p2.read_text()

    def test_two_event_file(self, tmp_path):
        path = tmp_path / "tiny.mpesp"
        path.write_text(
            "# mpesp-instance v1\n[events]\n1; 10;\n2; 20;\n"
            "[activities]\n1; 1; 2; 0; 9; 2; drive\n"
        )
        net, _ = read_instance(path)
        assert net.n_events == 2 and net.n_activities == 1
        assert net.activity(1).weight == 2

    def test_bad_period_rejected_with_location(self, tmp_path):
        path = tmp_path / "bad.mpesp"
        path.write_text("[events]\n1; 0;\n")
        with pytest.raises(ParseError) as err:
            read_instance(path)
        assert ":2:" in str(err.value)

    def test_unknown_endpoint_rejected(self, tmp_path):
        path = tmp_path / "bad.mpesp"
        path.write_text("[events]\n1; 10;\n[activities]\n1; 1; 9; 0; 5\n")
        with pytest.raises(ParseError):
            read_instance(path)

    def test_fractional_weight_survives(self, tmp_path):
        path = tmp_path / "frac.mpesp"
        net = EventActivityNetwork(
            [Event(1, 10), Event(2, 10)],
            [Activity(1, 1, 2, 0, 5, Fraction(1, 3))],
        )
        write_instance(net, path)
        loaded, _ = read_instance(path)
        assert loaded.activity(1).weight == Fraction(1, 3)


class TestTimpasslibDialect:
    def synthetic_dir(self, tmp_path):
        base = tmp_path / "bench"
        base.mkdir()
        (base / "Config.giv").write_text("# key; value\nperiod_length; 60\n")
        (base / "Line-Concept.giv").write_text(
            "# line-id; frequency\n1; 2\n2; 1\n"
        )
        (base / "Events-periodic.giv").write_text(
            "# event-id; type; stop-id; line-id; passengers\n"
            '1; "departure"; A; 1; 0\n'
            '2; "arrival"; B; 1; 0\n'
            '3; "departure"; B; 2; 0\n'
            '4; "arrival"; C; 2; 0\n'
        )
        (base / "Activities-periodic.giv").write_text(
            "# id; type; tail; head; lower; upper; passengers\n"
            '1; "drive"; 1; 2; 5; 9; 10\n'
            '2; "change"; 2; 3; 2; 31; 4\n'
            '3; "drive"; 3; 4; 7; 12; 10\n'
        )
        (base / "OD.giv").write_text("# o; d; customers\nA; C; 4\n")
        return base

    def test_frequencies_become_periods(self, tmp_path):
        net, od = read_instance(self.synthetic_dir(tmp_path), dialect="timpasslib")
        assert net.period(1) == 30 and net.period(3) == 60
        assert net.activity(2).kind.value == "transfer"
        assert od is not None and od.entries[("A", "C")] == 4
        assert 1 in od.boarding["A"] and 4 in od.alighting["C"]

    def test_missing_tables_reported(self, tmp_path):
        base = tmp_path / "empty"
        base.mkdir()
        (base / "Config.giv").write_text("period_length; 60\n")
        with pytest.raises(ParseError):
            read_instance(base, dialect="timpasslib")


class TestSolutionRoundTrip:
    def test_identity(self, tmp_path):
        sol = SolutionFile(
            "optimal",
            Fraction(7, 3),
            {1: 0, 2: Fraction(5, 2)},
            {"a": 4},
            {"c": -2},
        )
        path = tmp_path / "sol.mpesp-sol"
        write_solution(sol, path)
        again = read_solution(path)
        assert again == sol
        write_solution(again, tmp_path / "sol2")
        assert path.read_text() == (tmp_path / "sol2").read_text()

    def test_external_solution_verifies(self, tmp_path, square_file):
        # hand-made feasible timetable checked through the public reader
        path = tmp_path / "hand.sol"
        path.write_text(
            "status; external\n[times]\n1; 0\n2; 1\n3; 8\n4; 14\n"
        )
        net, _ = read_instance(square_file)
        sol = read_solution(path)
        assert check_timetable(net, sol.timetable()).feasible

    def test_infeasible_marked_file_detected(self, tmp_path, square_file):
        path = tmp_path / "bad.sol"
        path.write_text("status; optimal\n[times]\n1; 0\n2; 1\n3; 8\n4; 4\n")
        net, _ = read_instance(square_file)
        sol = read_solution(path)
        report = check_timetable(net, sol.timetable())
        assert not report.feasible

    def test_missing_status_rejected(self, tmp_path):
        path = tmp_path / "empty.sol"
        path.write_text("[times]\n1; 0\n")
        with pytest.raises(ParseError):
            read_solution(path)


class TestMipExport:
    def test_mps_round_trip_preserves_optimum(self, tmp_path):
        net = square_instance().with_weights(
            {"a1": 1, "a2": 2, "a3": 1, "a4": 1, "a5": 3}
        )
        basis = fundamental_basis(net, SpanningTree({"a1", "a2", "a5"}, 1))
        model = build_cycle_model(net, basis)
        buf = io.StringIO()
        write_mps(model, buf)
        parsed = read_mps(io.StringIO(buf.getvalue()))
        status, assignment, objective = solve_naive(parsed)
        internal = solve_instance(net)
        assert status == "optimal" and internal.status == "optimal"
        assert objective == internal.objective

    def test_arc_model_round_trip(self):
        net = EventActivityNetwork(
            [Event(1, 4), Event(2, 6)], [Activity("a", 1, 2, 1, 2, 2)]
        )
        model = build_arc_model(net)
        buf = io.StringIO()
        write_mps(model, buf)
        parsed = read_mps(io.StringIO(buf.getvalue()))
        status, _, objective = solve_naive(parsed)
        from mpesp import brute_force_optimum

        assert status == "optimal"
        assert objective == brute_force_optimum(net)[0]

    def test_integer_markers_round_trip(self):
        net = square_instance()
        basis = fundamental_basis(net, SpanningTree({"a1", "a2", "a5"}, 1))
        model = build_cycle_model(net, basis)
        buf = io.StringIO()
        write_mps(model, buf)
        parsed = read_mps(io.StringIO(buf.getvalue()))
        assert {v.name for v in parsed.variables if v.integer} == {
            v.name for v in model.variables if v.integer
        }
        for v in model.variables:
            w = parsed.variable(v.name)
            assert (w.lower, w.upper) == (v.lower, v.upper)

    def test_lp_format_mentions_sections(self):
        net = square_instance()
        model = build_arc_model(net)
        buf = io.StringIO()
        write_lp(model, buf)
        text = buf.getvalue()
        for token in ("Minimize", "Subject To", "Bounds", "Generals", "End"):
            assert token in text


class TestCli:
    def run(self, *argv):
        import contextlib

        out, err = io.StringIO(), io.StringIO()
        with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
            code = main(list(argv))
        return code, out.getvalue(), err.getvalue()

    def test_inspect(self, square_file):
        code, out, _ = self.run("inspect", str(square_file))
        assert code == 0
        lines = dict(
            (line.split("; ")[0], line.split("; ")[1:])
            for line in out.strip().splitlines()
            if ";" in line
        )
        assert lines["mpesp"] == ["4", "5"]
        assert lines["classification"] == ["harmonic"]

    def test_classify_reports_failures(self, tmp_path):
        from conftest import incomparable_triangle

        path = tmp_path / "tri.mpesp"
        write_instance(incomparable_triangle(), path)
        code, out, _ = self.run("classify", str(path))
        assert code == 0
        assert "classification; neither" in out
        assert "lcm-period-absent" in out

    def test_root_writes_instance(self, tmp_path):
        from conftest import incomparable_triangle

        path = tmp_path / "tri.mpesp"
        write_instance(incomparable_triangle(), path)
        out_path = tmp_path / "rooted.mpesp"
        code, out, _ = self.run("root", str(path), "--out", str(out_path))
        assert code == 0 and out_path.exists()
        rooted, _ = read_instance(out_path)
        from mpesp import classify

        assert classify(rooted).rooted

    def test_tree_and_basis(self, square_file):
        code, out, _ = self.run("tree", str(square_file))
        assert code == 0 and "sharp; yes" in out
        code, out, _ = self.run("basis", str(square_file))
        assert code == 0 and "cycles; 2" in out

    def test_build_summary(self, square_file):
        code, out, _ = self.run("build", str(square_file), "cycle", "mpesp")
        assert code == 0 and "integer; 2" in out
        code, out, _ = self.run("build", str(square_file), "arc", "pesp")
        assert code == 0

    def test_solve_writes_solution(self, square_file, tmp_path):
        sol_path = tmp_path / "sol.txt"
        code, out, _ = self.run(
            "solve", str(square_file), "--out", str(sol_path)
        )
        assert code == 0
        assert "status; optimal" in out
        sol = read_solution(sol_path)
        net, _ = read_instance(square_file)
        assert check_timetable(net, sol.timetable()).feasible

    def test_solve_infeasible_exit_code(self, tmp_path):
        path = tmp_path / "bad.mpesp"
        path.write_text(
            "[events]\n1; 10;\n2; 10;\n[activities]\n"
            "1; 1; 2; 2; 2; 1; drive\n2; 1; 2; 5; 5; 1; drive\n"
        )
        code, out, _ = self.run("solve", str(path))
        assert code == 3 and "status; infeasible" in out

    def test_usage_error_exit_code(self, tmp_path):
        code, out, err = self.run("solve", str(tmp_path / "missing.mpesp"))
        assert code == 2

    def test_oracle_matches_solve(self, square_file):
        code1, out1, _ = self.run("solve", str(square_file))
        code2, out2, _ = self.run("oracle", str(square_file))
        pick = lambda text: next(
            line for line in text.splitlines() if line.startswith("objective")
        )
        assert pick(out1) == pick(out2)

    def test_expand_counts(self, square_file):
        code, out, _ = self.run("expand", str(square_file))
        assert code == 0
        assert "hyperperiod; 20" in out

    def test_route_and_evaluate(self, two_line_file, tmp_path):
        code, out, _ = self.run("route", str(two_line_file))
        assert code == 0 and "total-travel-time" in out
        sol = tmp_path / "tt.sol"
        write_solution(
            SolutionFile("external", None, TWO_LINE_TIMETABLE.times), sol
        )
        code, out, _ = self.run("evaluate", str(two_line_file), str(sol))
        assert code == 0
        assert "compact-travel-time; 25" in out
        assert "exact-travel-time; 55" in out

    def test_iterate_reports_history(self, two_line_file):
        code, out, _ = self.run("iterate", str(two_line_file))
        assert code == 0
        assert "average-travel-time" in out

    def test_export_and_verify_mip(self, square_file, tmp_path):
        model_path = tmp_path / "model.mps"
        code, _, _ = self.run(
            "export-mip", str(square_file), str(model_path), "--format", "mps"
        )
        assert code == 0 and model_path.exists()
        code, out, _ = self.run("verify-mip", str(model_path))
        assert code == 0 and "status; optimal" in out

    def test_figures_rendered(self, square_file, two_line_file, tmp_path):
        figs = tmp_path / "figs"
        code, _, err = self.run(
            "solve", str(square_file), "--figures", str(figs)
        )
        assert code == 0 and (figs / "timetable.png").exists()
        code, _, err = self.run(
            "inspect", str(square_file), "--figures", str(figs)
        )
        assert code == 0 and (figs / "sizes.png").exists()
        code, _, err = self.run(
            "iterate", str(two_line_file), "--figures", str(figs)
        )
        assert code == 0 and (figs / "iterations.png").exists()

    def test_solve_arc_formulation_agrees(self, square_file):
        code1, out1, _ = self.run("solve", str(square_file))
        code2, out2, _ = self.run("solve", str(square_file), "--formulation", "arc")
        pick = lambda text: next(
            line for line in text.splitlines() if line.startswith("objective")
        )
        assert code1 == code2 == 0 and pick(out1) == pick(out2)

    def test_solve_with_warm_start(self, square_file, tmp_path):
        sol_path = tmp_path / "warm.sol"
        code, _, _ = self.run("solve", str(square_file), "--out", str(sol_path))
        assert code == 0
        code, out, _ = self.run(
            "solve", str(square_file), "--warm-start", str(sol_path)
        )
        assert code == 0 and "status; optimal" in out

    def test_expand_all_pairs(self, two_line_file, tmp_path):
        out_path = tmp_path / "rolled.mpesp"
        code, out, _ = self.run(
            "expand", str(two_line_file), "--all-pairs", "--out", str(out_path)
        )
        assert code == 0
        rolled, _ = read_instance(out_path)
        assert "hyperperiod; 60" in out
        # slow line copies stay single, fast line doubles
        assert rolled.n_events == 6 * 1 + 2 * 2

    def test_trim_mode(self, two_line_file, tmp_path):
        out_path = tmp_path / "trimmed.mpesp"
        code, out, _ = self.run(
            "iterate", str(two_line_file), "--trim", "1/2", "--out", str(out_path)
        )
        assert code == 0
        assert "activities-after; 7" in out

    def test_console_entry_point(self, square_file):
        proc = subprocess.run(
            [sys.executable, "-m", "mpesp.cli", "classify", str(square_file)],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0
        assert "classification; harmonic" in proc.stdout
