"""Command-line surface.

Every command reads instances in the native or timpasslib dialect, prints a
machine-readable semicolon report on stdout, sends diagnostics to stderr,
and, when ``--figures DIR`` is given, renders matplotlib figures next to the
delimited output.  Exit codes: 0 success, 2 usage or input error,
3 infeasibility (with a certificate in the report).
"""

from __future__ import annotations

import argparse
import sys
from fractions import Fraction
from pathlib import Path

from . import __version__
from .congruence import timetable_from_tension
from .formulations import build_arc_model, build_cycle_model, expand_to_pesp
from .instance_io import (
    ParseError,
    SolutionFile,
    read_instance,
    read_solution,
    write_instance,
    write_solution,
)
from .mip import read_mps, solve_naive, write_lp, write_mps
from .network import (
    NetworkError,
    Tension,
    check_timetable,
    tension_from_timetable,
)
from .pipeline import prepare_tree, solve_instance
from .quotient import classify, root_instance
from .routing import (
    IterationConfig,
    ODMatrix,
    evaluate_exact,
    iterate_timetable_routing,
    lengths_from_lower_bounds,
    route_passengers,
    trim_transfer_arcs,
)
from .solver import SolverError, brute_force_optimum
from .trees import fundamental_basis, is_sharp


class CliError(Exception):
    def __init__(self, message, code=2):
        super().__init__(message)
        self.code = code


def _fmt(value) -> str:
    if isinstance(value, Fraction):
        return str(value.numerator) if value.denominator == 1 else f"{value.numerator}/{value.denominator}"
    return str(value)


def _load(args, need_od=False):
    try:
        net, od = read_instance(args.instance, dialect=args.dialect)
    except (ParseError, NetworkError) as exc:
        raise CliError(str(exc))
    if need_od and od is None:
        raise CliError("instance carries no OD data")
    return net, od


def _figures_dir(args):
    if getattr(args, "figures", None) is None:
        return None
    path = Path(args.figures)
    path.mkdir(parents=True, exist_ok=True)
    return path


def cmd_inspect(args):
    net, od = _load(args)
    expanded, mapping = expand_to_pesp(net)
    rooted, report = root_instance(net)
    print("representation; events; activities")
    print(f"pesp; {expanded.n_events}; {expanded.n_activities}")
    print(f"mpesp; {net.n_events}; {net.n_activities}")
    print(f"rooted-mpesp; {rooted.n_events}; {rooted.n_activities}")
    cls = classify(net)
    print(f"classification; {cls.kind}")
    print(f"hyperperiod; {cls.lcm}")
    print(f"periods; {' '.join(map(str, cls.periods))}")
    if od is not None:
        print(f"od-pairs; {len(od.entries)}")
    if net.span_warnings:
        print(f"span-warnings; {' '.join(map(str, net.span_warnings))}", file=sys.stderr)
    figs = _figures_dir(args)
    if figs is not None:
        from .viz import plot_size_comparison

        sizes = {
            "pesp": (expanded.n_events, expanded.n_activities),
            "mpesp": (net.n_events, net.n_activities),
            "rooted": (rooted.n_events, rooted.n_activities),
        }
        out = plot_size_comparison(sizes, figs / "sizes.png")
        print(f"figure; {out}", file=sys.stderr)
    return 0


def cmd_classify(args):
    net, _ = _load(args)
    cls = classify(net)
    print(f"classification; {cls.kind}")
    print(f"hyperperiod; {cls.lcm}")
    print(f"rooted-conditions-hold; {'yes' if cls.rooted else 'no'}")
    if cls.kind == "neither":
        if not cls.connected:
            print("failing; network-disconnected")
        if cls.lcm_missing:
            print("failing; lcm-period-absent")
        if cls.lcm_components > 1:
            print(f"failing; lcm-components; {cls.lcm_components}")
        for cid in cls.unled_components:
            print(f"failing; component-without-leader; {cid}")
    return 0


def cmd_root(args):
    net, od = _load(args)
    rooted, report = root_instance(net)
    for line in report.to_lines():
        print(line)
    if args.out:
        write_instance(rooted, args.out, od)
        print(f"written; {args.out}", file=sys.stderr)
    return 0


def cmd_tree(args):
    net, _ = _load(args)
    work, tree, rooting = prepare_tree(net, args.tree)
    sharp, witness = is_sharp(work, tree)
    if rooting is not None and not rooting.already_rooted:
        print("note; instance was rooted first", file=sys.stderr)
    print(f"root; {tree.root}")
    print(f"sharp; {'yes' if sharp else 'no'}")
    print("[tree-arcs]")
    for aid in sorted(tree.arcs, key=str):
        print(aid)
    return 0


def cmd_basis(args):
    net, _ = _load(args)
    work, tree, _ = prepare_tree(net, args.tree)
    basis = fundamental_basis(work, tree)
    print(f"cycles; {len(basis.cycles)}")
    width = f">={basis.width}" if basis.width_saturated else str(basis.width)
    print(f"width; {width}")
    print("[cycles]")
    print("# co-tree arc; period; lower; upper; window")
    for cyc in basis.cycles:
        print(
            f"{cyc.co_tree_arc}; {cyc.period}; {cyc.odijk_lower}; "
            f"{cyc.odijk_upper}; {cyc.window}"
        )
    return 0


def _representation_net(args, net):
    if args.representation == "pesp":
        expanded, _ = expand_to_pesp(net)
        return expanded
    return net


def cmd_build(args):
    net, _ = _load(args)
    net = _representation_net(args, net)
    if args.formulation == "arc":
        model = build_arc_model(net)
    else:
        work, tree, _ = prepare_tree(net, args.tree)
        model = build_cycle_model(work, fundamental_basis(work, tree))
    print(f"model; {model.name}")
    print(f"variables; {len(model.variables)}")
    print(f"integer; {model.n_integer}")
    print(f"continuous; {model.n_continuous}")
    print(f"constraints; {len(model.constraints)}")
    return 0


def cmd_export_mip(args):
    net, _ = _load(args)
    net = _representation_net(args, net)
    if args.formulation == "arc":
        model = build_arc_model(net)
    else:
        work, tree, _ = prepare_tree(net, args.tree)
        model = build_cycle_model(work, fundamental_basis(work, tree))
    out = Path(args.out)
    writer = write_mps if args.format == "mps" else write_lp
    with out.open("w", encoding="utf-8") as fh:
        writer(model, fh)
    print(f"written; {out}")
    return 0


def cmd_solve(args):
    net, _ = _load(args)
    net = _representation_net(args, net)
    warm = None
    if args.warm_start:
        sol = read_solution(args.warm_start)
        warm = sol.tension() if sol.tensions else sol.timetable()
    result = solve_instance(
        net,
        formulation=args.formulation,
        tree_strategy=args.tree,
        node_limit=args.node_limit,
        time_limit=args.time_limit,
        warm_start=warm,
    )
    print(f"status; {result.status}")
    print(f"nodes; {result.node_count}")
    if result.objective is not None:
        print(f"objective; {_fmt(result.objective)}")
    if result.timetable is not None:
        print("[times]")
        for eid in net.event_ids:
            print(f"{eid}; {_fmt(result.timetable[eid])}")
        if args.out:
            write_solution(
                SolutionFile(
                    result.status, result.objective,
                    result.timetable.times,
                    result.tension.values if result.tension else None,
                ),
                args.out,
            )
            print(f"written; {args.out}", file=sys.stderr)
        figs = _figures_dir(args)
        if figs is not None:
            from .viz import plot_timetable

            out = plot_timetable(net, result.timetable, figs / "timetable.png")
            print(f"figure; {out}", file=sys.stderr)
    if result.status == "infeasible":
        if result.basis is not None:
            for cyc in result.basis.cycles:
                if cyc.odijk_lower > cyc.odijk_upper:
                    arcs = " ".join(f"{a}:{s:+d}" for a, s in cyc.oriented_arcs)
                    print(
                        f"certificate; empty-window-cycle; {cyc.co_tree_arc}; "
                        f"[{cyc.odijk_lower}, {cyc.odijk_upper}]; {arcs}"
                    )
        return 3
    return 0


def cmd_oracle(args):
    net, _ = _load(args)
    try:
        found = brute_force_optimum(net, cap=args.cap)
    except SolverError as exc:
        raise CliError(str(exc))
    if found is None:
        print("status; infeasible")
        return 3
    objective, tt = found
    print("status; optimal")
    print(f"objective; {_fmt(objective)}")
    print("[times]")
    for eid in net.event_ids:
        print(f"{eid}; {_fmt(tt[eid])}")
    return 0


def cmd_expand(args):
    net, od = _load(args)
    expanded, mapping = expand_to_pesp(net, all_pairs=args.all_pairs)
    print(f"hyperperiod; {mapping.hyperperiod}")
    print(f"events; {expanded.n_events}")
    print(f"activities; {expanded.n_activities}")
    print(f"objective-offset; {_fmt(mapping.objective_offset)}")
    if args.out:
        write_instance(expanded, args.out)
        print(f"written; {args.out}", file=sys.stderr)
    return 0


def cmd_route(args):
    net, od = _load(args, need_od=True)
    if args.solution:
        sol = read_solution(args.solution)
        lengths = sol.tensions if sol.tensions else None
        if lengths is None:
            x, _ = tension_from_timetable(net, sol.timetable())
            lengths = x.values
    else:
        lengths = lengths_from_lower_bounds(net)
    state = route_passengers(net, od, lengths)
    print(f"total-travel-time; {_fmt(state.travel_time_total)}")
    for pair in state.unreachable:
        print(f"unreachable; {pair[0]}; {pair[1]}", file=sys.stderr)
    print("[loads]")
    print("# activity; passengers")
    for aid in net.activity_ids:
        w = state.weights[aid]
        if w:
            print(f"{aid}; {_fmt(w)}")
    return 0


def cmd_evaluate(args):
    net, od = _load(args, need_od=True)
    sol = read_solution(args.solution)
    tt = sol.timetable()
    report = check_timetable(net, tt)
    if not report.feasible:
        print("status; infeasible-solution")
        for v in report.arc_violations:
            print(f"violated; {v.activity}; {_fmt(v.value)}; {v.lower}; {v.upper}")
        return 3
    x, _ = tension_from_timetable(net, tt)
    compact = route_passengers(net, od, x.values)
    exact = evaluate_exact(net, tt, od)
    print(f"compact-travel-time; {_fmt(compact.travel_time_total)}")
    print(f"exact-travel-time; {_fmt(exact)}")
    return 0


def cmd_iterate(args):
    net, od = _load(args, need_od=True)
    config = IterationConfig(
        formulation=args.formulation,
        node_limit=args.node_limit,
        time_limit=args.time_limit,
    )
    tt, state, history = iterate_timetable_routing(net, od, config)
    print("k; fraction; status; objective; routed-total; converged")
    for rec in history:
        obj = _fmt(rec.solver_objective) if rec.solver_objective is not None else "-"
        routed = _fmt(rec.routed_total) if rec.routed_total is not None else "-"
        print(
            f"{rec.k}; {_fmt(rec.fraction)}; {rec.solver_status}; {obj}; "
            f"{routed}; {'yes' if rec.converged else 'no'}"
        )
    if state is not None:
        total_demand = sum(od.entries.values(), Fraction(0))
        if total_demand:
            avg = state.travel_time_total / total_demand
            print(f"average-travel-time; {_fmt(avg)}")
    if tt is not None and args.out:
        write_solution(SolutionFile("heuristic", None, tt.times), args.out)
        print(f"written; {args.out}", file=sys.stderr)
    figs = _figures_dir(args)
    if figs is not None and history:
        from .viz import plot_history

        out = plot_history(history, figs / "iterations.png")
        print(f"figure; {out}", file=sys.stderr)
    return 0


def cmd_verify_mip(args):
    with open(args.model, encoding="utf-8") as fh:
        model = read_mps(fh)
    status, assignment, objective = solve_naive(model)
    print(f"status; {status}")
    if objective is not None:
        print(f"objective; {_fmt(objective)}")
    return 0 if status == "optimal" else 3


def _add_common(p, od=False):
    p.add_argument("instance", help="instance file (native) or directory (timpasslib)")
    p.add_argument("--dialect", choices=("native", "timpasslib"), default="native")
    p.add_argument("--seed", type=int, default=None,
                   help="reserved for randomized strategies; current commands are deterministic")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mpesp",
        description="multiperiodic event scheduling toolkit",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("inspect", help="sizes in rolled-out, compact, and rooted form")
    _add_common(p)
    p.add_argument("--figures", help="directory for rendered figures")
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser("classify", help="harmonic / rooted / neither, with reasons")
    _add_common(p)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("root", help="make the instance rooted; report additions")
    _add_common(p)
    p.add_argument("--out", help="write the rooted instance here")
    p.set_defaults(func=cmd_root)

    p = sub.add_parser("tree", help="construct a sharp spanning tree")
    _add_common(p)
    p.add_argument("--tree", choices=("auto", "harmonic", "rooted"), default="auto")
    p.set_defaults(func=cmd_tree)

    p = sub.add_parser("basis", help="fundamental cycle basis with windows and width")
    _add_common(p)
    p.add_argument("--tree", choices=("auto", "harmonic", "rooted"), default="auto")
    p.set_defaults(func=cmd_basis)

    p = sub.add_parser("build", help="build a model and print its shape")
    _add_common(p)
    p.add_argument("formulation", choices=("arc", "cycle"))
    p.add_argument("representation", choices=("mpesp", "pesp"))
    p.add_argument("--tree", choices=("auto", "harmonic", "rooted"), default="auto")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("export-mip", help="write the model as LP or MPS text")
    _add_common(p)
    p.add_argument("out")
    p.add_argument("--formulation", choices=("arc", "cycle"), default="cycle")
    p.add_argument("--representation", choices=("mpesp", "pesp"), default="mpesp")
    p.add_argument("--format", choices=("mps", "lp"), default="mps")
    p.add_argument("--tree", choices=("auto", "harmonic", "rooted"), default="auto")
    p.set_defaults(func=cmd_export_mip)

    p = sub.add_parser("solve", help="exact solve with the built-in search")
    _add_common(p)
    p.add_argument("--formulation", choices=("cycle", "arc"), default="cycle")
    p.add_argument("--representation", choices=("mpesp", "pesp"), default="mpesp")
    p.add_argument("--tree", choices=("auto", "harmonic", "rooted"), default="auto")
    p.add_argument("--node-limit", type=int, default=None)
    p.add_argument("--time-limit", type=float, default=None)
    p.add_argument("--warm-start", help="solution file used as the initial incumbent")
    p.add_argument("--out", help="write the solution file here")
    p.add_argument("--figures", help="directory for rendered figures")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("oracle", help="brute-force optimum (tiny instances)")
    _add_common(p)
    p.add_argument("--cap", type=int, default=10**7)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("expand", help="roll out to the hyperperiod")
    _add_common(p)
    p.add_argument("--all-pairs", action="store_true",
                   help="materialize every copy pair (routing view)")
    p.add_argument("--out", help="write the expanded instance here")
    p.set_defaults(func=cmd_expand)

    p = sub.add_parser("route", help="shortest-path passenger assignment")
    _add_common(p)
    p.add_argument("--solution", help="route on this solution's durations instead of lower bounds")
    p.set_defaults(func=cmd_route)

    p = sub.add_parser("evaluate", help="compact vs roll-out-exact travel time")
    _add_common(p)
    p.add_argument("solution")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("iterate", help="alternating timetabling and routing")
    _add_common(p)
    p.add_argument("--formulation", choices=("cycle", "arc"), default="cycle")
    p.add_argument("--node-limit", type=int, default=None)
    p.add_argument("--time-limit", type=float, default=None)
    p.add_argument("--trim", type=str, default=None,
                   help="route once, keep this fraction of transfers, and stop")
    p.add_argument("--out", help="write the final timetable here")
    p.add_argument("--figures", help="directory for rendered figures")
    p.set_defaults(func=cmd_iterate)

    p = sub.add_parser("verify-mip", help="re-import an exported MPS and solve naively")
    p.add_argument("model")
    p.set_defaults(func=cmd_verify_mip)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if getattr(args, "trim", None) is not None and args.command == "iterate":
            return _trim_only(args)
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (NetworkError, ParseError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def _trim_only(args) -> int:
    net, od = _load(args, need_od=True)
    state = route_passengers(net, od, lengths_from_lower_bounds(net))
    trimmed = trim_transfer_arcs(net, state.weights, Fraction(args.trim))
    print(f"activities-before; {net.n_activities}")
    print(f"activities-after; {trimmed.n_activities}")
    if args.out:
        write_instance(trimmed, args.out, od)
        print(f"written; {args.out}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
