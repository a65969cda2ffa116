"""Text export of models (LP and MPS), re-import, and a naive exact solve.

The MPS writer emits the fixed-column layout that legacy solvers expect; the
LP writer emits the human-readable inequality format.  ``read_mps`` parses
exactly the dialect written here, enough to re-import an exported model and
verify it against the internal solver.  ``solve_naive`` enumerates the
integer variables over their finite boxes and solves the remaining linear
program exactly, so it only suits desk-scale models.
"""

from __future__ import annotations

import itertools
from decimal import Decimal
from fractions import Fraction
from typing import Optional, TextIO

from .formulations import MipConstraint, MipModel, MipVar, ModelError
from .simplex import solve_lp


def _num(q: Fraction) -> str:
    """Exact decimal when one exists (integers, halves, tenths, ...);
    a float repr otherwise, which loses exactness and is the caller's
    trade-off for non-decimal rational weights."""
    if q.denominator == 1:
        return str(q.numerator)
    den = q.denominator
    twos = fives = 0
    while den % 2 == 0:
        den //= 2
        twos += 1
    while den % 5 == 0:
        den //= 5
        fives += 1
    if den == 1:
        digits = max(twos, fives)
        scaled = q.numerator * 10**digits // q.denominator
        sign = "-" if scaled < 0 else ""
        body = str(abs(scaled)).rjust(digits + 1, "0")
        return f"{sign}{body[:-digits]}.{body[-digits:]}"
    return repr(float(q))


def write_lp(model: MipModel, out: TextIO) -> None:
    """CPLEX-style LP text format."""
    out.write(f"\\ {model.name}\n")
    out.write("Minimize\n obj:")
    if not model.objective:
        out.write(" 0 " + model.variables[0].name)
    for name, coef in model.objective:
        sign = "+" if coef >= 0 else "-"
        out.write(f" {sign} {_num(abs(coef))} {name}")
    out.write("\nSubject To\n")
    for con in model.constraints:
        out.write(f" {con.name}:")
        for name, coef in con.coeffs:
            sign = "+" if coef >= 0 else "-"
            out.write(f" {sign} {_num(abs(coef))} {name}")
        rel = {"=": "=", "<=": "<=", ">=": ">="}[con.sense]
        out.write(f" {rel} {_num(con.rhs)}\n")
    out.write("Bounds\n")
    for v in model.variables:
        lo = "-inf" if v.lower is None else _num(v.lower)
        hi = "+inf" if v.upper is None else _num(v.upper)
        out.write(f" {lo} <= {v.name} <= {hi}\n")
    integers = [v.name for v in model.variables if v.integer]
    if integers:
        out.write("Generals\n")
        for name in integers:
            out.write(f" {name}\n")
    out.write("End\n")


def _mps_fields(*fields) -> str:
    # classic fixed columns: 2-3, 5-12, 15-22, 25-36, 40-47, 50-61
    starts = (1, 4, 14, 24, 39, 49)
    line = ""
    for start, text in zip(starts, fields):
        if text is None:
            continue
        line = line.ljust(start) + str(text)
    return line + "\n"


def write_mps(model: MipModel, out: TextIO) -> None:
    """Fixed-column MPS with integer markers."""
    out.write(f"NAME          {model.name}\n")
    out.write("ROWS\n")
    out.write(_mps_fields("N", "COST"))
    for con in model.constraints:
        tag = {"=": "E", "<=": "L", ">=": "G"}[con.sense]
        out.write(_mps_fields(tag, con.name))

    by_var: dict[str, list[tuple[str, Fraction]]] = {v.name: [] for v in model.variables}
    for name, coef in model.objective:
        by_var[name].append(("COST", coef))
    for con in model.constraints:
        for name, coef in con.coeffs:
            by_var[name].append((con.name, coef))

    out.write("COLUMNS\n")
    marker = 0
    in_integer = False
    for v in model.variables:
        if v.integer != in_integer:
            kind = "'INTORG'" if v.integer else "'INTEND'"
            out.write(_mps_fields(None, f"MARKER{marker}", "'MARKER'", None, kind))
            marker += 1
            in_integer = v.integer
        entries = by_var[v.name]
        if not entries:
            entries = [("COST", Fraction(0))]
        for row, coef in entries:
            out.write(_mps_fields(None, v.name, row, _num(coef)))
    if in_integer:
        out.write(_mps_fields(None, f"MARKER{marker}", "'MARKER'", None, "'INTEND'"))

    out.write("RHS\n")
    for con in model.constraints:
        if con.rhs != 0:
            out.write(_mps_fields(None, "RHS", con.name, _num(con.rhs)))
    out.write("BOUNDS\n")
    for v in model.variables:
        if v.lower is not None:
            out.write(_mps_fields("LO", "BND", v.name, _num(v.lower)))
        else:
            out.write(_mps_fields("MI", "BND", v.name))
        if v.upper is not None:
            out.write(_mps_fields("UP", "BND", v.name, _num(v.upper)))
    out.write("ENDATA\n")


def _parse_num(text: str) -> Fraction:
    if "/" in text:
        return Fraction(text)
    if "." in text or "e" in text.lower():
        return Fraction(Decimal(text))  # exact decimal parsing
    return Fraction(int(text))


def read_mps(inp: TextIO) -> MipModel:
    """Parse the MPS dialect produced by :func:`write_mps`."""
    section = None
    name = "model"
    rows: dict[str, str] = {}
    row_order: list[str] = []
    cols: dict[str, list[tuple[str, Fraction]]] = {}
    col_order: list[str] = []
    integer_cols: set[str] = set()
    rhs: dict[str, Fraction] = {}
    lowers: dict[str, Optional[Fraction]] = {}
    uppers: dict[str, Optional[Fraction]] = {}
    in_integer = False

    for raw in inp:
        line = raw.rstrip("\n")
        if not line.strip() or line.lstrip().startswith("*"):
            continue
        if not line[0].isspace():
            parts = line.split()
            section = parts[0].upper()
            if section == "NAME" and len(parts) > 1:
                name = parts[1]
            if section == "ENDATA":
                break
            continue
        parts = line.split()
        if section == "ROWS":
            tag, rname = parts[0].upper(), parts[1]
            if tag == "N":
                rows[rname] = "N"
            else:
                rows[rname] = {"E": "=", "L": "<=", "G": ">="}[tag]
                row_order.append(rname)
        elif section == "COLUMNS":
            if "'MARKER'" in parts:
                in_integer = "'INTORG'" in parts
                continue
            cname = parts[0]
            if cname not in cols:
                cols[cname] = []
                col_order.append(cname)
                if in_integer:
                    integer_cols.add(cname)
            for rname, value in zip(parts[1::2], parts[2::2]):
                cols[cname].append((rname, _parse_num(value)))
        elif section == "RHS":
            for rname, value in zip(parts[1::2], parts[2::2]):
                rhs[rname] = _parse_num(value)
        elif section == "BOUNDS":
            tag, _, cname = parts[0].upper(), parts[1], parts[2]
            if tag == "LO":
                lowers[cname] = _parse_num(parts[3])
            elif tag == "UP":
                uppers[cname] = _parse_num(parts[3])
            elif tag == "MI":
                lowers[cname] = None
            elif tag == "FX":
                lowers[cname] = uppers[cname] = _parse_num(parts[3])

    objective_row = next((r for r, tag in rows.items() if tag == "N"), None)
    variables = []
    metadata = {}
    for cname in col_order:
        variables.append(
            MipVar(
                cname,
                lowers.get(cname, Fraction(0)),
                uppers.get(cname, None),
                cname in integer_cols,
            )
        )
        metadata[cname] = ("imported", cname)

    constraints = []
    objective = []
    per_row: dict[str, list[tuple[str, Fraction]]] = {r: [] for r in row_order}
    for cname in col_order:
        for rname, coef in cols[cname]:
            if rname == objective_row:
                if coef != 0:
                    objective.append((cname, coef))
            else:
                per_row[rname].append((cname, coef))
    for rname in row_order:
        constraints.append(
            MipConstraint(
                rname, tuple(per_row[rname]), rows[rname], rhs.get(rname, Fraction(0))
            )
        )
    return MipModel(name, tuple(variables), tuple(constraints), tuple(objective), metadata)


def solve_naive(model: MipModel, *, enumeration_cap: int = 200_000):
    """Exact optimum by enumerating the integer boxes, LP on the rest.

    Returns ``(status, assignment, objective)`` with status ``optimal`` or
    ``infeasible``.  Every integer variable needs finite bounds; the box
    product must stay under ``enumeration_cap``.
    """
    int_vars = [v for v in model.variables if v.integer]
    cont_vars = [v for v in model.variables if not v.integer]
    ranges = []
    size = 1
    for v in int_vars:
        if v.lower is None or v.upper is None:
            raise ModelError(f"integer variable {v.name} lacks finite bounds")
        lo = -(-v.lower.numerator // v.lower.denominator)  # ceil
        hi = v.upper.numerator // v.upper.denominator  # floor
        if hi < lo:
            return "infeasible", None, None
        ranges.append(range(lo, hi + 1))
        size *= hi - lo + 1
        if size > enumeration_cap:
            raise ModelError(f"integer box of size {size} exceeds cap")

    cont_index = {v.name: k for k, v in enumerate(cont_vars)}
    obj_cont = [Fraction(0)] * len(cont_vars)
    obj_int: dict[str, Fraction] = {}
    for name, coef in model.objective:
        if name in cont_index:
            obj_cont[cont_index[name]] += coef
        else:
            obj_int[name] = obj_int.get(name, Fraction(0)) + coef

    best = None
    for combo in itertools.product(*ranges):
        fixed = {v.name: Fraction(val) for v, val in zip(int_vars, combo)}
        rows = []
        feas = True
        for con in model.constraints:
            coeffs = [Fraction(0)] * len(cont_vars)
            shift = Fraction(0)
            for name, coef in con.coeffs:
                if name in cont_index:
                    coeffs[cont_index[name]] += coef
                else:
                    shift += coef * fixed[name]
            rhs = con.rhs - shift
            if any(coeffs):
                rows.append((coeffs, con.sense, rhs))
            else:
                ok = {
                    "=": rhs == 0,
                    "<=": rhs >= 0,
                    ">=": rhs <= 0,
                }[con.sense]
                if not ok:
                    feas = False
                    break
        if not feas:
            continue
        base = sum(
            (obj_int.get(v.name, Fraction(0)) * val for v, val in zip(int_vars, combo)),
            Fraction(0),
        )
        if cont_vars:
            res = solve_lp(obj_cont, rows, [(v.lower, v.upper) for v in cont_vars])
            if res.status == "unbounded":
                raise ModelError("model is unbounded")
            if res.status != "optimal":
                continue
            value = base + res.objective
            assignment = dict(zip((v.name for v in cont_vars), res.x))
        else:
            value = base
            assignment = {}
        assignment.update(fixed)
        if best is None or value < best[0]:
            best = (value, assignment)

    if best is None:
        return "infeasible", None, None
    return "optimal", best[1], best[0]
