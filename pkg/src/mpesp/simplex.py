"""Small dense two-phase simplex over exact rationals.

Only meant for desk-scale models (re-imported exports, cross-checks); the
hot paths in the solver use the min-cost tension engine instead.  Variables
need finite lower bounds; upper bounds become rows.  Bland's rule keeps the
pivoting cycle-free.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .network import as_fraction

INF = Fraction(10**30)  # sentinel; callers pass None for a missing bound


@dataclass(frozen=True)
class LpResult:
    status: str  # "optimal" | "infeasible" | "unbounded"
    x: Optional[tuple[Fraction, ...]] = None
    objective: Optional[Fraction] = None


def _pivot(tab, basis, row, col):
    piv = tab[row][col]
    tab[row] = [v / piv for v in tab[row]]
    for r in range(len(tab)):
        if r != row and tab[r][col] != 0:
            factor = tab[r][col]
            tab[r] = [a - factor * b for a, b in zip(tab[r], tab[row])]
    basis[row] = col


def _run_simplex(tab, basis, cost):
    """Minimize cost^T x over the tableau rows; returns status."""
    m = len(tab)
    n = len(cost)
    # reduced cost row
    z = list(cost) + [Fraction(0)]
    for r in range(m):
        if z[basis[r]] != 0:
            factor = z[basis[r]]
            z = [a - factor * b for a, b in zip(z, tab[r])]
    while True:
        col = next((j for j in range(n) if z[j] < 0), None)
        if col is None:
            return "optimal", z
        row, best = None, None
        for r in range(m):
            if tab[r][col] > 0:
                ratio = tab[r][-1] / tab[r][col]
                if best is None or ratio < best or (
                    ratio == best and basis[r] < basis[row]
                ):
                    best, row = ratio, r
        if row is None:
            return "unbounded", z
        _pivot(tab, basis, row, col)
        factor = z[col]
        z = [a - factor * b for a, b in zip(z, tab[row])]


def solve_lp(
    objective: Sequence,
    rows: Sequence[tuple[Sequence, str, object]],
    bounds: Sequence[tuple[object, object]],
) -> LpResult:
    """Minimize ``objective . x`` subject to rows ``(coeffs, sense, rhs)``
    with sense one of ``<=``, ``>=``, ``=``, and per-variable bounds
    ``(lower, upper)``; ``upper`` may be None for unbounded above."""
    nvar = len(bounds)
    obj = [as_fraction(c) for c in objective]
    lowers = []
    for lb, _ in bounds:
        if lb is None:
            raise ValueError("variables need finite lower bounds")
        lowers.append(as_fraction(lb))

    # shift x = lower + y with y >= 0; collect all rows over y
    work_rows: list[tuple[list[Fraction], str, Fraction]] = []
    for coeffs, sense, rhs in rows:
        cs = [as_fraction(c) for c in coeffs]
        shift = sum(c * l for c, l in zip(cs, lowers))
        work_rows.append((cs, sense, as_fraction(rhs) - shift))
    for j, (lb, ub) in enumerate(bounds):
        if ub is None:
            continue
        span = as_fraction(ub) - lowers[j]
        if span < 0:
            return LpResult("infeasible")
        row = [Fraction(0)] * nvar
        row[j] = Fraction(1)
        work_rows.append((row, "<=", span))

    m = len(work_rows)
    n_slack = sum(1 for _, s, _ in work_rows if s in ("<=", ">="))
    total = nvar + n_slack + m  # + artificials (one per row, some unused)

    tab: list[list[Fraction]] = []
    basis: list[int] = []
    art_cols: list[int] = []
    slack_at = nvar
    art_at = nvar + n_slack
    for coeffs, sense, rhs in work_rows:
        row = list(coeffs) + [Fraction(0)] * (total - nvar) + [rhs]
        if sense == ">=":
            row[slack_at] = Fraction(-1)
            slack_at += 1
        elif sense == "<=":
            row[slack_at] = Fraction(1)
            slack_at += 1
        elif sense != "=":
            raise ValueError(f"unknown sense {sense!r}")
        if row[-1] < 0:
            row = [-v for v in row]
        # basic variable: the slack if it has coefficient +1, else an artificial
        slack_col = None
        for j in range(nvar, nvar + n_slack):
            if row[j] == 1:
                slack_col = j
        if slack_col is not None:
            basis.append(slack_col)
        else:
            row[art_at] = Fraction(1)
            basis.append(art_at)
            art_cols.append(art_at)
            art_at += 1
        tab.append(row)

    used = art_at
    tab = [r[:used] + [r[-1]] for r in tab]

    if art_cols:
        phase1 = [Fraction(0)] * used
        for c in art_cols:
            phase1[c] = Fraction(1)
        status, z = _run_simplex(tab, basis, phase1)
        if status != "optimal" or -z[-1] != 0:
            return LpResult("infeasible")
        # drive surviving artificials out of the basis when possible
        for r in range(m):
            if basis[r] in art_cols:
                col = next(
                    (j for j in range(nvar + n_slack) if tab[r][j] != 0), None
                )
                if col is not None:
                    _pivot(tab, basis, r, col)
        # forbid artificials from re-entering
        for r in range(m):
            for c in art_cols:
                if basis[r] != c:
                    tab[r][c] = Fraction(0)

    phase2 = obj + [Fraction(0)] * (used - nvar)
    for c in art_cols:
        phase2[c] = INF  # keeps any stuck degenerate artificial at zero
    status, z = _run_simplex(tab, basis, phase2)
    if status == "unbounded":
        return LpResult("unbounded")

    y = [Fraction(0)] * used
    for r in range(m):
        y[basis[r]] = tab[r][-1]
    x = tuple(y[j] + lowers[j] for j in range(nvar))
    value = sum(c * v for c, v in zip(obj, x))
    return LpResult("optimal", x, value)
