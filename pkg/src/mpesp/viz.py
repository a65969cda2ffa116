"""Figure rendering for the report paths of the CLI.

Everything draws through the Agg backend straight to files, next to the
delimited text output.  Figures are diagnostics, not deliverable data: the
numbers always live in the text streams.
"""

from __future__ import annotations

from fractions import Fraction
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .network import EventActivityNetwork, Timetable  # noqa: E402


def plot_timetable(net: EventActivityNetwork, tt: Timetable, path) -> Path:
    """Event times laid out against their periods, one row per period."""
    periods = sorted({ev.period for ev in net.events})
    fig, ax = plt.subplots(figsize=(8, 1 + 0.6 * len(periods)))
    lanes = {t: k for k, t in enumerate(periods)}
    for ev in net.events:
        y = lanes[ev.period]
        x = float(tt[ev.id] % ev.period)
        ax.plot([x], [y], "o", color="tab:blue", markersize=5)
        ax.annotate(str(ev.id), (x, y), textcoords="offset points",
                    xytext=(0, 6), fontsize=7, ha="center")
    for t, y in lanes.items():
        ax.hlines(y, 0, t, color="0.8", zorder=0)
    ax.set_yticks(list(lanes.values()), [f"T={t}" for t in lanes])
    ax.set_xlabel("minutes within period")
    ax.set_title("event times per period")
    fig.tight_layout()
    out = Path(path)
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return out


def plot_history(records, path) -> Path:
    """Objective and routed travel time across heuristic iterations."""
    ks = [r.k for r in records]
    fig, ax = plt.subplots(figsize=(7, 4))
    objs = [float(r.solver_objective) if r.solver_objective is not None else None
            for r in records]
    routed = [float(r.routed_total) if r.routed_total is not None else None
              for r in records]
    if any(v is not None for v in objs):
        ax.plot(ks, objs, "s-", label="solver objective")
    if any(v is not None for v in routed):
        ax.plot(ks, routed, "o-", label="routed passenger-minutes")
    ax.set_xlabel("iteration k (top 10k% of transfers)")
    ax.set_ylabel("value")
    ax.legend()
    ax.set_title("timetabling/routing iterations")
    fig.tight_layout()
    out = Path(path)
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return out


def plot_size_comparison(sizes: dict, path) -> Path:
    """Bars of node/arc counts per representation (rolled-out, compact, rooted)."""
    labels = list(sizes)
    nodes = [sizes[k][0] for k in labels]
    arcs = [sizes[k][1] for k in labels]
    xs = range(len(labels))
    fig, ax = plt.subplots(figsize=(7, 4))
    width = 0.38
    ax.bar([x - width / 2 for x in xs], nodes, width, label="events")
    ax.bar([x + width / 2 for x in xs], arcs, width, label="activities")
    ax.set_xticks(list(xs), labels)
    ax.legend()
    ax.set_title("instance sizes by representation")
    fig.tight_layout()
    out = Path(path)
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return out
