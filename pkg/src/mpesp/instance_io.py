"""Instance and solution files.

The native format is one file of semicolon-separated sections, mirroring the
shape of public timetabling benchmark data but carrying each event's period
explicitly so no unit conventions are left implicit:

    # mpesp-instance v1
    [events]
    # id; period; label
    1; 20;
    [activities]
    # id; tail; head; lower; upper; weight; kind
    1; 1; 2; 1; 5; 3; drive
    [od]            (optional)
    # origin; destination; passengers
    A; B; 10
    [stations]      (optional)
    # station; event; role     role in {board, alight, both}
    A; 1; board

All numbers are integers or exact fractions ``p/q``; floats never appear.
The ``timpasslib`` dialect reads a directory of ``.giv`` tables and derives
each event's period as the global period divided by its line's frequency.
"""

from __future__ import annotations

import os
from fractions import Fraction
from pathlib import Path
from typing import Optional, TextIO, Union

from .network import (
    Activity,
    ActivityKind,
    Event,
    EventActivityNetwork,
    NetworkError,
    Tension,
    Timetable,
    as_fraction,
)
from .routing import ODMatrix


class ParseError(ValueError):
    def __init__(self, path, line_no, message):
        super().__init__(f"{path}:{line_no}: {message}")
        self.path = path
        self.line_no = line_no


def _fmt(value) -> str:
    q = as_fraction(value)
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def _parse_id(token: str):
    token = token.strip()
    if token and (token.isdigit() or (token[0] == "-" and token[1:].isdigit())):
        return int(token)
    return token


def _rows(text: str, path):
    """Yield (line_no, section, fields) for a sectioned semicolon file."""
    section = None
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip().lower()
            continue
        yield no, section, [f.strip() for f in line.split(";")]


def write_instance(
    net: EventActivityNetwork, path, od: Optional[ODMatrix] = None
) -> None:
    lines = ["# mpesp-instance v1", "[events]", "# id; period; label"]
    for ev in net.events:
        lines.append(f"{ev.id}; {ev.period}; {ev.label}")
    lines.append("[activities]")
    lines.append("# id; tail; head; lower; upper; weight; kind")
    for act in net.activities:
        lines.append(
            f"{act.id}; {act.tail}; {act.head}; {act.lower}; {act.upper}; "
            f"{_fmt(act.weight)}; {act.kind.value}"
        )
    if od is not None:
        lines.append("[od]")
        lines.append("# origin; destination; passengers")
        for (o, d), count in sorted(od.entries.items(), key=lambda kv: (str(kv[0][0]), str(kv[0][1]))):
            lines.append(f"{o}; {d}; {_fmt(count)}")
        lines.append("[stations]")
        lines.append("# station; event; role")
        seen = {}
        for s, evs in od.boarding.items():
            for e in evs:
                seen[(s, e)] = "board"
        for s, evs in od.alighting.items():
            for e in evs:
                seen[(s, e)] = "both" if seen.get((s, e)) == "board" else "alight"
        for (s, e), role in sorted(seen.items(), key=lambda kv: (str(kv[0][0]), str(kv[0][1]))):
            lines.append(f"{s}; {e}; {role}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_instance(
    path,
    dialect: str = "native",
    *,
    require_connected: bool = False,
    strict_spans: bool = True,
) -> tuple[EventActivityNetwork, Optional[ODMatrix]]:
    """Load an instance; returns the network and the OD data when present.

    Connectivity is not demanded by default because raw benchmark instances
    may only become connected after rooting; pass ``require_connected=True``
    to insist.
    """
    if dialect == "native":
        return _read_native(path, require_connected, strict_spans)
    if dialect == "timpasslib":
        return _read_timpasslib(path, require_connected, strict_spans)
    raise ValueError(f"unknown dialect {dialect!r}")


def _read_native(path, require_connected, strict_spans):
    text = Path(path).read_text(encoding="utf-8")
    events, activities = [], []
    od_entries, boarding, alighting = {}, {}, {}
    has_od = False
    for no, section, fields in _rows(text, path):
        try:
            if section == "events":
                eid, period = _parse_id(fields[0]), int(fields[1])
                label = fields[2] if len(fields) > 2 else ""
                events.append(Event(eid, period, label))
            elif section == "activities":
                aid = _parse_id(fields[0])
                tail, head = _parse_id(fields[1]), _parse_id(fields[2])
                lower, upper = int(fields[3]), int(fields[4])
                weight = as_fraction(fields[5]) if len(fields) > 5 and fields[5] else 0
                kind = ActivityKind(fields[6]) if len(fields) > 6 and fields[6] else ActivityKind.DRIVE
                activities.append(Activity(aid, tail, head, lower, upper, weight, kind))
            elif section == "od":
                has_od = True
                od_entries[(fields[0], fields[1])] = as_fraction(fields[2])
            elif section == "stations":
                has_od = True
                station, event = fields[0], _parse_id(fields[1])
                role = fields[2] if len(fields) > 2 else "both"
                if role in ("board", "both"):
                    boarding.setdefault(station, []).append(event)
                if role in ("alight", "both"):
                    alighting.setdefault(station, []).append(event)
            elif section is None:
                raise ParseError(path, no, "data before any [section] header")
            else:
                raise ParseError(path, no, f"unknown section [{section}]")
        except ParseError:
            raise
        except (ValueError, IndexError, NetworkError) as exc:
            raise ParseError(path, no, str(exc)) from exc

    try:
        net = EventActivityNetwork(
            events, activities,
            require_connected=require_connected, strict_spans=strict_spans,
        )
    except NetworkError as exc:
        raise ParseError(path, 0, str(exc)) from exc

    od = None
    if has_od:
        for station_map in (boarding, alighting):
            for station, evs in station_map.items():
                for e in evs:
                    if not net.has_event(e):
                        raise ParseError(path, 0, f"station {station} attaches unknown event {e!r}")
        od = ODMatrix(od_entries, boarding, alighting)
    return net, od


_TIMPASS_KIND = {
    "drive": ActivityKind.DRIVE,
    "wait": ActivityKind.DWELL,
    "dwell": ActivityKind.DWELL,
    "change": ActivityKind.TRANSFER,
    "transfer": ActivityKind.TRANSFER,
    "headway": ActivityKind.HEADWAY,
    "sync": ActivityKind.SYNC,
}


def _giv_rows(path: Path):
    for no, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        yield no, [f.strip() for f in line.split(";")]


def _read_timpasslib(path, require_connected, strict_spans):
    """Directory of ``.giv`` tables in the public benchmark layout.

    Needs ``Events-periodic.giv`` (event-id; type; stop-id; line-id; ...),
    ``Activities-periodic.giv`` (id; type; tail; head; lower; upper;
    passengers), a config file carrying ``period_length``, and a line table
    carrying per-line frequencies.  Event periods come out as
    ``period_length / frequency(line)``.  The on-disk schema of the public
    library changes over time, so check this reader against the files you
    actually have.
    """
    base = Path(path)
    if not base.is_dir():
        raise ParseError(path, 0, "timpasslib dialect expects a directory")

    def find(*names) -> Optional[Path]:
        for name in names:
            p = base / name
            if p.exists():
                return p
        return None

    config = find("Config.giv", "Global-Config.giv", "config.giv")
    period_length = None
    if config is not None:
        for no, fields in _giv_rows(config):
            if fields[0] in ("period_length", "ptn_period", "period"):
                period_length = int(fields[1])
    if period_length is None:
        raise ParseError(path, 0, "no config file with a period_length entry")

    freq: dict[int, int] = {}
    lines_file = find("Line-Concept.giv", "Lines.giv", "line-concept.giv")
    if lines_file is not None:
        for no, fields in _giv_rows(lines_file):
            # line-id; ...; frequency  (frequency is the last numeric field)
            freq[int(fields[0])] = int(fields[-1])

    events_file = find("Events-periodic.giv", "events-periodic.giv")
    acts_file = find("Activities-periodic.giv", "activities-periodic.giv")
    if events_file is None or acts_file is None:
        raise ParseError(path, 0, "missing Events-periodic.giv or Activities-periodic.giv")

    events = []
    stop_of: dict[int, str] = {}
    type_of: dict[int, str] = {}
    for no, fields in _giv_rows(events_file):
        try:
            eid = int(fields[0])
            etype = fields[1].strip('"').lower()
            stop = fields[2]
            line = int(fields[3])
        except (ValueError, IndexError) as exc:
            raise ParseError(events_file, no, str(exc)) from exc
        f = freq.get(line, 1)
        if period_length % f:
            raise ParseError(events_file, no, f"frequency {f} does not divide {period_length}")
        events.append(Event(eid, period_length // f, label=f"stop {stop} line {line} {etype}"))
        stop_of[eid] = stop
        type_of[eid] = etype

    activities = []
    for no, fields in _giv_rows(acts_file):
        try:
            aid = int(fields[0])
            atype = fields[1].strip('"').lower()
            tail, head = int(fields[2]), int(fields[3])
            lower, upper = int(fields[4]), int(fields[5])
            weight = as_fraction(fields[6]) if len(fields) > 6 and fields[6] else 0
        except (ValueError, IndexError) as exc:
            raise ParseError(acts_file, no, str(exc)) from exc
        kind = _TIMPASS_KIND.get(atype, ActivityKind.DRIVE)
        activities.append(Activity(aid, tail, head, lower, upper, weight, kind))

    try:
        net = EventActivityNetwork(
            events, activities,
            require_connected=require_connected, strict_spans=strict_spans,
        )
    except NetworkError as exc:
        raise ParseError(path, 0, str(exc)) from exc

    od = None
    od_file = find("OD.giv", "od.giv")
    if od_file is not None:
        entries = {}
        for no, fields in _giv_rows(od_file):
            entries[(fields[0], fields[1])] = as_fraction(fields[2])
        boarding: dict[str, list] = {}
        alighting: dict[str, list] = {}
        for eid, stop in stop_of.items():
            if type_of.get(eid, "").startswith("dep"):
                boarding.setdefault(stop, []).append(eid)
            elif type_of.get(eid, "").startswith("arr"):
                alighting.setdefault(stop, []).append(eid)
            else:
                boarding.setdefault(stop, []).append(eid)
                alighting.setdefault(stop, []).append(eid)
        od = ODMatrix(entries, boarding, alighting)
    return net, od


# -- solutions -----------------------------------------------------------------


class SolutionFile:
    """Timetable, durations, objective, status, and optionally cycle values;
    round-trips losslessly through exact fraction syntax."""

    def __init__(self, status, objective=None, times=None, tensions=None, z_values=None):
        self.status = status
        self.objective = None if objective is None else as_fraction(objective)
        self.times = {k: as_fraction(v) for k, v in (times or {}).items()}
        self.tensions = {k: as_fraction(v) for k, v in (tensions or {}).items()}
        self.z_values = {k: int(v) for k, v in (z_values or {}).items()}

    def timetable(self) -> Timetable:
        return Timetable(self.times)

    def tension(self) -> Tension:
        return Tension(self.tensions)

    def __eq__(self, other):
        return isinstance(other, SolutionFile) and (
            self.status, self.objective, self.times, self.tensions, self.z_values
        ) == (other.status, other.objective, other.times, other.tensions, other.z_values)


def write_solution(solution: SolutionFile, path) -> None:
    lines = ["# mpesp-solution v1", f"status; {solution.status}"]
    if solution.objective is not None:
        lines.append(f"objective; {_fmt(solution.objective)}")
    if solution.times:
        lines.append("[times]")
        for k in sorted(solution.times, key=str):
            lines.append(f"{k}; {_fmt(solution.times[k])}")
    if solution.tensions:
        lines.append("[tensions]")
        for k in sorted(solution.tensions, key=str):
            lines.append(f"{k}; {_fmt(solution.tensions[k])}")
    if solution.z_values:
        lines.append("[z]")
        for k in sorted(solution.z_values, key=str):
            lines.append(f"{k}; {solution.z_values[k]}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_solution(path) -> SolutionFile:
    text = Path(path).read_text(encoding="utf-8")
    status = None
    objective = None
    times, tensions, z_values = {}, {}, {}
    for no, section, fields in _rows(text, path):
        try:
            if section is None:
                if fields[0] == "status":
                    status = fields[1]
                elif fields[0] == "objective":
                    objective = as_fraction(fields[1])
                else:
                    raise ParseError(path, no, f"unknown header field {fields[0]!r}")
            elif section == "times":
                times[_parse_id(fields[0])] = as_fraction(fields[1])
            elif section == "tensions":
                tensions[_parse_id(fields[0])] = as_fraction(fields[1])
            elif section == "z":
                z_values[_parse_id(fields[0])] = int(fields[1])
            else:
                raise ParseError(path, no, f"unknown section [{section}]")
        except ParseError:
            raise
        except (ValueError, IndexError) as exc:
            raise ParseError(path, no, str(exc)) from exc
    if status is None:
        raise ParseError(path, 0, "solution file lacks a status line")
    return SolutionFile(status, objective, times, tensions, z_values)
