"""Metrics over schedule traces: makespan, utilization, co-run statistics,
cross-configuration comparison, and Chrome-trace export.

Co-run counting follows the event-sampling rule: whenever an operation is
launched or finishes, record the number of live operations immediately
after that instant (simultaneous events each contribute one sample).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .errors import ConsistencyError
from .scheduler import ScheduleTrace


def corun_stats(
    trace: ScheduleTrace, events_window: int | None = None
) -> tuple[list[tuple[float, int]], float]:
    """(live-op count series per distinct instant, mean over event samples).

    ``events_window`` keeps only the middle N event samples of the series,
    for plotting long traces; the mean is always over all events.
    """
    deltas: dict[float, list[int]] = {}
    for e in trace.events:
        deltas.setdefault(e.start, []).append(1)
        deltas.setdefault(e.end, []).append(-1)
    series: list[tuple[float, int]] = []
    samples: list[int] = []
    live = 0
    for t in sorted(deltas):
        changes = deltas[t]
        live += sum(changes)
        series.append((t, live))
        samples.extend([live] * len(changes))
    mean = sum(samples) / len(samples) if samples else 0.0
    if events_window is not None and len(series) > events_window:
        lo = (len(series) - events_window) // 2
        series = series[lo : lo + events_window]
    return series, mean


def utilization(trace: ScheduleTrace) -> float:
    """Fraction of physical-core time covered by at least one resident op."""
    if not trace.events or trace.makespan <= 0:
        return 0.0
    per_core: dict[int, list[tuple[float, float]]] = {}
    for e in trace.events:
        for core in e.cores:
            per_core.setdefault(core, []).append((e.start, e.end))
    busy = 0.0
    for intervals in per_core.values():
        intervals.sort()
        cur_start, cur_end = intervals[0]
        for start, end in intervals[1:]:
            if start > cur_end:
                busy += cur_end - cur_start
                cur_start, cur_end = start, end
            else:
                cur_end = max(cur_end, end)
        busy += cur_end - cur_start
    return busy / (trace.machine.physical_cores * trace.makespan)


@dataclass(frozen=True)
class RunReport:
    makespan: float
    utilization: float
    corun_series: tuple[tuple[float, int], ...]
    corun_mean: float
    speedup_vs: dict[str, float]

    def to_dict(self) -> dict:
        return {
            "makespan": self.makespan,
            "utilization": self.utilization,
            "corun_mean": self.corun_mean,
            "corun_series": [[t, n] for t, n in self.corun_series],
            "speedup_vs": dict(sorted(self.speedup_vs.items())),
        }


def build_report(
    trace: ScheduleTrace,
    baselines: dict[str, ScheduleTrace] | None = None,
    events_window: int | None = None,
) -> RunReport:
    series, mean = corun_stats(trace, events_window=events_window)
    speedups = {
        name: base.makespan / trace.makespan for name, base in (baselines or {}).items()
    }
    return RunReport(
        makespan=trace.makespan,
        utilization=utilization(trace),
        corun_series=tuple(series),
        corun_mean=mean,
        speedup_vs=speedups,
    )


@dataclass(frozen=True)
class ComparisonRow:
    name: str
    makespan: float
    speedup: float
    utilization: float
    corun_mean: float


def compare(named_traces: list[tuple[str, ScheduleTrace]]) -> list[ComparisonRow]:
    """Side-by-side metrics; speedup is relative to the first-named trace.

    All traces must come from the same graph and machine.
    """
    if len(named_traces) < 2:
        raise ConsistencyError("compare needs at least two traces")
    _, first = named_traces[0]
    for name, trace in named_traces[1:]:
        if trace.graph_fingerprint != first.graph_fingerprint:
            raise ConsistencyError(
                f"trace {name!r} is from a different graph than {named_traces[0][0]!r}"
            )
        if trace.machine != first.machine:
            raise ConsistencyError(
                f"trace {name!r} is from a different machine than {named_traces[0][0]!r}"
            )
    rows = []
    for name, trace in named_traces:
        _, mean = corun_stats(trace)
        rows.append(
            ComparisonRow(
                name=name,
                makespan=trace.makespan,
                speedup=first.makespan / trace.makespan,
                utilization=utilization(trace),
                corun_mean=mean,
            )
        )
    return rows


def comparison_text(rows: list[ComparisonRow]) -> str:
    headers = ("config", "makespan_ms", "speedup", "utilization", "corun_mean")
    table = [headers]
    for r in rows:
        table.append(
            (r.name, f"{r.makespan:.3f}", f"{r.speedup:.3f}", f"{r.utilization:.3f}", f"{r.corun_mean:.3f}")
        )
    widths = [max(len(row[i]) for row in table) for i in range(len(headers))]
    lines = []
    for row in table:
        lines.append("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip())
    return "\n".join(lines) + "\n"


def comparison_json(rows: list[ComparisonRow]) -> str:
    doc = [
        {
            "name": r.name,
            "makespan": r.makespan,
            "speedup": r.speedup,
            "utilization": r.utilization,
            "corun_mean": r.corun_mean,
        }
        for r in rows
    ]
    return json.dumps(doc, indent=2) + "\n"


def export_chrome_trace(trace: ScheduleTrace) -> str:
    """Chrome Trace Event Format: one complete ("X") event per op, in us."""
    events = []
    for e in trace.events:
        events.append(
            {
                "name": e.op_id,
                "ph": "X",
                "ts": e.start * 1000.0,
                "dur": (e.end - e.start) * 1000.0,
                "pid": 0,
                "tid": min(e.cores),
                "args": {
                    "width": e.width,
                    "shared": e.shared,
                    "cores": sorted(e.cores),
                },
            }
        )
    return json.dumps(events, indent=2) if events else "[]"
