"""Aggregate run records into per-task resolution and pattern tables."""

from __future__ import annotations

import csv
import io
import statistics
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .design import display_length, format_decimal, format_pattern
from .reference import Optimality, ReferenceStore, judge_pattern


class AggregationError(ValueError):
    pass


@dataclass
class PatternFrequency:
    prefix: tuple[Fraction, ...]
    count: int
    optimality: Optimality

    def label(self) -> str:
        star = "*" if self.optimality is Optimality.OPTIMAL else ""
        return format_pattern(self.prefix, 1) + star


@dataclass
class ReportRow:
    task_id: int
    n: int
    m: int
    replicates: int
    compliant_count: int
    resolution_min: Fraction | None = None
    resolution_median: Fraction | None = None
    resolution_max: Fraction | None = None
    pattern_frequencies: list[PatternFrequency] = field(default_factory=list)


def _resolution_value(record) -> int:
    res = record.metrics["resolution"]
    # all word counts zero: rank it above every attainable resolution
    return record.m + 1 if res is None else res


def aggregate(records: Iterable, store: ReferenceStore | None = None) -> list[ReportRow]:
    """One row per task, statistics over compliant records only."""
    records = list(records)
    providers = {r.provider_id for r in records}
    if len(providers) > 1:
        raise AggregationError(f"records mix providers: {', '.join(sorted(providers))}")
    by_task: dict[tuple[int, int, int], list] = defaultdict(list)
    for r in records:
        by_task[r.task_id, r.n, r.m].append(r)

    rows = []
    for (task_id, n, m), group in sorted(by_task.items()):
        ok = [r for r in group if r.compliant]
        row = ReportRow(task_id, n, m, len({r.replicate for r in group}), len(ok))
        if ok:
            res = [_resolution_value(r) for r in ok]
            row.resolution_min = Fraction(min(res))
            row.resolution_max = Fraction(max(res))
            row.resolution_median = Fraction(statistics.median(sorted(Fraction(v) for v in res)))
            row.pattern_frequencies = _frequencies(
                [r for r in ok if _resolution_value(r) == max(res)], n, m, store)
        rows.append(row)
    return rows


def _frequencies(records: Sequence, n: int, m: int, store) -> list[PatternFrequency]:
    length = display_length(n, m)
    counts: dict[tuple, int] = defaultdict(int)
    for r in records:
        moments = r.moments
        prefix = tuple(Fraction(format_decimal(v, 1)) for v in moments[:length])
        flag = judge_pattern(moments, n, m, store)
        counts[prefix, flag] += 1
    order = {Optimality.OPTIMAL: 0, Optimality.UNKNOWN: 1, Optimality.SUBOPTIMAL: 2}
    return [PatternFrequency(prefix, c, flag)
            for (prefix, flag), c in sorted(counts.items(), key=lambda kv: (kv[0][0], order[kv[0][1]]))]


def _stat(value: Fraction | None) -> str:
    if value is None:
        return ""
    return str(value.numerator) if value.denominator == 1 else format_decimal(value, 1)


SUMMARY_HEADER = ("Task", "Runs", "Factors", "Min.", "Median", "Max.", "# Compliant")
PATTERN_HEADER = ("Task", "Runs", "Factors", "Resolution", "Moment aberration pattern", "Frequency")
CSV_HEADER = ("task_id", "n", "m", "resolution_min", "resolution_median", "resolution_max",
              "compliant", "pattern", "optimality", "frequency")


def _md_table(header: Sequence[str], body: list[Sequence[str]]) -> list[str]:
    lines = ["| " + " | ".join(header) + " |", "|" + "|".join("---" for _ in header) + "|"]
    lines += ["| " + " | ".join(cells) + " |" for cells in body]
    return lines


def emit_report(rows: Sequence[ReportRow], fmt: str = "markdown", title: str | None = None) -> str:
    """Render rows as markdown (two tables) or flat CSV, deterministically."""
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for row in rows:
            stats = [row.task_id, row.n, row.m, _stat(row.resolution_min),
                     _stat(row.resolution_median), _stat(row.resolution_max), row.compliant_count]
            if not row.pattern_frequencies:
                writer.writerow(stats + ["", "", ""])
            for pf in row.pattern_frequencies:
                writer.writerow(stats + [format_pattern(pf.prefix, 1), pf.optimality.value, pf.count])
        return buf.getvalue()
    if fmt != "markdown":
        raise ValueError(f"unknown report format {fmt!r}")

    summary = [(str(r.task_id), str(r.n), str(r.m), _stat(r.resolution_min),
                _stat(r.resolution_median), _stat(r.resolution_max), str(r.compliant_count))
               for r in rows]
    patterns = []
    for r in rows:
        for k, pf in enumerate(r.pattern_frequencies):
            lead = (str(r.task_id), str(r.n), str(r.m), _stat(r.resolution_max)) if k == 0 else ("",) * 4
            patterns.append(lead + (pf.label(), str(pf.count)))
    lines = [f"# {title}", ""] if title else []
    lines += ["## Resolution of compliant designs", ""] + _md_table(SUMMARY_HEADER, summary)
    lines += ["", "## Moment aberration patterns at the highest resolution", ""]
    lines += _md_table(PATTERN_HEADER, patterns)
    lines += ["", "*: design has minimum moment aberration"]
    return "\n".join(lines) + "\n"
