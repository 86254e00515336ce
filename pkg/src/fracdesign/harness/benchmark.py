"""Replicated benchmark runs and their append-only JSONL record log."""

from __future__ import annotations

import datetime as dt
import json
import logging
import random
import re
from dataclasses import asdict, dataclass
from fractions import Fraction
from pathlib import Path
from typing import Callable, Iterable, Iterator

from ..design import (
    WLP_MAX_FACTORS,
    Compliance,
    display_length,
    format_pattern,
    generalized_wlp,
    moment_pattern,
    resolution,
    validate_table,
)
from ..reference import ReferenceStore, judge_pattern
from .parsing import DEFAULT_REFUSAL_PHRASES, Refusal, Table, Unparseable, parse_design_response
from .prompt import render_prompt
from .providers import (
    Completion,
    ProviderProfile,
    TransportError,
    estimate_cost,
    make_client,
)

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
GRID = {8: range(4, 8), 16: range(5, 16), 32: range(6, 27)}


@dataclass(frozen=True)
class TaskSpec:
    task_id: int
    n: int
    m: int
    replicates: int = 10
    provider_id: str = ""
    model_id: str = ""
    reasoning: str | int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.replicates < 1:
            raise ValueError("replicates must be at least 1")


def benchmark_grid() -> list[tuple[int, int]]:
    """The 36 (n, m) cells, numbered 1..36 in this order."""
    return [(n, m) for n, ms in GRID.items() for m in ms]


def parse_task_filter(text: str) -> set[tuple[int, int]]:
    """``"8:4-7;16:5,9"`` -> {(8, 4), ..., (16, 9)}; a bare ``"16"`` means all m."""
    cells = set()
    for group in filter(None, (g.strip() for g in re.split(r"[;\s]+", text))):
        runs, _, spec = group.partition(":")
        try:
            n = int(runs)
            if not spec:
                ms = set(GRID.get(n, ()))
            else:
                ms = set()
                for part in spec.split(","):
                    lo, _, hi = part.partition("-")
                    ms.update(range(int(lo), int(hi or lo) + 1))
        except ValueError:
            raise ValueError(f"bad task filter {group!r}") from None
        cells.update((n, m) for m in ms)
    return cells


def make_tasks(profile: ProviderProfile, replicates: int = 10, seed: int = 0,
               cells: set[tuple[int, int]] | None = None) -> list[TaskSpec]:
    """Grid tasks for one provider, keeping the grid's task numbering."""
    grid = benchmark_grid()
    tasks = [TaskSpec(i, n, m, replicates, profile.id, profile.model, profile.reasoning, seed)
             for i, (n, m) in enumerate(grid, start=1) if cells is None or (n, m) in cells]
    if cells:
        extra = sorted(cells - set(grid))
        tasks += [TaskSpec(len(grid) + k, n, m, replicates, profile.id, profile.model,
                           profile.reasoning, seed) for k, (n, m) in enumerate(extra, start=1)]
    return tasks


@dataclass
class RunRecord:
    provider_id: str
    model_id: str
    task_id: int
    n: int
    m: int
    replicate: int
    timestamp: str
    raw_text: str
    usage: dict | None
    cost: str | None
    parse: dict
    repair_log: list[str]
    compliance: dict
    metrics: dict | None
    error: str | None = None
    reasoning: str | int | None = None
    schema: int = SCHEMA_VERSION

    @property
    def key(self) -> tuple[int, int, str]:
        return (self.task_id, self.replicate, self.provider_id)

    @property
    def compliant(self) -> bool:
        return self.compliance.get("class") == Compliance.COMPLIANT.value

    @property
    def moments(self) -> tuple[Fraction, ...] | None:
        if not self.metrics:
            return None
        return tuple(Fraction(v) for v in self.metrics["moments"])

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, ensure_ascii=False)

    @classmethod
    def from_dict(cls, data: dict) -> RunRecord:
        if data.get("schema") != SCHEMA_VERSION:
            raise ValueError(f"unsupported record schema {data.get('schema')!r}")
        names = cls.__dataclass_fields__
        return cls(**{k: v for k, v in data.items() if k in names})


def read_records(path: str | Path) -> list[RunRecord]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                records.append(RunRecord.from_dict(json.loads(line)))
            except (ValueError, TypeError) as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
    return records


class RecordLog:
    """Single-writer append-only JSONL file."""

    def __init__(self, path: str | Path):
        self.path = Path(path)

    def keys(self) -> set[tuple[int, int, str]]:
        if not self.path.exists():
            return set()
        return {r.key for r in read_records(self.path)}

    def append(self, record: RunRecord) -> None:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with open(self.path, "a", encoding="utf-8") as fh:
            fh.write(record.to_json() + "\n")
            fh.flush()


def utc_now() -> str:
    return dt.datetime.now(dt.timezone.utc).isoformat(timespec="seconds")


class LogicalClock:
    """Deterministic timestamps for offline runs: one second per record."""

    def __init__(self, start: str = "1970-01-01T00:00:00+00:00"):
        self._t = dt.datetime.fromisoformat(start)

    def __call__(self) -> str:
        stamp = self._t.isoformat(timespec="seconds")
        self._t += dt.timedelta(seconds=1)
        return stamp


def _parse_dict(outcome) -> dict:
    if isinstance(outcome, Table):
        return {"kind": "table", "header": list(outcome.header), "rows": [list(r) for r in outcome.rows]}
    if isinstance(outcome, Refusal):
        return {"kind": "refusal", "phrase": outcome.phrase}
    return {"kind": "unparseable", "reason": outcome.reason}


def _metrics(design, store: ReferenceStore | None) -> dict:
    pattern = moment_pattern(design)
    metrics = {
        "resolution": resolution(design),
        "moments": [str(v) for v in pattern.moments],
        "moment_prefix": format_pattern(pattern.moments[:display_length(design.n, design.m)], 1),
        "optimality": judge_pattern(pattern.moments, design.n, design.m, store).value,
    }
    if design.m <= WLP_MAX_FACTORS:
        metrics["wlp"] = [str(a) for a in generalized_wlp(design)]
    return metrics


def evaluate_response(task: TaskSpec, replicate: int, completion: Completion | None,
                      profile: ProviderProfile, timestamp: str, error: str | None = None,
                      store: ReferenceStore | None = None,
                      refusal_phrases=DEFAULT_REFUSAL_PHRASES) -> RunRecord:
    """Parse, validate, measure and cost one response into a record."""
    if completion is None:
        outcome = Unparseable(f"transport error: {error}")
        raw, usage = "", None
    else:
        raw, usage = completion.text, completion.usage
        outcome = parse_design_response(raw, task.m, task.n, refusal_phrases)
    report = validate_table(outcome, task.m, task.n)
    cost = estimate_cost(usage, profile)
    return RunRecord(
        provider_id=profile.id,
        model_id=profile.model,
        task_id=task.task_id,
        n=task.n,
        m=task.m,
        replicate=replicate,
        timestamp=timestamp,
        raw_text=raw,
        usage=asdict(usage) if usage else None,
        cost=None if cost is None else format(cost.normalize(), "f"),
        parse=_parse_dict(outcome),
        repair_log=list(report.repair_log),
        compliance={"class": report.status.value, "detail": report.detail},
        metrics=_metrics(report.design, store) if report.compliant else None,
        error=error,
        reasoning=profile.reasoning,
    )


def run_benchmark(tasks: Iterable[TaskSpec], profile: ProviderProfile, seed: int,
                  log_path: str | Path, client=None, clock: Callable[[], str] | None = None,
                  store: ReferenceStore | None = None,
                  refusal_phrases=DEFAULT_REFUSAL_PHRASES) -> Iterator[RunRecord]:
    """Run every (task, replicate) not yet in the log, in seeded random task order.

    Each record is appended to the log before the next call is made, so an
    interrupted run resumes where it stopped. Transport failures become
    non-compliant records rather than aborting the run.
    """
    tasks = list(tasks)
    if not tasks:
        raise ValueError("no tasks to run")
    order = list(tasks)
    random.Random(seed).shuffle(order)
    client = client or make_client(profile)
    clock = clock or utc_now
    record_log = RecordLog(log_path)
    done = record_log.keys()
    for task in order:
        prompt = render_prompt(task.m, task.n)
        for rep in range(1, task.replicates + 1):
            if (task.task_id, rep, profile.id) in done:
                continue
            error = None
            try:
                completion = client.complete(prompt, key=(task.n, task.m, rep))
            except TransportError as exc:
                completion, error = None, str(exc)
                log.warning("task %d replicate %d: %s", task.task_id, rep, exc)
            record = evaluate_response(task, rep, completion, profile, clock(), error,
                                       store, refusal_phrases)
            record_log.append(record)
            done.add(record.key)
            yield record
