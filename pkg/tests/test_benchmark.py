import json
from decimal import Decimal
from fractions import Fraction
from itertools import islice

import pytest

from fracdesign.harness.benchmark import (
    SCHEMA_VERSION,
    LogicalClock,
    RunRecord,
    TaskSpec,
    benchmark_grid,
    make_tasks,
    parse_task_filter,
    read_records,
    run_benchmark,
)
from fracdesign.harness.providers import ProviderProfile, TransportError, Usage
from fracdesign.reference import ReferenceStore

from conftest import HALF_FRACTION_ROWS
from parser_corpus import REFUSAL, WELL_FORMED, prompt_csv


def mock_profile(directory, pid="mock"):
    return ProviderProfile(pid, "mock", model="mock", price_in=Decimal("1.5"), price_out=Decimal("10"),
                           min_interval=0.0, fixtures=str(directory))


def run_all(tasks, profile, log, seed=0, **kwargs):
    return list(run_benchmark(tasks, profile, seed, log, clock=LogicalClock(), **kwargs))


# -- grid ------------------------------------------------------------------------


def test_grid_has_36_tasks():
    grid = benchmark_grid()
    assert len(grid) == 36
    assert grid[0] == (8, 4) and grid[4] == (16, 5) and grid[-1] == (32, 26)
    assert sum(1 for n, _ in grid if n == 32) == 21


def test_task_filter():
    assert parse_task_filter("8:4-5;16:9") == {(8, 4), (8, 5), (16, 9)}
    assert parse_task_filter("16:5-15") == {(16, m) for m in range(5, 16)}
    assert parse_task_filter("8") == {(8, m) for m in range(4, 8)}
    with pytest.raises(ValueError):
        parse_task_filter("8:x")


def test_make_tasks_keeps_grid_numbering():
    tasks = make_tasks(mock_profile("."), 3, 0, {(16, 5), (32, 6)})
    assert [(t.task_id, t.n, t.m, t.replicates) for t in tasks] == [(5, 16, 5, 3), (16, 32, 6, 3)]


def test_task_spec_validation():
    with pytest.raises(ValueError):
        TaskSpec(1, 8, 4, replicates=0)


# -- full grid -----------------------------------------------------------------------


def test_full_grid_produces_360_records(grid_fixtures, tmp_path):
    profile = mock_profile(grid_fixtures)
    records = run_all(make_tasks(profile), profile, tmp_path / "log.jsonl")
    assert len(records) == 360
    assert len({r.key for r in records}) == 360
    assert len(read_records(tmp_path / "log.jsonl")) == 360
    assert all(r.compliant for r in records)


def test_log_is_byte_deterministic(grid_fixtures, tmp_path):
    profile = mock_profile(grid_fixtures)
    tasks = make_tasks(profile, 2)
    run_all(tasks, profile, tmp_path / "a.jsonl", seed=5)
    run_all(tasks, profile, tmp_path / "b.jsonl", seed=5)
    assert (tmp_path / "a.jsonl").read_bytes() == (tmp_path / "b.jsonl").read_bytes()


def test_task_order_is_seeded_shuffle(grid_fixtures, tmp_path):
    profile = mock_profile(grid_fixtures)
    tasks = make_tasks(profile, 1)

    def order(seed, name):
        return [r.task_id for r in run_all(tasks, profile, tmp_path / name, seed=seed)]

    first = order(0, "s0.jsonl")
    assert sorted(first) == list(range(1, 37))
    assert first != list(range(1, 37))
    assert order(1, "s1.jsonl") != first
    assert order(0, "s0b.jsonl") == first


def test_resume_skips_existing_records(grid_fixtures, tmp_path):
    profile = mock_profile(grid_fixtures)
    tasks = make_tasks(profile, 3, cells={(8, 4), (16, 7), (32, 9)})
    log = tmp_path / "log.jsonl"
    partial = list(islice(run_benchmark(tasks, profile, 0, log, clock=LogicalClock()), 4))
    assert len(read_records(log)) == 4
    rest = run_all(tasks, profile, log)
    assert len(rest) == 5
    keys = [r.key for r in read_records(log)]
    assert len(keys) == len(set(keys)) == 9
    assert not {r.key for r in partial} & {r.key for r in rest}
    assert run_all(tasks, profile, log) == []


# -- record contents -------------------------------------------------------------------


def test_ten_resolution_four_tables(tmp_path):
    (tmp_path / "n8_m4.txt").write_text(WELL_FORMED)
    profile = mock_profile(tmp_path)
    records = run_all(make_tasks(profile, cells={(8, 4)}), profile, tmp_path / "log.jsonl")
    assert len(records) == 10
    assert all(r.compliant and r.metrics["resolution"] == 4 for r in records)
    assert all(r.metrics["optimality"] == "optimal" for r in records)


def test_metrics_present_iff_compliant(tmp_path):
    replies = {1: WELL_FORMED, 2: REFUSAL, 3: WELL_FORMED.replace("2,1,-1,-1,1", "2,1,,-1,1"),
               4: "```\n" + WELL_FORMED.replace("\\\\", "") + "\n```", 5: "no table here"}
    for rep, text in replies.items():
        (tmp_path / f"n8_m4_r{rep}.txt").write_text(text)
    (tmp_path / "n8_m4_r1.usage.json").write_text('{"input": 1000000, "output": 1000000}')
    profile = mock_profile(tmp_path)
    tasks = [TaskSpec(1, 8, 4, replicates=6, provider_id="mock")]
    records = {r.replicate: r for r in run_all(tasks, profile, tmp_path / "log.jsonl")}
    classes = {k: r.compliance["class"] for k, r in records.items()}
    assert classes == {1: "Compliant", 2: "Refusal", 3: "MissingEntries", 4: "Compliant",
                       5: "WrongDimensions", 6: "WrongDimensions"}
    for r in records.values():
        assert (r.metrics is not None) == r.compliant
    assert records[1].cost == "11.5"
    assert records[2].cost is None and records[2].usage is None
    assert records[4].repair_log
    assert records[6].error and "no mock fixture" in records[6].error


def test_transport_error_is_recorded_not_raised(tmp_path):
    class Flaky:
        def complete(self, prompt, key=None):
            if key[2] == 2:
                raise TransportError("gave up after 5 attempts: HTTP 503")
            return type("C", (), {"text": prompt_csv(HALF_FRACTION_ROWS), "usage": Usage(1, 1)})()

    profile = mock_profile(tmp_path)
    tasks = [TaskSpec(1, 8, 4, replicates=3)]
    records = run_all(tasks, profile, tmp_path / "log.jsonl", client=Flaky())
    assert [r.compliant for r in records] == [True, False, True]
    assert records[1].error.startswith("gave up")
    assert records[1].raw_text == ""


def test_record_json_round_trip(tmp_path):
    (tmp_path / "n8_m4.txt").write_text(WELL_FORMED)
    profile = mock_profile(tmp_path)
    record = run_all([TaskSpec(1, 8, 4, replicates=1)], profile, tmp_path / "log.jsonl")[0]
    data = json.loads(record.to_json())
    assert data["schema"] == SCHEMA_VERSION
    assert RunRecord.from_dict(data) == record
    assert record.moments[:2] == (Fraction(12, 7), Fraction(24, 7))
    data["schema"] = 99
    with pytest.raises(ValueError):
        RunRecord.from_dict(data)


def test_optimality_uses_supplied_store(tmp_path):
    (tmp_path / "n8_m4.txt").write_text(WELL_FORMED)
    profile = mock_profile(tmp_path)
    records = run_all([TaskSpec(1, 8, 4, replicates=1)], profile, tmp_path / "log.jsonl",
                      store=ReferenceStore())
    assert records[0].metrics["optimality"] == "unknown"


def test_read_records_reports_bad_lines(tmp_path):
    path = tmp_path / "log.jsonl"
    path.write_text('{"schema": 1}\n')
    with pytest.raises(ValueError, match="log.jsonl:1"):
        read_records(path)


def test_empty_task_list_rejected(tmp_path):
    with pytest.raises(ValueError):
        run_all([], mock_profile(tmp_path), tmp_path / "log.jsonl")


def test_logical_clock():
    clock = LogicalClock()
    assert clock() == "1970-01-01T00:00:00+00:00"
    assert clock() == "1970-01-01T00:00:01+00:00"
