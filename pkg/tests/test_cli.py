import subprocess
import sys
from collections import Counter

import pytest

from fracdesign.cli import main
from fracdesign.design import read_design
from fracdesign.harness.benchmark import read_records
from fracdesign.reference import ReferenceStore

from conftest import DATA, HALF_FRACTION_ROWS


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_construct_half_fraction(capsys):
    code, out, err = run(capsys, "construct", "--runs", "8", "--generators", "D=ABC")
    assert code == 0
    assert Counter(read_design(out).rows) == Counter(HALF_FRACTION_ROWS)
    assert out.splitlines()[0] == "Run,A,B,C,D\\\\"
    assert "I = ABCD" in err


def test_construct_plain_to_file(capsys, tmp_path):
    target = tmp_path / "d.csv"
    code, out, _ = run(capsys, "construct", "--runs", "16", "--generators", "E=ABC,F=ABD,G=ACD",
                       "--plain", "-o", str(target))
    assert code == 0 and out == ""
    text = target.read_text()
    assert "\\" not in text and read_design(text).m == 7


def test_evaluate_ma_16_7(capsys):
    code, out, _ = run(capsys, "evaluate", str(DATA / "ma_16_7.csv"))
    assert code == 0
    lines = dict(line.split(": ", 1) for line in out.splitlines())
    assert lines["resolution"] == "4"
    assert lines["moment_pattern"] == "(3.27, 11.67, 42.47, 157.27, 591.27, 2251.67, 8666.47)"
    assert lines["wlp"] == "(0, 0, 0, 7, 0, 0, 0)"
    assert lines["optimality"] == "optimal"


def test_search_and_publish(capsys, tmp_path):
    store = tmp_path / "refs.txt"
    code, out, _ = run(capsys, "search", "--runs", "16", "--factors", "5", "--publish",
                       "--store", str(store), "-o", str(tmp_path / "best.csv"))
    assert code == 0
    assert "moment_pattern: (2.3, 6.3, 18.3, 54.3, 162.3)" in out
    assert "mode: exhaustive" in out and "resolution: 5" in out
    assert ReferenceStore.load(store).get(16, 5).status == "optimal"
    assert read_design((tmp_path / "best.csv").read_text()).n == 16
    code, out, _ = run(capsys, "search", "--runs", "16", "--factors", "5", "--publish",
                       "--store", str(store))
    assert "published: no" in out


def test_search_heuristic_flags(capsys):
    code, out, _ = run(capsys, "search", "--runs", "32", "--factors", "12", "--restarts", "2",
                       "--seed", "4", "--depth", "4")
    assert code == 0
    assert "mode: heuristic" in out and "generators: F=" in out


def test_benchmark_and_report_offline(capsys, tmp_path, grid_fixtures):
    log = tmp_path / "run.jsonl"
    code, out, _ = run(capsys, "benchmark", "--offline", "--fixtures", str(grid_fixtures),
                       "--log", str(log), "--seed", "3")
    assert code == 0 and out.startswith("360 new record(s)")
    assert len(read_records(log)) == 360
    code, out, _ = run(capsys, "report", "--format", "markdown", str(log))
    assert code == 0
    summary = out.split("## Moment")[0]
    assert sum(1 for line in summary.splitlines() if line.startswith("| ") and line[2].isdigit()) == 36
    assert "| 1 | 8 | 4 | 4 | 4 | 4 | 10 |" in out
    code, csv_out, _ = run(capsys, "report", "--format", "csv", str(log), "-o", str(tmp_path / "r.csv"))
    assert (tmp_path / "r.csv").read_text().startswith("task_id,")


def test_benchmark_subset_and_resume(capsys, tmp_path, grid_fixtures):
    log = tmp_path / "run.jsonl"
    args = ["benchmark", "--offline", "--fixtures", str(grid_fixtures), "--log", str(log),
            "--tasks", "8:4-5", "--replicates", "3"]
    assert run(capsys, *args)[1].startswith("6 new record(s)")
    assert run(capsys, *args)[1].startswith("0 new record(s)")


@pytest.mark.parametrize("argv, code", [
    (["construct", "--runs", "8", "--bogus"], 1),
    (["construct", "--runs", "12"], 1),
    (["construct", "--runs", "8", "--generators", "D=AX"], 1),
    (["search", "--runs", "64", "--factors", "7"], 1),
    (["evaluate", "/nonexistent/design.csv"], 2),
    (["report", "/nonexistent/log.jsonl"], 2),
    (["benchmark", "--offline", "--log", "x.jsonl"], 1),
    (["benchmark", "--provider", "nobody", "--log", "x.jsonl"], 3),
    ([], 1),
])
def test_error_exit_codes(capsys, argv, code):
    assert run(capsys, *argv)[0] == code


def test_missing_api_key_exit_code(capsys, tmp_path, monkeypatch):
    monkeypatch.delenv("OPENAI_API_KEY", raising=False)
    code, _, err = run(capsys, "benchmark", "--provider", "gpt", "--tasks", "8:4", "--replicates", "1",
                       "--log", str(tmp_path / "x.jsonl"))
    assert code == 3 and "OPENAI_API_KEY" in err


def test_evaluate_malformed_file(capsys, tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("nothing to see")
    code, _, err = run(capsys, "evaluate", str(bad))
    assert code == 2 and err.startswith("error:")


def test_fixtures_command(capsys, tmp_path):
    code, out, _ = run(capsys, "fixtures", str(tmp_path / "fx"), "--tasks", "8:4;16:5")
    assert code == 0 and "wrote 2" in out
    assert (tmp_path / "fx" / "n8_m4.txt").exists()


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "fracdesign", "construct", "--runs", "4"],
                          capture_output=True, text=True, check=True)
    assert proc.stdout.splitlines()[0] == "Run,A,B\\\\"
