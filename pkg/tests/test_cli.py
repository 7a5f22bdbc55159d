import json
import subprocess
import sys
from pathlib import Path

import pytest

from troptorus.cli import main

ROOT = Path(__file__).resolve().parent.parent
N1 = str(ROOT / "problems" / "n1.json")
N2 = str(ROOT / "problems" / "n2.json")
BAD = str(ROOT / "problems" / "bad.json")


def run_cli(args, tmp_path, name="out.json"):
    out = tmp_path / name
    code = main(args + ["--out", str(out)])
    return code, (out.read_text() if out.exists() else "")


def test_triangulate_line(tmp_path):
    code, text = run_cli(
        ["triangulate", "--problem", N1, "--level", "0"], tmp_path
    )
    assert code == 0
    body = json.loads(text)
    assert len(body["cells"]) == 2
    assert text.endswith("\n")


def test_triangulate_plane_level0(tmp_path):
    code, text = run_cli(
        ["triangulate", "--problem", N2, "--level", "0"], tmp_path
    )
    assert code == 0
    assert len(json.loads(text)["cells"]) == 8


def test_triangulate_refined(tmp_path):
    code, text = run_cli(
        ["triangulate", "--problem", N1, "--level", "2"], tmp_path
    )
    assert code == 0
    assert len(json.loads(text)["cells"]) == 2 * 2 ** 2


def test_bad_rational_is_parse_error():
    assert main(["triangulate", "--problem", BAD]) == 2


def test_missing_file_is_parse_error():
    assert main(["triangulate", "--problem", "/nonexistent/p.json"]) == 2


def test_bad_version_is_parse_error(tmp_path):
    p = tmp_path / "v9.json"
    p.write_text('{"version": 9, "lattice": [["1/1"]], "gram": [["1/1"]]}')
    assert main(["triangulate", "--problem", str(p)]) == 2


def test_certify_pass_and_fail(tmp_path):
    code, text = run_cli(
        ["certify", "--problem", N1, "--epsilon", "1/8"], tmp_path
    )
    assert code == 0
    body = json.loads(text)
    assert body["passed"] is True
    assert body["min_slack"] == "1/4"

    code, text = run_cli(
        ["certify", "--problem", N2, "--epsilon", "0/1"], tmp_path, "f.json"
    )
    assert code == 5
    body = json.loads(text)
    assert body["passed"] is False
    assert body["witness_slack"] == "0/1"


def test_certify_auto(tmp_path):
    code, text = run_cli(
        ["certify", "--problem", N2, "--epsilon", "auto"], tmp_path
    )
    assert code == 0
    body = json.loads(text)
    assert body["passed"] is True
    assert body["epsilon"] == "1/16"


def test_tate_table_csv(tmp_path):
    code, text = run_cli(
        [
            "tate",
            "--problem",
            N1,
            "--iterations",
            "3",
            "--format",
            "csv",
        ],
        tmp_path,
        "t.csv",
    )
    assert code == 0
    lines = text.strip().splitlines()
    assert lines[0] == "i,sup_distance,ratio"
    assert lines[1] == "0,9/128,"
    assert lines[2] == "1,9/512,1/4"
    assert lines[4] == "3,9/8192,1/4"


def test_equidist_exit_and_report(tmp_path):
    p = tmp_path / "q.json"
    p.write_text(
        '{"version": 1, "lattice": [["1/1"]], "gram": [["1/1"]],'
        ' "equidist": {"test_level": 1, "grid_orders": [8, 16, 32]}}'
    )
    code, text = run_cli(["equidist", "--problem", str(p)], tmp_path)
    assert code == 0
    assert json.loads(text)["verdict"] == "pass"


def test_obstruction_exhaustion_is_search_failure(tmp_path):
    p = tmp_path / "q.json"
    p.write_text(
        '{"version": 1, "lattice": [["1/1"]], "gram": [["1/1"]],'
        ' "obstruction": {"denominator": 128, "witness_level": 1}}'
    )
    assert main(["obstruction", "--problem", str(p)]) == 4


def test_obstruction_report(tmp_path):
    code, text = run_cli(["obstruction", "--problem", N1], tmp_path)
    assert code == 0
    body = json.loads(text)
    assert body["verdict"] == "pass"
    assert body["bound"] == "1/4"


def test_collapse_exit(tmp_path):
    p = tmp_path / "q.json"
    p.write_text(
        '{"version": 1, "lattice": [["1/1"]], "gram": [["1/1"]],'
        ' "collapse": {"copies": 2, "deltas": ["1/4", "1/8"], "samples": 2000}}'
    )
    code, text = run_cli(["collapse", "--problem", str(p)], tmp_path)
    assert code == 0
    assert json.loads(text)["verdict"] == "pass"


@pytest.mark.parametrize(
    "args",
    [
        ["triangulate", "--problem", N1, "--level", "1"],
        ["certify", "--problem", N1, "--epsilon", "1/8"],
        ["tate", "--problem", N1, "--iterations", "2"],
        ["obstruction", "--problem", N1],
    ],
)
def test_byte_determinism(args, tmp_path):
    _, a = run_cli(args, tmp_path, "a.json")
    _, b = run_cli(args, tmp_path, "b.json")
    assert a == b and a


def test_collapse_byte_determinism(tmp_path):
    p = tmp_path / "q.json"
    p.write_text(
        '{"version": 1, "lattice": [["1/1"]], "gram": [["1/1"]],'
        ' "collapse": {"copies": 2, "deltas": ["1/4", "1/8"], "samples": 500}}'
    )
    args = ["collapse", "--problem", str(p), "--seed", "3"]
    _, a = run_cli(args, tmp_path, "a.json")
    _, b = run_cli(args, tmp_path, "b.json")
    assert a == b and a


def test_console_script_runs(tmp_path):
    proc = subprocess.run(
        [
            sys.executable,
            "-m",
            "troptorus.cli",
            "triangulate",
            "--problem",
            N1,
        ],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["cells"]
