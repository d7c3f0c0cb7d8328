import json
import subprocess
import sys

import pytest

from treediff import __version__
from treediff.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, out


def run_json(capsys, *argv):
    code, out = run(capsys, *argv)
    return code, json.loads(out)


def test_verify_default_passes(capsys):
    code, report = run_json(capsys, "verify")
    assert code == 0
    statuses = {c["status"] for c in report["results"]["checks"]}
    assert statuses == {"pass"}
    assert report["version"] == __version__


def test_verify_exit_code_matches_failures(capsys):
    code, report = run_json(capsys, "verify", "--shape", "homogeneous:2")
    failed = [c for c in report["results"]["checks"] if c["status"] == "fail"]
    assert (code == 0) == (not failed)


def test_verify_shape_filter_skips_other_shapes(capsys):
    code, report = run_json(capsys, "verify", "--shape", "homogeneous:2")
    assert code == 0
    checks = report["results"]["checks"]
    skipped = [c for c in checks if c["status"] == "skipped"]
    assert skipped
    hardy = [c for c in checks if c["criterion"] == 6 and c["status"] == "pass"]
    assert hardy and all("q=2" in c["name"] for c in hardy)


def test_depth_zero_is_config_error(capsys):
    code, _ = run(capsys, "verify", "--depth", "0")
    assert code == 2


@pytest.mark.parametrize(
    "argv",
    [
        ["norm", "--space", "sobolev", "--function", "chi:[0]"],
        ["norm", "--function", "nofile.json"],
        ["norm", "--function", "chi:[0]", "--op", "Q"],
        ["parse", "1+"],
        ["alpha", "--shape", "star:2"],
        ["eigen", "--lambda", "1,2,3"],
        ["norm", "--function", "expr:M*n"],
    ],
)
def test_config_errors(capsys, argv):
    code, _ = run(capsys, *argv)
    assert code == 2


def test_unbounded_weight_exits_numeric(capsys):
    code, _ = run(capsys, "spectrum", "--space", "weighted:expr:ifodd(n,1)", "--cap", "10", "--depth", "12")
    assert code == 3


def test_matrix_cap_exits_numeric(capsys):
    code, _ = run(capsys, "matrix", "--shape", "homogeneous:3", "--depth", "9", "--max-dim", "100")
    assert code == 3


@pytest.mark.parametrize(
    "argv, ratio",
    [
        (["--space", "lipschitz", "--function", "chi:[0,1]"], 2),
        (["--space", "hardy:q=2,p=2", "--shape", "homogeneous:2", "--function", "hardy-witness"], 2),
        (["--space", "weighted:expr:pow(M-1,n)", "--param", "M=1.5", "--function", "alt-witness"], 1.5),
    ],
)
def test_norm_examples(capsys, argv, ratio):
    code, report = run_json(capsys, "norm", "--op", "D", "--depth", "5", *argv)
    assert code == 0
    assert abs(report["results"]["ratio"] - ratio) <= 1e-12
    assert report["results"]["certified"] is True


def test_norm_reads_function_file(capsys, tmp_path):
    path = tmp_path / "f.json"
    path.write_text(json.dumps({"kind": "radial", "values": [[-1, 0], [1, 0]], "tail": [0, 0]}))
    code, report = run_json(capsys, "norm", "--space", "hardy:q=2,p=1", "--function", str(path), "--depth", "4")
    assert code == 0
    assert report["results"]["ratio"] == 2


def test_alpha_values(capsys):
    code, report = run_json(capsys, "alpha", "--q", "2", "--depth", "12")
    assert code == 0
    values = report["results"]["alpha"]
    assert len(values) == 12 and all(v == 1.0 for v in values)


def test_eigen_and_spectrum(capsys):
    code, report = run_json(capsys, "eigen", "--lambda", "1,0", "--depth", "8", "--space", "lipschitz")
    assert code == 0 and report["results"]["verdict"] == "OnlyZeroFunction"
    code, report = run_json(capsys, "spectrum", "--space", "lipschitz")
    assert code == 0
    assert report["results"]["exact"] == {"center": [1.0, 0.0], "radius": 1.0}


def test_matrix_output(capsys):
    code, report = run_json(capsys, "matrix", "--op", "Cb", "--depth", "1", "--shape", "homogeneous:2")
    assert code == 0
    assert report["results"]["diagonal"] == [1.0, 0.0, 0.0, 0.0]


def test_parse_command(capsys):
    code, report = run_json(capsys, "parse", "--", "-n^2")
    assert code == 0 and report["results"]["canonical"] == "(-(n^2))"


@pytest.mark.parametrize(
    "argv",
    [
        ["verify"],
        ["norm", "--space", "lipschitz", "--function", "chi:[0,1]", "--format", "tsv"],
        ["spectrum", "--space", "hardy:q=3,p=2", "--shape", "homogeneous:3", "--format", "human"],
        ["matrix", "--op", "D", "--depth", "2"],
    ],
)
def test_reports_are_deterministic(capsys, argv):
    first = run(capsys, *argv)
    second = run(capsys, *argv)
    assert first == second


def test_formats(capsys):
    code, out = run(capsys, "norm", "--space", "lipschitz", "--function", "chi:[0,1]", "--format", "tsv", "--depth", "3")
    assert code == 0
    assert "depth\tvalue\twitness\tattained" in out
    code, out = run(capsys, "verify", "--format", "human")
    assert code == 0 and "pass" in out


def test_output_file(capsys, tmp_path):
    path = tmp_path / "report.json"
    code, out = run(capsys, "alpha", "--depth", "3", "--output", str(path))
    assert code == 0 and out == ""
    assert json.loads(path.read_text())["command"] == "alpha"


def test_timing_flag_adds_wall_time(capsys):
    _, report = run_json(capsys, "alpha", "--depth", "3", "--timing")
    assert "wall_time" in report
    _, report = run_json(capsys, "alpha", "--depth", "3")
    assert "wall_time" not in report


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "treediff", "parse", "pow(M-1,n)"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["results"]["canonical"] == "pow((M-1),n)"
