import json
import subprocess
import sys

import pytest

from origami.cli import main
from origami.io import dist_to_json
from origami.dist import origami
from fractions import Fraction as F


def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr()


def test_build(capsys):
    code, out = run(capsys, "build", "--rounds", "2", "--bias", "1/3")
    obj = json.loads(out.out)
    assert code == 0
    assert len(obj["distribution"]["events"]) == 16
    assert obj["ascii"][2] == "0 | 0 · · 1 4 · · 5"
    assert obj["config"]["bias"] == "1/3"


def test_build_ascii(capsys):
    code, out = run(capsys, "build", "--rounds", "1", "--bias", "1/2", "--format", "ascii")
    assert code == 0 and out.out.splitlines()[-1] == "3 | · · 3 2"


def test_verify_structure(capsys):
    code, out = run(capsys, "verify-structure", "--rounds", "5", "--bias", "1/3")
    assert code == 0 and json.loads(out.out)["verdict"] == "PASS"


def test_run_lopc_verdicts(capsys):
    assert run(capsys, "run-lopc", "--rounds", "3", "--bias", "1/2", "--target", "1/4", "--starter", "bob")[0] == 0
    code, out = run(capsys, "run-lopc", "--rounds", "2", "--bias", "1/3")
    assert code == 1 and "key–Z dependence" in out.out
    assert run(capsys, "run-lopc", "--rounds", "2", "--bias", "1/3", "--mode", "blockwise")[0] == 0
    assert run(capsys, "run-lopc", "--rounds", "2", "--bias", "1/3", "--align")[0] == 0
    assert run(capsys, "run-lopc", "--rounds", "2", "--bias", "1/2", "--starter", "bob")[0] == 1


def test_run_locc(capsys):
    code, out = run(capsys, "run-locc", "--rounds", "2", "--bias", "1/2", "--target", "1/4")
    assert code == 0 and json.loads(out.out)["rank_drops"] == 0


def test_other_commands(capsys):
    code, out = run(capsys, "secrecy-rank", "--rounds", "2")
    assert code == 0 and json.loads(out.out)["secrecy_rank"] == 2
    assert run(capsys, "monotone-suite", "--trials", "20", "--seed", "1")[0] == 0
    code, out = run(capsys, "search-one-round", "--bias", "1/2", "--starter", "bob")
    assert code == 0 and json.loads(out.out)["search"]["passing"] == [[[0, 1], [2, 3]]]
    assert run(capsys, "prop4-search", "--trials", "100")[0] == 0


def test_reports_are_deterministic(capsys):
    a = run(capsys, "prop4-search", "--trials", "30", "--seed", "4")[1].out
    b = run(capsys, "prop4-search", "--trials", "30", "--seed", "4")[1].out
    assert a == b


def test_roundtrip_and_output(tmp_path, capsys):
    src = tmp_path / "b3.json"
    src.write_text(dist_to_json(origami(3, F(1, 3))))
    dst = tmp_path / "out.json"
    assert run(capsys, "roundtrip", "--input", str(src), "--output", str(dst))[0] == 0
    assert dst.read_text() == src.read_text() + "\n"
    bad = tmp_path / "bad.json"
    bad.write_text(src.read_text().replace('"1/48"', '"2/48"', 1))
    code, out = run(capsys, "roundtrip", "--input", str(bad))
    assert code == 64 and "error" in out.err


@pytest.mark.parametrize("argv", [
    ["build", "--bias", "0.5"],
    ["build", "--bias", "2/3"],
    ["frobnicate"],
    ["run-lopc", "--starter", "eve"],
    ["roundtrip", "--input", "/nonexistent/file.json"],
])
def test_usage_errors(argv, capsys):
    with pytest.raises(SystemExit) as exc:
        code = main(argv)
        raise SystemExit(code)
    assert exc.value.code == 64


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "origami", "build", "--bias", "x"], capture_output=True, text=True)
    assert proc.returncode == 64


def test_missing_input_is_usage_error(tmp_path, capsys):
    assert run(capsys, "secrecy-rank", "--input", str(tmp_path / "none.json"))[0] == 64
    assert run(capsys, "monotone-suite", "--suite-config", str(tmp_path / "none.json"))[0] == 64


def test_suite_config_file(tmp_path, capsys):
    cfg = tmp_path / "suite.json"
    cfg.write_text('{"trials": 10, "seed": 2, "x_size": 2, "y_size": 3, "z_size": 2, "msg_size": 2}')
    code, out = run(capsys, "monotone-suite", "--suite-config", str(cfg))
    assert code == 0 and json.loads(out.out)["suite"]["counts"]["PASS"] == 10
