import json
import subprocess
import sys

import pytest

from parachar.cli import main


def run(capsys, *args):
    with pytest.raises(SystemExit) as exc:
        main(list(args))
    out = capsys.readouterr().out.strip().splitlines()[-1]
    return exc.value.code, json.loads(out)


def test_group_info_for_the_swap_twist(capsys):
    code, rep = run(capsys, "group-info", "--twist", "swap")
    assert code == 0
    assert rep["order"] == 96 and rep["dim_G_r"] == 8
    assert rep["torus_order"] == 12 and rep["torus_very_regular"] == 8


def test_split_q2_has_no_very_regular_torus_elements(capsys):
    code, rep = run(capsys, "group-info")
    assert code == 0 and rep["torus_very_regular"] == 0


def test_output_is_deterministic(capsys):
    first = run(capsys, "char-list", "--q", "3")
    second = run(capsys, "char-list", "--q", "3")
    assert first == second


def test_module_errors_exit_one_with_json(capsys):
    code, rep = run(capsys, "dl-char", "--theta", "0,1")
    assert code == 1 and rep["error"] == "NoVeryRegularElement"


def test_usage_errors_exit_one(capsys):
    code, rep = run(capsys, "group-info", "--twist", "3,1")
    assert code == 1 and rep["error"] == "BadParameter"


def test_failed_verification_exits_two(capsys):
    code, rep = run(capsys, "verify", "oracle", "--tol", "0")
    assert code == 2 and rep["status"] == "FAIL"


@pytest.mark.parametrize(
    "args",
    [
        ["verify", "oracle"],
        ["verify", "bruhat"],
        ["verify", "idempotent"],
        ["verify", "fourier"],
        ["verify", "hc-support"],
        ["verify", "vreg-values", "--twist", "swap"],
        ["verify", "mackey", "--q", "3"],
    ],
)
def test_verifiers_pass(capsys, args):
    code, rep = run(capsys, *args)
    assert code == 0 and rep["status"] == "PASS"


def test_dl_character_report(capsys):
    code, rep = run(capsys, "char-list", "--twist", "swap", "--theta", "generic")
    theta = ",".join(map(str, rep[0]["theta"] if isinstance(rep, list) else rep["characters"][0]["theta"]))
    code, rep = run(capsys, "dl-char", "--twist", "swap", "--theta", theta)
    assert code == 0
    assert abs(rep["norm"] - 1) < 1e-6


def test_howe_commands(capsys):
    code, rep = run(capsys, "howe-factorize", "--q", "3", "--theta", "0,1,1,2")
    assert code == 0
    code, rep = run(capsys, "tower-induce", "--q", "3", "--theta", "0,1,1,2")
    assert code == 0


def test_csv_output(tmp_path, capsys):
    out = tmp_path / "table.csv"
    code, _ = run(capsys, "induce-split", "--theta", "0,1", "--out", str(out))
    assert code == 0
    lines = out.read_text().splitlines()
    assert len(lines) > 1 and "," in lines[0]


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "parachar", "group-info"], capture_output=True, text=True)
    assert res.returncode == 0 and json.loads(res.stdout)["order"] == 96
