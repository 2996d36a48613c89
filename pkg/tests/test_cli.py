import json
import subprocess
import sys

import pytest

from itoquad.cli import main, parse_step_range


def test_step_range():
    assert parse_step_range("3..6") == [3, 4, 5, 6]
    assert parse_step_range("3,5") == [3, 5]


def test_missing_integrand(tmp_path, capsys):
    assert main(["study", "--out", str(tmp_path / "s")]) == 2
    assert "usage" in capsys.readouterr().err


def test_bad_flag_exits_2():
    proc = subprocess.run(
        [sys.executable, "-m", "itoquad", "study", "--integrand", "sine:lambda=1", "--rule", "euler"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 2
    assert "usage" in proc.stderr


def test_bad_values_exit_2(tmp_path):
    out = str(tmp_path / "s")
    assert main(["study", "--integrand", "nope:x=1", "--out", out]) == 2
    assert main(["study", "--integrand", "sine:lambda=1", "--T", "1", "--samples", "1", "--out", out]) == 2
    assert main(["study", "--integrand", "poisson:a=1", "--rule", "trap", "--out", out]) == 2


def test_study_writes_csv_and_manifest(tmp_path, capsys):
    out = tmp_path / "run"
    args = ["study", "--integrand", "sine:lambda=42", "--steps", "3..6", "--samples", "40", "--seed", "7"]
    assert main(args + ["--out", str(out)]) == 0
    printed = capsys.readouterr().out
    assert "conf. interval" in printed and "EOC" in printed
    lines = (tmp_path / "run.csv").read_text().splitlines()
    assert lines[0] == "h,error,eoc,ci_low,ci_high"
    assert len(lines) == 5
    manifest = json.loads((tmp_path / "run.json").read_text())
    run = manifest["runs"][0]
    assert run["seed"] == 7
    assert run["config"]["samples"] == 40
    assert "wall_time" in run and "fitted_slope" in run

    assert main(["study", "--manifest", str(tmp_path / "run.json"), "--out", str(tmp_path / "again")]) == 0
    assert (tmp_path / "again.csv").read_bytes() == (tmp_path / "run.csv").read_bytes()


def test_seed_from_environment(tmp_path, monkeypatch):
    args = ["study", "--integrand", "jump:c=0.5", "--steps", "3..5", "--samples", "30"]
    monkeypatch.setenv("ITOQUAD_SEED", "19")
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    monkeypatch.delenv("ITOQUAD_SEED")
    assert main(args + ["--seed", "19", "--out", str(tmp_path / "b")]) == 0
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert json.loads((tmp_path / "a.json").read_text())["runs"][0]["seed"] == 19


def test_threads_do_not_change_output(tmp_path):
    args = ["study", "--integrand", "sine:lambda=42", "--steps", "3..5", "--samples", "50"]
    assert main(args + ["--threads", "1", "--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--threads", "2", "--out", str(tmp_path / "b")]) == 0
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_unknown_preset(tmp_path):
    assert main(["reproduce", "fig9", "--out", str(tmp_path)]) == 2


def test_reproduce_table1(tmp_path):
    assert main(["reproduce", "table1", "--samples", "30", "--out", str(tmp_path)]) == 0
    for rule in ("srm", "trap"):
        rows = (tmp_path / f"table1-{rule}.csv").read_text().splitlines()
        assert len(rows) == 11
        dat = (tmp_path / f"table1-{rule}.dat").read_text().splitlines()
        assert len(dat) == 11 and dat[0].startswith("#")
    assert "logscale" in (tmp_path / "table1.gp").read_text()
    manifest = json.loads((tmp_path / "table1.json").read_text())
    assert manifest["runs"][0]["config"]["integrand"] == "power:gamma=-0.3"


def test_reproduce_fig2_table2(tmp_path, capsys):
    assert main(["reproduce", "fig2-table2", "--samples", "30", "--out", str(tmp_path)]) == 0
    rows = (tmp_path / "fig2-table2-srm.csv").read_text().splitlines()
    assert len(rows) == 10
    assert rows[1].startswith("1.25,")
    assert "EOC" in capsys.readouterr().out


@pytest.mark.parametrize(
    "integrand, sigma, flagged",
    [("jump:c=0.5", "0.25", False), ("power:gamma=0.5", "0.95", False), ("power:gamma=-0.3", "0.5", True)],
)
def test_regularity(integrand, sigma, flagged, tmp_path, capsys):
    out = tmp_path / "report.json"
    args = ["regularity", "--integrand", integrand, "--sigma", sigma, "--p", "2", "--out", str(out)]
    assert main(args) == 0
    report = json.loads(out.read_text())
    assert report["diverged"] is flagged
    assert json.loads(capsys.readouterr().out) == report
    assert main(args + ["--require-finite"]) == (3 if flagged else 0)


def test_regularity_bad_sigma():
    assert main(["regularity", "--integrand", "jump:c=0.5", "--sigma", "1.0"]) == 2
