import csv
import math
import re
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from twolevel.cli import main, run
from twolevel.config import parse_config

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array(rows[1:], dtype=float) if len(rows) > 1 else np.zeros((0, len(rows[0])))


def cli(*args):
    return main([str(a) for a in args])


def test_strobe_fig1a(tmp_path, capsys):
    out = tmp_path / "map.csv"
    assert cli("--config", CONFIGS / "fig1a.cfg", "--out", out) == 0
    summary = capsys.readouterr().out
    header, data = read_csv(out)
    assert header == ["series_id", "k", "q", "p", "H"]
    assert data.shape == (20 * 501, 5)
    assert f"points={len(data)}" in summary


@pytest.mark.parametrize("name", sorted(p.stem for p in CONFIGS.glob("*.cfg")))
def test_shipped_configs_run(name, tmp_path):
    out = tmp_path / f"{name}.out"
    assert cli("--config", CONFIGS / f"{name}.cfg", "--out", out) == 0
    assert out.exists()
    assert not list(tmp_path.glob(".*.tmp"))


def test_required_configs_present():
    for name in ("fig1a", "fig1b", "fig2", "rwa_scan", "lyapunov"):
        assert (CONFIGS / f"{name}.cfg").exists()


def test_not_search_summary(tmp_path, capsys):
    out = tmp_path / "search.csv"
    assert cli("--config", CONFIGS / "fig2_search.cfg", "--out", out) == 0
    summary = capsys.readouterr().out
    b0 = float(re.search(r"B0=([\d.]+)", summary).group(1))
    gamma = float(re.search(r"gamma=([\d.]+)", summary).group(1))
    assert 1.27 <= b0 <= 1.29 and 1.48 <= gamma <= 1.50
    header, data = read_csv(out)
    assert header == ["B0", "gamma", "residual"] and len(data) > 2
    report = (tmp_path / "search.report.txt").read_text()
    assert report.count("validate") == 5


def test_simulate_columns(tmp_path):
    out = tmp_path / "traj.csv"
    code = cli("simulate", "--out", out, "--field.kind=Constant", "--field.Bx=0", "--field.By=0", "--field.Bz=2", "--sim.q0=0", "--sim.t_end=pi")
    assert code == 0
    header, data = read_csv(out)
    assert header == ["t", "re_c_plus", "im_c_plus", "re_c_minus", "im_c_minus", "Sx", "Sy", "Sz", "energy"]
    t = data[:, 0]
    assert t[-1] == pytest.approx(math.pi)
    # precession about z: S = (cos 2t, -sin 2t, 0), energy -B.S = 0
    np.testing.assert_allclose(data[:, 5], np.cos(2 * t), atol=1e-12)
    np.testing.assert_allclose(data[:, 6], -np.sin(2 * t), atol=1e-12)
    np.testing.assert_allclose(data[:, 8], 0.0, atol=1e-12)
    np.testing.assert_allclose(data[:, 1] ** 2 + data[:, 2] ** 2 + data[:, 3] ** 2 + data[:, 4] ** 2, 1.0, atol=1e-12)


def test_fit_gamma_report(tmp_path, capsys):
    out = tmp_path / "g.txt"
    assert cli("--config", CONFIGS / "fig1a_gamma.cfg", "--out", out) == 0
    g = float(out.read_text().split()[1])
    assert g == pytest.approx(4.9559, abs=0.05)
    assert "gamma=4.95598" in capsys.readouterr().out


def test_deterministic_output(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["--config", CONFIGS / "lyapunov.cfg", "--lyap.periods=200", "--lyap.pairs=3", "--lyap.pair_periods=100"]
    assert cli(*args, "--out", a) == 0
    assert cli(*args, "--out", b, "--threads", 2) == 0
    assert a.read_bytes() == b.read_bytes()
    s1, s2 = tmp_path / "s1.csv", tmp_path / "s2.csv"
    assert cli("--config", CONFIGS / "fig2.cfg", "--out", s1) == 0
    assert cli("--config", CONFIGS / "fig2.cfg", "--out", s2, "--threads", 4) == 0
    assert s1.read_bytes() == s2.read_bytes()


def test_seed_changes_only_random_pairs(tmp_path, capsys):
    args = ["--config", CONFIGS / "lyapunov.cfg", "--lyap.periods=200", "--lyap.pairs=2", "--lyap.pair_periods=50"]
    cli(*args, "--out", tmp_path / "a.csv", "--seed=1")
    cli(*args, "--out", tmp_path / "b.csv", "--seed=2")
    lines = capsys.readouterr().out.splitlines()
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert len(lines) == 2 and all("max_D_drift" in line for line in lines)


def test_floats_round_trip(tmp_path):
    out = tmp_path / "r.csv"
    assert cli("--config", CONFIGS / "rwa_scan.cfg", "--out", out, "--rwa.B2T=0.2") == 0
    text = out.read_text().splitlines()[1]
    for field in text.split(","):
        assert repr(float(field)) == repr(float("%.17g" % float(field)))


def test_config_error_exit(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("command=strobe\nfield.kind=NRzDrive\nfield.omega=-1\n")
    assert cli("--config", bad, "--out", tmp_path / "x.csv") == 2
    err = capsys.readouterr().err
    assert err.startswith("error[config]") and "line 3" in err
    assert not (tmp_path / "x.csv").exists()


def test_unknown_flag_is_config_error(capsys):
    assert cli("strobe", "--config", CONFIGS / "fig1a.cfg", "positional") == 2
    assert cli("--config", CONFIGS / "fig1a.cfg", "--nosuch=1") == 2


def test_numeric_error_exit(tmp_path, capsys):
    out = tmp_path / "s.csv"
    code = cli("--config", CONFIGS / "fig2_search.cfg", "--out", out, "--search.B0_lo=0.5", "--search.B0_hi=1.0")
    assert code == 3
    assert capsys.readouterr().err.startswith("error[numeric]")
    assert list(tmp_path.iterdir()) == []


def test_unwritable_output(tmp_path, capsys):
    out = tmp_path / "missing" / "map.csv"
    assert cli("--config", CONFIGS / "fig1a.cfg", "--out", out, "--strobe.periods=5") == 4
    assert capsys.readouterr().err.startswith("error[io]")
    # a directory in the way of the final rename
    target = tmp_path / "taken"
    target.mkdir()
    (target / "keep").write_text("x")
    assert cli("--config", CONFIGS / "fig1a.cfg", "--out", target, "--strobe.periods=5") == 4
    assert sorted(p.name for p in tmp_path.iterdir()) == ["taken"]


def test_missing_config_file(tmp_path):
    assert cli("--config", tmp_path / "nope.cfg") == 4


def test_run_returns_status(tmp_path, capsys):
    cfg = parse_config((CONFIGS / "fig1b.cfg").read_text(), [("out", str(tmp_path / "m.csv")), ("strobe.periods", "10")])
    assert run(cfg) == 0
    assert "points=220" in capsys.readouterr().out


def test_console_entry_point(tmp_path):
    out = tmp_path / "m.csv"
    proc = subprocess.run(
        [sys.executable, "-m", "twolevel.cli", "--config", str(CONFIGS / "fig1a.cfg"), "--out", str(out), "--strobe.periods=3"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert proc.stdout.startswith("strobe: points=80")
