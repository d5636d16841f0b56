import csv
import io
import math
import subprocess
import sys

import pytest

from cavtele import checks, cli
from cavtele.config import ConfigError, RunConfig, dump_config, load_config, parse_config_text


def _read(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_parse_config_text_and_comments():
    vals = parse_config_text("# header\nkappa_mhz = 3.8  # inline\n\ndetector = conventional\nn_traj = 0x10\n")
    assert vals == {"kappa_mhz": 3.8, "detector": "conventional", "n_traj": 16}


@pytest.mark.parametrize(
    "text, msg",
    [
        ("foo = 1", "unknown"),
        ("eta = 1.5", "eta"),
        ("eta = nan", "finite"),
        ("n_traj = 2.5", "integer"),
        ("detector = pmt", "detector"),
        ("kappa_mhz", "key = value"),
        ("seed = 1\nseed = 2", "duplicate"),
        ("n_states = 0", "n_states"),
    ],
)
def test_config_rejections(text, msg):
    with pytest.raises(ConfigError, match=msg):
        parse_config_text(text)


def test_dump_roundtrip(tmp_path):
    cfg = RunConfig(kappa_mhz=3.8, detector="conventional", t_a_us=0.1)
    path = tmp_path / "run.cfg"
    path.write_text(dump_config(cfg))
    assert load_config(path) == cfg


def test_overrides_win_and_missing_file(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("eta = 0.5\n")
    assert load_config(path, {"eta": "0.25"}).eta == 0.25
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "missing.cfg")


def test_prep_click_rule_reaches_detector_model():
    assert RunConfig().detector_model().reject_prep_clicks
    assert not load_config(None, {"prep_clicks": "count"}).detector_model().reject_prep_clicks
    with pytest.raises(ConfigError):
        load_config(None, {"prep_clicks": "maybe"})


def test_schedule_overrides():
    cfg = RunConfig(t_a_us=0.1058, t_b_us=0.0131)
    s = cfg.schedule()
    assert (s.t_A, s.t_B) == (0.1058, 0.0131)
    assert RunConfig(t_b_us=0.02).schedule().t_B == 0.02


def test_fmt():
    assert cli.fmt(1 / 3) == "0.333333333333"
    assert cli.fmt(math.nan) == "nan"
    assert cli.fmt(True) == "true" and cli.fmt(7) == "7"
    assert float(cli.fmt(0.1 + 0.2)) == pytest.approx(0.3, rel=1e-12)


def test_check_default_passes(tmp_path):
    out = tmp_path / "check.csv"
    assert cli.main(["check", "--out", str(out)]) == 0
    rows = _read(out)
    assert rows and all(r["status"] == "pass" for r in rows)
    assert {r["check"] for r in rows} >= {"compensation_identity", "channel_completeness"}


def test_check_failure_exit_code(tmp_path, monkeypatch):
    monkeypatch.setattr(checks, "run_checks", lambda p: [checks.CheckResult("broken", 1.0, 1e-3)])
    assert cli.main(["check", "--out", str(tmp_path / "c.csv")]) == 3


def test_overdamped_is_rejected(tmp_path, caplog):
    assert cli.main(["check", "--kappa-mhz", "500", "--out", str(tmp_path / "c.csv")]) == 2
    assert "overdamped" in caplog.text


def test_config_error_exit_code(tmp_path, caplog):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("eta = 0.5\nbogus = 1\n")
    assert cli.main(["estimate", "--config", str(cfg)]) == 2
    assert "unknown config key" in caplog.text
    assert cli.main(["sweep-eta", "--eta-max", "2"]) == 2


def test_gamma_warning_for_analytic_backend(tmp_path, caplog):
    assert cli.main(["estimate", "--gamma-mhz", "2.6", "--out", str(tmp_path / "e.csv")]) == 0
    assert "ignored by the analytic backend" in caplog.text


def test_sweep_kappa(tmp_path):
    out = tmp_path / "k.csv"
    args = ["sweep-kappa", "--delta-mhz", "100", "--kappa-min", "0", "--kappa-max", "7.6", "--steps", "3", "--out", str(out)]
    assert cli.main(args) == 0
    rows = _read(out)
    assert list(rows[0]) == ["kappa_mhz", "fidelity_modified", "fidelity_original", "psuc_modified", "psuc_original"]
    assert float(rows[0]["fidelity_original"]) == pytest.approx(1.0)
    assert float(rows[1]["psuc_modified"]) == pytest.approx(0.00481218870447, rel=1e-9)
    assert float(rows[1]["fidelity_modified"]) == pytest.approx(1.0, abs=1e-10)
    assert float(rows[1]["fidelity_original"]) <= 2 / 3
    assert rows[2]["fidelity_modified"] == "nan"  # 7.6 MHz is overdamped here


def test_sweep_eta_analytic(tmp_path):
    out = tmp_path / "eta.csv"
    assert cli.main(["sweep-eta", "--eta-min", "0.0001", "--eta-max", "1", "--steps", "3", "--out", str(out)]) == 0
    rows = _read(out)
    assert float(rows[0]["fbar_conventional"]) == pytest.approx(0.794, abs=0.005)
    assert float(rows[-1]["fbar_resolving"]) == 1.0


def test_sweep_eta_trajectory_columns(tmp_path):
    out = tmp_path / "eta.csv"
    args = ["sweep-eta", "--backend", "trajectory", "--model", "adiabatic", "--n-traj", "20", "--n-states", "2",
            "--eta-min", "1", "--eta-max", "1", "--steps", "1", "--out", str(out)]
    assert cli.main(args) == 0
    row = _read(out)[0]
    assert {"fbar_resolving_traj_se", "psuc_conventional_traj"} <= set(row)


def test_estimate_is_byte_identical(tmp_path):
    args = ["estimate", "--backend", "trajectory", "--gamma-mhz", "2.6", "--eta", "0.5", "--dark-rate-hz", "1000",
            "--detector", "conventional", "--n-traj", "40", "--n-states", "4", "--seed", "9"]
    a, b, c = tmp_path / "a.csv", tmp_path / "b.csv", tmp_path / "c.csv"
    assert cli.main(args + ["--out", str(a)]) == 0
    assert cli.main(args + ["--out", str(b)]) == 0
    assert cli.main(args + ["--workers", "2", "--out", str(c)]) == 0
    assert a.read_bytes() == b.read_bytes() == c.read_bytes()
    row = _read(a)[0]
    assert int(row["n_trajectories"]) == 160


def test_csv_roundtrip(tmp_path):
    out = tmp_path / "eta.csv"
    cli.main(["sweep-eta", "--steps", "5", "--out", str(out)])
    text = out.read_text()
    rows = list(csv.reader(io.StringIO(text)))
    buf = io.StringIO()
    cli.write_csv(buf, rows[0], [[float(v) for v in r] for r in rows[1:]])
    assert buf.getvalue() == text


def test_optimize_small(tmp_path):
    out, hist = tmp_path / "o.csv", tmp_path / "h.csv"
    args = ["optimize", "--model", "adiabatic", "--n-traj-per-eval", "30", "--n-states-per-eval", "2", "--max-evals", "6",
            "--out", str(out), "--history", str(hist)]
    assert cli.main(args) == 0
    row = _read(out)[0]
    assert row["improved"] in ("true", "false")
    assert 1 <= len(_read(hist)) <= 6
    assert cli.main(["optimize", "--tol-time", "0"]) == 2


def test_stdout_and_module_entry():
    res = subprocess.run([sys.executable, "-m", "cavtele", "sweep-kappa", "--steps", "2"],
                         capture_output=True, text=True, check=True)
    assert res.stdout.startswith("kappa_mhz,")
    assert len(res.stdout.strip().splitlines()) == 3
