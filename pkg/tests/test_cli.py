import json

import pytest

from formsim import cli, config, scenarios


def run_cli(*argv):
    return cli.main([str(a) for a in argv])


@pytest.fixture
def short_a(tmp_path):
    doc = config.config_to_dict(scenarios.four_uav(duration=2.0))
    path = tmp_path / "a.json"
    path.write_text(json.dumps(doc))
    return path


def test_scenario_then_run(tmp_path):
    cfg = tmp_path / "a.json"
    assert run_cli("scenario", "paper-4uav", "--emit", cfg) == 0
    doc = json.loads(cfg.read_text())
    doc["duration"] = 1.0
    cfg.write_text(json.dumps(doc))
    out, met = tmp_path / "a.csv", tmp_path / "m.json"
    assert run_cli("run", "--config", cfg, "--out", out, "--metrics", met) == 0
    assert len(out.read_text().splitlines()) == 1 + 100 * 4
    assert json.loads(met.read_text())["tail_fraction"] == 0.25


def test_usage_errors(capsys):
    assert run_cli("fly") == 2
    assert run_cli("scenario", "no-such-scenario", "--emit", "x.json") == 2
    assert run_cli("run", "--config", "x.json") == 2
    assert run_cli("--help") == 0


def test_validation_error_exit(short_a, tmp_path, capsys):
    doc = json.loads(short_a.read_text())
    doc["dt"] = 0
    short_a.write_text(json.dumps(doc))
    assert run_cli("run", "--config", short_a, "--out", tmp_path / "o.csv") == 2
    assert "dt > 0" in capsys.readouterr().err
    assert not (tmp_path / "o.csv").exists()


def test_parse_error_exit(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    assert run_cli("run", "--config", bad, "--out", tmp_path / "o.csv") == 2
    assert "bad.json:1:" in capsys.readouterr().err


def test_missing_file_exit(tmp_path):
    assert run_cli("run", "--config", tmp_path / "none.json", "--out", tmp_path / "o.csv") == 1
    assert run_cli("metrics", "--log", tmp_path / "none.csv") == 1


def test_abort_exit(short_a, tmp_path, capsys):
    doc = json.loads(short_a.read_text())
    doc["initial_states"][0]["attitude"] = [0.0, 1.568, 0.0]
    doc["initial_states"][0]["rates"] = [0.0, 5.0, 0.0]
    short_a.write_text(json.dumps(doc))
    assert run_cli("run", "--config", short_a, "--out", tmp_path / "o.csv") == 3
    assert "GimbalLock" in capsys.readouterr().err


def test_metrics_and_plotdata(short_a, tmp_path, capsys):
    out = tmp_path / "a.csv"
    assert run_cli("run", "--config", short_a, "--out", out) == 0
    capsys.readouterr()
    assert run_cli("metrics", "--log", out, "--tail", "0.5") == 0
    report = json.loads(capsys.readouterr().out)
    assert report["tail_fraction"] == 0.5
    assert len(report["steady_state_max_error"]) == 4
    assert run_cli("plotdata", "--log", out, "--out", tmp_path / "plots") == 0
    assert (tmp_path / "plots" / "setpoints.csv").exists()


def test_metrics_on_empty_log(tmp_path):
    path = tmp_path / "e.csv"
    path.write_text("t,agent,x,y,z,vx,vy,vz,phi,theta,psi,p,q,r,xd,yd,err,flags\n")
    assert run_cli("metrics", "--log", path) == 2


def test_log_level_env(short_a, tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("FORMSIM_LOG_LEVEL", "info")
    doc = json.loads(short_a.read_text())
    doc["bias_schedule"].append({"t": 1.0, "biases": doc["bias_schedule"][0]["biases"]})
    short_a.write_text(json.dumps(doc))
    assert run_cli("run", "--config", short_a, "--out", tmp_path / "o.csv") == 0
    assert "switched to bias table" in capsys.readouterr().err
    monkeypatch.setenv("FORMSIM_LOG_LEVEL", "error")
    assert run_cli("run", "--config", short_a, "--out", tmp_path / "o.csv") == 0
    assert "switched" not in capsys.readouterr().err


@pytest.mark.slow
def test_scenario_a_tail_setpoint_peak(tmp_path, capsys):
    cfg, out = tmp_path / "a.json", tmp_path / "a.csv"
    assert run_cli("scenario", "paper-4uav", "--emit", cfg) == 0
    assert run_cli("run", "--config", cfg, "--out", out) == 0
    capsys.readouterr()
    assert run_cli("metrics", "--log", out, "--tail", "0.5") == 0
    report = json.loads(capsys.readouterr().out)
    assert report["tail_setpoint_peak"]["y"][0] == pytest.approx(5.0, abs=0.05)
