import json
import os

import numpy as np
import pytest

import monitored_ising as mi
from monitored_ising.cli import main, parse_config


def run_cli(args):
    return main(args)


def test_parse_minimal_config_file(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("command = noclick-point\nL = 64\nh = 0.2\ngamma = 1.0\n")
    resolved = parse_config(["--config", str(cfg)])
    assert resolved["command"] == "noclick-point"
    assert resolved["L"] == 64
    assert resolved["dt"] == 0.005  # defaults filled
    assert resolved["threads"] >= 1


def test_flag_overrides_file(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("command = noclick-point\nseed = 3\n")
    resolved = parse_config(["--config", str(cfg), "--seed", "7"])
    assert resolved["seed"] == 7


def test_rejects_negative_gamma(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("command = trajectory\ngamma = -1\n")
    with pytest.raises(mi.ConfigurationError, match="gamma >= 0"):
        parse_config(["--config", str(cfg)])


def test_rejects_unknown_key(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("command = trajectory\nbanana = 3\n")
    with pytest.raises(mi.ConfigurationError, match="banana"):
        parse_config(["--config", str(cfg)])


def test_missing_command_is_an_error():
    with pytest.raises(mi.ConfigurationError, match="command"):
        parse_config([])


def test_threads_env_fallback(tmp_path, monkeypatch):
    monkeypatch.setenv("MIPT_THREADS", "3")
    resolved = parse_config(["--command", "noclick-point"])
    assert resolved["threads"] == 3


def test_cli_error_is_machine_readable(tmp_path, capsys):
    code = run_cli(["--command", "noclick-point", "--gamma", "-2"])
    assert code == 2
    err = capsys.readouterr().err
    payload = json.loads(err.strip().splitlines()[-1])
    assert payload["error"] == "ConfigurationError"
    assert "gamma" in payload["message"]


def test_noclick_point_command(tmp_path, capsys):
    out = tmp_path / "point.json"
    code = run_cli(["--command", "noclick-point", "--L", "16", "--h", "0.2",
                    "--gamma", "1.0", "--format", "json", "--out", str(out),
                    "--anneal-restarts", "2", "--seed", "5"])
    assert code == 0
    payload = json.loads(out.read_text())
    assert payload["L"] == 16
    assert payload["fq_max"] > 0
    assert payload["entropy_ell"] == 4
    meta = json.loads((tmp_path / "point.json.meta.json").read_text())
    assert meta["config"]["command"] == "noclick-point"
    assert "wall_time_s" in meta


def test_trajectory_command_csv_reproducible(tmp_path):
    args = ["--command", "trajectory", "--L", "8", "--h", "0.2",
            "--gamma", "2.0", "--dt", "0.005", "--tmax", "0.5",
            "--sample-every", "0.25", "--seed", "3", "--format", "csv",
            "--anneal-restarts", "2"]
    out1 = tmp_path / "a.csv"
    out2 = tmp_path / "b.csv"
    assert run_cli(args + ["--out", str(out1)]) == 0
    assert run_cli(args + ["--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()  # byte-identical bodies
    lines = out1.read_text().splitlines()
    assert lines[0].startswith("time,")
    assert len(lines) == 1 + 3


def test_trajectory_command_json_schema(tmp_path):
    out = tmp_path / "traj.json"
    code = run_cli(["--command", "trajectory", "--L", "8", "--h", "0.2",
                    "--gamma", "2.0", "--tmax", "0.5", "--sample-every", "0.25",
                    "--seed", "3", "--format", "json", "--out", str(out),
                    "--anneal-restarts", "2"])
    assert code == 0
    rec = mi.TrajectoryRecord.from_json(out.read_text())
    assert rec.params.L == 8
    assert "entropy" in rec.observables


def test_ensemble_command_and_fit_roundtrip(tmp_path):
    out = tmp_path / "ens.csv"
    code = run_cli(["--command", "ensemble", "--L", "8", "--h", "0.2",
                    "--gamma", "2.0", "--tmax", "0.5", "--sample-every", "0.1",
                    "--trajectories", "3", "--seed", "1", "--out", str(out),
                    "--anneal-restarts", "2", "--threads", "1"])
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0].split(",")[0] == "time"
    meta = json.loads((str(out) + ".meta.json") and (tmp_path / "ens.csv.meta.json").read_text())
    assert meta["seeds"]["trajectory_indices"] == [0, 1, 2]
    # the ensemble table round-trips through the fit command
    fit_out = tmp_path / "fit.json"
    code = run_cli(["--command", "fit", "--in", str(out), "--x-col", "time",
                    "--y-col", "fq_density_mean", "--out", str(fit_out)])
    assert code == 0
    fit = json.loads(fit_out.read_text())
    assert "exponent" in fit and fit["n_points"] == len(lines) - 2  # t=0 dropped


def test_fit_command_on_scan_table(tmp_path):
    table = tmp_path / "scan.csv"
    sizes = np.array([16, 24, 32, 48, 64])
    rows = ["h,gamma,gamma_over_gc,L,fq_max,entropy,p,p_err"]
    for L in sizes:
        rows.append(f"0.2,1.0,,{L},{3.0 * L ** 0.5},{1.0},,")
    rows.append("0.2,1.0,,,,,0.5,0.01")  # summary row must be skipped
    table.write_text("\n".join(rows) + "\n")
    out = tmp_path / "fit.json"
    code = run_cli(["--command", "fit", "--in", str(table),
                    "--x-col", "L", "--y-col", "fq_max", "--out", str(out)])
    assert code == 0
    fit = json.loads(out.read_text())
    assert fit["exponent"] == pytest.approx(0.5, abs=1e-10)
    assert fit["n_points"] == 5


def test_fit_command_requires_input(capsys):
    assert run_cli(["--command", "fit"]) == 2
    err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert err["error"] == "ConfigurationError"


def test_fit_command_names_missing_column(tmp_path, capsys):
    table = tmp_path / "t.csv"
    table.write_text("a,b\n1,2\n")
    assert run_cli(["--command", "fit", "--in", str(table),
                    "--x-col", "L", "--y-col", "b"]) == 2
    err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert "L" in err["message"]


def test_correlators_command_vacuum(tmp_path):
    out = tmp_path / "corr.csv"
    code = run_cli(["--command", "correlators", "--L", "12", "--h", "0.2",
                    "--gamma", "1.0", "--out", str(out)])
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "alpha,beta,i,j,re,im"
    assert len(lines) == 1 + 5 * 12 * 12
    ct = tmp_path / "corr.ctilde.csv"
    assert ct.exists()
    assert ct.read_text().splitlines()[0] == "alpha,beta,ell,value"


def test_correlators_command_trajectory_source(tmp_path):
    out = tmp_path / "corr.csv"
    code = run_cli(["--command", "correlators", "--source", "trajectory",
                    "--L", "8", "--h", "0.2", "--gamma", "2.0",
                    "--dt", "0.005", "--tmax", "0.5", "--seed", "4",
                    "--out", str(out)])
    assert code == 0
    assert out.exists()


def test_noclick_scan_command(tmp_path):
    out = tmp_path / "scan.csv"
    code = run_cli(["--command", "noclick-scan", "--h-list", "0.2",
                    "--gamma-list", "0.5,6.0", "--sizes", "16,24,32,48",
                    "--seed", "2", "--anneal-restarts", "2", "--threads", "1",
                    "--out", str(out)])
    assert code == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 1 + 2 * 5
    # summary rows carry the fitted exponent; re-fit through the CLI agrees
    fit_out = tmp_path / "fit.json"
    assert run_cli(["--command", "fit", "--in", str(out), "--x-col", "L",
                    "--y-col", "fq_max", "--out", str(fit_out)]) == 0


def test_config_echo_and_artifacts(tmp_path, capsys):
    out = tmp_path / "p.csv"
    run_cli(["--command", "noclick-point", "--L", "16", "--h", "0.2",
             "--gamma", "1.0", "--anneal-restarts", "2", "--out", str(out)])
    echoed = capsys.readouterr().out
    assert echoed.startswith("config: ")
    cfg = json.loads(echoed.splitlines()[0][len("config: "):])
    assert cfg["command"] == "noclick-point"
    assert cfg["L"] == 16
