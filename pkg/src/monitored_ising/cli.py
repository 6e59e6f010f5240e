"""Command-line entry point: config resolution, execution, exports.

Commands: noclick-scan | noclick-point | trajectory | ensemble | fit |
correlators.  Options come from an optional flat key=value config file
overridden by command-line flags; every run echoes its fully resolved
configuration and writes a metadata sidecar next to the outputs.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import time as _time

import numpy as np

from . import __version__
from .analysis import ensemble_summary, fit_power_law
from .correlators import correlation_tensor, ctilde_profile, ctilde_to_csv, tensor_to_csv
from .dynamics import evolve_trajectory, trajectory_rng
from .ensemble import ObservableConfig, run_ensemble, run_one_trajectory
from .errors import ConfigurationError, ParameterError, SimulationError
from .noclick import ScanSpec, noclick_observables, scan_phase_diagram
from .qfi import AnnealSchedule
from .spectral import ModelParams, critical_rate

COMMANDS = ("noclick-scan", "noclick-point", "trajectory", "ensemble",
            "fit", "correlators")

# key: (parser, constraint text, validator)
_SCHEMA = {
    "command": (str, f"one of {', '.join(COMMANDS)}", lambda v: v in COMMANDS),
    "L": (int, "even integer >= 4", lambda v: v >= 4 and v % 2 == 0),
    "h": (float, "finite float", lambda v: np.isfinite(v)),
    "gamma": (float, "gamma >= 0", lambda v: v >= 0),
    "dt": (float, "dt > 0", lambda v: v > 0),
    "tmax": (float, "tmax > 0", lambda v: v > 0),
    "sample_every": (float, "sample_every > 0", lambda v: v > 0),
    "trajectories": (int, "trajectories >= 1", lambda v: v >= 1),
    "seed": (int, "integer", lambda v: True),
    "out": (str, "path", lambda v: bool(v)),
    "format": (str, "csv or json", lambda v: v in ("csv", "json")),
    "threads": (int, "threads >= 1", lambda v: v >= 1),
    "ell": (int, "ell >= 1", lambda v: v >= 1),
    "anneal_restarts": (int, "anneal_restarts >= 1", lambda v: v >= 1),
    "sizes": ("int_list", "comma-separated even integers", lambda v: len(v) > 0),
    "h_list": ("float_list", "comma-separated floats", lambda v: len(v) > 0),
    "gamma_list": ("float_list", "comma-separated floats", lambda v: len(v) > 0),
    "fit_min": (float, "float", lambda v: True),
    "fit_max": (float, "float", lambda v: True),
    "x_col": (str, "column name", lambda v: bool(v)),
    "y_col": (str, "column name", lambda v: bool(v)),
    "in_path": (str, "path", lambda v: bool(v)),
    "source": (str, "vacuum or trajectory", lambda v: v in ("vacuum", "trajectory")),
}

_DEFAULTS = {
    "command": None,
    "L": 64,
    "h": 0.2,
    "gamma": 1.0,
    "dt": 0.005,
    "tmax": 20.0,
    "sample_every": 1.0,
    "trajectories": 10,
    "seed": 0,
    "out": None,
    "format": "csv",
    "threads": None,  # resolved from MIPT_THREADS / cpu count
    "ell": None,      # entropy subsystem, default L // 4
    "anneal_restarts": 8,
    "sizes": None,
    "h_list": None,
    "gamma_list": None,
    "fit_min": None,
    "fit_max": None,
    "x_col": "L",
    "y_col": "fq_max",
    "in_path": None,
    "source": "vacuum",
}


def _parse_value(key: str, raw: str):
    kind, constraint, check = _SCHEMA[key]
    try:
        if kind is int:
            value = int(raw)
        elif kind is float:
            value = float(raw)
        elif kind == "int_list":
            value = [int(x) for x in str(raw).split(",") if x.strip()]
        elif kind == "float_list":
            value = [float(x) for x in str(raw).split(",") if x.strip()]
        else:
            value = str(raw)
    except ValueError:
        raise ConfigurationError(
            f"key '{key}': cannot parse {raw!r}, expected {constraint}")
    if not check(value):
        raise ConfigurationError(f"key '{key}': constraint violated, expected {constraint}")
    return value


def _read_config_file(path: str) -> dict:
    if not os.path.exists(path):
        raise ConfigurationError(f"config file not found: {path}")
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigurationError(
                    f"{path}:{lineno}: expected 'key = value', got {line!r}")
            key, raw = (s.strip() for s in line.split("=", 1))
            key = key.replace("-", "_")
            if key == "in":
                key = "in_path"
            if key not in _SCHEMA:
                raise ConfigurationError(f"{path}:{lineno}: unknown key '{key}'")
            out[key] = _parse_value(key, raw)
    return out


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="monitored-ising",
        description="Monitored transverse-field Ising chain: no-click phase "
                    "diagram, quantum-jump trajectories, Pfaffian correlators, "
                    "entanglement entropy and QFI scaling.")
    p.add_argument("--config", help="flat key = value config file (flags override)")
    p.add_argument("--command", choices=COMMANDS)
    p.add_argument("--L", type=int)
    p.add_argument("--h", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--dt", type=float)
    p.add_argument("--tmax", type=float)
    p.add_argument("--sample-every", dest="sample_every", type=float)
    p.add_argument("--trajectories", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--threads", type=int)
    p.add_argument("--ell", type=int, help="entropy subsystem length (default L/4)")
    p.add_argument("--anneal-restarts", dest="anneal_restarts", type=int)
    p.add_argument("--sizes", help="comma-separated chain sizes for scans")
    p.add_argument("--h-list", dest="h_list", help="comma-separated h grid")
    p.add_argument("--gamma-list", dest="gamma_list", help="comma-separated gamma grid")
    p.add_argument("--fit-min", dest="fit_min", type=float)
    p.add_argument("--fit-max", dest="fit_max", type=float)
    p.add_argument("--x-col", dest="x_col")
    p.add_argument("--y-col", dest="y_col")
    p.add_argument("--in", dest="in_path", help="input table for the fit command")
    p.add_argument("--source", choices=("vacuum", "trajectory"),
                   help="correlators command: no-click vacuum or a trajectory endpoint")
    return p


def parse_config(argv=None) -> dict:
    """Resolve defaults < config file < explicit flags into a validated dict."""
    args = _build_parser().parse_args(argv)
    resolved = dict(_DEFAULTS)
    if args.config:
        resolved.update(_read_config_file(args.config))
    for key in _SCHEMA:
        val = getattr(args, key, None)
        if val is None:
            continue
        if isinstance(val, str):
            resolved[key] = _parse_value(key, val)
        else:
            _, constraint, check = _SCHEMA[key]
            if not check(val):
                raise ConfigurationError(
                    f"key '{key}': constraint violated, expected {constraint}")
            resolved[key] = val
    if resolved["command"] is None:
        raise ConfigurationError(
            f"key 'command': required, one of {', '.join(COMMANDS)}")
    if resolved["threads"] is None:
        env = os.environ.get("MIPT_THREADS")
        resolved["threads"] = (_parse_value("threads", env) if env
                               else (os.cpu_count() or 1))
    return resolved


def _fit_window(cfg):
    if cfg["fit_min"] is None and cfg["fit_max"] is None:
        return None
    lo = cfg["fit_min"] if cfg["fit_min"] is not None else -np.inf
    hi = cfg["fit_max"] if cfg["fit_max"] is not None else np.inf
    return (lo, hi)


def _write_csv(path, header, rows):
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join("" if v is None else
                              (repr(v) if isinstance(v, float) else str(v))
                              for v in row) + "\n")


def _read_csv(path):
    with open(path, encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    header = lines[0].split(",")
    rows = [ln.split(",") for ln in lines[1:]]
    return header, rows


def _sidecar(out_path, cfg, wall, extra=None):
    meta = {
        "version": __version__,
        "config": {k: v for k, v in cfg.items()},
        "wall_time_s": wall,
    }
    if extra:
        meta.update(extra)
    with open(str(out_path) + ".meta.json", "w") as fh:
        json.dump(meta, fh, indent=1, default=str)


def _params(cfg) -> ModelParams:
    return ModelParams(L=cfg["L"], h=cfg["h"], gamma=cfg["gamma"])


def _cmd_noclick_point(cfg):
    point = noclick_observables(_params(cfg), ell=cfg["ell"],
                                restarts=cfg["anneal_restarts"],
                                seed=cfg["seed"])
    try:
        ggc = cfg["gamma"] / critical_rate(cfg["h"])
    except SimulationError:
        ggc = None
    payload = {
        "h": cfg["h"], "gamma": cfg["gamma"], "gamma_over_gc": ggc,
        "L": cfg["L"], "fq_max": point.qfi.value, "fq_density": point.qfi.density,
        "entropy": point.entropy, "entropy_ell": point.entropy_ell,
        "anneal_restarts": point.qfi.restarts,
        "accepted_fraction": point.qfi.accepted_fraction,
        "seed": cfg["seed"],
    }
    out = cfg["out"] or "noclick_point." + cfg["format"]
    if cfg["format"] == "json":
        with open(out, "w") as fh:
            json.dump(payload, fh, indent=1)
    else:
        keys = list(payload)
        _write_csv(out, keys, [[payload[k] for k in keys]])
    return out, {}


def _cmd_noclick_scan(cfg):
    hs = cfg["h_list"] or [cfg["h"]]
    gs = cfg["gamma_list"] or [cfg["gamma"]]
    sizes = cfg["sizes"] or list(range(40, 171, 10))
    spec = ScanSpec(points=tuple((h, g) for h in hs for g in gs),
                    sizes=tuple(sizes), fit_window=_fit_window(cfg),
                    seed=cfg["seed"], restarts=cfg["anneal_restarts"])
    result = scan_phase_diagram(spec, threads=cfg["threads"])
    out = cfg["out"] or "noclick_scan.csv"
    if cfg["format"] == "json":
        payload = {
            "points": [{"h": h, "gamma": g,
                        "p": result.fits[(h, g)].exponent if (h, g) in result.fits else None,
                        "p_err": result.fits[(h, g)].stderr if (h, g) in result.fits else None}
                       for (h, g) in spec.points],
            "rows": [{"h": r.h, "gamma": r.gamma, "L": r.L,
                      "fq_max": r.fq_max, "entropy": r.entropy}
                     for r in result.rows],
            "failures": {f"{k}": v for k, v in result.failures.items()},
        }
        with open(out, "w") as fh:
            json.dump(payload, fh, indent=1)
    else:
        result.to_csv(out)
    return out, {"failures": {f"{k}": v for k, v in result.failures.items()}}


def _trajectory_record(cfg, index=0):
    obs = ObservableConfig(entropy=True, entropy_ell=cfg["ell"], qfi=True,
                           anneal_restarts=cfg["anneal_restarts"])
    return run_one_trajectory(_params(cfg), cfg["dt"], cfg["tmax"],
                              cfg["sample_every"], cfg["seed"], index, obs)


def _cmd_trajectory(cfg):
    record = _trajectory_record(cfg)
    out = cfg["out"] or "trajectory." + cfg["format"]
    if cfg["format"] == "json":
        with open(out, "w") as fh:
            fh.write(record.to_json())
    else:
        names = list(record.observables)
        header = ["time"] + names + ["n_jumps_so_far"]
        jump_times = np.array([j.time for j in record.jumps])
        rows = []
        for i, t in enumerate(record.sample_times):
            rows.append([t] + [record.observables[n][i] for n in names]
                        + [int((jump_times <= t + 1e-12).sum())])
        _write_csv(out, header, rows)
    return out, {"seeds": {"master": cfg["seed"], "trajectory_indices": [0]},
                 "n_jumps": len(record.jumps)}


def _cmd_ensemble(cfg):
    obs = ObservableConfig(entropy=True, entropy_ell=cfg["ell"], qfi=True,
                           anneal_restarts=cfg["anneal_restarts"])
    records = run_ensemble(_params(cfg), cfg["dt"], cfg["tmax"],
                           cfg["sample_every"], cfg["trajectories"],
                           cfg["seed"], obs, threads=cfg["threads"])
    summary = ensemble_summary(records)
    out = cfg["out"] or "ensemble." + cfg["format"]
    if cfg["format"] == "json":
        with open(out, "w") as fh:
            json.dump(summary.as_dict(), fh, indent=1)
    else:
        names = list(summary.means)
        header = ["time"]
        for n in names:
            header += [f"{n}_mean", f"{n}_stderr"]
        rows = []
        for i, t in enumerate(summary.sample_times):
            row = [float(t)]
            for n in names:
                row += [float(summary.means[n][i]), float(summary.stderrs[n][i])]
            rows.append(row)
        _write_csv(out, header, rows)
    extra = {
        "seeds": {"master": cfg["seed"],
                  "trajectory_indices": list(range(cfg["trajectories"]))},
        "stationary_mean": summary.stationary_mean,
        "stationary_stderr": summary.stationary_stderr,
        "stationary_window": list(summary.stationary_window),
    }
    return out, extra


def _cmd_fit(cfg):
    if not cfg["in_path"]:
        raise ConfigurationError("key 'in': required for the fit command")
    header, rows = _read_csv(cfg["in_path"])
    for col in (cfg["x_col"], cfg["y_col"]):
        if col not in header:
            raise ConfigurationError(
                f"key 'x_col'/'y_col': column '{col}' not in {cfg['in_path']} "
                f"(columns: {', '.join(header)})")
    xi, yi = header.index(cfg["x_col"]), header.index(cfg["y_col"])
    xs, ys = [], []
    for row in rows:
        if xi < len(row) and yi < len(row) and row[xi] and row[yi]:
            try:
                x, y = float(row[xi]), float(row[yi])
            except ValueError:
                continue
            if x > 0 and y > 0:  # only log-log-fittable rows
                xs.append(x)
                ys.append(y)
    fit = fit_power_law(xs, ys, window=_fit_window(cfg))
    payload = {"x_col": cfg["x_col"], "y_col": cfg["y_col"],
               "n_points": len(xs), **fit.as_dict()}
    out = cfg["out"]
    if out:
        with open(out, "w") as fh:
            json.dump(payload, fh, indent=1)
    else:
        out = "-"
        print(json.dumps(payload, indent=1))
    return out, {}


def _cmd_correlators(cfg):
    if cfg["source"] == "trajectory":
        # evolve one monitored trajectory and export its endpoint correlators
        params = _params(cfg)
        rng = trajectory_rng(cfg["seed"], 0)
        captured = {}
        record = evolve_trajectory(
            params, cfg["dt"], cfg["tmax"], cfg["tmax"], seed=cfg["seed"],
            rng=rng, observers={"_": lambda st: captured.update(state=st.copy()) or 0.0})
        source = captured["state"]
    else:
        from .noclick import noclick_rows
        source = noclick_rows(_params(cfg))
    tensor = correlation_tensor(source)
    out = cfg["out"] or "correlators.csv"
    tensor_to_csv(tensor, out)
    prof = ctilde_profile(tensor)
    root, ext = os.path.splitext(out)
    ct_path = root + ".ctilde" + (ext or ".csv")
    ctilde_to_csv(prof, ct_path)
    return out, {"ctilde": ct_path}


_DISPATCH = {
    "noclick-point": _cmd_noclick_point,
    "noclick-scan": _cmd_noclick_scan,
    "trajectory": _cmd_trajectory,
    "ensemble": _cmd_ensemble,
    "fit": _cmd_fit,
    "correlators": _cmd_correlators,
}


def run(cfg: dict) -> int:
    """Execute a resolved configuration; artifacts land on disk, returns 0."""
    print("config: " + json.dumps({k: v for k, v in cfg.items()
                                   if v is not None}, sort_keys=True))
    start = _time.time()
    out, extra = _DISPATCH[cfg["command"]](cfg)
    wall = _time.time() - start
    if out != "-":
        _sidecar(out, cfg, wall, extra)
        print(f"wrote {out} (+ {out}.meta.json) in {wall:.1f}s")
    return 0


def main(argv=None) -> int:
    try:
        cfg = parse_config(argv)
        return run(cfg)
    except SimulationError as err:
        print(json.dumps({"error": type(err).__name__, "message": str(err)}),
              file=sys.stderr)
        return 2 if isinstance(err, (ConfigurationError, ParameterError)) else 1


if __name__ == "__main__":
    sys.exit(main())
