"""Ensemble averaging and the scaling/decay fits used by the pipelines."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import (ContractError, DomainError, InsufficientDataError,
                     ParameterError)


@dataclass(frozen=True)
class FitResult:
    """Least-squares exponent fit: value = prefactor * x**exponent."""

    exponent: float
    prefactor: float
    stderr: float
    window: tuple
    r_squared: float

    def as_dict(self) -> dict:
        return {"exponent": self.exponent, "prefactor": self.prefactor,
                "stderr": self.stderr, "window": list(self.window),
                "r_squared": self.r_squared}


@dataclass(frozen=True)
class DecayFit:
    """Power-law fit of a decaying profile plus the exponential alternative.

    `classification` is 'power-law' or 'exponential', whichever plain
    least-squares description (log-log versus log-linear) has the larger R^2.
    """

    power: FitResult
    loglinear_r_squared: float
    decay_rate: float
    classification: str


def _ols(x: np.ndarray, y: np.ndarray):
    n = x.size
    xm = x.mean()
    sxx = np.sum((x - xm) ** 2)
    slope = np.sum((x - xm) * (y - y.mean())) / sxx
    intercept = y.mean() - slope * xm
    resid = y - slope * x - intercept
    ssr = np.sum(resid ** 2)
    sst = np.sum((y - y.mean()) ** 2)
    stderr = np.sqrt(ssr / max(n - 2, 1) / sxx)
    r2 = 1.0 - ssr / sst if sst > 0 else 1.0
    return slope, intercept, stderr, r2


def _apply_window(x: np.ndarray, y: np.ndarray, window) -> tuple:
    if window is None:
        return x, y, (float(x.min()), float(x.max()))
    lo, hi = window
    mask = (x >= lo) & (x <= hi)
    return x[mask], y[mask], (float(lo), float(hi))


def fit_power_law(sizes: Sequence[float], values: Sequence[float],
                  window=None) -> FitResult:
    """Fit values ~ prefactor * sizes**p by least squares on (ln x, ln y)."""
    x = np.asarray(sizes, dtype=float)
    y = np.asarray(values, dtype=float)
    if x.shape != y.shape:
        raise ContractError("sizes and values must have the same length")
    x, y, win = _apply_window(x, y, window)
    if x.size < 4:
        raise InsufficientDataError(
            f"need at least 4 points in the fit window, got {x.size}")
    if np.any(y <= 0) or np.any(x <= 0):
        raise DomainError("power-law fits require strictly positive data")
    slope, intercept, stderr, r2 = _ols(np.log(x), np.log(y))
    return FitResult(exponent=float(slope), prefactor=float(np.exp(intercept)),
                     stderr=float(stderr), window=win, r_squared=float(r2))


def fit_decay_exponent(distances: Sequence[float], values: Sequence[float],
                       window=(10, 60)) -> DecayFit:
    """Exponent lambda of C ~ ell^-lambda on the window (default 10..60).

    Also fits log C ~ -ell/xi and classifies the profile by the better R^2.
    """
    x = np.asarray(distances, dtype=float)
    y = np.asarray(values, dtype=float)
    x, y, win = _apply_window(x, y, window)
    if x.size < 4:
        raise InsufficientDataError(
            f"need at least 4 points in the fit window, got {x.size}")
    if np.any(y <= 0):
        raise DomainError("decay fits require strictly positive data")
    slope, intercept, stderr, r2_log = _ols(np.log(x), np.log(y))
    power = FitResult(exponent=float(-slope), prefactor=float(np.exp(intercept)),
                      stderr=float(stderr), window=win, r_squared=float(r2_log))
    lin_slope, _, _, r2_lin = _ols(x, np.log(y))
    label = "power-law" if r2_log >= r2_lin else "exponential"
    return DecayFit(power=power, loglinear_r_squared=float(r2_lin),
                    decay_rate=float(-lin_slope), classification=label)


def fit_xx_ansatz(cxx_row: Sequence[float], kstar: float,
                  window=(2, 80)) -> FitResult:
    """Envelope exponent of the oscillatory longitudinal correlator.

    The profile is modeled as A*cos((pi - k*) ell)/ell^lambda with the
    frequency held fixed; lambda is fit on the absolute values at the
    oscillation extrema ell ~ n*pi/(pi - k*), corrected by 1/|cos| for
    off-extremum sampling on the integer grid.
    """
    row = np.asarray(cxx_row)
    freq = np.pi - kstar
    if freq <= 0:
        raise ParameterError(f"oscillation frequency pi - k* = {freq} must be positive")
    lo, hi = window
    hi = min(hi, row.size - 1)
    ls, es = [], []
    n = 1
    while True:
        ell = int(round(n * np.pi / freq))
        n += 1
        if ell > hi:
            break
        if ell < max(lo, 1) or (ls and ell == ls[-1]):
            continue
        c = np.cos(freq * ell)
        if abs(c) < 0.5:
            continue
        val = abs(row[ell]) / abs(c)
        if val > 0:
            ls.append(ell)
            es.append(val)
    if len(ls) < 4:
        raise InsufficientDataError(
            f"found only {len(ls)} usable oscillation extrema in {window}")
    slope, intercept, stderr, r2 = _ols(np.log(np.array(ls, float)),
                                        np.log(np.array(es)))
    return FitResult(exponent=float(-slope), prefactor=float(np.exp(intercept)),
                     stderr=float(stderr), window=(float(lo), float(hi)),
                     r_squared=float(r2))


@dataclass
class EnsembleSummary:
    """Trajectory-ensemble statistics on a shared sample grid.

    Per-time means carry stderr = sample std / sqrt(N); stationary values
    average the ensemble mean over the stationary window, with stderr from
    the spread of per-trajectory window averages.
    """

    n_trajectories: int
    sample_times: np.ndarray
    means: dict
    stderrs: dict
    stationary_mean: dict
    stationary_stderr: dict
    stationary_window: tuple
    params: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "n_trajectories": self.n_trajectories,
            "sample_times": list(map(float, self.sample_times)),
            "means": {k: list(map(float, v)) for k, v in self.means.items()},
            "stderrs": {k: list(map(float, v)) for k, v in self.stderrs.items()},
            "stationary_mean": self.stationary_mean,
            "stationary_stderr": self.stationary_stderr,
            "stationary_window": list(self.stationary_window),
            "params": self.params,
        }


def ensemble_summary(records, stationary_window=None) -> EnsembleSummary:
    """Pointwise and stationary averages of a list of TrajectoryRecords.

    `stationary_window` is a (t_lo, t_hi) time interval; the default is the
    final 25% of the sample times.
    """
    if not records:
        raise ContractError("no trajectory records given")
    first = records[0]
    times = np.asarray(first.sample_times, dtype=float)
    for rec in records[1:]:
        if rec.params != first.params:
            raise ContractError("records mix different model parameters")
        if len(rec.sample_times) != len(times) or \
                np.abs(np.asarray(rec.sample_times) - times).max() > 1e-9:
            raise ContractError("records do not share a sample grid")
    names = list(first.observables)
    n = len(records)
    if stationary_window is None:
        n_win = max(1, int(np.ceil(0.25 * len(times))))
        stationary_window = (float(times[-n_win]), float(times[-1]))
    lo, hi = stationary_window
    win = (times >= lo - 1e-12) & (times <= hi + 1e-12)
    if not win.any():
        raise ContractError(f"stationary window {stationary_window} selects no samples")

    means, stderrs, s_mean, s_err = {}, {}, {}, {}
    for name in names:
        data = np.array([rec.observables[name] for rec in records], dtype=float)
        means[name] = data.mean(axis=0)
        stderrs[name] = (data.std(axis=0, ddof=1) / np.sqrt(n) if n > 1
                         else np.zeros(len(times)))
        per_traj = data[:, win].mean(axis=1)
        s_mean[name] = float(per_traj.mean())
        s_err[name] = float(per_traj.std(ddof=1) / np.sqrt(n)) if n > 1 else 0.0
    return EnsembleSummary(
        n_trajectories=n, sample_times=times, means=means, stderrs=stderrs,
        stationary_mean=s_mean, stationary_stderr=s_err,
        stationary_window=(float(lo), float(hi)),
        params={"L": first.params.L, "h": first.params.h,
                "gamma": first.params.gamma, "dt": first.dt,
                "t_max": first.t_max},
    )
