"""End-to-end no-click (jump-free) computations: vacuum, correlators, QFI, scaling.

The no-click trajectory relaxes to the vacuum of the non-Hermitian
quasiparticles; all stationary observables follow from its amplitudes
(u_k, v_k) through the Toeplitz correlator fast path.
"""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .analysis import fit_power_law
from .correlators import (MajoranaRows, SpinCorrelationTensor,
                          correlation_tensor, majorana_rows)
from .dynamics import CorrelationState
from .entanglement import EntropyRequest, entanglement_entropy
from .errors import ParameterError, SimulationError
from .qfi import AnnealSchedule, QfiResult, maximize_qfi
from .spectral import ModelParams, critical_rate, mode_spectrum

DEFAULT_SCAN_SIZES = tuple(range(40, 171, 10))
SMOKE_SCAN_SIZES = (16, 24, 32, 48, 64)


def vacuum_state(params: ModelParams) -> CorrelationState:
    """(C, F) of the no-click stationary state, from the momentum sums.

    C_mn = (2/L) sum_{k>0} |u_k|^2 cos(k(m-n)),
    F_mn = (2/L) sum_{k>0} conj(u_k) v_k sin(k(m-n)).
    """
    L = params.L
    modes = mode_spectrum(params)
    u = np.array([m.u for m in modes])
    v = np.array([m.v for m in modes])
    ks = np.array([m.k for m in modes])
    rel = np.arange(L)[:, None] - np.arange(L)[None, :]  # m - n
    phase = ks[:, None, None] * rel[None, :, :]
    C = 2.0 / L * np.tensordot(np.abs(u) ** 2, np.cos(phase), axes=1)
    F = 2.0 / L * np.tensordot(np.conj(u) * v, np.sin(phase), axes=1)
    return CorrelationState(C.astype(complex), F.astype(complex), time=float("inf"))


@dataclass
class NoClickPoint:
    """Stationary observables of one (h, gamma, L) point."""

    params: ModelParams
    tensor: SpinCorrelationTensor
    qfi: QfiResult
    entropy: float
    entropy_ell: int


def noclick_rows(params: ModelParams) -> MajoranaRows:
    """Toeplitz Majorana blocks of the no-click vacuum."""
    return majorana_rows(mode_spectrum(params), params.L)


def noclick_observables(params: ModelParams, ell: Optional[int] = None,
                        schedule: Optional[AnnealSchedule] = None,
                        restarts: int = 8, seed: int = 0) -> NoClickPoint:
    """Vacuum -> correlation tensor -> maximal QFI and entanglement entropy."""
    try:
        rows = noclick_rows(params)
        tensor = correlation_tensor(rows)
        result = maximize_qfi(tensor, schedule=schedule, restarts=restarts,
                              seed=seed)
        ell = ell if ell is not None else max(1, params.L // 4)
        entropy = entanglement_entropy(rows.dense(),
                                       EntropyRequest(start=0, length=ell))
    except SimulationError as err:
        raise type(err)(
            f"no-click point (h={params.h}, gamma={params.gamma}, "
            f"L={params.L}): {err}") from err
    return NoClickPoint(params=params, tensor=tensor, qfi=result,
                        entropy=entropy, entropy_ell=ell)


@dataclass(frozen=True)
class ScanSpec:
    """Grid of (h, gamma) points, chain sizes, fit window, and master seed."""

    points: tuple
    sizes: tuple = DEFAULT_SCAN_SIZES
    fit_window: Optional[tuple] = None
    seed: int = 0
    restarts: int = 8

    def __post_init__(self):
        if not self.points:
            raise ParameterError("scan grid must not be empty")
        sizes = tuple(self.sizes)
        if any(s % 2 or s < 4 for s in sizes):
            raise ParameterError("scan sizes must be even and >= 4")
        if list(sizes) != sorted(sizes):
            raise ParameterError("scan sizes must be ascending")
        object.__setattr__(self, "sizes", sizes)
        object.__setattr__(self, "points",
                           tuple((float(h), float(g)) for h, g in self.points))


@dataclass
class ScanRow:
    h: float
    gamma: float
    L: int
    fq_max: float
    entropy: float


@dataclass
class ScanResult:
    spec: ScanSpec
    rows: list = field(default_factory=list)
    fits: dict = field(default_factory=dict)
    failures: dict = field(default_factory=dict)

    def to_csv(self, path) -> None:
        """One row per (point, L) plus a summary row per point carrying the fit."""
        with open(path, "w", newline="\n") as fh:
            fh.write("h,gamma,gamma_over_gc,L,fq_max,entropy,p,p_err\n")
            for (h, g) in self.spec.points:
                ggc = _gamma_over_gc(h, g)
                for row in self.rows:
                    if (row.h, row.gamma) == (h, g):
                        fh.write(f"{h!r},{g!r},{ggc},{row.L},{row.fq_max!r},"
                                 f"{row.entropy!r},,\n")
                fit = self.fits.get((h, g))
                if fit is not None:
                    fh.write(f"{h!r},{g!r},{ggc},,,,{fit.exponent!r},"
                             f"{fit.stderr!r}\n")
                elif (h, g) in self.failures:
                    fh.write(f"{h!r},{g!r},{ggc},,,,,\n")


def _gamma_over_gc(h: float, gamma: float) -> str:
    try:
        return repr(gamma / critical_rate(h))
    except SimulationError:
        return ""


def _scan_item(args):
    h, gamma, L, seed, restarts = args
    point = noclick_observables(ModelParams(L=L, h=h, gamma=gamma),
                                restarts=restarts, seed=seed)
    return ScanRow(h=h, gamma=gamma, L=L, fq_max=point.qfi.value,
                   entropy=point.entropy)


def scan_phase_diagram(spec: ScanSpec, threads: int = 1,
                       progress=None) -> ScanResult:
    """Exponent p of f_Q^max ~ L^p for every grid point.

    Work items are independent (point, L) pairs; per-point failures are
    recorded and the scan continues.  Deterministic for a fixed spec.
    """
    result = ScanResult(spec=spec)
    items = []
    for ip, (h, gamma) in enumerate(spec.points):
        for L in spec.sizes:
            seed = int(np.random.SeedSequence(
                (spec.seed, ip, L)).generate_state(1)[0])
            items.append((h, gamma, L, seed, spec.restarts))

    outputs = {}

    def record(item, row, err):
        key = (item[0], item[1])
        if err is None:
            outputs.setdefault(key, []).append(row)
        else:
            result.failures[key] = str(err)
        if progress:
            progress(item)

    if threads <= 1:
        for item in items:
            try:
                record(item, _scan_item(item), None)
            except SimulationError as err:
                record(item, None, err)
    else:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            futures = [(item, pool.submit(_scan_item, item)) for item in items]
            for item, fut in futures:
                try:
                    record(item, fut.result(), None)
                except SimulationError as err:
                    record(item, None, err)

    for (h, gamma) in spec.points:
        rows = outputs.get((h, gamma), [])
        rows.sort(key=lambda r: r.L)
        result.rows.extend(rows)
        if (h, gamma) in result.failures or not rows:
            continue
        try:
            fq_density = [r.fq_max / r.L for r in rows]
            result.fits[(h, gamma)] = fit_power_law(
                [r.L for r in rows], fq_density, window=spec.fit_window)
        except SimulationError as err:
            result.failures[(h, gamma)] = str(err)
    return result
