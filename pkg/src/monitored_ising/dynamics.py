"""Quantum-trajectory evolution of the fermionic correlation matrices.

A pure Gaussian state is tracked through the pair of L x L matrices
C_mn = <c_m c^dag_n> and F_mn = <c_m c_n>.  The no-click drift (non-unitary
evolution conditioned on observing no jump) is a closed first-order ODE in
(C, F); quantum jumps are rank-one projections of site j onto the up-z
(empty) outcome.  Both preserve Gaussianity, so this engine is exact up to
integration error.
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.linalg.blas import zherk

from .errors import (ConfigurationError, ContractError, CorruptedStateError,
                     InfeasibleJumpError, ParameterError)
from .spectral import ModelParams

STATE_MAGIC = b"MICS"

# Dormand-Prince 5th-order tableau (fixed step; the embedded 4th-order row
# is not used).  Six right-hand-side evaluations per step.
RK5_C = (0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0)
RK5_A = (
    (),
    (1.0 / 5.0,),
    (3.0 / 40.0, 9.0 / 40.0),
    (44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0),
    (19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0),
    (9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0,
     -5103.0 / 18656.0),
)
RK5_B = (35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0,
         -2187.0 / 6784.0, 11.0 / 84.0)

DIAG_TOL = 1e-6   # allowed excursion of diag(C) outside [0, 1] per step
FLUSH_TOL = 1e-60  # magnitudes below this are physically empty


@dataclass
class CorrelationState:
    """Pure-Gaussian state snapshot: C = <c c^dag>, F = <c c>, and time."""

    C: np.ndarray
    F: np.ndarray
    time: float = 0.0

    @property
    def L(self) -> int:
        return self.C.shape[0]

    def copy(self) -> "CorrelationState":
        return CorrelationState(self.C.copy(), self.F.copy(), self.time)


@dataclass(frozen=True)
class HoppingMatrices:
    """Single-particle matrices of the Hermitian chain Hamiltonian.

    H1 is real symmetric (hopping + field), H2 real antisymmetric (pairing);
    both carry the anti-periodic boundary sign of the even-parity sector.
    """

    H1: np.ndarray
    H2: np.ndarray


@dataclass(frozen=True)
class JumpEvent:
    time: float
    site: int


@dataclass
class TrajectoryRecord:
    """One stochastic realization: sampled observables plus the jump history."""

    params: ModelParams
    seed: int
    dt: float
    t_max: float
    sample_every: float
    sample_times: list
    observables: dict
    jumps: list
    metadata: dict = field(default_factory=dict)

    def to_json(self) -> str:
        payload = {
            "schema": "monitored-ising/trajectory-record/v1",
            "params": {"L": self.params.L, "h": self.params.h,
                       "gamma": self.params.gamma},
            "seed": self.seed,
            "dt": self.dt,
            "t_max": self.t_max,
            "sample_every": self.sample_every,
            "sample_times": list(self.sample_times),
            "observables": {k: list(v) for k, v in self.observables.items()},
            "jumps": [{"time": j.time, "site": j.site} for j in self.jumps],
            "metadata": self.metadata,
        }
        return json.dumps(payload, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "TrajectoryRecord":
        d = json.loads(text)
        return cls(
            params=ModelParams(int(d["params"]["L"]), d["params"]["h"],
                               d["params"]["gamma"]),
            seed=d["seed"], dt=d["dt"], t_max=d["t_max"],
            sample_every=d["sample_every"],
            sample_times=d["sample_times"],
            observables=d["observables"],
            jumps=[JumpEvent(j["time"], j["site"]) for j in d["jumps"]],
            metadata=d.get("metadata", {}),
        )


def initial_product_state(L: int) -> CorrelationState:
    """All spins up along z: the fermion vacuum, C = identity, F = 0."""
    if L < 2 or L % 2:
        raise ParameterError(f"L must be a positive even integer, got {L}")
    return CorrelationState(np.eye(L, dtype=complex),
                            np.zeros((L, L), dtype=complex), 0.0)


def hopping_matrices(params: ModelParams) -> HoppingMatrices:
    L = params.L
    h1 = np.zeros((L, L))
    h2 = np.zeros((L, L))
    for m in range(L - 1):
        h1[m, m + 1] = h1[m + 1, m] = -0.5
        h2[m, m + 1] = -0.5
        h2[m + 1, m] = 0.5
    h1[L - 1, 0] = h1[0, L - 1] = 0.5  # boundary sign flipped (anti-periodic)
    h2[L - 1, 0] = 0.5
    h2[0, L - 1] = -0.5
    np.fill_diagonal(h1, params.h)
    return HoppingMatrices(h1, h2)


def _drift_rhs_reference(C, F, h1, h2, gamma):
    """Drift right-hand side written exactly as the matrix equations read."""
    Fd = F.conj().T
    dC = -2j * (h1 @ C - C @ h1 + h2 @ Fd + F @ h2)
    dF = -2j * (h1 @ F + F @ h1 + h2 - h2 @ C.T - C @ h2)
    if gamma:
        dC += gamma * (C @ C - F @ Fd - C)
        dF += gamma * (C @ F - F + F @ C.T)
    return dC, dF


def _hop_left(x, corner_sign):
    """T @ x for the nearest-neighbor matrix T with T[m, m+1] = -1/2.

    corner_sign = +1 gives the symmetric hopping (lower diagonal -1/2 as
    well), -1 the antisymmetric pairing (lower diagonal +1/2); both carry
    the flipped anti-periodic boundary entries.
    """
    out = np.empty_like(x)
    out[:-1] = x[1:]
    out[-1] = -x[0]          # T[L-1, 0] flips sign at the boundary
    out[1:] += corner_sign * x[:-1]
    out[0] -= corner_sign * x[-1]
    out *= -0.5
    return out


def _hop_right(x, corner_sign):
    """x @ T, with the same conventions as _hop_left."""
    out = np.empty_like(x)
    out[:, 1:] = x[:, :-1]
    out[:, 0] = -x[:, -1]
    out[:, :-1] += corner_sign * x[:, 1:]
    out[:, -1] -= corner_sign * x[:, 0]
    return -0.5 * out


def _herk_full(a):
    """a @ a^dag through a half-cost Hermitian rank-k update."""
    upper = zherk(1.0, a, lower=0)
    full = upper + upper.conj().T
    np.fill_diagonal(full, upper.diagonal().real)
    return full


def _drift_rhs(C, F, h1, h2, gamma):
    """Drift right-hand side, algebraically identical to the reference form.

    The nearest-neighbor products are O(L^2) shift operations (the field
    term drops from the commutator and contributes 2hF to the
    anticommutator); C@C and F@F^dag use Hermitian rank-k updates and
    F@C^T = -(C@F)^T shares one GEMM with C@F.
    """
    h = h1[0, 0]
    Fd = -np.conj(F)
    Ct = np.conj(C)
    dC = _hop_left(C, 1.0) - _hop_right(C, 1.0) + _hop_left(Fd, -1.0) \
        + _hop_right(F, -1.0)
    dF = _hop_left(F, 1.0) + _hop_right(F, 1.0) + (2.0 * h) * F + h2 \
        - _hop_left(Ct, -1.0) - _hop_right(C, -1.0)
    dC *= -2j
    dF *= -2j
    if gamma:
        X = C @ F
        dC += gamma * (_herk_full(C) - _herk_full(F) - C)
        dF += gamma * (X - X.T - F)
    return dC, dF


def drift_derivatives(state: CorrelationState, params: ModelParams,
                      hop: HoppingMatrices):
    """Right-hand side (dC/dt, dF/dt) of the no-click evolution.

    Combines the commutator/anticommutator flow generated by (H1, H2) with
    the measurement back-action terms proportional to gamma; preserves the
    Hermiticity of C and antisymmetry of F.
    """
    if state.C.shape != (params.L, params.L) or state.F.shape != (params.L, params.L):
        raise ParameterError(
            f"state dimension {state.C.shape} does not match L={params.L}")
    if hop.H1.shape != (params.L, params.L):
        raise ParameterError("hopping matrices do not match L")
    return _drift_rhs(state.C, state.F, hop.H1, hop.H2, params.gamma)


def rk5_step(state: CorrelationState, params: ModelParams,
             hop: HoppingMatrices, dt: float) -> CorrelationState:
    """One fixed Dormand-Prince 5th-order step of the no-click drift.

    After the update C is re-Hermitized and F re-antisymmetrized to suppress
    roundoff drift.  The step is rejected if any diagonal C_jj leaves
    [-1e-6, 1 + 1e-6].
    """
    if dt <= 0:
        raise ParameterError(f"dt must be positive, got {dt}")
    h1, h2, gamma = hop.H1, hop.H2, params.gamma
    kC = []
    kF = []
    for s in range(6):
        Cs = state.C
        Fs = state.F
        if s:
            Cs = Cs + dt * sum(a * kC[i] for i, a in enumerate(RK5_A[s]))
            Fs = Fs + dt * sum(a * kF[i] for i, a in enumerate(RK5_A[s]))
            Cs[np.abs(Cs) < FLUSH_TOL] = 0.0
            Fs[np.abs(Fs) < FLUSH_TOL] = 0.0
        dC, dF = _drift_rhs(Cs, Fs, h1, h2, gamma)
        kC.append(dC)
        kF.append(dF)
    Cn = state.C + dt * sum(b * kC[i] for i, b in enumerate(RK5_B) if b)
    Fn = state.F + dt * sum(b * kF[i] for i, b in enumerate(RK5_B) if b)
    Cn = 0.5 * (Cn + Cn.conj().T)
    Fn = 0.5 * (Fn - Fn.T)
    # flush vanishing tails to exact zero: exponentially decaying correlations
    # otherwise drift into the subnormal range and cripple the BLAS kernels
    Cn[np.abs(Cn) < FLUSH_TOL] = 0.0
    Fn[np.abs(Fn) < FLUSH_TOL] = 0.0
    diag = Cn.diagonal().real
    if diag.min() < -DIAG_TOL or diag.max() > 1.0 + DIAG_TOL:
        raise CorruptedStateError(
            f"occupation left [0, 1] at t={state.time + dt:.6g} "
            f"(min {diag.min():.3e}, max {diag.max():.3e}); reduce dt")
    return CorrelationState(Cn, Fn, state.time + dt)


def jump_probabilities(state: CorrelationState, params: ModelParams,
                       dt: float):
    """Per-site jump probabilities p_j = gamma*dt*C_jj and their sum P."""
    p = params.gamma * dt * state.C.diagonal().real
    if p.min() < -1e-10:
        raise CorruptedStateError(
            f"negative jump probability {p.min():.3e} at t={state.time:.6g}")
    p = np.clip(p, 0.0, None)
    return p, float(p.sum())


def sample_jump(probabilities: np.ndarray, rng: np.random.Generator) -> Optional[int]:
    """Draw one uniform r; no jump if r > sum(p), else invert the cumulative sum.

    Exactly one uniform is consumed per call, which is the reproducibility
    contract shared with the state-vector reference implementation.
    """
    p = np.asarray(probabilities, dtype=float)
    total = float(p.sum())
    if total >= 1.0:
        raise ConfigurationError(
            f"total jump probability P={total:.3f} >= 1; decrease dt")
    r = rng.random()
    if r > total:
        return None
    return int(np.searchsorted(np.cumsum(p), r, side="left"))


def apply_jump(state: CorrelationState, j: int) -> CorrelationState:
    """Project site j onto the up-z (empty) outcome and renormalize.

    Rank-one update of C and F; row/column j are then overwritten with their
    exact post-jump values (unit diagonal, zero elsewhere), which is the
    numerically stable prescription.
    """
    C, F = state.C, state.F
    L = C.shape[0]
    if not 0 <= j < L:
        raise ContractError(f"site {j} out of range for L={L}")
    cjj = C[j, j].real
    if cjj <= 1e-10:
        raise InfeasibleJumpError(
            f"jump on site {j} with <c c^dag> = {cjj:.3e} at t={state.time:.6g}")
    ccol = C[:, j]
    crow = C[j, :]
    fcol = F[:, j]
    frow = F[j, :]
    Cn = C - np.outer(ccol, crow) / cjj + np.outer(fcol, fcol.conj()) / cjj
    Fn = F - np.outer(ccol, frow) / cjj + np.outer(frow, ccol) / cjj
    Cn[j, :] = 0.0
    Cn[:, j] = 0.0
    Cn[j, j] = 1.0
    Fn[j, :] = 0.0
    Fn[:, j] = 0.0
    return CorrelationState(Cn, Fn, state.time)


def trajectory_rng(seed, index: Optional[int] = None) -> np.random.Generator:
    """Counter-based (Philox) generator for one trajectory.

    With an index, the stream is keyed by the pair (seed, index) so that
    ensemble members are independent and individually reproducible.
    """
    entropy = seed if index is None else (int(seed), int(index))
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def evolve_trajectory(params: ModelParams, dt: float, t_max: float,
                      sample_every: float, seed,
                      observers: Optional[dict] = None,
                      rng: Optional[np.random.Generator] = None,
                      metadata: Optional[dict] = None) -> TrajectoryRecord:
    """Run one quantum trajectory from the all-up product state.

    Each step integrates the drift with one RK5 step, evaluates the jump
    probabilities on the post-drift state, draws a single uniform, and
    applies at most one jump.  `observers` maps names to callables
    state -> float evaluated on the sample grid (including t = 0).
    Identical (params, dt, seed) give bit-identical records.
    """
    if dt <= 0 or t_max <= 0:
        raise ParameterError("dt and t_max must be positive")
    if dt * params.gamma * params.L >= 0.5:
        raise ConfigurationError(
            f"dt*gamma*L = {dt * params.gamma * params.L:.3f} >= 0.5; "
            "decrease dt to keep the per-step jump probability small")
    observers = observers or {}
    if rng is None:
        rng = trajectory_rng(seed)
    hop = hopping_matrices(params)
    state = initial_product_state(params.L)
    n_steps = int(round(t_max / dt))
    stride = max(1, int(round(sample_every / dt)))

    sample_times = []
    series = {name: [] for name in observers}
    jumps = []

    def take_sample():
        sample_times.append(round(state.time, 12))
        for name, fn in observers.items():
            series[name].append(fn(state))

    take_sample()
    for step in range(1, n_steps + 1):
        try:
            state = rk5_step(state, params, hop, dt)
            p, _ = jump_probabilities(state, params, dt)
            site = sample_jump(p, rng)
        except CorruptedStateError as err:
            raise CorruptedStateError(
                f"trajectory seed={seed} failed at step {step} "
                f"(t={state.time:.6g}): {err}") from err
        if site is not None:
            state = apply_jump(state, site)
            jumps.append(JumpEvent(time=round(state.time, 12), site=site))
        if step % stride == 0:
            take_sample()

    meta = {"n_steps": n_steps, "sample_stride": stride}
    if metadata:
        meta.update(metadata)
    return TrajectoryRecord(params=params, seed=int(seed) if np.isscalar(seed) else seed,
                            dt=dt, t_max=t_max, sample_every=sample_every,
                            sample_times=sample_times, observables=series,
                            jumps=jumps, metadata=meta)


def save_state(state: CorrelationState, path) -> None:
    """Binary snapshot: 16-byte header (magic, L, time) + row-major C then F.

    All floats little-endian 64-bit; complex entries stored as (re, im) pairs.
    """
    with open(path, "wb") as fh:
        fh.write(STATE_MAGIC)
        fh.write(struct.pack("<I", state.L))
        fh.write(struct.pack("<d", state.time))
        fh.write(np.ascontiguousarray(state.C, dtype="<c16").tobytes())
        fh.write(np.ascontiguousarray(state.F, dtype="<c16").tobytes())


def load_state(path) -> CorrelationState:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != STATE_MAGIC:
            raise ContractError(f"{path}: not a correlation-state snapshot")
        L = struct.unpack("<I", fh.read(4))[0]
        time = struct.unpack("<d", fh.read(8))[0]
        n = L * L * 16
        C = np.frombuffer(fh.read(n), dtype="<c16").reshape(L, L).astype(complex)
        F = np.frombuffer(fh.read(n), dtype="<c16").reshape(L, L).astype(complex)
    return CorrelationState(C, F, time)
