"""Quantum Fisher information of probe operators (1/2) sum_j n_j . sigma_j.

For a pure state the QFI is four times the operator variance, a real
quadratic form of the connected spin-spin correlators in the per-site unit
vectors n_j.  Maximizing it over the n_j is equivalent to finding the
ground state of the classical vector-spin Hamiltonian H_cl = -F_Q, which is
done here by single-site Metropolis simulated annealing.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ._kernels import anneal_restart, coordinate_ascent_kernel
from .correlators import SpinCorrelationTensor
from .errors import ContractError, CorruptedStateError, ParameterError

IMAG_ASSERT_TOL = 1e-8
IMAG_ERROR_TOL = 1e-6


@dataclass
class DirectionField:
    """One unit 3-vector per site, stored as an (L, 3) array."""

    vectors: np.ndarray

    def __post_init__(self):
        self.vectors = np.asarray(self.vectors, dtype=float)
        if self.vectors.ndim != 2 or self.vectors.shape[1] != 3:
            raise ParameterError(
                f"expected an (L, 3) array, got shape {self.vectors.shape}")
        norms = np.linalg.norm(self.vectors, axis=1)
        if np.abs(norms - 1.0).max() > 1e-12:
            raise ParameterError("direction vectors must have unit norm")

    @property
    def L(self) -> int:
        return self.vectors.shape[0]

    @classmethod
    def uniform(cls, direction, L: int) -> "DirectionField":
        d = np.asarray(direction, dtype=float)
        return cls(np.tile(d / np.linalg.norm(d), (L, 1)))

    @classmethod
    def random(cls, L: int, rng: np.random.Generator) -> "DirectionField":
        v = rng.normal(size=(L, 3))
        return cls(v / np.linalg.norm(v, axis=1)[:, None])


@dataclass
class QfiResult:
    """Best QFI found, its density, the maximizing field, and annealer diagnostics."""

    value: float
    density: float
    directions: DirectionField
    restarts: int
    accepted_fraction: float
    best_restart: int
    best_sweep: int


@dataclass(frozen=True)
class AnnealSchedule:
    """Geometric-cooling schedule; None fields resolve to size-dependent defaults.

    Defaults: 50*L sweeps of L single-site moves, cooling 0.98 per sweep,
    initial temperature from the spread of 200 random-move deltas, moves an
    even mixture of fresh random directions and small-cone perturbations.
    """

    sweeps: Optional[int] = None
    moves_per_sweep: Optional[int] = None
    initial_temperature: Optional[float] = None
    cooling: float = 0.98
    cone_angle: float = 0.3
    uniform_fraction: float = 0.5


def _as_vectors(dirs, L: int) -> np.ndarray:
    v = dirs.vectors if isinstance(dirs, DirectionField) else np.asarray(dirs, float)
    if v.shape != (L, 3):
        raise ContractError(f"direction field shape {v.shape} does not match L={L}")
    return v


def qfi_form(tensor: SpinCorrelationTensor, dirs) -> float:
    """Evaluate F_Q = sum_{ab,ij} n_i^a C^{ab}_{ij} n_j^b.

    Imaginary parts cancel between the (a, b) and (b, a) terms of every pair;
    the residual is asserted small and the real part returned.  The
    structurally zero xz/yz blocks are never touched: the form splits into an
    in-plane (x, y) part and a longitudinal z part.
    """
    v = _as_vectors(dirs, tensor.L)
    nx, ny, nz = v[:, 0], v[:, 1], v[:, 2]
    total = (nx @ tensor.cxx @ nx + ny @ tensor.cyy @ ny + nz @ tensor.czz @ nz
             + nx @ tensor.cxy @ ny + ny @ tensor.cyx @ nx)
    if abs(total.imag) > IMAG_ERROR_TOL:
        raise CorruptedStateError(
            f"QFI form has imaginary residue {total.imag:.3e}")
    assert abs(total.imag) <= IMAG_ASSERT_TOL, total.imag
    return float(total.real)


def classical_energy(tensor: SpinCorrelationTensor, dirs) -> float:
    """H_cl = -F_Q: the classical vector-spin energy minimized by annealing."""
    return -qfi_form(tensor, dirs)


def quadratic_form_matrix(tensor: SpinCorrelationTensor) -> np.ndarray:
    """Real symmetric (3L, 3L) matrix Q with F_Q = v^T Q v, v = flattened field.

    On-site xy/yx entries are purely imaginary and cancel in the form, so
    their real part (zero) is what lands in Q.
    """
    L = tensor.L
    q = np.zeros((3 * L, 3 * L))
    q[0::3, 0::3] = tensor.cxx.real
    q[1::3, 1::3] = tensor.cyy.real
    q[2::3, 2::3] = tensor.czz.real
    q[0::3, 1::3] = tensor.cxy.real
    q[1::3, 0::3] = tensor.cyx.real
    defect = np.abs(q - q.T).max()
    if defect > 1e-8:
        raise CorruptedStateError(
            f"correlation tensor breaks C^ab_ij = C^ba_ji symmetry by {defect:.3e}")
    return 0.5 * (q + q.T)


def _wave_start(q: np.ndarray, L: int) -> np.ndarray:
    """Best staggered/spiral single-wavevector candidate field.

    Scans square-wave +-x patterns and in-plane spirals over a wavevector
    grid (plus the uniform z field) and returns the best as a warm start for
    one annealing restart; every candidate is a valid witness, so this only
    ever tightens the lower bound.
    """
    j = np.arange(L)
    best_v = None
    best_val = -np.inf
    candidates = []
    for m in range(0, 2 * L + 1):
        qvec = 0.5 * np.pi * m / L
        for phase in (0.0, 0.5 * np.pi):
            wave = np.cos(qvec * j + phase)
            sq = np.where(wave >= 0, 1.0, -1.0)
            v = np.zeros((L, 3))
            v[:, 0] = sq
            candidates.append(v)
            spiral = np.zeros((L, 3))
            spiral[:, 0] = np.cos(qvec * j + phase)
            spiral[:, 1] = np.sin(qvec * j + phase)
            candidates.append(spiral)
    vz = np.zeros((L, 3))
    vz[:, 2] = 1.0
    candidates.append(vz)
    for v in candidates:
        flat = v.reshape(-1)
        val = flat @ q @ flat
        if val > best_val:
            best_val = val
            best_v = flat
    return best_v.copy()


def _auto_temperature(q: np.ndarray, L: int, rng: np.random.Generator) -> float:
    """Standard deviation of 200 random single-site move deltas."""
    v = rng.normal(size=(L, 3))
    v /= np.linalg.norm(v, axis=1)[:, None]
    flat = v.reshape(-1)
    g = q @ flat
    deltas = np.empty(200)
    for t in range(200):
        jj = int(rng.integers(L))
        b = 3 * jj
        new = rng.normal(size=3)
        new /= np.linalg.norm(new)
        d = new - flat[b:b + 3]
        deltas[t] = (2.0 * g[b:b + 3] @ d
                     + d @ q[b:b + 3, b:b + 3] @ d)
    return float(max(deltas.std(), 1e-12))


def maximize_qfi(tensor: SpinCorrelationTensor,
                 schedule: Optional[AnnealSchedule] = None,
                 restarts: int = 8, seed: int = 0) -> QfiResult:
    """Maximize the QFI over per-site unit vectors by simulated annealing.

    Independent restarts (the first warm-started from the best
    single-wavevector candidate, the rest from random fields) of single-site
    Metropolis moves under geometric cooling.  The returned value is a
    certified lower bound on the true maximum since any unit field is a
    witness.  Deterministic for fixed (tensor, schedule, restarts, seed);
    ties between restarts keep the first maximizer found.
    """
    if restarts < 1:
        raise ParameterError(f"restarts must be >= 1, got {restarts}")
    schedule = schedule or AnnealSchedule()
    L = tensor.L
    q = quadratic_form_matrix(tensor)
    sweeps = schedule.sweeps if schedule.sweeps is not None else 50 * L
    moves = (schedule.moves_per_sweep if schedule.moves_per_sweep is not None
             else L)
    rng = np.random.default_rng(seed)
    t0 = (schedule.initial_temperature if schedule.initial_temperature is not None
          else _auto_temperature(q, L, rng))
    kernel_seeds = rng.integers(0, 2 ** 63 - 1, size=restarts, dtype=np.uint64)
    site_eig = _site_eigendecompositions(q, L)

    best = None
    accepted = 0
    proposed = 0
    for r in range(restarts):
        if r == 0:
            v0 = _wave_start(q, L)
        else:
            v0 = rng.normal(size=(L, 3))
            v0 /= np.linalg.norm(v0, axis=1)[:, None]
            v0 = v0.reshape(-1)
        bv, bval, acc, prop, bsweep = anneal_restart(
            q, v0.copy(), sweeps, moves, t0, schedule.cooling,
            schedule.cone_angle, schedule.uniform_fraction,
            np.uint64(kernel_seeds[r]))
        # zero-temperature polish: exact per-site ascent within the basin
        bv, bval = _coordinate_ascent(q, bv, max_sweeps=50, eig=site_eig)
        accepted += acc
        proposed += prop
        if best is None or bval > best[0]:
            best = (bval, bv, r, bsweep)
    bval, bv, br, bsweep = best
    dirs = bv.reshape(L, 3)
    dirs /= np.linalg.norm(dirs, axis=1)[:, None]
    return QfiResult(value=float(bval), density=float(bval) / L,
                     directions=DirectionField(dirs), restarts=restarts,
                     accepted_fraction=accepted / max(proposed, 1),
                     best_restart=br, best_sweep=int(bsweep))


def _site_eigendecompositions(q: np.ndarray, L: int):
    blocks = np.empty((L, 3, 3))
    for j in range(L):
        blocks[j] = q[3 * j:3 * j + 3, 3 * j:3 * j + 3]
    return np.linalg.eigh(blocks)  # batched, ascending


def _coordinate_ascent(q: np.ndarray, v: np.ndarray, max_sweeps: int = 500,
                       eig=None):
    """Greedy exact per-site maximization of v^T q v; returns (v, value).

    Each site is set to the exact maximizer of its sphere-constrained local
    quadratic problem (secular equation in the on-site eigenbasis) until a
    full sweep no longer improves the value.
    """
    L = v.size // 3
    lam, vecs = eig if eig is not None else _site_eigendecompositions(q, L)
    val = coordinate_ascent_kernel(q, v, lam, vecs, max_sweeps)
    return v, float(val)


def _sphere_grid(resolution: float) -> np.ndarray:
    """Roughly uniform unit vectors with angular spacing <= resolution."""
    dirs = [np.array([0.0, 0.0, 1.0]), np.array([0.0, 0.0, -1.0])]
    n_theta = max(2, int(np.ceil(np.pi / resolution)))
    for it in range(1, n_theta):
        theta = np.pi * it / n_theta
        n_phi = max(1, int(np.ceil(2 * np.pi * np.sin(theta) / resolution)))
        for ip in range(n_phi):
            phi = 2 * np.pi * ip / n_phi
            dirs.append(np.array([np.sin(theta) * np.cos(phi),
                                  np.sin(theta) * np.sin(phi),
                                  np.cos(theta)]))
    return np.array(dirs)


def brute_force_max(tensor: SpinCorrelationTensor,
                    angular_resolution: float = np.pi / 12,
                    seed: int = 0) -> float:
    """Reference maximum of the QFI form for small chains (validation oracle).

    Exhaustive-in-practice search: exact per-site sphere-constrained ascent
    (cyclic coordinate maximization) run to convergence from a grid of
    uniform and staggered starts at the given angular resolution plus many
    random fields.  Refuses L > 8.
    """
    L = tensor.L
    if L > 8:
        raise ContractError(f"brute-force oracle is limited to L <= 8, got L={L}")
    q = quadratic_form_matrix(tensor)
    rng = np.random.default_rng(seed)
    starts = []
    for d in _sphere_grid(angular_resolution):
        uniform = np.tile(d, (L, 1))
        starts.append(uniform)
        stag = uniform.copy()
        stag[1::2] *= -1.0
        starts.append(stag)
    for _ in range(200):
        v = rng.normal(size=(L, 3))
        starts.append(v / np.linalg.norm(v, axis=1)[:, None])

    best = -np.inf
    site_eig = _site_eigendecompositions(q, L)
    for v0 in starts:
        _, val = _coordinate_ascent(q, v0.reshape(-1).copy(), eig=site_eig)
        if val > best:
            best = val
    return float(best)
