"""Model parameters, momentum grid, and the non-Hermitian quasiparticle spectrum.

The monitored chain is the transverse-field Ising model

    H0 = -J sum_j sx_j sx_{j+1} - h sum_j sz_j,      J = 1, periodic,

with each site monitored in the z basis at rate gamma.  Between quantum
jumps the state evolves with the non-Hermitian Hamiltonian
H = H0 - i(gamma/4) sum_j (sz_j - <sz_j>).  After the Jordan-Wigner map
(sigma^+ <-> fermion annihilator, so spin-up == empty site) and restriction
to the even-parity sector, H is a BCS Hamiltonian with anti-periodic
boundary conditions that decouples into 2x2 momentum blocks.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ParameterError


@dataclass(frozen=True)
class ModelParams:
    """Chain size, transverse field and measurement rate (units of J = 1)."""

    L: int
    h: float
    gamma: float = 0.0

    def __post_init__(self):
        if not isinstance(self.L, (int, np.integer)) or self.L < 4 or self.L % 2:
            raise ParameterError(f"L must be an even integer >= 4, got {self.L}")
        if not math.isfinite(self.h):
            raise ParameterError(f"h must be finite, got {self.h}")
        if not math.isfinite(self.gamma) or self.gamma < 0:
            raise ParameterError(f"gamma must satisfy gamma >= 0, got {self.gamma}")


@dataclass(frozen=True)
class ModeData:
    """Spectral data of one positive-momentum block.

    lam = E + i*Gamma is the quasiparticle energy on the branch with
    Gamma <= 0; (u, v) are the vacuum amplitudes on {|0_k>, |k,-k>} with
    |u|^2 + |v|^2 = 1.
    """

    k: float
    epsilon: complex
    delta: float
    lam: complex
    u: complex
    v: complex


def critical_rate(h: float) -> float:
    """Measurement rate gamma_c(h) = 4*sqrt(1 - h^2) where the decay-rate gap closes."""
    if abs(h) >= 1:
        raise DomainError(
            f"no gapless phase exists at this field: need |h| < 1, got h={h}")
    return 4.0 * math.sqrt(1.0 - h * h)


def gap_momentum(h: float) -> float:
    """Momentum k* = arccos(h) at which the quasiparticle decay rate vanishes."""
    if abs(h) >= 1:
        raise DomainError(f"k* is defined only for |h| < 1, got h={h}")
    return math.acos(h)


def allowed_momenta(L: int) -> np.ndarray:
    """Positive momenta k = (2m-1)*pi/L, m = 1..L/2 (anti-periodic sector)."""
    if not isinstance(L, (int, np.integer)) or L < 2 or L % 2:
        raise ParameterError(f"L must be a positive even integer, got {L}")
    m = np.arange(1, L // 2 + 1)
    return (2 * m - 1) * np.pi / L


def mode_lambda(h: float, gamma: float, k) -> np.ndarray | complex:
    """Complex quasiparticle energy Lambda_k = E_k + i*Gamma_k with Gamma_k <= 0.

    The two square-root branches differ by an overall sign; the principal
    root is negated whenever its imaginary part is positive (purely real
    results keep the principal root).
    """
    k = np.asarray(k, dtype=float)
    radicand = (1.0 - 2.0 * h * np.cos(k) + h * h - gamma * gamma / 16.0
                + 0.5j * gamma * (h - np.cos(k)))
    lam = 2.0 * np.sqrt(radicand)
    # ties (real Lambda up to roundoff) keep the principal root, Re >= 0
    tol = 1e-12 * (1.0 + np.abs(lam))
    lam = np.where(lam.imag > tol, -lam, lam)
    return lam if lam.ndim else complex(lam)


def mode_spectrum(params: ModelParams) -> list[ModeData]:
    """Spectral data and vacuum amplitudes for every positive momentum."""
    ks = allowed_momenta(params.L)
    eps = 2.0 * np.cos(ks) - 2.0 * params.h - 0.5j * params.gamma
    delta = -2.0 * np.sin(ks)
    lam = mode_lambda(params.h, params.gamma, ks)
    a = lam - eps
    norm = np.sqrt(np.abs(a) ** 2 + delta ** 2)
    modes = []
    for i, k in enumerate(ks):
        if norm[i] < 1e-300:
            # doubly degenerate mode: the vacuum is |0_k> exactly
            u, v = 1.0 + 0.0j, 0.0j
        else:
            u = a[i] / norm[i]
            v = -delta[i] / norm[i]
        modes.append(ModeData(k=float(k), epsilon=complex(eps[i]),
                              delta=float(delta[i]), lam=complex(lam[i]),
                              u=complex(u), v=complex(v)))
    return modes


def noclick_vacuum(params: ModelParams) -> list[tuple[complex, complex]]:
    """Vacuum amplitudes (u_k, v_k) of the non-Hermitian quasiparticle vacuum.

    u_k is the |0_k> amplitude and v_k the |k,-k> amplitude,
    u_k prop. (Lambda_k - epsilon_k), v_k prop. -Delta_k, jointly normalized.
    """
    return [(m.u, m.v) for m in mode_spectrum(params)]


def annihilation_residual(mode: ModeData) -> float:
    """|(Lambda_k - epsilon_k) v_k + Delta_k u_k|, zero when (u, v) is the vacuum.

    This is the coefficient of the quasiparticle annihilator applied to the
    mode state, normalized by the spectral scale.
    """
    scale = abs(mode.lam) + abs(mode.epsilon) + abs(mode.delta)
    if scale == 0:
        return 0.0
    return abs((mode.lam - mode.epsilon) * mode.v + mode.delta * mode.u) / scale
