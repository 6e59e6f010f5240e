"""Von Neumann entanglement entropy of contiguous subsystems (in nats)."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .correlators import MajoranaBlocks, MajoranaRows, majorana_covariance
from .dynamics import CorrelationState
from .errors import ContractError, CorruptedStateError

EIGENVALUE_TOL = 1e-6


@dataclass(frozen=True)
class EntropyRequest:
    """Contiguous subsystem: `length` sites starting at `start` (wraps on the ring)."""

    start: int
    length: int


def entanglement_entropy(source, request: Optional[EntropyRequest] = None) -> float:
    """Entanglement entropy of a contiguous block from the Majorana covariance.

    The covariance is restricted to the 2*length Majorana indices of the
    subsystem; its spectrum comes in pairs +-i*mu with mu in [0, 1] and each
    pair contributes the binary entropy of (1 + mu)/2.  Defaults to the
    quarter chain starting at site 0.
    """
    if isinstance(source, CorrelationState):
        L = source.L
        blocks = None
    elif isinstance(source, (MajoranaBlocks, MajoranaRows)):
        L = source.L
        blocks = source.dense() if isinstance(source, MajoranaRows) else source
    else:
        raise ContractError(f"cannot compute entropy from {type(source)}")
    if request is None:
        request = EntropyRequest(start=0, length=max(1, L // 4))
    ell = request.length
    if not 1 <= ell <= L - 1:
        raise ContractError(f"need 1 <= length <= L-1 = {L - 1}, got {ell}")
    gamma = majorana_covariance(source if blocks is None else blocks)
    sites = [(request.start + i) % L for i in range(ell)]
    idx = np.empty(2 * ell, dtype=int)
    idx[0::2] = [2 * s for s in sites]
    idx[1::2] = [2 * s + 1 for s in sites]
    sub = gamma[np.ix_(idx, idx)]
    mu = np.linalg.eigvalsh(1j * sub).real
    worst = np.abs(mu).max() if mu.size else 0.0
    if worst > 1.0 + EIGENVALUE_TOL:
        raise CorruptedStateError(
            f"covariance eigenvalue |mu| = {worst:.8f} exceeds 1; "
            "the global state violates purity beyond tolerance")
    mu = np.clip(mu, -1.0, 1.0)
    p = 0.5 * (1.0 + mu)
    mask = p > 1e-300
    return float(-(p[mask] * np.log(p[mask])).sum())
