"""Majorana two-point blocks and all connected spin-spin correlators.

Longitudinal correlators are Jordan-Wigner strings of Majorana operators
A_j = c^dag_j + c_j and B_j = c^dag_j - c_j, evaluated by Wick's theorem as
Pfaffians of antisymmetric matrices built from the four blocks
M_AA, M_BB, M_AB, M_BA.  On the ring, a pair of sites is evaluated through
the shorter arc: chords crossing the j = L-1 | j = 0 boundary are handled by
relabeling the ring origin, which for parity-even states multiplies every
Majorana correlator between a relabeled and a non-relabeled site by -1.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ._kernels import pfaffian_kernel
from .dynamics import CorrelationState
from .errors import ContractError, CorruptedStateError, ParameterError
from .spectral import ModeData, allowed_momenta

CHANNELS = ("xx", "yy", "zz", "xy", "yx")
PFAFFIAN_ASYM_TOL = 1e-6


@dataclass
class MajoranaBlocks:
    """Two-point functions of A_j = c^dag_j + c_j and B_j = c^dag_j - c_j.

    aa[m, n] = <A_m A_n>, bb = <B_m B_n>, ab = <A_m B_n>, ba = <B_m A_n>.
    """

    aa: np.ndarray
    bb: np.ndarray
    ab: np.ndarray
    ba: np.ndarray

    @property
    def L(self) -> int:
        return self.aa.shape[0]

    def validate(self, atol: float = 1e-10) -> None:
        ident = np.eye(self.L)
        checks = (
            ("aa - 1 antisymmetric", self.aa - ident + (self.aa - ident).T),
            ("bb + 1 antisymmetric", self.bb + ident + (self.bb + ident).T),
            ("ba = -ab^T", self.ba + self.ab.T),
        )
        for name, resid in checks:
            err = np.abs(resid).max()
            if err > atol:
                raise CorruptedStateError(f"Majorana block invariant '{name}' "
                                          f"violated by {err:.3e}")

    def windows(self, sites: Sequence[int], signs: Optional[np.ndarray] = None):
        """Submatrices over `sites`, with relabeling signs applied if given."""
        ix = np.ix_(sites, sites)
        if signs is None:
            return self.bb[ix], self.aa[ix], self.ab[ix], self.ba[ix]
        s = np.outer(signs, signs)
        return s * self.bb[ix], s * self.aa[ix], s * self.ab[ix], s * self.ba[ix]


@dataclass
class MajoranaRows:
    """Toeplitz representation of translationally invariant Majorana blocks.

    Entry arrays are indexed by the relative distance d = n - m through
    row(d) = array[d + L - 1], d in [-(L-1), L-1].
    """

    L: int
    aa: np.ndarray
    bb: np.ndarray
    ab: np.ndarray

    def _toeplitz(self, row: np.ndarray) -> np.ndarray:
        idx = np.arange(self.L)[None, :] - np.arange(self.L)[:, None] + self.L - 1
        return row[idx]

    def dense(self) -> MajoranaBlocks:
        ab = self._toeplitz(self.ab)
        ba_row = -self.ab[::-1]  # ba(d) = -ab(-d)
        return MajoranaBlocks(aa=self._toeplitz(self.aa),
                              bb=self._toeplitz(self.bb),
                              ab=ab, ba=self._toeplitz(ba_row))

    def windows(self, w: int):
        """Blocks over w contiguous sites (by translational invariance)."""
        idx = np.arange(w)[None, :] - np.arange(w)[:, None] + self.L - 1
        ba_row = -self.ab[::-1]
        return self.bb[idx], self.aa[idx], self.ab[idx], ba_row[idx]


def blocks_from_state(state: CorrelationState) -> MajoranaBlocks:
    """Majorana blocks as exact linear combinations of C, F, their adjoints and 1.

    Valid for any pure Gaussian state, translationally invariant or not.
    """
    C, F = state.C, state.F
    ident = np.eye(state.L)
    Fd = F.conj().T
    return MajoranaBlocks(
        aa=ident + C - C.T + F + Fd,
        bb=F + Fd + C.T - C - ident,
        ab=Fd - F + C + C.T - ident,
        ba=Fd - F - C - C.T + ident,
    )


def _fourier_sums(weights: np.ndarray, L: int) -> np.ndarray:
    """E[d] = sum_{k>0} w_k e^{i k d} on the anti-periodic grid, d = 0..L-1."""
    padded = np.zeros(L, dtype=complex)
    padded[1:L // 2 + 1] = weights
    d = np.arange(L)
    return np.exp(-1j * np.pi * d / L) * (L * np.fft.ifft(padded))


def majorana_rows(amplitudes, L: int) -> MajoranaRows:
    """Toeplitz Majorana blocks of the momentum-product state with (u_k, v_k).

    O(L log L) via FFT; `amplitudes` is a sequence of (u, v) pairs or
    ModeData, ordered like allowed_momenta(L).
    """
    if len(amplitudes) != L // 2:
        raise ParameterError(
            f"expected {L // 2} amplitude pairs for L={L}, got {len(amplitudes)}")
    if isinstance(amplitudes[0], ModeData):
        u = np.array([m.u for m in amplitudes])
        v = np.array([m.v for m in amplitudes])
    else:
        u = np.array([a[0] for a in amplitudes])
        v = np.array([a[1] for a in amplitudes])
    uv = u * v.conj()
    e_im = _fourier_sums(uv.imag, L)
    e_re = _fourier_sums(uv.real, L)
    e_uu = _fourier_sums(np.abs(u) ** 2 - np.abs(v) ** 2, L)
    sin_im = e_im.imag  # sum_k sin(kd) Im(u v*)
    sin_re = e_re.imag
    cos_uu = e_uu.real

    d0 = L - 1  # index of d = 0
    aa = np.zeros(2 * L - 1, dtype=complex)
    ab = np.zeros(2 * L - 1)
    # d >= 0 from the FFT row, d < 0 by parity (sin odd, cos even)
    aa[d0:] = 4j / L * sin_im
    aa[:d0] = -4j / L * sin_im[1:][::-1]
    bb = aa.copy()
    aa[d0] += 1.0
    bb[d0] -= 1.0
    ab[d0:] = 2.0 / L * cos_uu + 4.0 / L * sin_re
    ab[:d0] = (2.0 / L * cos_uu - 4.0 / L * sin_re)[1:][::-1]
    return MajoranaRows(L=L, aa=aa, bb=bb, ab=ab.astype(complex))


def blocks_from_amplitudes(amplitudes, L: int) -> MajoranaBlocks:
    """Dense Majorana blocks of a translationally invariant momentum-product state."""
    return majorana_rows(amplitudes, L).dense()


def pfaffian(a: np.ndarray):
    """Pfaffian of an even-dimensional antisymmetric matrix.

    Pivoted Parlett-Reid elimination, O(n^3); satisfies Pf(A)^2 = det(A).
    Returns a float for real input, complex otherwise.
    """
    a = np.asarray(a)
    n = a.shape[0]
    if a.ndim != 2 or a.shape[1] != n:
        raise ContractError(f"expected a square matrix, got shape {a.shape}")
    if n % 2:
        raise ContractError(f"Pfaffian requires even dimension, got {n}")
    if n == 0:
        return 1.0
    scale = max(1.0, np.abs(a).max())
    asym = np.abs(a + a.T).max()
    if asym > 1e-8 * scale:
        raise ContractError(f"matrix is not antisymmetric: max|A + A^T| = {asym:.3e}")
    val = pfaffian_kernel(np.array(a, dtype=complex, order="C"))
    if not np.iscomplexobj(a):
        return float(val.real)
    return complex(val)


def _channel_matrix(wbb, waa, wab, wba, d: int, channel: str) -> np.ndarray:
    """Antisymmetric Pfaffian matrix of one spin-correlator channel.

    The windows span the d+1 sites of the chord; B-type rows use M_BB + 1,
    A-type rows M_AA - 1 (the identity removes the coincident-site
    contractions that never appear in a Wick pairing).
    """
    w = d + 1
    ident = np.eye(w)
    sbb = wbb + ident
    saa = waa - ident
    if channel == "xx":
        return np.block([[sbb[:d, :d], wba[:d, 1:w]],
                         [wab[1:w, :d], saa[1:w, 1:w]]])
    if channel == "yy":
        return np.block([[saa[:d, :d], wab[:d, 1:w]],
                         [wba[1:w, :d], sbb[1:w, 1:w]]])
    if channel == "xy":
        return np.block([[sbb, wba[:, 1:d]],
                         [wab[1:d, :], saa[1:d, 1:d]]])
    if channel == "yx":
        return np.block([[saa, wab[:, 1:d]],
                         [wba[1:d, :], sbb[1:d, 1:d]]])
    raise ContractError(f"unknown channel {channel!r}")


def _channel_prefactor(d: int, channel: str) -> complex:
    # signs fixed by the Jordan-Wigner operator ordering and pinned against
    # the exact-diagonalization reference in the test suite
    if channel == "xx":
        return (-1.0) ** ((d - 1) * d // 2)
    if channel == "yy":
        return (-1.0) ** ((d + 1) * d // 2)
    if channel == "xy":
        return -1j * (-1.0) ** ((d + 1) * d // 2)
    if channel == "yx":
        return 1j * (-1.0) ** ((d - 1) * d // 2)
    raise ContractError(f"unknown channel {channel!r}")


def _pfaffian_value(mat: np.ndarray, d: int, channel: str):
    asym = np.abs(mat + mat.T).max()
    if asym > PFAFFIAN_ASYM_TOL:
        raise CorruptedStateError(
            f"{channel} Pfaffian matrix lost antisymmetry: {asym:.3e}")
    mat = 0.5 * (mat - mat.T)
    return _channel_prefactor(d, channel) * pfaffian_kernel(
        np.ascontiguousarray(mat, dtype=complex))


def _string_correlator(blocks_windows, d: int, channel: str):
    wbb, waa, wab, wba = blocks_windows
    return _pfaffian_value(_channel_matrix(wbb, waa, wab, wba, d, channel),
                           d, channel)


def _check_pair(blocks: MajoranaBlocks, m: int, n: int) -> int:
    L = blocks.L
    if not (0 <= m < L and 0 <= n < L):
        raise ContractError(f"sites ({m}, {n}) out of range for L={L}")
    if m >= n:
        raise ContractError(f"need m < n, got ({m}, {n})")
    return n - m


def spin_xx(blocks: MajoranaBlocks, m: int, n: int):
    """Connected <sx_m sx_n> for 0 <= m < n < L (equal to the full correlator)."""
    d = _check_pair(blocks, m, n)
    return _string_correlator(blocks.windows(range(m, n + 1)), d, "xx")


def spin_yy(blocks: MajoranaBlocks, m: int, n: int):
    """Connected <sy_m sy_n> for 0 <= m < n < L."""
    d = _check_pair(blocks, m, n)
    return _string_correlator(blocks.windows(range(m, n + 1)), d, "yy")


def spin_xy(blocks: MajoranaBlocks, m: int, n: int):
    """Connected <sx_m sy_n> for 0 <= m < n < L."""
    d = _check_pair(blocks, m, n)
    return _string_correlator(blocks.windows(range(m, n + 1)), d, "xy")


def spin_yx(blocks: MajoranaBlocks, m: int, n: int):
    """Connected <sy_m sx_n> for 0 <= m < n < L."""
    d = _check_pair(blocks, m, n)
    return _string_correlator(blocks.windows(range(m, n + 1)), d, "yx")


def spin_zz(blocks: MajoranaBlocks) -> np.ndarray:
    """Connected <sz_m sz_n> matrix (entrywise products of block elements).

    sz_j = A_j B_j is string-free, so this holds for every pair including
    wrapped chords and the diagonal, where it reduces to Var(sz_j).
    """
    return blocks.ab * blocks.ba - blocks.aa * blocks.bb


@dataclass
class SpinCorrelationTensor:
    """Connected spin-spin correlators C^{ab}_{ij} for all sites.

    Only the five structurally nonvanishing blocks are stored; the mixed
    transverse-longitudinal blocks (xz, yz, zx, zy) are identically zero
    because single x/y spin operators map to odd fermion strings.
    """

    L: int
    cxx: np.ndarray
    cyy: np.ndarray
    czz: np.ndarray
    cxy: np.ndarray
    cyx: np.ndarray
    mixed_z_blocks_zero: bool = True

    def block(self, alpha: str, beta: str) -> np.ndarray:
        key = alpha + beta
        stored = {"xx": self.cxx, "yy": self.cyy, "zz": self.czz,
                  "xy": self.cxy, "yx": self.cyx}
        if key in stored:
            return stored[key]
        if key in ("xz", "yz", "zx", "zy"):
            return np.zeros((self.L, self.L), dtype=complex)
        raise ContractError(f"unknown correlator block {key!r}")

    def row(self, alpha: str, beta: str) -> np.ndarray:
        """Correlators from site 0: values indexed by distance 0..L-1."""
        return self.block(alpha, beta)[0]


def _tensor_from_rows(rows: MajoranaRows, check_antipodal: bool) -> SpinCorrelationTensor:
    """Toeplitz fast path: one Pfaffian per (distance, channel)."""
    L = rows.L
    half = L // 2
    vals = {ch: np.zeros(L, dtype=complex) for ch in ("xx", "yy", "xy", "yx")}
    sz = rows.ab[L - 1].real  # on-site <sz>
    vals["xx"][0] = 1.0
    vals["yy"][0] = 1.0
    vals["xy"][0] = 1j * sz
    vals["yx"][0] = -1j * sz
    for d in range(1, half + 1):
        windows = rows.windows(d + 1)
        for ch in ("xx", "yy", "xy", "yx"):
            vals[ch][d] = _string_correlator(windows, d, ch)
    if check_antipodal:
        gap = abs(vals["xy"][half] - vals["yx"][half])
        if gap > 1e-8:
            raise CorruptedStateError(
                f"antipodal xy/yx correlators disagree by {gap:.3e}")
    for d in range(half + 1, L):
        vals["xx"][d] = vals["xx"][L - d]
        vals["yy"][d] = vals["yy"][L - d]
        vals["xy"][d] = vals["yx"][L - d]
        vals["yx"][d] = vals["xy"][L - d]
    idx = (np.arange(L)[None, :] - np.arange(L)[:, None]) % L
    zz_row = np.empty(L, dtype=complex)
    d0 = L - 1
    for d in range(L):
        ab_p, ab_m = rows.ab[d0 + d], rows.ab[d0 - d]
        zz_row[d] = ab_p * (-ab_m) - rows.aa[d0 + d] * rows.bb[d0 + d]
    return SpinCorrelationTensor(
        L=L, cxx=vals["xx"][idx], cyy=vals["yy"][idx], czz=zz_row[idx],
        cxy=vals["xy"][idx], cyx=vals["yx"][idx])


def _tensor_from_blocks(blocks: MajoranaBlocks,
                        check_antipodal: bool) -> SpinCorrelationTensor:
    """Generic path for states without translational invariance.

    Every pair is evaluated through its shorter arc; wrapped chords relabel
    the ring origin, flipping the sign of Majorana correlators between
    relabeled and non-relabeled sites (valid in the even-parity sector).
    """
    L = blocks.L
    cxx = np.zeros((L, L), dtype=complex)
    cyy = np.zeros((L, L), dtype=complex)
    cxy = np.zeros((L, L), dtype=complex)
    cyx = np.zeros((L, L), dtype=complex)
    sz = blocks.ab.diagonal().real
    for i in range(L):
        cxx[i, i] = 1.0
        cyy[i, i] = 1.0
        cxy[i, i] = 1j * sz[i]
        cyx[i, i] = -1j * sz[i]
    for i in range(L):
        for j in range(i + 1, L):
            d = j - i
            dist = min(d, L - d)
            use_direct = d <= L - d
            if use_direct:
                win = blocks.windows(range(i, j + 1))
                xx = _string_correlator(win, d, "xx")
                yy = _string_correlator(win, d, "yy")
                xy = _string_correlator(win, d, "xy")
                yx = _string_correlator(win, d, "yx")
            if d >= L - d:
                # chord through the boundary: window starts at j, wraps to i
                sites = list(range(j, L)) + list(range(0, i + 1))
                signs = np.ones(len(sites))
                signs[L - j:] = -1.0
                win_w = blocks.windows(sites, signs)
                xx_w = _string_correlator(win_w, L - d, "xx")
                yy_w = _string_correlator(win_w, L - d, "yy")
                # first operator now sits on site j, so channels swap
                xy_w = _string_correlator(win_w, L - d, "yx")
                yx_w = _string_correlator(win_w, L - d, "xy")
                if use_direct:
                    if check_antipodal:
                        gap = max(abs(xx - xx_w), abs(yy - yy_w),
                                  abs(xy - xy_w), abs(yx - yx_w))
                        if gap > 1e-8:
                            raise CorruptedStateError(
                                f"antipodal chord ({i},{j}) relabelings "
                                f"disagree by {gap:.3e}")
                else:
                    xx, yy, xy, yx = xx_w, yy_w, xy_w, yx_w
            cxx[i, j] = cxx[j, i] = xx
            cyy[i, j] = cyy[j, i] = yy
            cxy[i, j] = xy
            cyx[j, i] = xy
            cyx[i, j] = yx
            cxy[j, i] = yx
    return SpinCorrelationTensor(L=L, cxx=cxx, cyy=cyy, czz=spin_zz(blocks),
                                 cxy=cxy, cyx=cyx)


def correlation_tensor(source, check_antipodal: bool = True) -> SpinCorrelationTensor:
    """All connected spin-spin correlators of a Gaussian state.

    `source` may be a CorrelationState (generic trajectory state), a
    MajoranaBlocks, a MajoranaRows, or a sequence of vacuum amplitudes
    (u_k, v_k) / ModeData; the translationally invariant inputs take the
    Toeplitz fast path with one Pfaffian per distance and channel.
    """
    if isinstance(source, CorrelationState):
        return _tensor_from_blocks(blocks_from_state(source), check_antipodal)
    if isinstance(source, MajoranaRows):
        return _tensor_from_rows(source, check_antipodal)
    if isinstance(source, MajoranaBlocks):
        return _tensor_from_blocks(source, check_antipodal)
    if isinstance(source, (list, tuple)):
        rows = majorana_rows(source, 2 * len(source))
        return _tensor_from_rows(rows, check_antipodal)
    raise ContractError(f"cannot build a correlation tensor from {type(source)}")


def correlator_rows(rows: MajoranaRows, distances,
                    channels=("xx", "yy", "xy", "yx")) -> dict:
    """Correlators C_{0,d} of a translationally invariant state at selected distances.

    The economical large-L path: only the requested distances are evaluated
    (one Pfaffian per distance and channel), so profiles of chains with many
    thousands of sites stay cheap.  Returns {channel: values} plus the
    distance list under "ell"; the zz channel is closed-form in the rows.
    """
    distances = [int(d) for d in distances]
    if any(d < 1 or d > rows.L - 1 for d in distances):
        raise ContractError(f"distances must lie in [1, L-1={rows.L - 1}]")
    out = {ch: np.zeros(len(distances), dtype=complex) for ch in channels}
    d0 = rows.L - 1
    for col, d in enumerate(distances):
        win = None
        for ch in channels:
            if ch == "zz":
                out[ch][col] = (rows.ab[d0 + d] * (-rows.ab[d0 - d])
                                - rows.aa[d0 + d] * rows.bb[d0 + d])
                continue
            if win is None:
                win = rows.windows(d + 1)
            out[ch][col] = _string_correlator(win, d, ch)
    out["ell"] = np.array(distances)
    return out


def ctilde_from_state(source, distances, channels=("xx",)) -> dict:
    """Site-averaged absolute correlators of a trajectory state, per distance.

    Evaluates only the chords needed for the requested distances instead of
    the full tensor; every chord goes through its shorter arc.  Channels are
    correlator labels from {"xx", "yy", "zz", "xy", "yx"}.
    """
    blocks = blocks_from_state(source) if isinstance(source, CorrelationState) \
        else source
    L = blocks.L
    distances = [int(d) for d in distances]
    if any(d < 1 or d > L // 2 for d in distances):
        raise ContractError(f"distances must lie in [1, L/2={L // 2}]")
    zz = spin_zz(blocks) if "zz" in channels else None
    string_channels = [ch for ch in channels if ch != "zz"]
    out = {ch: np.zeros(len(distances)) for ch in channels}
    for col, ell in enumerate(distances):
        acc = {ch: 0.0 for ch in string_channels}
        for i in range(L):
            j = (i + ell) % L
            if i < j:
                win = blocks.windows(range(i, j + 1))
            else:
                # chord through the boundary, relabeled to start at i;
                # the first operator is still site i, so channels are kept
                sites = list(range(i, L)) + list(range(0, j + 1))
                signs = np.ones(len(sites))
                signs[L - i:] = -1.0
                win = blocks.windows(sites, signs)
            for ch in string_channels:
                acc[ch] += abs(_string_correlator(win, ell, ch))
        for ch in string_channels:
            out[ch][col] = acc[ch] / L
        if zz is not None:
            i = np.arange(L)
            out["zz"][col] = float(np.abs(zz[i, (i + ell) % L]).mean())
    out["ell"] = np.array(distances)
    return out


def averaged_abs_correlator(tensor: SpinCorrelationTensor, ell: int) -> dict:
    """Site-averaged absolute correlators (1/L) sum_i |C_{i, i+ell}| per channel.

    The index i + ell wraps around the ring; 1 <= ell <= L/2.
    """
    L = tensor.L
    if not 1 <= ell <= L // 2:
        raise ContractError(f"need 1 <= ell <= L/2 = {L // 2}, got {ell}")
    i = np.arange(L)
    j = (i + ell) % L
    return {ch: float(np.abs(tensor.block(ch[0], ch[1])[i, j]).mean())
            for ch in CHANNELS}


def ctilde_profile(tensor: SpinCorrelationTensor,
                   distances: Optional[Sequence[int]] = None) -> dict:
    """Averaged absolute correlators for a range of distances (default 1..L/2)."""
    if distances is None:
        distances = range(1, tensor.L // 2 + 1)
    distances = list(distances)
    prof = {ch: np.empty(len(distances)) for ch in CHANNELS}
    for col, ell in enumerate(distances):
        vals = averaged_abs_correlator(tensor, ell)
        for ch in CHANNELS:
            prof[ch][col] = vals[ch]
    prof["ell"] = np.array(distances)
    return prof


def majorana_covariance(source) -> np.ndarray:
    """Real antisymmetric covariance of the Hermitian Majorana pair per site.

    Site-major ordering (a_{2j} from A_j, a_{2j+1} from i*B_j); pure states
    satisfy G @ G = -identity.
    """
    blocks = blocks_from_state(source) if isinstance(source, CorrelationState) \
        else source
    L = blocks.L
    ident = np.eye(L)
    g = np.empty((2 * L, 2 * L))
    g[0::2, 0::2] = (1j * (blocks.aa - ident)).real
    g[1::2, 1::2] = (-1j * (blocks.bb + ident)).real
    g[0::2, 1::2] = -blocks.ab.real
    g[1::2, 0::2] = -blocks.ba.real
    return 0.5 * (g - g.T)


def purity_defect(source) -> float:
    """max |G^2 + 1| of the Majorana covariance; zero for pure Gaussian states."""
    g = majorana_covariance(source)
    return float(np.abs(g @ g + np.eye(g.shape[0])).max())


def tensor_to_csv(tensor: SpinCorrelationTensor, path) -> None:
    """CSV export with columns (alpha, beta, i, j, re, im)."""
    with open(path, "w", newline="\n") as fh:
        fh.write("alpha,beta,i,j,re,im\n")
        for ch in CHANNELS:
            block = tensor.block(ch[0], ch[1])
            for i in range(tensor.L):
                for j in range(tensor.L):
                    v = block[i, j]
                    fh.write(f"{ch[0]},{ch[1]},{i},{j},{v.real!r},{v.imag!r}\n")


def ctilde_to_csv(profile: dict, path) -> None:
    """CSV export of averaged absolute correlators: (alpha, beta, ell, value)."""
    with open(path, "w", newline="\n") as fh:
        fh.write("alpha,beta,ell,value\n")
        for ch in CHANNELS:
            for ell, val in zip(profile["ell"], profile[ch]):
                fh.write(f"{ch[0]},{ch[1]},{int(ell)},{val!r}\n")
