"""Numba kernels for the two numerical hot loops: Pfaffians and annealing sweeps.

Both kernels are deterministic.  The annealer uses an explicit SplitMix64
stream (a named, splittable 64-bit generator) so that results are
reproducible across platforms and numba versions.
"""
import numba
import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_TWO53 = 1.0 / 9007199254740992.0  # 2**-53


@numba.njit(cache=True)
def _sm64_next(state):
    state[0] += _GOLDEN
    z = state[0]
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


@numba.njit(cache=True)
def _sm64_uniform(state):
    return float(_sm64_next(state) >> np.uint64(11)) * _TWO53


@numba.njit(cache=True)
def _random_unit3(state, out):
    # normalized Box-Muller triple; resample on (astronomically unlikely) underflow
    while True:
        u1 = _sm64_uniform(state)
        u2 = _sm64_uniform(state)
        u3 = _sm64_uniform(state)
        u4 = _sm64_uniform(state)
        if u1 < 1e-300 or u3 < 1e-300:
            continue
        r1 = np.sqrt(-2.0 * np.log(u1))
        r2 = np.sqrt(-2.0 * np.log(u3))
        x = r1 * np.cos(2.0 * np.pi * u2)
        y = r1 * np.sin(2.0 * np.pi * u2)
        z = r2 * np.cos(2.0 * np.pi * u4)
        n = np.sqrt(x * x + y * y + z * z)
        if n > 1e-12:
            out[0] = x / n
            out[1] = y / n
            out[2] = z / n
            return


@numba.njit(cache=True)
def pfaffian_kernel(a):
    """Pfaffian of an even-dimensional antisymmetric complex matrix.

    Parlett-Reid elimination with row/column pivoting on the largest
    subdiagonal element; O(n^3).  `a` is destroyed.
    """
    n = a.shape[0]
    val = 1.0 + 0.0j
    for k in range(0, n - 1, 2):
        kp = k + 1
        big = abs(a[k + 1, k])
        for i in range(k + 2, n):
            m = abs(a[i, k])
            if m > big:
                big = m
                kp = i
        if kp != k + 1:
            for j in range(n):
                tmp = a[k + 1, j]
                a[k + 1, j] = a[kp, j]
                a[kp, j] = tmp
            for i in range(n):
                tmp = a[i, k + 1]
                a[i, k + 1] = a[i, kp]
                a[i, kp] = tmp
            val = -val
        piv = a[k, k + 1]
        if piv == 0.0:
            return 0.0 + 0.0j
        val *= piv
        if k + 2 < n:
            inv = 1.0 / piv
            for i in range(k + 2, n):
                ti = a[k, i] * inv
                bi = a[i, k + 1]
                if ti != 0.0 or bi != 0.0:
                    for j in range(k + 2, n):
                        a[i, j] += ti * a[j, k + 1] - bi * a[k, j] * inv
    return val


@numba.njit(cache=True)
def coordinate_ascent_kernel(q, v, lam, vecs, max_sweeps):
    """Cyclic exact per-site sphere-constrained maximization of v^T q v.

    lam[j] / vecs[j] hold the ascending eigendecomposition of the on-site
    3x3 block of q; each site update solves the secular equation
    sum_c beta_c^2 / (mu - lam_c)^2 = 1 by bisection.  Returns the value.
    """
    n3 = v.shape[0]
    nsites = n3 // 3
    g = np.empty(3)
    beta = np.empty(3)
    new = np.empty(3)
    for _ in range(max_sweeps):
        improved = 0.0
        for j in range(nsites):
            b = 3 * j
            for c in range(3):
                acc = 0.0
                for r in range(n3):
                    acc += q[b + c, r] * v[r]
                acc -= (q[b + c, b] * v[b] + q[b + c, b + 1] * v[b + 1]
                        + q[b + c, b + 2] * v[b + 2])
                g[c] = acc
            bn = np.sqrt(g[0] ** 2 + g[1] ** 2 + g[2] ** 2)
            top = lam[j, 2]
            if bn < 1e-14:
                for c in range(3):
                    new[c] = vecs[j, c, 2]
            else:
                for c in range(3):
                    beta[c] = (vecs[j, 0, c] * g[0] + vecs[j, 1, c] * g[1]
                               + vecs[j, 2, c] * g[2])
                s = 0.0
                hard = True
                for c in range(3):
                    d = top - lam[j, c]
                    if d > 1e-13:
                        s += (beta[c] / d) ** 2
                    elif abs(beta[c]) > 1e-13:
                        hard = False
                if hard and s <= 1.0:
                    # b orthogonal to the top eigenspace: fill the norm there
                    wt = np.sqrt(max(1.0 - s, 0.0))
                    ndeg = 0
                    for c in range(3):
                        if top - lam[j, c] <= 1e-13:
                            ndeg += 1
                    for o in range(3):
                        acc = 0.0
                        for c in range(3):
                            d = top - lam[j, c]
                            if d > 1e-13:
                                acc += vecs[j, o, c] * beta[c] / d
                            else:
                                acc += vecs[j, o, c] * wt / ndeg
                        new[o] = acc
                else:
                    lo = top
                    hi = top + bn + 1e-12
                    for _it in range(80):
                        mid = 0.5 * (lo + hi)
                        phi = 0.0
                        for c in range(3):
                            phi += (beta[c] / (mid - lam[j, c])) ** 2
                        if phi > 1.0:
                            lo = mid
                        else:
                            hi = mid
                        if hi - lo <= 1e-14 * max(1.0, abs(hi)):
                            break
                    mu = 0.5 * (lo + hi)
                    for o in range(3):
                        acc = 0.0
                        for c in range(3):
                            acc += vecs[j, o, c] * beta[c] / (mu - lam[j, c])
                        new[o] = acc
                nn = np.sqrt(new[0] ** 2 + new[1] ** 2 + new[2] ** 2)
                if nn < 1e-300:
                    continue
                for c in range(3):
                    new[c] /= nn
            d0 = new[0] - v[b]
            d1 = new[1] - v[b + 1]
            d2 = new[2] - v[b + 2]
            gain = 2.0 * (g[0] * d0 + g[1] * d1 + g[2] * d2)
            gain += (d0 * (q[b, b] * d0 + q[b, b + 1] * d1 + q[b, b + 2] * d2)
                     + d1 * (q[b + 1, b] * d0 + q[b + 1, b + 1] * d1 + q[b + 1, b + 2] * d2)
                     + d2 * (q[b + 2, b] * d0 + q[b + 2, b + 1] * d1 + q[b + 2, b + 2] * d2))
            if gain > 0.0:
                v[b] = new[0]
                v[b + 1] = new[1]
                v[b + 2] = new[2]
                improved += gain
        val = v @ (q @ v)
        if improved <= 1e-13 * (1.0 + abs(val)):
            break
    return v @ (q @ v)


@numba.njit(cache=True)
def anneal_restart(q, v, sweeps, moves_per_sweep, t_initial, cooling,
                   cone_angle, uniform_fraction, seed):
    """One simulated-annealing restart maximizing v^T q v over per-site unit vectors.

    `q` is the (3L, 3L) real symmetric coupling matrix, `v` the flattened
    (L, 3) start field (modified in place).  Single-site Metropolis moves
    under geometric cooling; the running value is refreshed from scratch at
    every sweep boundary to contain incremental-update drift.

    Returns (best_v, best_value, accepted, proposed, best_sweep).
    """
    n3 = v.shape[0]
    nsites = n3 // 3
    state = np.empty(1, dtype=np.uint64)
    state[0] = seed

    g = q @ v
    val = v @ g
    best_v = v.copy()
    best_val = val
    best_sweep = 0
    accepted = 0
    proposed = 0
    temp = t_initial
    prop = np.empty(3)
    xi = np.empty(3)

    for sweep in range(sweeps):
        for _ in range(moves_per_sweep):
            j = int(_sm64_next(state) % np.uint64(nsites))
            b = 3 * j
            if _sm64_uniform(state) < uniform_fraction:
                _random_unit3(state, prop)
            else:
                # rotate the current vector by an angle <= cone_angle
                # toward a random tangent direction
                _random_unit3(state, xi)
                dot = xi[0] * v[b] + xi[1] * v[b + 1] + xi[2] * v[b + 2]
                tx = xi[0] - dot * v[b]
                ty = xi[1] - dot * v[b + 1]
                tz = xi[2] - dot * v[b + 2]
                tn = np.sqrt(tx * tx + ty * ty + tz * tz)
                if tn < 1e-12:
                    _random_unit3(state, prop)
                else:
                    theta = cone_angle * _sm64_uniform(state)
                    ct = np.cos(theta)
                    st = np.sin(theta) / tn
                    prop[0] = ct * v[b] + st * tx
                    prop[1] = ct * v[b + 1] + st * ty
                    prop[2] = ct * v[b + 2] + st * tz
                    pn = np.sqrt(prop[0] ** 2 + prop[1] ** 2 + prop[2] ** 2)
                    prop[0] /= pn
                    prop[1] /= pn
                    prop[2] /= pn
            dx = prop[0] - v[b]
            dy = prop[1] - v[b + 1]
            dz = prop[2] - v[b + 2]
            dval = 2.0 * (g[b] * dx + g[b + 1] * dy + g[b + 2] * dz)
            dval += (dx * (q[b, b] * dx + q[b, b + 1] * dy + q[b, b + 2] * dz)
                     + dy * (q[b + 1, b] * dx + q[b + 1, b + 1] * dy + q[b + 1, b + 2] * dz)
                     + dz * (q[b + 2, b] * dx + q[b + 2, b + 1] * dy + q[b + 2, b + 2] * dz))
            proposed += 1
            accept = dval >= 0.0
            if not accept and temp > 0.0:
                accept = _sm64_uniform(state) < np.exp(dval / temp)
            if accept:
                accepted += 1
                # q is symmetric: rows b..b+2 are the needed columns
                for r in range(n3):
                    g[r] += q[b, r] * dx + q[b + 1, r] * dy + q[b + 2, r] * dz
                v[b] = prop[0]
                v[b + 1] = prop[1]
                v[b + 2] = prop[2]
                val += dval
                if val > best_val:
                    best_val = val
                    best_sweep = sweep
                    for r in range(n3):
                        best_v[r] = v[r]
        g = q @ v
        val = v @ g
        temp *= cooling
    best_val = best_v @ (q @ best_v)
    return best_v, best_val, accepted, proposed, best_sweep
