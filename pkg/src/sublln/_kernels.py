"""Compiled inner loops: counter-based uniforms, member draws, path simulation.

Every draw is a pure function of ``(seed, replication, step)`` so replications
can be split across threads in any way without changing a single bit of output.
"""

import numpy as np
from numba import njit

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_KEY_SALT = np.uint64(0xD1B54A32D192ED03)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_INV53 = 1.0 / 9007199254740992.0

KIND_DISCRETE = 0
KIND_PARETO = 1

STRAT_CONSTANT = 0
STRAT_ROUND_ROBIN = 1
STRAT_THRESHOLD = 2
STRAT_LAST_SIGN = 3
STRAT_GENOME = 4


@njit(cache=True, nogil=True)
def _mix64(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@njit(cache=True, nogil=True)
def uniform(seed, replication, step):
    """Uniform in the open interval (0, 1) keyed by (seed, replication, step)."""
    key = _mix64(np.uint64(seed) + _GOLDEN * (np.uint64(replication) + np.uint64(1)))
    salt = _mix64(key ^ _KEY_SALT)
    x = _mix64(key + _GOLDEN * np.uint64(step))
    x = _mix64(x ^ salt)
    return (np.float64(x >> _S11) + 0.5) * _INV53


@njit(cache=True, nogil=True)
def draw(kind, a, b, alpha, scale, values, cum, length, u):
    if kind == KIND_DISCRETE:
        k = 0
        while k < length - 1 and u >= cum[k]:
            k += 1
        x = values[k]
    else:
        if u < 0.5:
            x = -scale * (2.0 * u) ** (-1.0 / alpha)
        else:
            x = scale * (2.0 * (1.0 - u)) ** (-1.0 / alpha)
    return a + b * x


@njit(cache=True, nogil=True)
def draw_block(kind, a, b, alpha, scale, values, cum, length, seed, replication, steps):
    out = np.empty(steps.shape[0])
    for i in range(steps.shape[0]):
        u = uniform(seed, replication, steps[i])
        out[i] = draw(kind, a, b, alpha, scale, values, cum, length, u)
    return out


@njit(cache=True, nogil=True)
def choose(code, ints, level, genome, n_members, j, s_prev, x_prev):
    if code == STRAT_CONSTANT:
        return ints[0]
    if code == STRAT_ROUND_ROBIN:
        return (j - 1) % n_members
    if code == STRAT_THRESHOLD:
        if s_prev < level * (j - 1):
            return ints[1]
        return ints[0]
    if code == STRAT_LAST_SIGN:
        if x_prev < 0.0:
            return ints[0]
        return ints[1]
    return genome[(j - 1) % genome.shape[0]]


@njit(cache=True, nogil=True)
def single_path(kinds, a, b, alpha, scale, values, cum, lengths,
                code, ints, level, genome, seed, replication, n):
    xs = np.empty(n)
    idx = np.empty(n, dtype=np.int64)
    sums = np.empty(n)
    k_members = kinds.shape[0]
    s = 0.0
    c = 0.0
    x_prev = 0.0
    for j in range(1, n + 1):
        k = choose(code, ints, level, genome, k_members, j, s + c, x_prev)
        u = uniform(seed, replication, j)
        x = draw(kinds[k], a[k], b[k], alpha[k], scale[k], values[k], cum[k], lengths[k], u)
        t = s + x
        if abs(s) >= abs(x):
            c += (s - t) + x
        else:
            c += (x - t) + s
        s = t
        xs[j - 1] = x
        idx[j - 1] = k
        sums[j - 1] = s + c
        x_prev = x
    return xs, idx, sums


@njit(cache=True, nogil=True)
def path_statistics(kinds, a, b, alpha, scale, values, cum, lengths,
                    code, ints, level, genome, seed, rep_start, n_reps,
                    horizons, norm, seg_starts, c_hi, c_lo,
                    out_sums, out_sup, out_inf, out_clamped):
    """Run ``n_reps`` replications to ``horizons[-1]``.

    ``out_sums[i, h]`` receives S_n at ``horizons[h]``; ``out_sup[i, g]`` and
    ``out_inf[i, g]`` receive the extremes over n in [seg_starts[g], N] of
    (S_n - n c_hi) / norm[n] and (S_n - n c_lo) / norm[n]; ``out_clamped[i]``
    counts steps with |X_j| >= norm[j].
    """
    n_total = horizons[horizons.shape[0] - 1]
    n_seg = seg_starts.shape[0]
    k_members = kinds.shape[0]
    seg_sup = np.empty(n_seg)
    seg_inf = np.empty(n_seg)
    for i in range(n_reps):
        rep = rep_start + i
        s = 0.0
        c = 0.0
        x_prev = 0.0
        h = 0
        g = -1
        clamped = 0
        for q in range(n_seg):
            seg_sup[q] = -np.inf
            seg_inf[q] = np.inf
        for j in range(1, n_total + 1):
            k = choose(code, ints, level, genome, k_members, j, s + c, x_prev)
            u = uniform(seed, rep, j)
            x = draw(kinds[k], a[k], b[k], alpha[k], scale[k], values[k], cum[k], lengths[k], u)
            t = s + x
            if abs(s) >= abs(x):
                c += (s - t) + x
            else:
                c += (x - t) + s
            s = t
            x_prev = x
            if abs(x) >= norm[j]:
                clamped += 1
            total = s + c
            while h < horizons.shape[0] and horizons[h] == j:
                out_sums[i, h] = total
                h += 1
            while g + 1 < n_seg and seg_starts[g + 1] <= j:
                g += 1
            if g >= 0:
                up = (total - j * c_hi) / norm[j]
                lo = (total - j * c_lo) / norm[j]
                if up > seg_sup[g]:
                    seg_sup[g] = up
                if lo < seg_inf[g]:
                    seg_inf[g] = lo
        best_sup = -np.inf
        best_inf = np.inf
        for q in range(n_seg - 1, -1, -1):
            if seg_sup[q] > best_sup:
                best_sup = seg_sup[q]
            if seg_inf[q] < best_inf:
                best_inf = seg_inf[q]
            out_sup[i, q] = best_sup
            out_inf[i, q] = best_inf
        out_clamped[i] = clamped
