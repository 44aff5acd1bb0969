"""Classical i.i.d. reference: plain Python loops over ``Distribution.sample``.

Shares nothing with the compiled path kernel except the per-step draw, so a
singleton ambiguity set must reproduce these statistics bit for bit.
"""

from __future__ import annotations

import math

import numpy as np

from .distributions import Distribution


def classical_statistics(dist: Distribution, horizons, replications: int, seed: int,
                         r: float = 1.0, starts=None, rep_start: int = 0):
    """Return ``(sums, sup_upper, inf_lower, clamped)`` shaped like ``PathStatistics``."""
    horizons = sorted(set(int(h) for h in horizons))
    starts = sorted(set(int(s) for s in (starts or [horizons[-1]])))
    n_max = horizons[-1]
    mu = dist.mean()
    norm = np.arange(n_max + 1, dtype=float) ** (1.0 / r)
    sums = np.zeros((replications, len(horizons)))
    sup = np.zeros((replications, len(starts)))
    inf = np.zeros((replications, len(starts)))
    clamped = np.zeros(replications, dtype=np.int64)
    for i in range(replications):
        rep = rep_start + i
        s = c = 0.0
        best_hi = [-math.inf] * len(starts)
        best_lo = [math.inf] * len(starts)
        for j in range(1, n_max + 1):
            x = dist.sample(seed, rep, j)
            t = s + x
            if abs(s) >= abs(x):
                c += (s - t) + x
            else:
                c += (x - t) + s
            s = t
            if abs(x) >= norm[j]:
                clamped[i] += 1
            total = s + c
            if j in horizons:
                sums[i, horizons.index(j)] = total
            up = (total - j * mu) / norm[j]
            lo = (total - j * mu) / norm[j]
            for g, n0 in enumerate(starts):
                if j >= n0:
                    best_hi[g] = max(best_hi[g], up)
                    best_lo[g] = min(best_lo[g], lo)
        sup[i], inf[i] = best_hi, best_lo
    return sums, sup, inf, clamped
