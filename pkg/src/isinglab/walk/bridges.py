"""Bridges of the difference walk: non-intersection probabilities and Monte Carlo.

The non-intersection event for a bridge from ``(0, a)`` to ``(L, b)`` asks that
every step ``(k, z)`` taken from a point with lateral coordinate ``y``
satisfies ``|y| > 2 delta k``: the enlarged diamond of that step misses the
time axis.  Bridges are sampled step by step with probabilities tilted by the
exact hitting probabilities of the target (Doob transform), so no sample is
rejected.  These routines are for ``d = 2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .models import WalkModel

__all__ = [
    "hitting_table",
    "nonintersection_exact",
    "nonintersection_enumerate",
    "mc_nonintersection",
    "NonIntersectionEstimate",
    "nonnegative_bridge_sums",
    "mc_return_stats",
]


def _require_d2(model):
    if model.d != 2:
        raise ValueError("bridge routines are implemented for d = 2")


def hitting_table(model: WalkModel, L: int, end: int, radius: int):
    """``h[m, y + radius] = P_{(m, y)}(visit (L, end))`` for ``0 <= m <= L``.

    Rows beyond ``L`` (up to ``L + kmax``) are zero padding.
    """
    _require_d2(model)
    width = 2 * radius + 1
    s = model.smax
    h = np.zeros((L + model.kmax + 1, width + 2 * s))
    h[L, end + radius + s] = 1.0
    steps = list(model.steps())
    for m in range(L - 1, -1, -1):
        row = np.zeros(width)
        for k, (z,), p in steps:
            row += p * h[m + k, s + z : s + z + width]
        h[m, s : s + width] = row
    return h[:, s : s + width]


def _radius(model, L, start, end):
    return abs(start) + abs(end) + model.smax * L + 1


def nonintersection_exact(model: WalkModel, L: int, start: int, end: int):
    """Exact ``(P(event and bridge), P(bridge), P(event | bridge))`` by constrained DP."""
    _require_d2(model)
    R = _radius(model, L, start, end)
    width = 2 * R + 1
    s = model.smax
    pos = np.arange(-R, R + 1)
    G = np.zeros((L + 1, width + 2 * s))
    H = np.zeros((L + 1, width + 2 * s))
    G[0, start + R + s] = H[0, start + R + s] = 1.0
    steps = list(model.steps())
    for m in range(1, L + 1):
        g = np.zeros(width)
        hrow = np.zeros(width)
        for k, (z,), p in steps:
            if k > m:
                continue
            srcG = G[m - k, s - z : s - z + width]
            srcH = H[m - k, s - z : s - z + width]
            # source lateral is y - z; the step is allowed when |y - z| > 2 delta k
            ok = np.abs(pos - z) > 2.0 * model.delta * k
            g += p * srcG * ok
            hrow += p * srcH
        G[m, s : s + width] = g
        H[m, s : s + width] = hrow
    joint, bridge = float(G[L, end + R + s]), float(H[L, end + R + s])
    return joint, bridge, (joint / bridge if bridge > 0 else float("nan"))


def nonintersection_enumerate(model: WalkModel, L: int, start: int, end: int):
    """Brute-force version of :func:`nonintersection_exact` (small ``L`` only)."""
    _require_d2(model)
    steps = list(model.steps())
    joint = bridge = 0.0

    def rec(m, y, w, good):
        nonlocal joint, bridge
        if m == L:
            if y == end:
                bridge += w
                joint += w if good else 0.0
            return
        for k, (z,), p in steps:
            if m + k <= L:
                rec(m + k, y + z, w * p, good and abs(y) > 2.0 * model.delta * k)

    rec(0, start, 1.0, True)
    return joint, bridge, (joint / bridge if bridge > 0 else float("nan"))


@dataclass(frozen=True)
class NonIntersectionEstimate:
    L: int
    estimate: float
    stderr: float
    samples: int
    successes: int
    bridge_probability: float


def mc_nonintersection(model: WalkModel, L: int, start: int, end: int, samples: int, seed=None,
                       batch: int = 50_000) -> NonIntersectionEstimate:
    """Monte Carlo estimate of the non-intersection probability given the bridge.

    Each bridge is drawn from the walk conditioned to visit ``(L, end)`` by
    choosing every step with probability proportional to its weight times
    the hitting probability of the target from the new position.
    """
    _require_d2(model)
    R = _radius(model, L, start, end)
    h = hitting_table(model, L, end, R)
    h0 = h[0, start + R]
    if h0 <= 0:
        raise ValueError(f"target (L={L}, {end}) is unreachable from lateral {start}")
    rng = np.random.default_rng(seed)
    K = model.par.astype(np.int64)
    Z = model.lat[:, 0].astype(np.int64)
    P = model.prob
    successes = 0
    done_total = 0
    while done_total < samples:
        S = min(batch, samples - done_total)
        m = np.zeros(S, dtype=np.int64)
        y = np.full(S, start, dtype=np.int64)
        good = np.ones(S, dtype=bool)
        active = np.ones(S, dtype=bool)
        while active.any():
            idx = np.flatnonzero(active)
            mi, yi = m[idx], y[idx]
            rows = np.minimum(mi[:, None] + K[None, :], h.shape[0] - 1)
            cols = np.clip(yi[:, None] + Z[None, :] + R, 0, 2 * R)
            w = P[None, :] * h[rows, cols] * ((mi[:, None] + K[None, :]) <= L)
            cw = np.cumsum(w, axis=1)
            r = rng.random(len(idx)) * cw[:, -1]
            choice = (cw < r[:, None]).sum(axis=1)
            choice = np.minimum(choice, len(P) - 1)
            kk = K[choice]
            good[idx] &= np.abs(yi) > 2.0 * model.delta * kk
            m[idx] = mi + kk
            y[idx] = yi + Z[choice]
            active[idx] = m[idx] < L
        if np.any(y != end):
            raise RuntimeError("bridge sampler missed the target; hitting table inconsistent")
        successes += int(good.sum())
        done_total += S
    p = successes / samples
    se = math.sqrt(max(p * (1 - p), 1.0 / samples) / samples)
    return NonIntersectionEstimate(L, p, se, samples, successes, float(h0))


def nonnegative_bridge_sums(model: WalkModel, m_max: int) -> np.ndarray:
    """``B[m] = P(visit (m, 0) with lateral >= 0 at every earlier visited point)`` from the origin."""
    _require_d2(model)
    R = model.smax * m_max
    s = model.smax
    width = R + 1
    G = np.zeros((m_max + 1, width + 2 * s))
    G[0, s] = 1.0
    steps = list(model.steps())
    for m in range(1, m_max + 1):
        row = np.zeros(width)
        for k, (z,), p in steps:
            if k <= m:
                row += p * G[m - k, s - z : s - z + width]
        G[m, s : s + width] = row
    return G[:, s].copy()


def mc_return_stats(model: WalkModel, levels, samples: int, seed=None, batch: int = 100_000):
    """Monte Carlo ``u_n`` and ``f_n`` at the given levels (any ``d``).

    Returns ``{n: (u_hat, u_se, f_hat, f_se)}`` with binomial standard errors.
    """
    levels = sorted(set(int(n) for n in levels))
    n_max = max(levels)
    rng = np.random.default_rng(seed)
    K = model.par.astype(np.int64)
    Z = model.lat.astype(np.int64)
    lvl_index = np.full(n_max + 1, -1)
    lvl_index[levels] = np.arange(len(levels))
    visits = np.zeros(len(levels))
    firsts = np.zeros(len(levels))
    done = 0
    while done < samples:
        S = min(batch, samples - done)
        par = np.zeros(S, dtype=np.int64)
        lat = np.zeros((S, model.D), dtype=np.int64)
        returned = np.zeros(S, dtype=bool)
        alive = np.ones(S, dtype=bool)
        while alive.any():
            idx = np.flatnonzero(alive)
            c = rng.choice(len(K), size=len(idx), p=model.prob)
            par[idx] += K[c]
            lat[idx] += Z[c]
            at0 = np.all(lat[idx] == 0, axis=1) & (par[idx] <= n_max)
            hit = idx[at0]
            li = lvl_index[par[hit]]
            rec = li >= 0
            np.add.at(visits, li[rec], 1.0)
            first = rec & ~returned[hit]
            np.add.at(firsts, li[first], 1.0)
            returned[hit] = True
            alive[idx] = par[idx] < n_max
        done += S
    out = {}
    for n, v, f in zip(levels, visits, firsts):
        u, fh = v / samples, f / samples
        out[n] = (u, math.sqrt(u * (1 - u) / samples), fh, math.sqrt(fh * (1 - fh) / samples))
    return out
