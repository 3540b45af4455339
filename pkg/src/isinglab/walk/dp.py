"""Level-by-level dynamic programming for directed walks.

For a walk started at lateral position ``x`` the recursion runs over parallel
levels ``n = 0, 1, ...``:

* ``V_n(y)`` is the probability of visiting ``(n, y)``;
* ``W_n(y)`` is the probability of visiting ``(n, y)`` with no visit to the
  lateral origin at any level in ``(0, n)``; the origin entry of ``W_n`` is
  the first-return probability and is removed before propagating.

``V_n = sum_k A_k V_{n-k}`` where ``A_k`` convolves with the lateral law of
steps of parallel length ``k``; ``W`` obeys the same recursion with the
origin killed.  Levels whose lateral laws are proportional share one
convolution.

Two grid layouts are used.  Walks from the origin under a model invariant
under single-coordinate sign flips live on the nonnegative orthant with
mirror padding (``2^{d-1}`` times fewer cells); everything else uses a full
centred box with the lateral steps ``z`` and ``-z`` applied as one term, so
lateral symmetry is exact in both layouts.  Mass pushed beyond the active
radius is removed and booked in a per-level leak ledger.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .models import WalkModel

__all__ = ["WalkTables", "TruncationError", "dp_tables", "lateral_radius", "q_tables"]

DEFAULT_MEMORY = 2 * 1024**3


class TruncationError(RuntimeError):
    """The requested leak tolerance cannot be met within the memory budget."""

    def __init__(self, msg, required_radius):
        super().__init__(msg)
        self.required_radius = required_radius


def _gauss_radius(level: int, var_level: float, smax: int, D: int, eps: float) -> int:
    """Heuristic radius holding all but about ``eps`` of the lateral mass at a parallel level.

    Gaussian tail with per-level variance ``var_level`` (inflated by a safety
    factor), a union bound over coordinates and a margin of two steps.  The
    actual loss is measured by the DP, so the rule only has to be sensible.
    """
    if level <= 0:
        return 0
    z = math.sqrt(2.0 * math.log(4.0 * D / eps))
    return int(math.ceil(z * math.sqrt(1.2 * var_level * level))) + 2 * smax


def _level_variance(model: WalkModel) -> float:
    mean_par = float(np.dot(model.prob, model.par))
    return model.lateral_variance / mean_par


def lateral_radius(model: WalkModel, n_max: int, tol: float, exact: bool | None = None) -> int:
    """Lateral box radius for a DP up to level ``n_max``.

    In ``d = 2`` (or with ``exact=True``) the radius ``smax * n_max`` covers
    every reachable point, so no mass is lost.
    """
    full = model.smax * n_max
    if exact is None:
        exact = model.D == 1
    if exact:
        return full
    return min(full, _gauss_radius(n_max, _level_variance(model), model.smax, model.D, tol / max(n_max, 1)))


def _kernel_classes(model: WalkModel):
    """Group parallel lengths whose lateral laws are proportional.

    Returns a list of ``(points, weights, {k: c_k})`` with ``weights`` summing to one.
    """
    classes = []
    for k in sorted(set(model.par.tolist())):
        sel = model.par == k
        pts = model.lat[sel]
        w = model.prob[sel]
        ck = float(w.sum())
        order = np.lexsort(pts.T[::-1]) if pts.shape[1] else np.arange(len(pts))
        pts, w = pts[order], w[order] / ck
        for cls in classes:
            if cls[0].shape == pts.shape and np.array_equal(cls[0], pts) and np.allclose(cls[1], w, rtol=1e-14, atol=0):
                cls[2][k] = ck
                break
        else:
            classes.append((pts, w, {k: ck}))
    return classes


def _band_sum(arr, lo, hi):
    """Sum of ``arr`` over cells with some index outside ``[lo, hi)`` (no cancellation)."""
    total = 0.0
    D = arr.ndim
    for ax in range(D):
        inner = [slice(lo, hi)] * ax
        for part in (slice(0, lo), slice(hi, None)):
            idx = tuple(inner + [part] + [slice(None)] * (D - ax - 1))
            total += float(arr[idx].sum())
    return total


def _pair_terms(points, weights):
    """Group ``z`` with ``-z`` (equal weights by symmetry) into single terms."""
    seen = set()
    terms = []
    for z, w in zip(map(tuple, points.tolist()), weights.tolist()):
        if z in seen:
            continue
        mz = tuple(-c for c in z)
        seen.add(z)
        seen.add(mz)
        terms.append((z, mz if mz != z else None, w))
    return terms


class _MirrorGrid:
    """Nonnegative orthant ``[0, a]^D``; entry ``y`` stands for every sign flip of ``y``."""

    def __init__(self, D, smax):
        self.D, self.s = D, smax

    def shape(self, a):
        return (a + 1,) * self.D

    def delta(self, a, x):
        arr = np.zeros(self.shape(a))
        arr[(0,) * self.D] = 1.0
        return arr

    def embed(self, arr, a_to):
        a_from = arr.shape[0] - 1
        if a_from == a_to:
            return arr
        return np.pad(arr, [(0, a_to - a_from)] * self.D)

    def mult(self, a):
        v = np.full(a + 1, 2.0)
        v[0] = 1.0
        m = v
        for _ in range(self.D - 1):
            m = np.multiply.outer(m, v)
        return m

    def apply(self, src, terms, a_out):
        """Convolve ``src`` with the lateral law ``terms``; return ``(cropped, leaked mass)``."""
        s, D = self.s, self.D
        B = a_out + s + 1
        a_src = src.shape[0] - 1
        ext = np.pad(src, [(s, B + s - (a_src + 1))] * D)
        for ax in range(D):
            idx = [slice(None)] * D
            for i in range(1, s + 1):
                idx_dst, idx_src = list(idx), list(idx)
                idx_dst[ax], idx_src[ax] = s - i, s + i
                ext[tuple(idx_dst)] = ext[tuple(idx_src)]
        out = np.zeros((B,) * D)
        for z, w in terms:
            out += w * ext[tuple(slice(s - c, s - c + B) for c in z)]
        crop = out[(slice(0, a_out + 1),) * D]
        leak = _band_sum(out * self.mult(B - 1), 0, a_out + 1) if s else 0.0
        return crop.copy(), leak

    def terms(self, points, weights):
        return [(tuple(z), w) for z, w in zip(points.tolist(), weights.tolist())]

    def at(self, arr, y):
        y = tuple(abs(c) for c in y)
        if max(y, default=0) >= arr.shape[0]:
            return 0.0
        return float(arr[y])

    def origin(self, arr):
        return (0,) * self.D

    def total(self, arr):
        return float((arr * self.mult(arr.shape[0] - 1)).sum())


class _FullGrid:
    """Centred box ``[-a, a]^D``."""

    def __init__(self, D, smax):
        self.D, self.s = D, smax

    def shape(self, a):
        return (2 * a + 1,) * self.D

    def delta(self, a, x):
        arr = np.zeros(self.shape(a))
        arr[tuple(c + a for c in x)] = 1.0
        return arr

    def embed(self, arr, a_to):
        a_from = (arr.shape[0] - 1) // 2
        if a_from == a_to:
            return arr
        return np.pad(arr, [(a_to - a_from, a_to - a_from)] * self.D)

    def apply(self, src, terms, a_out):
        s, D = self.s, self.D
        b = a_out + s
        a_src = (src.shape[0] - 1) // 2
        pad = b + s - a_src
        ext = np.pad(src, [(pad, pad)] * D)
        n = 2 * b + 1
        out = np.zeros((n,) * D)
        for z, mz, w in terms:
            acc = ext[tuple(slice(s - c, s - c + n) for c in z)]
            if mz is not None:
                acc = acc + ext[tuple(slice(s - c, s - c + n) for c in mz)]
            out += w * acc
        crop = out[(slice(s, s + 2 * a_out + 1),) * D]
        leak = _band_sum(out, s, s + 2 * a_out + 1)
        return crop.copy(), leak

    def terms(self, points, weights):
        return _pair_terms(points, weights)

    def at(self, arr, y):
        a = (arr.shape[0] - 1) // 2
        if max((abs(c) for c in y), default=0) > a:
            return 0.0
        return float(arr[tuple(c + a for c in y)])

    def origin(self, arr):
        a = (arr.shape[0] - 1) // 2
        return (a,) * self.D

    def total(self, arr):
        return float(arr.sum())


@dataclass
class WalkTables:
    """Return statistics of a directed walk from lateral position ``start``.

    ``u[n] = p_n(start, 0)``, ``f[n] = q_n(start, 0)`` (with ``f[0] = 0``),
    ``rbar[n]`` the probability that the first lateral return has parallel
    coordinate ``> n``, and ``r[n]`` the same with ``>= n``.  ``leak[n]`` is
    the cumulative mass removed by truncation up to level ``n``.  ``p`` and
    ``q`` hold requested slices ``y -> array over n``.
    """

    model_name: str
    d: int
    start: tuple
    n: np.ndarray
    u: np.ndarray
    f: np.ndarray
    rbar: np.ndarray
    leak: np.ndarray
    radius: int
    tolerance: float
    p: dict = field(default_factory=dict)
    q: dict = field(default_factory=dict)

    @property
    def n_max(self) -> int:
        return int(self.n[-1])

    @property
    def r(self) -> np.ndarray:
        """``P(first-return level >= n)``: ``r[0] = 1`` and ``r[n] = rbar[n-1]``."""
        return np.concatenate(([1.0], self.rbar[:-1]))

    @property
    def leaked(self) -> float:
        return float(self.leak[-1])

    def rows(self):
        for i in range(len(self.n)):
            yield int(self.n[i]), float(self.u[i]), float(self.f[i]), float(self.rbar[i]), float(self.leak[i])


def _run(model, n_max, tol, start, targets, memory, exact, mirror):
    D = model.D
    grid = (_MirrorGrid if mirror else _FullGrid)(D, model.smax)
    R = lateral_radius(model, n_max, tol, exact)
    ext_norm = max((abs(c) for c in start), default=0)
    cells = (R + ext_norm + 2 * model.smax + 1) ** D * (1 if mirror else 2**D)
    need = cells * 8 * (2 * (model.kmax + 2) + 4)
    if need > memory:
        raise TruncationError(
            f"lateral radius {R} needs about {need / 2**30:.1f} GiB (budget {memory / 2**30:.1f} GiB)", R
        )
    use_exact = exact if exact is not None else D == 1
    eps = tol / max(n_max, 1)
    var = _level_variance(model)

    def active(n):
        cap = R + ext_norm
        if use_exact:
            return min(cap, ext_norm + model.smax * n)
        return min(cap, ext_norm + model.smax * n, ext_norm + _gauss_radius(n, var, model.smax, D, eps))

    classes = [(grid.terms(p, w), ck) for p, w, ck in _kernel_classes(model)]
    a0 = active(0)
    V = deque([grid.delta(a0, start)], maxlen=model.kmax)
    W = deque([grid.delta(a0, start)], maxlen=model.kmax)
    start_is_origin = all(c == 0 for c in start)
    origin_y = (0,) * D

    u = np.zeros(n_max + 1)
    f = np.zeros(n_max + 1)
    leak = np.zeros(n_max + 1)
    mass = np.zeros(n_max + 1)
    u[0] = 1.0 if start_is_origin else 0.0
    mass[0] = 1.0
    tails = np.array([model.tail(j) for j in range(model.kmax + 1)])
    rbar = np.zeros(n_max + 1)
    rbar[0] = 1.0
    ps = {y: np.zeros(n_max + 1) for y in targets}
    qs = {y: np.zeros(n_max + 1) for y in targets}
    for y in targets:
        ps[y][0] = 1.0 if tuple(y) == tuple(start) else 0.0
        qs[y][0] = 1.0 if (tuple(y) == tuple(start) and not start_is_origin) else 0.0

    total_leak = 0.0
    for n in range(1, n_max + 1):
        a = active(n)
        outs = []
        for hist in (V, W):
            acc = None
            for terms, ck in classes:
                comb = None
                for k, c in ck.items():
                    if k <= len(hist):
                        term = c * grid.embed(hist[-k], a)
                        comb = term if comb is None else comb + term
                if comb is None:
                    continue
                res, lk = grid.apply(comb, terms, a)
                total_leak += lk
                acc = res if acc is None else acc + res
            outs.append(acc if acc is not None else np.zeros(grid.shape(a)))
        Vn, Wn = outs
        u[n] = grid.at(Vn, origin_y)
        f[n] = grid.at(Wn, origin_y)
        for y in targets:
            ps[y][n] = grid.at(Vn, y)
            qs[y][n] = grid.at(Wn, y)
        Wn[grid.origin(Wn)] = 0.0
        mass[n] = grid.total(Wn)
        lo = max(0, n - model.kmax + 1)
        rbar[n] = float(np.dot(mass[lo : n + 1], tails[n - np.arange(lo, n + 1)]))
        leak[n] = total_leak
        V.append(Vn)
        W.append(Wn)
    return u, f, rbar, leak, R, ps, qs


def dp_tables(model: WalkModel, n_max: int, tolerance: float = 1e-12, targets=(), *, exact=None,
              memory=DEFAULT_MEMORY, check_leak=True) -> WalkTables:
    """Exact (up to recorded truncation) return statistics from the lateral origin.

    Parameters
    ----------
    model : WalkModel
    n_max : int
        Largest parallel level.
    tolerance : float
        Bound on the total leaked mass; at least ``1e-14``.
    targets : iterable of lateral points
        Record ``p_n(0, y)`` and ``q_n(0, y)`` slices for these ``y``.
    exact : bool, optional
        Force the exact radius ``smax * n_max`` (default only for ``d = 2``).

    Raises
    ------
    TruncationError
        If the radius needed for ``tolerance`` exceeds the memory budget, or
        the measured leak exceeds ``tolerance``.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    if tolerance < 1e-14:
        raise ValueError("tolerance must be >= 1e-14")
    targets = [tuple(int(c) for c in y) for y in targets]
    for y in targets:
        if len(y) != model.D:
            raise ValueError(f"target {y} must have {model.D} lateral coordinates")
    mirror = model.flip_symmetric()
    start = (0,) * model.D
    u, f, rbar, leak, R, ps, qs = _run(model, n_max, tolerance, start, targets, memory, exact, mirror)
    if check_leak and leak[-1] > tolerance:
        raise TruncationError(f"leaked mass {leak[-1]:.3e} exceeds tolerance {tolerance:.1e}", R)
    return WalkTables(model.name, model.d, start, np.arange(n_max + 1), u, f, rbar, leak, R, tolerance, ps, qs)


def q_tables(model: WalkModel, start, n_max: int, targets, tolerance: float = 1e-12, *, exact=None,
             memory=DEFAULT_MEMORY) -> WalkTables:
    """``p_n(start, y)`` and ``q_n(start, y)`` for a general lateral start."""
    start = tuple(int(c) for c in start)
    targets = [tuple(int(c) for c in y) for y in targets]
    u, f, rbar, leak, R, ps, qs = _run(model, n_max, tolerance, start, targets, memory, exact, False)
    if leak[-1] > tolerance:
        raise TruncationError(f"leaked mass {leak[-1]:.3e} exceeds tolerance {tolerance:.1e}", R)
    return WalkTables(model.name, model.d, start, np.arange(n_max + 1), u, f, rbar, leak, R, tolerance, ps, qs)
