"""Trajectories, synchronisation, cones and diamonds, and the cyclic shift."""

from __future__ import annotations

import itertools
import math
import warnings
from collections import Counter, defaultdict
from dataclasses import dataclass

import numpy as np

from .models import WalkModel

__all__ = [
    "Trajectory",
    "synchronize",
    "difference_walk",
    "in_cone",
    "in_diamond",
    "diamond_points",
    "diamond_necessary_overlap",
    "diamonds_intersect_exact",
    "cyclic_shift",
    "first_argmin",
    "ShiftCensus",
    "cyclic_shift_census",
]


class Trajectory:
    """Space-time points ``(S_par, S_lat...)`` with strictly increasing parallel coordinate."""

    def __init__(self, points, model: WalkModel | None = None):
        pts = np.asarray(points, dtype=np.int64)
        if pts.ndim == 1:
            pts = pts.reshape(0, 2) if pts.size == 0 else pts.reshape(1, -1)
        if pts.ndim != 2 or pts.shape[1] < 2:
            raise ValueError("points must have shape (k+1, d) with d >= 2")
        if len(pts) > 1 and np.any(np.diff(pts[:, 0]) <= 0):
            raise ValueError("parallel coordinate must be strictly increasing")
        if model is not None:
            allowed = {(k, z) for k, z, _ in model.steps()}
            for x in np.diff(pts, axis=0).tolist():
                if (x[0], tuple(x[1:])) not in allowed:
                    raise ValueError(f"increment {tuple(x)} is not in the model support")
        pts.setflags(write=False)
        self.points = pts

    @classmethod
    def from_increments(cls, increments, start=None, model=None):
        inc = np.asarray(increments, dtype=np.int64)
        if inc.ndim == 1:
            inc = inc.reshape(-1, 2)
        d = inc.shape[1] if inc.size else (len(start) if start is not None else 2)
        s = np.zeros(d, dtype=np.int64) if start is None else np.asarray(start, dtype=np.int64)
        pts = np.vstack((s, s + np.cumsum(inc, axis=0))) if len(inc) else s.reshape(1, -1)
        return cls(pts, model)

    @property
    def d(self) -> int:
        return self.points.shape[1]

    @property
    def parallel(self) -> np.ndarray:
        return self.points[:, 0]

    @property
    def lateral(self) -> np.ndarray:
        return self.points[:, 1:]

    @property
    def increments(self) -> np.ndarray:
        return np.diff(self.points, axis=0)

    def __len__(self):
        return len(self.points)

    def __eq__(self, other):
        return isinstance(other, Trajectory) and np.array_equal(self.points, other.points)

    def __repr__(self):
        return f"Trajectory({self.points.tolist()})"


def synchronize(t1: Trajectory, t2: Trajectory):
    """Restrict both walks to their common parallel levels.

    An empty intersection returns two empty trajectories and emits a warning.
    """
    common = np.intersect1d(t1.parallel, t2.parallel)
    if len(common) == 0:
        warnings.warn("trajectories share no parallel level", RuntimeWarning, stacklevel=2)
        return Trajectory(np.zeros((0, t1.d))), Trajectory(np.zeros((0, t2.d)))
    i = np.searchsorted(t1.parallel, common)
    j = np.searchsorted(t2.parallel, common)
    return Trajectory(t1.points[i]), Trajectory(t2.points[j])


def difference_walk(pair) -> Trajectory:
    """Lateral difference of a synchronised pair; the parallel coordinate is shared."""
    a, b = pair
    if len(a) != len(b) or not np.array_equal(a.parallel, b.parallel):
        raise ValueError("pair is not synchronised")
    pts = np.column_stack((a.parallel, a.lateral - b.lateral))
    return Trajectory(pts)


def in_cone(t, v, delta: float, orientation: str = "forward") -> bool:
    """``<t - v, e_1> >= delta |t - v|`` (forward) or the same for ``v - t`` (backward)."""
    diff = np.asarray(t, dtype=float) - np.asarray(v, dtype=float)
    if orientation == "backward":
        diff = -diff
    elif orientation != "forward":
        raise ValueError("orientation must be 'forward' or 'backward'")
    return bool(diff[0] >= delta * np.linalg.norm(diff) - 1e-12)


def in_diamond(t, v, w, delta: float) -> bool:
    return in_cone(t, v, delta, "forward") and in_cone(t, w, delta, "backward")


def diamond_points(v, w, delta: float) -> set:
    """Lattice points of the diamond ``D(v, w)`` by scanning its bounding box."""
    v = np.asarray(v, dtype=np.int64)
    w = np.asarray(w, dtype=np.int64)
    if w[0] < v[0]:
        return set()
    h = int(w[0] - v[0])
    rad = int(math.floor(h / delta)) + 1
    centre = v[1:]
    ranges = [range(int(v[0]), int(w[0]) + 1)] + [range(int(c) - rad, int(c) + rad + 1) for c in centre]
    return {p for p in itertools.product(*ranges) if in_diamond(p, v, w, delta)}


def diamond_necessary_overlap(lateral, parallel_step, delta: float) -> bool:
    """The screen ``|lateral| < 2 delta * parallel_step`` on one difference-walk step."""
    return bool(np.linalg.norm(np.atleast_1d(np.asarray(lateral, dtype=float))) < 2.0 * delta * parallel_step)


def diamonds_intersect_exact(v, w, v2, w2, delta: float) -> bool:
    """Whether two diamonds share a lattice point (bounded exhaustive scan)."""
    return bool(diamond_points(v, w, delta) & diamond_points(v2, w2, delta))


def first_argmin(values) -> int:
    values = np.asarray(values)
    return int(np.flatnonzero(values == values.min())[0])


def cyclic_shift(traj: Trajectory, j0: int | None = None) -> Trajectory:
    """Rotate the increments of a laterally closed trajectory by ``j0``.

    With the default ``j0`` (first index where the lateral coordinate is
    minimal; ``d = 2``) the result starts and ends where ``traj`` does and
    never goes below its start laterally.
    """
    inc = traj.increments
    k = len(inc)
    if k == 0:
        return traj
    if not np.array_equal(traj.lateral[0], traj.lateral[-1]):
        raise ValueError("cyclic shift needs a laterally closed trajectory")
    if j0 is None:
        if traj.d != 2:
            raise ValueError("default rotation point is defined for d = 2 only")
        j0 = first_argmin(traj.lateral[:, 0])
    j0 = int(j0) % k
    return Trajectory.from_increments(np.roll(inc, -j0, axis=0), traj.points[0])


@dataclass(frozen=True)
class ShiftCensus:
    """Exhaustive facts about the cyclic shift on ``k``-step closed bridges of a d=2 model.

    Attributes
    ----------
    n_bridges : int
        Laterally closed ``k``-step trajectories enumerated.
    all_nonnegative, weights_preserved, multiset_preserved : bool
        Properties of every image.
    surjective : bool
        Every nonnegative bridge is an image (of itself).
    injective_with_index : bool
        ``(image, j0)`` determines the trajectory.
    max_fiber : int
        Largest number of trajectories mapped to one image (at most ``k``).
    counting_ok : bool
        For every parallel endpoint, nonnegative-bridge weight ``>= 1/k`` times all-bridge weight.
    min_counting_ratio : float
        Smallest ``k * W(nonneg) / W(all)`` over endpoints.
    """

    k: int
    n_bridges: int
    all_nonnegative: bool
    weights_preserved: bool
    multiset_preserved: bool
    surjective: bool
    injective_with_index: bool
    max_fiber: int
    counting_ok: bool
    min_counting_ratio: float

    @property
    def ok(self) -> bool:
        return (
            self.all_nonnegative
            and self.weights_preserved
            and self.multiset_preserved
            and self.surjective
            and self.injective_with_index
            and self.max_fiber <= self.k
            and self.counting_ok
        )


def cyclic_shift_census(model: WalkModel, k: int) -> ShiftCensus:
    """Enumerate all ``k``-step laterally closed trajectories and audit the shift."""
    if model.d != 2:
        raise ValueError("the census is defined for d = 2")
    steps = [((kk, z[0]), p) for kk, z, p in model.steps()]
    fibers = defaultdict(list)
    by_end_all = Counter()
    nonneg_images = {}
    nonneg_ok = weight_ok = multiset_ok = True
    inj = {}
    inj_ok = True
    n = 0
    for seq in itertools.product(steps, repeat=k):
        inc = [s for s, _ in seq]
        if sum(z for _, z in inc) != 0:
            continue
        n += 1
        w = math.prod(p for _, p in seq)
        traj = Trajectory.from_increments(inc)
        j0 = first_argmin(traj.lateral[:, 0])
        img = cyclic_shift(traj)
        key = tuple(map(tuple, img.increments.tolist()))
        wimg = math.prod(model.step_prob(a, (b,)) for a, b in key)
        nonneg_ok &= bool(np.all(img.lateral[:, 0] >= 0))
        weight_ok &= math.isclose(w, wimg, rel_tol=1e-12)
        multiset_ok &= Counter(map(tuple, inc)) == Counter(key)
        fibers[key].append(tuple(map(tuple, inc)))
        if (key, j0) in inj and inj[(key, j0)] != tuple(map(tuple, inc)):
            inj_ok = False
        inj[(key, j0)] = tuple(map(tuple, inc))
        end = int(traj.parallel[-1])
        by_end_all[end] += w
        if np.all(traj.lateral[:, 0] >= 0):
            nonneg_images[tuple(map(tuple, inc))] = w
    surjective = all(b in fibers for b in nonneg_images)
    by_end_nonneg = Counter()
    for b, w in nonneg_images.items():
        by_end_nonneg[sum(x for x, _ in b)] += w
    ratios = [k * by_end_nonneg[e] / by_end_all[e] for e in by_end_all if by_end_all[e] > 0]
    min_ratio = min(ratios) if ratios else float("inf")
    return ShiftCensus(
        k,
        n,
        nonneg_ok,
        weight_ok,
        multiset_ok,
        surjective,
        inj_ok,
        max((len(v) for v in fibers.values()), default=0),
        min_ratio >= 1.0 - 1e-12,
        min_ratio,
    )
