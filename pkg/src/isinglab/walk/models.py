"""Step distributions for directed (space-time) random walks.

A step is a pair ``(X_par, X_lat)`` with ``X_par`` a positive integer (the
time-like coordinate) and ``X_lat`` in ``Z^{d-1}``.  The models here stand in
for the difference walk of two synchronised cluster walks; only the
qualitative properties checked by :func:`model_violations` matter for the
scaling statements.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import reduce

import numpy as np

__all__ = [
    "WalkModel",
    "model_violations",
    "make_lazy_model",
    "make_pure_lazy_model",
    "make_geom_model",
    "model_from_steps",
    "make_model",
    "MODEL_NAMES",
]

MODEL_NAMES = ("lazy", "pure-lazy", "geom")


def _hnf_unimodular(vectors, D) -> bool:
    """Whether integer ``vectors`` generate all of ``Z^D`` (row reduction over Z)."""
    rows = [list(map(int, v)) for v in vectors if any(v)]
    for col in range(D):
        pivot_rows = [r for r in rows if r[col] != 0]
        rest = [r for r in rows if r[col] == 0]
        while len(pivot_rows) > 1:
            pivot_rows.sort(key=lambda r: abs(r[col]))
            p = pivot_rows[0]
            nxt = [p]
            for r in pivot_rows[1:]:
                q = r[col] // p[col]
                r2 = [a - q * b for a, b in zip(r, p)]
                (nxt if r2[col] != 0 else rest).append(r2)
            pivot_rows = nxt
        if not pivot_rows or abs(pivot_rows[0][col]) != 1:
            return False
        # remaining rows only matter in later columns
        rows = [r for r in rest if any(r)]
    return True


@dataclass(frozen=True, eq=False)
class WalkModel:
    """Finite-support step distribution of a directed walk in ``Z x Z^{d-1}``.

    Attributes
    ----------
    d : int
        Space-time dimension.
    delta : float
        Cone opening parameter in ``(0, 1/sqrt(2))``.
    par : ndarray of int, shape (m,)
        Parallel increments (all >= 1).
    lat : ndarray of int, shape (m, d-1)
        Lateral increments.
    prob : ndarray, shape (m,)
        Step probabilities.
    """

    d: int
    delta: float
    par: np.ndarray
    lat: np.ndarray
    prob: np.ndarray
    name: str = "custom"

    def __post_init__(self):
        par = np.asarray(self.par, dtype=np.int64).reshape(-1)
        lat = np.asarray(self.lat, dtype=np.int64).reshape(len(par), self.d - 1)
        prob = np.asarray(self.prob, dtype=float).reshape(-1)
        for a in (par, lat, prob):
            a.setflags(write=False)
        object.__setattr__(self, "par", par)
        object.__setattr__(self, "lat", lat)
        object.__setattr__(self, "prob", prob)
        bad = model_violations(self)
        if bad:
            raise ValueError("invalid walk model: " + "; ".join(bad))

    @property
    def D(self) -> int:
        """Lateral dimension ``d - 1``."""
        return self.d - 1

    @property
    def kmax(self) -> int:
        return int(self.par.max())

    @property
    def smax(self) -> int:
        """Largest lateral coordinate of a step (sup norm)."""
        return int(np.abs(self.lat).max()) if self.lat.size else 0

    @property
    def lateral_variance(self) -> float:
        """Variance of one lateral coordinate per step (largest over coordinates)."""
        return float(np.max((self.prob[:, None] * self.lat.astype(float) ** 2).sum(axis=0)))

    def tail(self, j: int) -> float:
        """``P(X_par > j)``."""
        return float(self.prob[self.par > j].sum())

    def steps(self):
        """Iterate over ``(par, lat tuple, prob)``."""
        for k, z, p in zip(self.par.tolist(), self.lat.tolist(), self.prob.tolist()):
            yield k, tuple(z), p

    def step_prob(self, k, z) -> float:
        z = tuple(z)
        for kk, zz, p in self.steps():
            if kk == k and zz == z:
                return p
        return 0.0

    def flip_symmetric(self) -> bool:
        """Invariance under flipping the sign of any single lateral coordinate."""
        table = {(k, z): p for k, z, p in self.steps()}
        for i in range(self.D):
            for (k, z), p in table.items():
                zf = tuple(-c if j == i else c for j, c in enumerate(z))
                if not math.isclose(table.get((k, zf), 0.0), p, rel_tol=1e-14, abs_tol=0.0):
                    return False
        return True

    def __repr__(self):
        return f"WalkModel({self.name}, d={self.d}, delta={self.delta}, {len(self.prob)} steps)"


def model_violations(model: WalkModel) -> list:
    """Every failed structural condition of a walk model (empty when valid)."""
    out = []
    d, delta = model.d, model.delta
    if d < 2:
        out.append("d must be >= 2")
        return out
    if not 0 < delta < 1 / math.sqrt(2):
        out.append(f"delta={delta} outside (0, 1/sqrt(2))")
    par, lat, prob = model.par, model.lat, model.prob
    if np.any(prob <= 0):
        out.append("step probabilities must be positive")
    if abs(prob.sum() - 1.0) > 1e-12:
        out.append(f"probabilities sum to {prob.sum()!r}")
    if np.any(par < 1):
        out.append("parallel increments must be >= 1")
    keys = list(zip(par.tolist(), map(tuple, lat.tolist())))
    if len(set(keys)) != len(keys):
        out.append("duplicate support points")
    norms = np.linalg.norm(lat.astype(float), axis=1)
    for k, z, nz in zip(par.tolist(), lat.tolist(), norms):
        if k < 0.5 * delta * nz - 1e-12:
            out.append(f"cone property fails at step ({k}, {tuple(z)})")
    table = dict(zip(keys, prob.tolist()))
    for (k, z), p in table.items():
        q = table.get((k, tuple(-c for c in z)), 0.0)
        if not math.isclose(p, q, rel_tol=1e-14, abs_tol=0.0):
            out.append(f"lateral symmetry fails at step ({k}, {z})")
            break
    D = d - 1
    if not _hnf_unimodular(lat.tolist(), D):
        out.append("lateral walk is not irreducible")
    # periodic iff some nonzero parity character is odd on every lateral step
    for av in itertools.product((0, 1), repeat=D):
        if any(av) and all(sum(a * c for a, c in zip(av, z)) % 2 == 1 for z in lat.tolist()):
            out.append("lateral walk is periodic")
            break
    if len(par) and reduce(math.gcd, par.tolist()) != 1:
        out.append("parallel renewal process is periodic")
    if len(par) and par.min() != 1:
        out.append("parallel increments cannot reach every time (no step of length 1)")
    return out


def _unit_laterals(D):
    pts = [(0,) * D]
    for i in range(D):
        for s in (1, -1):
            pts.append(tuple(s if j == i else 0 for j in range(D)))
    return pts


def model_from_steps(d, delta, steps: dict, name="custom") -> WalkModel:
    """Build a model from ``{(par, lat tuple): prob}``."""
    items = sorted(steps.items())
    par = [k for (k, _), _ in items]
    lat = [z for (_, z), _ in items]
    prob = [p for _, p in items]
    return WalkModel(d, delta, np.array(par), np.array(lat).reshape(len(par), d - 1), np.array(prob), name)


def make_lazy_model(d=2, delta=0.4, p_two=1.0 / 3.0) -> WalkModel:
    """``X_par`` in ``{1, 2}`` with ``P(X_par = 2) = p_two``; ``X_lat`` uniform on ``{0, +-e_i}``.

    The two coordinates are independent.  With ``p_two = 0`` this is the
    pure-lazy walk (unit parallel steps).
    """
    if not 0 <= p_two < 1:
        raise ValueError("p_two must lie in [0, 1)")
    D = d - 1
    lats = _unit_laterals(D)
    steps = {}
    for k, pk in ((1, 1.0 - p_two), (2, p_two)):
        if pk > 0:
            for z in lats:
                steps[(k, z)] = pk / len(lats)
    name = "pure-lazy" if p_two == 0 else "lazy"
    return model_from_steps(d, delta, steps, name)


def make_pure_lazy_model(d=2, delta=0.4) -> WalkModel:
    return make_lazy_model(d, delta, 0.0)


def make_geom_model(d=2, delta=0.4, ratio=0.5, kmax=4) -> WalkModel:
    """Truncated geometric ``X_par`` on ``1..kmax``; given ``X_par = k``, ``X_lat`` uniform on the
    l1-ball of radius ``min(k, 2)``."""
    D = d - 1
    wk = np.array([ratio ** (k - 1) for k in range(1, kmax + 1)])
    wk /= wk.sum()
    steps = {}
    for k in range(1, kmax + 1):
        r = min(k, 2)
        ball = [z for z in itertools.product(range(-r, r + 1), repeat=D) if sum(map(abs, z)) <= r]
        for z in ball:
            steps[(k, z)] = wk[k - 1] / len(ball)
    return model_from_steps(d, delta, steps, "geom")


def make_model(name: str, d: int = 2, delta: float = 0.4, **kw) -> WalkModel:
    """Model factory by name: ``lazy``, ``pure-lazy`` or ``geom``."""
    if name == "lazy":
        return make_lazy_model(d, delta, **kw)
    if name == "pure-lazy":
        return make_pure_lazy_model(d, delta)
    if name == "geom":
        return make_geom_model(d, delta, **kw)
    raise ValueError(f"unknown walk model {name!r}; choose from {MODEL_NAMES}")
