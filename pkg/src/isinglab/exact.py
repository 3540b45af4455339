"""Exact enumeration of the Ising model and its graphical representations.

Four independent routes to ``<sigma_A>`` on small graphs:

* spins: sum over ``{-1, +1}^V``;
* random currents: sum over odd-edge sets ``g`` with ``dg = A`` weighted by
  ``prod_{e in g} sinh(K_e) prod_{e not in g} cosh(K_e)`` (the closed forms of
  the odd/even series, so no truncation of ``n_e``);
* high temperature: cycle-space enumeration of ``E^A`` weighted by ``tanh``;
* random cluster: sum over bond sets with weight
  ``2^kappa prod (e^{2K_e} - 1)``.

Pairs of currents enter only through the parity class of ``n1 + n2`` on each
edge (zero, even-positive, odd), see :class:`EdgeParityConfig`.

Vertex sets are given by vertex labels; internally they are bitmasks.
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

from .lattice import LatticeGraph

__all__ = [
    "CAPS",
    "CapExceeded",
    "Check",
    "LocalFunction",
    "EdgeParityConfig",
    "SubgraphConfig",
    "spin_expectation",
    "spin_covariance",
    "fourier_coefficients",
    "reconstruct",
    "local_expectation",
    "local_covariance",
    "local_covariance_fourier",
    "current_partition_fn",
    "ht_partition_fn",
    "even_subgraphs",
    "fk_table",
    "fk_probability",
    "fk_even_probability",
    "evenly_partitioned",
    "current_expectation",
    "ht_expectation",
    "fk_expectation",
    "current_pair_sum",
    "verify_switching",
    "truncated_cov",
    "verify_ub_decoupled",
    "verify_crucial_coupling",
    "verify_lb_decoupled",
    "verify_fkg_cancellation",
    "fkg_edge_pairs",
    "gks_check",
]

#: Enumeration caps; raise them at your own (exponential) cost.
CAPS = {"spins": 24, "fk_edges": 24, "current_edges": 24, "pair_edges": 12, "support": 16}

REL_TOL = 1e-10
ABS_FLOOR = 1e-12


class CapExceeded(ValueError):
    pass


def _cap(kind, size):
    if size > CAPS[kind]:
        raise CapExceeded(f"{kind} cap exceeded: {size} > {CAPS[kind]}")


@dataclass(frozen=True)
class Check:
    """Outcome of comparing two exactly computed quantities.

    ``relation`` is ``'=='``, ``'<='`` or ``'>='`` read as ``lhs relation rhs``.
    ``slack`` is nonnegative when the relation holds (for ``'=='`` it is minus
    the absolute difference).
    """

    name: str
    lhs: float
    rhs: float
    relation: str = "=="
    rel_tol: float = REL_TOL
    abs_floor: float = ABS_FLOOR

    def __post_init__(self):
        object.__setattr__(self, "lhs", float(self.lhs))
        object.__setattr__(self, "rhs", float(self.rhs))

    @property
    def slack(self) -> float:
        if self.relation == "<=":
            return self.rhs - self.lhs
        if self.relation == ">=":
            return self.lhs - self.rhs
        return -abs(self.lhs - self.rhs)

    @property
    def tolerance(self) -> float:
        return max(self.abs_floor, self.rel_tol * max(abs(self.lhs), abs(self.rhs)))

    @property
    def ok(self) -> bool:
        return self.slack >= -self.tolerance

    @property
    def abs_diff(self) -> float:
        return abs(self.lhs - self.rhs)


# ---------------------------------------------------------------- utilities


def vmask(graph: LatticeGraph, A: Iterable) -> int:
    m = 0
    for i in graph.indices(A):
        m |= 1 << i
    return m


def _popcount_parity(x: np.ndarray) -> np.ndarray:
    return np.bitwise_count(x) & 1


def _bits(mask: int):
    i = 0
    while mask:
        if mask & 1:
            yield i
        mask >>= 1
        i += 1


class _Key:
    """Hash a graph by its topology and couplings (``beta`` included)."""

    __slots__ = ("graph", "_k")

    def __init__(self, graph, with_beta=True):
        self.graph = graph
        self._k = graph.key() + ((graph.beta,) if with_beta else ())

    def __hash__(self):
        return hash(self._k)

    def __eq__(self, other):
        return self._k == other._k


# ---------------------------------------------------------------- spins


@functools.lru_cache(maxsize=32)
def _spin_weights(key: _Key):
    g = key.graph
    V = g.n_vertices
    _cap("spins", V)
    c = np.arange(1 << V, dtype=np.int64)
    H = np.zeros(c.shape, dtype=float)
    for (i, j), K in zip(g.edges, g.K):
        disagree = ((c >> i) ^ (c >> j)) & 1
        H += K * (1.0 - 2.0 * disagree)
    w = np.exp(H - g.K.sum())
    return c, w, w.sum()


def _spin_moment_mask(graph, mask: int) -> float:
    c, w, Z = _spin_weights(_Key(graph))
    sign = 1.0 - 2.0 * _popcount_parity(c & mask)
    return float(np.dot(w, sign) / Z)


def spin_expectation(graph: LatticeGraph, A: Iterable) -> float:
    """``<sigma_A>`` by summation over all spin configurations."""
    return _spin_moment_mask(graph, vmask(graph, A))


def spin_covariance(graph, A, B) -> float:
    """``Cov(sigma_A, sigma_B)`` from centred products over all configurations."""
    c, w, Z = _spin_weights(_Key(graph))
    sa = 1.0 - 2.0 * _popcount_parity(c & vmask(graph, A))
    sb = 1.0 - 2.0 * _popcount_parity(c & vmask(graph, B))
    ma, mb = np.dot(w, sa) / Z, np.dot(w, sb) / Z
    return float(np.dot(w, (sa - ma) * (sb - mb)) / Z)


# ---------------------------------------------------------------- local functions


@dataclass(frozen=True, eq=False)
class LocalFunction:
    """A function of the spins on a finite support.

    ``table[k]`` is the value on the configuration where the spin at
    ``support[i]`` equals ``-1`` iff bit ``i`` of ``k`` is set.
    """

    support: tuple
    table: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.table)
        if t.shape != (1 << len(self.support),):
            raise ValueError(f"table needs 2^{len(self.support)} entries, got {t.shape}")
        object.__setattr__(self, "support", tuple(self.support))
        object.__setattr__(self, "table", t)

    @classmethod
    def from_callable(cls, support, func):
        """Tabulate ``func(spins)`` where ``spins`` is a tuple of +-1 values."""
        support = tuple(support)
        vals = [func(tuple(1 - 2 * ((k >> i) & 1) for i in range(len(support)))) for k in range(1 << len(support))]
        return cls(support, np.array(vals))

    @classmethod
    def sigma(cls, support, A=None):
        """The product of spins over ``A`` (default: the whole support)."""
        support = tuple(support)
        A = support if A is None else tuple(A)
        pos = [support.index(a) for a in A]
        return cls.from_callable(support, lambda s: math.prod(s[p] for p in pos))


def _wht(x: np.ndarray) -> np.ndarray:
    """Unnormalised Walsh-Hadamard transform along the (only) axis."""
    y = np.array(x, dtype=np.result_type(x, np.int64) if np.issubdtype(np.asarray(x).dtype, np.integer) else float)
    n = len(y)
    h = 1
    while h < n:
        y = y.reshape(-1, 2, h)
        a = y[:, 0, :].copy()
        b = y[:, 1, :]
        y = np.stack((a + b, a - b), axis=1).reshape(n)
        h *= 2
    return y


def fourier_coefficients(f: LocalFunction) -> dict:
    """Coefficients ``f_A = 2^{-|S|} sum_w f(w) sigma_A(w)`` for all ``A`` in the support.

    Keys are tuples of support labels (in support order).
    """
    S = f.support
    _cap("support", len(S))
    coef = _wht(f.table) / float(1 << len(S))
    return {tuple(S[i] for i in _bits(m)): coef[m] for m in range(1 << len(S))}


def reconstruct(coeffs: dict, support) -> LocalFunction:
    """Inverse of :func:`fourier_coefficients`."""
    support = tuple(support)
    pos = {s: i for i, s in enumerate(support)}
    vec = np.zeros(1 << len(support))
    for A, c in coeffs.items():
        vec[sum(1 << pos[a] for a in A)] = c
    return LocalFunction(support, _wht(vec))


def _local_values(graph, f: LocalFunction):
    c, w, Z = _spin_weights(_Key(graph))
    idx = np.zeros_like(c)
    for i, v in enumerate(graph.indices([s]) [0] for s in f.support):
        idx |= ((c >> v) & 1) << i
    return f.table[idx], w, Z


def local_expectation(graph, f: LocalFunction) -> float:
    vals, w, Z = _local_values(graph, f)
    return float(np.dot(w, vals) / Z)


def local_covariance(graph, f: LocalFunction, g: LocalFunction) -> float:
    """Direct covariance of two local functions by spin enumeration."""
    fv, w, Z = _local_values(graph, f)
    gv, _, _ = _local_values(graph, g)
    mf, mg = np.dot(w, fv) / Z, np.dot(w, gv) / Z
    return float(np.dot(w, (fv - mf) * (gv - mg)) / Z)


def local_covariance_fourier(graph, f: LocalFunction, g: LocalFunction) -> float:
    """Covariance through the double coefficient sum ``sum f_A g_B Cov(sigma_A, sigma_B)``."""
    cf, cg = fourier_coefficients(f), fourier_coefficients(g)
    total = 0.0
    for A, a in cf.items():
        if a == 0 or not A:
            continue
        for B, b in cg.items():
            if b == 0 or not B:
                continue
            total += a * b * spin_covariance(graph, A, B)
    return total


# ---------------------------------------------------------------- random currents


@functools.lru_cache(maxsize=32)
def _current_table(key: _Key):
    """Boundary masks and weights of all odd-edge sets (closed-form series)."""
    g = key.graph
    E = g.n_edges
    _cap("current_edges", E)
    bnd = np.zeros(1, dtype=np.int64)
    w = np.ones(1)
    for e, ((i, j), K) in enumerate(zip(g.edges, g.K)):
        m = (1 << i) | (1 << j)
        bnd = np.concatenate((bnd, bnd ^ m))
        w = np.concatenate((w * math.cosh(K), w * math.sinh(K)))
    return bnd, w


def current_partition_fn(graph, A, normalized=False) -> float:
    """``Z^A = sum_{dn = A} prod (beta J_e)^{n_e} / n_e!``.

    With ``normalized=True`` the value divided by ``prod_e cosh(beta J_e)`` is
    returned instead.
    """
    A = tuple(A)
    if len(A) % 2:
        raise ValueError("|A| must be even")
    bnd, w = _current_table(_Key(graph))
    z = float(w[bnd == vmask(graph, A)].sum())
    if normalized:
        z /= float(np.prod(np.cosh(graph.K)))
    return z


def current_expectation(graph, A) -> float:
    A = tuple(A)
    if len(A) % 2:
        return 0.0
    return current_partition_fn(graph, A) / current_partition_fn(graph, ())


# ---------------------------------------------------------------- high temperature


@functools.lru_cache(maxsize=64)
def _cycle_space(key: _Key):
    """Spanning forest data and a fundamental cycle basis (edge bitmasks)."""
    g = key.graph
    V = g.n_vertices
    parent_edge = [-1] * V
    comp = [-1] * V
    depth = [0] * V
    tree = set()
    for root in range(V):
        if comp[root] >= 0:
            continue
        comp[root] = root
        stack = [root]
        while stack:
            v = stack.pop()
            for e in g.incident[v]:
                w = g.other(e, v)
                if comp[w] < 0:
                    comp[w] = root
                    parent_edge[w] = e
                    depth[w] = depth[v] + 1
                    tree.add(e)
                    stack.append(w)
    root_path = [0] * V
    for v in sorted(range(V), key=lambda v: depth[v]):
        if parent_edge[v] >= 0:
            root_path[v] = root_path[g.other(parent_edge[v], v)] ^ (1 << parent_edge[v])
    basis = []
    for e, (i, j) in enumerate(g.edges):
        if e not in tree:
            basis.append((1 << e) ^ root_path[i] ^ root_path[j])
    return tuple(comp), tuple(root_path), tuple(basis)


def even_subgraphs(graph, A=()) -> np.ndarray:
    """All edge sets whose odd-degree vertices are exactly ``A`` (bitmasks)."""
    if graph.n_edges > 62:
        raise CapExceeded("cycle-space enumeration limited to 62 edges")
    comp, root_path, basis = _cycle_space(_Key(graph, with_beta=False))
    idx = graph.indices(A)
    counts = {}
    for v in idx:
        counts[comp[v]] = counts.get(comp[v], 0) + 1
    if any(c % 2 for c in counts.values()):
        return np.zeros(0, dtype=np.int64)
    g0 = 0
    for v in idx:
        g0 ^= root_path[v]
    out = np.array([g0], dtype=np.int64)
    for b in basis:
        out = np.concatenate((out, out ^ b))
    return out


def _edge_products(masks: np.ndarray, factors) -> np.ndarray:
    w = np.ones(len(masks))
    for e, t in enumerate(factors):
        w *= np.where((masks >> e) & 1, t, 1.0)
    return w


def ht_partition_fn(graph, A=()) -> float:
    """``sum_{g in E^A} prod_{e in g} tanh(beta J_e)``."""
    return float(_edge_products(even_subgraphs(graph, A), np.tanh(graph.K)).sum())


def ht_expectation(graph, A) -> float:
    return ht_partition_fn(graph, A) / ht_partition_fn(graph, ())


# ---------------------------------------------------------------- configurations


@functools.lru_cache(maxsize=1 << 16)
def _labels(key: _Key, mask: int) -> tuple:
    """Component labels (smallest vertex index) of ``(V, mask)``; union-find."""
    g = key.graph
    parent = list(range(g.n_vertices))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for e in _bits(mask):
        i, j = g.edges[e]
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[max(ri, rj)] = min(ri, rj)
    return tuple(find(v) for v in range(g.n_vertices))


def _evenly(labels, idx) -> bool:
    odd = set()
    for v in idx:
        odd ^= {labels[v]}
    return not odd


@dataclass(frozen=True)
class SubgraphConfig:
    """An edge subset of ``graph`` (FK bond configuration or HT subgraph)."""

    graph: LatticeGraph
    mask: int

    def is_open(self, e: int) -> bool:
        return bool((self.mask >> e) & 1)

    @property
    def labels(self) -> tuple:
        return _labels(_Key(self.graph, with_beta=False), self.mask)

    @property
    def kappa(self) -> int:
        return sum(1 for v, l in enumerate(self.labels) if v == l)

    def connected(self, x, y) -> bool:
        i, j = self.graph.indices([x])[0], self.graph.indices([y])[0]
        return self.labels[i] == self.labels[j]

    def cluster(self, x) -> frozenset:
        """Vertex indices of the cluster containing ``x``."""
        lab = self.labels
        root = lab[self.graph.indices([x])[0]]
        return frozenset(v for v, l in enumerate(lab) if l == root)

    def sets_connected(self, X, Y) -> bool:
        lab = self.labels
        lx = {lab[i] for i in self.graph.indices(X)}
        return any(lab[i] in lx for i in self.graph.indices(Y))

    def odd_vertices(self) -> frozenset:
        deg = [0] * self.graph.n_vertices
        for e in _bits(self.mask):
            i, j = self.graph.edges[e]
            deg[i] += 1
            deg[j] += 1
        return frozenset(self.graph.vertices[v] for v, k in enumerate(deg) if k % 2)


@dataclass(frozen=True)
class EdgeParityConfig:
    """Per-edge parity class of a current: zero, even-positive or odd.

    Stored as two bitmasks, ``odd`` and ``positive`` (with ``odd`` a subset of
    ``positive``).  The sources are determined by ``odd`` alone.
    """

    graph: LatticeGraph
    odd: int
    positive: int

    def __post_init__(self):
        if self.odd & ~self.positive:
            raise ValueError("odd edges must be positive")

    def classes(self) -> np.ndarray:
        """0 = zero, 1 = even-positive, 2 = odd."""
        E = self.graph.n_edges
        return np.array([2 if (self.odd >> e) & 1 else (1 if (self.positive >> e) & 1 else 0) for e in range(E)])

    def sources(self) -> frozenset:
        return SubgraphConfig(self.graph, self.odd).odd_vertices()

    @property
    def support(self) -> SubgraphConfig:
        """The graph of edges with positive current (the hat operation)."""
        return SubgraphConfig(self.graph, self.positive)


def evenly_partitioned(config, A) -> bool:
    """Whether each cluster of ``config`` contains an even number of vertices of ``A``."""
    if isinstance(config, EdgeParityConfig):
        config = config.support
    return _evenly(config.labels, config.graph.indices(A))


# ---------------------------------------------------------------- random cluster


@functools.lru_cache(maxsize=16)
def _fk_topology(key: _Key):
    """Component labels for every bond configuration, by min-label propagation."""
    g = key.graph
    E, V = g.n_edges, g.n_vertices
    _cap("fk_edges", E)
    masks = np.arange(1 << E, dtype=np.int64)
    labels = np.tile(np.arange(V, dtype=np.int16), (len(masks), 1))
    opened = [((masks >> e) & 1).astype(bool) for e in range(E)]
    while True:
        before = labels.copy()
        for e, (i, j) in enumerate(g.edges):
            m = np.minimum(labels[:, i], labels[:, j])
            o = opened[e]
            labels[o, i] = m[o]
            labels[o, j] = m[o]
        # pointer jumping keeps the number of sweeps logarithmic
        labels = np.take_along_axis(labels, labels.astype(np.int64), axis=1)
        if np.array_equal(labels, before):
            break
    kappa = (labels == np.arange(V)).sum(axis=1)
    return masks, labels, kappa


@functools.lru_cache(maxsize=32)
def fk_table(key_or_graph):
    """``(masks, labels, probabilities)`` of the FK measure on all bond sets."""
    key = key_or_graph if isinstance(key_or_graph, _Key) else _Key(key_or_graph)
    g = key.graph
    masks, labels, kappa = _fk_topology(_Key(g, with_beta=False))
    logw = kappa * math.log(2.0)
    for e, K in enumerate(g.K):
        logw = logw + np.where((masks >> e) & 1, math.log(math.expm1(2.0 * K)), 0.0)
    w = np.exp(logw - logw.max())
    return masks, labels, w / w.sum()


def _fk(graph):
    return fk_table(_Key(graph))


def fk_probability(graph, event: Callable[[SubgraphConfig], bool]) -> float:
    """Exact FK probability of ``event`` (a predicate on :class:`SubgraphConfig`)."""
    masks, _, p = _fk(graph)
    hit = np.fromiter((bool(event(SubgraphConfig(graph, int(m)))) for m in masks), dtype=bool, count=len(masks))
    return float(p[hit].sum())


def _fk_even_indicator(graph, A) -> np.ndarray:
    _, labels, _ = _fk(graph)
    acc = np.zeros(len(labels), dtype=np.int64)
    for v in graph.indices(A):
        acc ^= np.int64(1) << labels[:, v].astype(np.int64)
    return acc == 0


def _fk_connect_indicator(graph, x, y) -> np.ndarray:
    _, labels, _ = _fk(graph)
    i, j = graph.indices([x])[0], graph.indices([y])[0]
    return labels[:, i] == labels[:, j]


def fk_even_probability(graph, A) -> float:
    """``P(E_A)``: every FK cluster holds an even number of vertices of ``A``."""
    _, _, p = _fk(graph)
    return float(p[_fk_even_indicator(graph, A)].sum())


fk_expectation = fk_even_probability


# ---------------------------------------------------------------- current pairs


@functools.lru_cache(maxsize=256)
def _pair_table(key: _Key, ma: int, mb: int):
    """Aggregated weights of current pairs ``dn1 = A, dn2 = B`` by parity class of the sum.

    Returns ``(odd, positive, weight)`` arrays.  For a pair of odd sets
    ``(g1, g2)`` the edges in neither set are free to be zero or even-positive
    in the sum; per-edge weights are ``sinh^2`` (odd in both),
    ``sinh cosh`` (odd in one), ``cosh^2 - 1`` (even-positive in the sum, even
    in both) and ``1`` (zero).
    """
    g = key.graph
    E = g.n_edges
    _cap("pair_edges", E)
    K = g.K
    s, c = np.sinh(K), np.cosh(K)
    A = [g.vertices[i] for i in _bits(ma)]
    B = [g.vertices[i] for i in _bits(mb)]
    G1, G2 = even_subgraphs(g, A), even_subgraphs(g, B)
    full = (1 << E) - 1
    all_sub = np.arange(1 << E, dtype=np.int64)
    sub_w = _edge_products(all_sub, c * c - 1.0)
    keys, weights = [], []
    for g1 in G1.tolist():
        for g2 in G2.tolist():
            both, one = g1 & g2, g1 ^ g2
            free = full & ~(g1 | g2)
            base = float(np.prod(np.where([(both >> e) & 1 for e in range(E)], s * s, 1.0)))
            base *= float(np.prod(np.where([(one >> e) & 1 for e in range(E)], s * c, 1.0)))
            T = all_sub[(all_sub & ~free) == 0]
            keys.append((np.int64(one) << E) | (T | g1 | g2))
            weights.append(base * sub_w[T])
    if not keys:
        return np.zeros(0, np.int64), np.zeros(0, np.int64), np.zeros(0)
    keys = np.concatenate(keys)
    weights = np.concatenate(weights)
    uk, inv = np.unique(keys, return_inverse=True)
    agg = np.bincount(inv, weights=weights)
    return uk >> E, uk & full, agg


def current_pair_sum(graph, A, B, F: Callable[[EdgeParityConfig], float] | None = None) -> float:
    """``Z^A Z^B {F(n1 + n2)}`` for a functional of the sum's parity classes."""
    odd, pos, w = _pair_table(_Key(graph), vmask(graph, A), vmask(graph, B))
    if F is None:
        return float(w.sum())
    vals = np.array([float(F(EdgeParityConfig(graph, int(o), int(p)))) for o, p in zip(odd.tolist(), pos.tolist())])
    return float(np.dot(w, vals))


def verify_switching(graph, A, B, F=None) -> Check:
    """Both sides of the Switching Lemma for a parity-class functional ``F``."""
    A, B = tuple(A), tuple(B)
    F0 = F if F is not None else (lambda cfg: 1.0)
    lhs = current_pair_sum(graph, A, B, F0)
    sym = tuple(set(A) ^ set(B))
    rhs = current_pair_sum(graph, sym, (), lambda cfg: float(evenly_partitioned(cfg, A)) * F0(cfg))
    return Check("switching", lhs, rhs, "==")


# ---------------------------------------------------------------- covariances


@dataclass(frozen=True)
class CovarianceRoutes:
    spin: float
    current: float
    fk: float

    def checks(self):
        return [
            Check("cov spin=current", self.spin, self.current),
            Check("cov spin=fk", self.spin, self.fk),
            Check("cov current=fk", self.current, self.fk),
        ]


def truncated_cov(graph, A, B) -> CovarianceRoutes:
    """``Cov(sigma_A, sigma_B)`` by spins, by the switched current formula and by FK."""
    A, B = tuple(A), tuple(B)
    spin = spin_covariance(graph, A, B)
    if len(A) % 2 or len(B) % 2:
        # odd sets: symmetry kills everything in the even routes too
        sym = tuple(set(A) ^ set(B))
        fk = fk_even_probability(graph, sym) - fk_even_probability(graph, A) * fk_even_probability(graph, B)
        return CovarianceRoutes(spin, 0.0 if len(sym) % 2 else float("nan"), fk)
    sym = tuple(set(A) ^ set(B))
    z0 = current_partition_fn(graph, ())
    num = current_pair_sum(graph, sym, (), lambda cfg: float(not evenly_partitioned(cfg, A)))
    current = num / (z0 * z0)
    fk = fk_even_probability(graph, sym) - fk_even_probability(graph, A) * fk_even_probability(graph, B)
    return CovarianceRoutes(spin, current, fk)


def _odd_subsets(S):
    S = tuple(S)
    for k in range(1, len(S) + 1, 2):
        yield from itertools.combinations(S, k)


def _disconnection(graph, A1, A1c, B1, B1c):
    def F(cfg):
        sub = cfg.support if isinstance(cfg, EdgeParityConfig) else cfg
        return float(not sub.sets_connected(A1, A1c) and not sub.sets_connected(B1, B1c))

    return F


def _double_current_prob(graph, S1, S2, F) -> float:
    z1, z2 = current_partition_fn(graph, S1), current_partition_fn(graph, S2)
    if z1 == 0 or z2 == 0:
        return 0.0
    return current_pair_sum(graph, S1, S2, F) / (z1 * z2)


def _double_ht_prob(graph, S1, S2, F) -> float:
    t = np.tanh(graph.K)
    G1, G2 = even_subgraphs(graph, S1), even_subgraphs(graph, S2)
    if len(G1) == 0 or len(G2) == 0:
        return 0.0
    w1, w2 = _edge_products(G1, t), _edge_products(G2, t)
    num = 0.0
    for a, wa in zip(G1.tolist(), w1):
        for b, wb in zip(G2.tolist(), w2):
            num += wa * wb * F(SubgraphConfig(graph, a | b))
    return num / (w1.sum() * w2.sum())


def _split_terms(A, B):
    for A1 in _odd_subsets(A):
        A1c = tuple(a for a in A if a not in A1)
        for B1 in _odd_subsets(B):
            B1c = tuple(b for b in B if b not in B1)
            yield A1, A1c, B1, B1c


def verify_ub_decoupled(graph, A, B) -> Check:
    """Covariance versus the decoupled double-current upper bound."""
    A, B = tuple(A), tuple(B)
    if len(A) % 2 or len(B) % 2:
        raise ValueError("A and B must have even cardinality")
    if set(A) & set(B):
        raise ValueError("A and B must be disjoint")
    lhs = spin_covariance(graph, A, B)
    rhs = 0.0
    for A1, A1c, B1, B1c in _split_terms(A, B):
        S1, S2 = A1 + B1, A1c + B1c
        m1, m2 = spin_expectation(graph, S1), spin_expectation(graph, S2)
        if m1 == 0 or m2 == 0:
            continue
        rhs += m1 * m2 * _double_current_prob(graph, S1, S2, _disconnection(graph, A1, A1c, B1, B1c))
    return Check("cov <= decoupled double-current bound", lhs, rhs, "<=")


def verify_crucial_coupling(graph, A, B) -> list:
    """Double-current disconnection probability versus the double-HT one, per split."""
    out = []
    for A1, A1c, B1, B1c in _split_terms(tuple(A), tuple(B)):
        S1, S2 = A1 + B1, A1c + B1c
        F = _disconnection(graph, A1, A1c, B1, B1c)
        out.append(
            Check(f"RC<=HT split {A1}|{B1}", _double_current_prob(graph, S1, S2, F), _double_ht_prob(graph, S1, S2, F), "<=")
        )
    return out


def _cluster_masks(graph, x):
    _, labels, _ = _fk(graph)
    i = graph.indices([x])[0]
    root = labels[:, i : i + 1]
    weights = np.int64(1) << np.arange(graph.n_vertices, dtype=np.int64)
    return ((labels == root) * weights).sum(axis=1)


def verify_lb_decoupled(graph, A, B, x, y, u, v) -> Check:
    """``Cov / (<s_x s_u><s_y s_v>)`` versus the disjoint-cluster lower bound.

    Clusters are identified by their vertex sets.
    """
    A, B = tuple(A), tuple(B)
    if x == y or u == v or x not in A or y not in A or u not in B or v not in B:
        raise ValueError("need x != y in A and u != v in B")
    _, _, p = _fk(graph)
    cxu, cyv = _fk_connect_indicator(graph, x, u), _fk_connect_indicator(graph, y, v)
    pxu, pyv = float(p[cxu].sum()), float(p[cyv].sum())
    if pxu <= 0 or pyv <= 0:
        raise ValueError("precondition failed: <s_x s_u> or <s_y s_v> vanishes")
    lhs = spin_covariance(graph, A, B) / (pxu * pyv)

    C1, C2 = _cluster_masks(graph, x), _cluster_masks(graph, y)
    ev = _fk_even_indicator(graph, A + B) & ~_fk_even_indicator(graph, A)

    def marginal(mask_arr, sel):
        keys, inv = np.unique(mask_arr[sel], return_inverse=True)
        return dict(zip(keys.tolist(), (np.bincount(inv, weights=p[sel]) / p[sel].sum()).tolist()))

    m1, m2 = marginal(C1, cxu), marginal(C2, cyv)
    joint = cxu & cyv & ~_fk_connect_indicator(graph, x, y)
    jk = (C1[joint].astype(object) << graph.n_vertices) | C2[joint].astype(object)
    pj, pe = {}, {}
    for k, pk, e in zip(jk.tolist(), p[joint].tolist(), ev[joint].tolist()):
        pj[k] = pj.get(k, 0.0) + pk
        if e:
            pe[k] = pe.get(k, 0.0) + pk
    rhs = 0.0
    for a, pa in m1.items():
        for b, pb in m2.items():
            if a & b:
                continue
            k = (a << graph.n_vertices) | b
            if pj.get(k, 0.0) > 0:
                rhs += pe.get(k, 0.0) / pj[k] * pa * pb
    return Check("cov/(<xu><yv>) >= disjoint-cluster bound", lhs, rhs, ">=")


def verify_fkg_cancellation(graph, A, B) -> Check:
    """``Cov(sigma_A, sigma_B) >= P(E_{A u B} and not E_A)`` for disjoint even sets."""
    _, _, p = _fk(graph)
    ev = _fk_even_indicator(graph, tuple(A) + tuple(B)) & ~_fk_even_indicator(graph, A)
    return Check("cov >= P(E_AB, not E_A)", spin_covariance(graph, A, B), float(p[ev].sum()), ">=")


def fkg_edge_pairs(graph) -> list:
    """FKG for single-edge events: ``P(e1, e2 open) >= P(e1 open) P(e2 open)``."""
    masks, _, p = _fk(graph)
    op = [((masks >> e) & 1).astype(bool) for e in range(graph.n_edges)]
    out = []
    for e1, e2 in itertools.combinations(range(graph.n_edges), 2):
        out.append(Check(f"fkg e{e1},e{e2}", float(p[op[e1] & op[e2]].sum()), float(p[op[e1]].sum() * p[op[e2]].sum()), ">="))
    return out


def fkg_even_events(graph, A, B) -> Check:
    """FKG for the increasing events ``E_A`` and ``E_B``."""
    _, _, p = _fk(graph)
    ea, eb = _fk_even_indicator(graph, A), _fk_even_indicator(graph, B)
    return Check("fkg E_A,E_B", float(p[ea & eb].sum()), float(p[ea].sum() * p[eb].sum()), ">=")


def gks_check(graph, A, x, y) -> Check:
    """``<sigma_A> >= <sigma_{A minus {x,y}}> <sigma_x sigma_y>``."""
    rest = tuple(a for a in A if a not in (x, y))
    return Check(
        "gks",
        spin_expectation(graph, A),
        spin_expectation(graph, rest) * spin_expectation(graph, (x, y)),
        ">=",
    )
