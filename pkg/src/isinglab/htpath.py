"""Path extraction from high-temperature configurations.

A configuration ``g`` in ``E^A`` (odd-degree vertices exactly ``A``) is
explored from a source ``x`` by always leaving the current vertex along the
smallest present edge that has not been used yet, in that vertex's edge
order.  The walk stops at the first vertex of ``A`` other than ``x``.  The
resulting path ``gamma`` and its edge-boundary determine the law

    P_A(gamma: x -> y) = Z^{A - {x,y}}_{G[gamma]} / Z^A_G * prod_{e in gamma} tanh(K_e)

with ``G[gamma]`` the graph with the edge-boundary removed and ``Z`` the
tanh-weighted even-subgraph sums.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import exact
from .exact import Check, SubgraphConfig, _bits, _current_table, _edge_products, _Key, even_subgraphs, vmask

__all__ = [
    "HTConfig",
    "ExtractedPath",
    "PathLaw",
    "extract_path",
    "edge_boundary",
    "path_law",
    "verify_monotonicity",
    "verify_parity_coupling",
]


@dataclass(frozen=True)
class HTConfig:
    """An edge subset together with its source set ``A`` (vertex labels)."""

    graph: object
    mask: int
    sources: frozenset

    def __post_init__(self):
        object.__setattr__(self, "sources", frozenset(self.sources))
        odd = SubgraphConfig(self.graph, self.mask).odd_vertices()
        if odd != self.sources:
            raise ValueError(f"odd-degree vertices {sorted(odd)} differ from sources {sorted(self.sources)}")


@dataclass(frozen=True)
class ExtractedPath:
    """Vertex and edge sequence of an extracted path, plus its edge-boundary (indices)."""

    vertices: tuple
    edges: tuple
    boundary: frozenset

    @property
    def start(self):
        return self.vertices[0]

    @property
    def end(self):
        return self.vertices[-1]

    @property
    def edge_mask(self) -> int:
        return sum(1 << e for e in self.edges)

    @property
    def boundary_mask(self) -> int:
        return sum(1 << e for e in self.boundary)


def edge_boundary(path: ExtractedPath | tuple, graph) -> frozenset:
    """Edges ``e`` at a departure vertex ``x_k`` with ``e <= e_k`` in the order at ``x_k``.

    ``path`` is either an :class:`ExtractedPath` or a pair
    ``(vertex indices, edge indices)``.
    """
    verts, edges = (path.vertices, path.edges) if isinstance(path, ExtractedPath) else path
    idx = [graph.index(v) for v in verts] if isinstance(path, ExtractedPath) else list(verts)
    out = set()
    for v, e in zip(idx, edges):
        order = graph.incident[v]
        out.update(order[: order.index(e) + 1])
    return frozenset(out)


def _extract(graph, mask: int, src_mask: int, x: int):
    verts, edges = [x], []
    used = 0
    v = x
    stop = src_mask & ~(1 << x)
    while True:
        nxt = None
        for e in graph.incident[v]:
            if (mask >> e) & 1 and not (used >> e) & 1:
                nxt = e
                break
        if nxt is None:
            raise RuntimeError("no unused present edge: configuration parity is inconsistent")
        used |= 1 << nxt
        edges.append(nxt)
        v = graph.other(nxt, v)
        verts.append(v)
        if (stop >> v) & 1:
            return verts, edges


def extract_path(config: HTConfig, x) -> ExtractedPath:
    """Follow smallest unused present edges from source ``x`` to another source."""
    g = config.graph
    if x not in config.sources:
        raise ValueError(f"{x!r} is not a source of the configuration")
    xi = g.index(x)
    verts, edges = _extract(g, config.mask, vmask(g, config.sources), xi)
    return ExtractedPath(tuple(g.vertices[v] for v in verts), tuple(edges), edge_boundary((verts, edges), g))


@dataclass(frozen=True)
class PathEntry:
    end: object
    path: ExtractedPath
    p_extracted: float
    p_formula: float
    conditional_gap: float

    @property
    def check(self) -> Check:
        return Check("path law", self.p_extracted, self.p_formula)


@dataclass(frozen=True)
class PathLaw:
    sources: tuple
    start: object
    entries: tuple

    def __iter__(self):
        return iter(self.entries)

    def total(self) -> float:
        return float(sum(e.p_extracted for e in self.entries))

    def max_discrepancy(self) -> float:
        return max((abs(e.p_extracted - e.p_formula) for e in self.entries), default=0.0)

    def by_path(self, end=None) -> dict:
        """Map edge sequences to extracted probabilities (optionally for one endpoint)."""
        return {e.path.edges: e.p_extracted for e in self.entries if end is None or e.end == end}


def path_law(graph, A, x) -> PathLaw:
    """Pushforward of the HT measure on ``E^A`` under :func:`extract_path`, with the closed form.

    Each entry also carries ``conditional_gap``: the largest deviation between
    the law of the remaining edges given ``gamma`` and the HT measure on
    ``G[gamma]`` with sources ``A - {x, y}``.
    """
    A = tuple(A)
    if x not in A:
        raise ValueError("x must belong to A")
    t = np.tanh(graph.K)
    masks = even_subgraphs(graph, A)
    w = _edge_products(masks, t)
    Z = float(w.sum())
    if Z == 0:
        raise ValueError("E^A is empty (A not evenly distributed over components)")
    src = vmask(graph, A)
    xi = graph.index(x)
    groups: dict = {}
    for m, wm in zip(masks.tolist(), w.tolist()):
        verts, edges = _extract(graph, m, src, xi)
        key = tuple(edges)
        if key not in groups:
            groups[key] = (verts, {})
        rest = m & ~sum(1 << e for e in edges)
        groups[key][1][rest] = groups[key][1].get(rest, 0.0) + wm
    entries = []
    for edges, (verts, rest) in sorted(groups.items()):
        bnd = edge_boundary((verts, edges), graph)
        bmask = sum(1 << e for e in bnd)
        y = graph.vertices[verts[-1]]
        A2 = tuple(a for a in A if a not in (x, y))
        sub = even_subgraphs(graph, A2)
        sub = sub[(sub & bmask) == 0]
        sw = _edge_products(sub, t)
        zsub = float(sw.sum())
        pgam = float(np.prod(t[list(edges)]))
        p_ext = sum(rest.values()) / Z
        p_form = zsub / Z * pgam
        gap = 0.0
        tot = sum(rest.values())
        for s_m, s_w in zip(sub.tolist(), sw.tolist()):
            gap = max(gap, abs(rest.get(s_m, 0.0) / tot - s_w / zsub))
        gap = max(gap, sum(v for k, v in rest.items() if k & bmask) / tot)
        path = ExtractedPath(tuple(graph.vertices[v] for v in verts), edges, bnd)
        entries.append(PathEntry(y, path, p_ext, p_form, gap))
    return PathLaw(A, x, tuple(entries))


@dataclass(frozen=True)
class MonotonicityResult:
    max_violation: float
    inclusion_ok: bool
    n_paths: int
    checks: tuple

    @property
    def ok(self) -> bool:
        return self.inclusion_ok and all(c.ok for c in self.checks)


def verify_monotonicity(graph, A, x, y) -> MonotonicityResult:
    """``P_A(gamma: x -> y) <= P_{x,y}(gamma: x -> y)`` for every path from ``x`` to ``y``.

    Also checks that every path realisable with sources ``A`` is realisable
    with sources ``{x, y}``.
    """
    A = tuple(A)
    if x == y or x not in A or y not in A:
        raise ValueError("need distinct x, y in A")
    la = path_law(graph, A, x).by_path(y)
    lxy = path_law(graph, (x, y), x).by_path(y)
    checks = tuple(Check(f"monotone {edges}", p, lxy.get(edges, 0.0), "<=") for edges, p in sorted(la.items()))
    viol = max((-c.slack for c in checks), default=0.0)
    return MonotonicityResult(max(viol, 0.0), set(la) <= set(lxy), len(checks), checks)


def verify_parity_coupling(graph, A=()) -> float:
    """Max gap between the current law of the odd-edge set and the HT measure on ``E^A``."""
    A = tuple(A)
    masks = even_subgraphs(graph, A)
    if len(masks) == 0:
        return 0.0
    ht = _edge_products(masks, np.tanh(graph.K))
    ht = ht / ht.sum()
    bnd, w = _current_table(_Key(graph))
    zA = w[bnd == vmask(graph, A)].sum()
    cur = w[masks] / zA
    return float(np.max(np.abs(cur - ht)))
