"""Coupling specifications and finite graphs with per-edge couplings.

A :class:`CouplingSpec` holds a translation-invariant coupling map
``J: Z^d -> [0, inf)`` together with the inverse temperature.  Finite graphs
(:class:`LatticeGraph`) are built from it on boxes with free boundary
condition, or constructed directly for small abstract test graphs.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "CouplingSpec",
    "LatticeGraph",
    "Violation",
    "validate_couplings",
    "build_box",
    "build_block",
    "lattice_point",
    "nearest_neighbor",
    "load_coupling_config",
    "graph_from_edges",
]

UNIT_TOL = 1e-12


@dataclass(frozen=True)
class Violation:
    """A coupling condition that fails at a given displacement."""

    kind: str  # 'ferromagnetism' | 'symmetry' | 'range' | 'irreducibility' | 'dimension'
    displacement: tuple
    detail: str = ""


@dataclass(frozen=True)
class CouplingSpec:
    """Translation-invariant couplings on ``Z^d``.

    Parameters
    ----------
    d : int
        Dimension, at least 2.
    entries : mapping
        Displacement tuple -> coupling ``J_x``.  Missing displacements have
        coupling zero.  Both ``x`` and ``-x`` should be present; use
        :meth:`from_orbits` to fill in reflections automatically.
    beta : float
        Inverse temperature.
    R : float, optional
        Interaction range; ``J_x`` must vanish for ``|x|_2 >= R``.  Defaults to
        just above the largest displacement with nonzero coupling.
    """

    d: int
    entries: Mapping[tuple, float]
    beta: float = 1.0
    R: float | None = None

    def __post_init__(self):
        clean = {tuple(int(c) for c in x): float(j) for x, j in dict(self.entries).items()}
        object.__setattr__(self, "entries", dict(sorted(clean.items())))
        if self.R is None:
            norms = [math.hypot(*x) for x, j in clean.items() if j != 0.0]
            object.__setattr__(self, "R", (max(norms) if norms else 0.0) + 1e-9)

    @classmethod
    def from_orbits(cls, d, representatives, beta=1.0, R=None):
        """Build a spec from one representative per reflection orbit.

        Every coordinate sign flip of each representative receives the same
        coupling.  Conflicting assignments inside one orbit raise ``ValueError``.
        """
        entries = {}
        for x, j in dict(representatives).items():
            x = tuple(int(c) for c in x)
            if len(x) != d:
                raise ValueError(f"displacement {x} does not have dimension {d}")
            for y in _sign_orbit(x):
                if y in entries and entries[y] != float(j):
                    raise ValueError(f"conflicting couplings in the orbit of {x}")
                entries[y] = float(j)
        return cls(d=d, entries=entries, beta=beta, R=R)

    def J(self, x) -> float:
        return self.entries.get(tuple(x), 0.0)

    def with_beta(self, beta) -> "CouplingSpec":
        return CouplingSpec(self.d, self.entries, beta, self.R)

    def support(self):
        """Nonzero displacements in sorted order."""
        return [x for x, j in self.entries.items() if j != 0.0 and any(x)]


def _sign_orbit(x):
    out = set()
    for signs in itertools.product((1, -1), repeat=len(x)):
        out.add(tuple(s * c for s, c in zip(signs, x)))
    return sorted(out)


def nearest_neighbor(d=2, J=1.0, beta=1.0, diagonal=0.0):
    """Nearest-neighbour couplings, optionally with ``+-e_i +- e_j`` diagonals."""
    reps = {}
    for i in range(d):
        e = [0] * d
        e[i] = 1
        reps[tuple(e)] = J
    if diagonal:
        for i, j in itertools.combinations(range(d), 2):
            e = [0] * d
            e[i] = e[j] = 1
            reps[tuple(e)] = diagonal
    return CouplingSpec.from_orbits(d, reps, beta=beta)


def validate_couplings(spec: CouplingSpec) -> list[Violation]:
    """Return every violated coupling condition; an empty list means valid."""
    out = []
    if spec.d < 2:
        out.append(Violation("dimension", (), f"d={spec.d} < 2"))
    for x, j in spec.entries.items():
        if len(x) != spec.d:
            out.append(Violation("dimension", x, f"length {len(x)} != {spec.d}"))
            continue
        if j < 0:
            out.append(Violation("ferromagnetism", x, f"J={j} < 0"))
        for y in _sign_orbit(x):
            if spec.J(y) != j:
                out.append(Violation("symmetry", x, f"J{x}={j} but J{y}={spec.J(y)}"))
                break
        if j != 0 and math.hypot(*x) >= spec.R:
            out.append(Violation("range", x, f"|x|={math.hypot(*x):.6g} >= R={spec.R:.6g}"))
        if j != 0 and not any(x):
            out.append(Violation("range", x, "self-coupling at the zero displacement"))
    for i in range(spec.d):
        for s in (1, -1):
            e = [0] * spec.d
            e[i] = s
            e = tuple(e)
            if not spec.J(e) > 0:
                out.append(Violation("irreducibility", e, f"J{e}={spec.J(e)} is not positive"))
    return out


@dataclass(frozen=True, eq=False)
class LatticeGraph:
    """Finite graph with positive couplings and ordered incidence lists.

    Attributes
    ----------
    vertices : tuple
        Vertex labels (coordinate tuples for boxes, arbitrary hashables otherwise).
    edges : tuple of (int, int)
        Endpoint indices with ``i < j``.
    J : numpy.ndarray
        Edge couplings, strictly positive.
    beta : float
        Inverse temperature.
    incident : tuple of tuple of int
        For each vertex, its incident edge indices in increasing order.
    """

    vertices: tuple
    edges: tuple
    J: np.ndarray
    beta: float = 1.0
    incident: tuple = field(default=None)
    name: str = ""

    def __post_init__(self):
        J = np.asarray(self.J, dtype=float).copy()
        J.setflags(write=False)
        object.__setattr__(self, "J", J)
        if len(J) != len(self.edges):
            raise ValueError("one coupling per edge required")
        if np.any(J <= 0):
            raise ValueError("edge couplings must be strictly positive")
        if self.incident is None:
            object.__setattr__(self, "incident", _default_incidence(self.vertices, self.edges))
        self._check_incidence()

    def _check_incidence(self):
        seen = [set() for _ in self.vertices]
        for e, (i, j) in enumerate(self.edges):
            seen[i].add(e)
            seen[j].add(e)
        for v, order in enumerate(self.incident):
            if len(set(order)) != len(order) or set(order) != seen[v]:
                raise ValueError(f"incidence order at vertex {v} is not a total order of its edges")

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def K(self) -> np.ndarray:
        """Effective couplings ``beta * J_e``."""
        return self.beta * self.J

    def index(self, v) -> int:
        return self._index_map()[v]

    def _index_map(self):
        try:
            return self.__dict__["_idx"]
        except KeyError:
            m = {v: i for i, v in enumerate(self.vertices)}
            object.__setattr__(self, "_idx", m)
            return m

    def indices(self, vs: Iterable) -> tuple:
        """Vertex indices for labels (ints already valid as indices are kept)."""
        m = self._index_map()
        return tuple(sorted(m[v] for v in vs))

    def other(self, e: int, v: int) -> int:
        i, j = self.edges[e]
        return j if v == i else i

    def edge_rank(self, v: int, e: int) -> int:
        """Position of edge ``e`` in the order at vertex ``v``."""
        return self.incident[v].index(e)

    def with_beta(self, beta: float) -> "LatticeGraph":
        return LatticeGraph(self.vertices, self.edges, self.J, float(beta), self.incident, self.name)

    def key(self):
        """Hashable description of the topology and couplings (not beta)."""
        return (self.vertices, self.edges, self.J.tobytes(), self.incident)

    def edge_masks(self) -> list:
        """Per-edge bitmask of its two endpoints (Python ints)."""
        return [(1 << i) | (1 << j) for i, j in self.edges]

    def __repr__(self):
        label = self.name or "graph"
        return f"LatticeGraph({label}: |V|={self.n_vertices}, |E|={self.n_edges}, beta={self.beta:g})"


def _default_incidence(vertices, edges):
    inc = [[] for _ in vertices]
    for e, (i, j) in enumerate(edges):
        inc[i].append((j, e))
        inc[j].append((i, e))
    return tuple(tuple(e for _, e in sorted(lst)) for lst in inc)


def graph_from_edges(vertices: Sequence[Hashable], pairs, J=1.0, beta=1.0, name=""):
    """Graph on labelled vertices from label pairs; ``J`` scalar or per-pair."""
    vertices = tuple(vertices)
    idx = {v: k for k, v in enumerate(vertices)}
    pairs = list(pairs)
    Js = np.broadcast_to(np.asarray(J, dtype=float), (len(pairs),))
    rows = []
    for (a, b), j in zip(pairs, Js):
        i, k = idx[a], idx[b]
        if i == k:
            raise ValueError("self-loops are not allowed")
        rows.append((min(i, k), max(i, k), float(j)))
    rows.sort()
    if len({(i, k) for i, k, _ in rows}) != len(rows):
        raise ValueError("multiple edges between the same pair")
    edges = tuple((i, k) for i, k, _ in rows)
    return LatticeGraph(vertices, edges, np.array([j for *_, j in rows]), float(beta), None, name)


def build_box(spec: CouplingSpec, N: int) -> LatticeGraph:
    """Graph on ``{x : max_i |x_i| <= N}`` with free boundary condition.

    Vertices are in lexicographic order, edges join ``i < j`` whenever
    ``J_{j-i} != 0``, and each vertex orders its incident edges
    lexicographically by the neighbour's coordinates.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    return build_block(spec, (2 * N + 1,) * spec.d, origin=(-N,) * spec.d, name=f"box(d={spec.d},N={N})")


def build_block(spec: CouplingSpec, shape, origin=None, name=""):
    """Graph on the rectangular block ``origin + [0, shape)`` (free boundary)."""
    bad = validate_couplings(spec)
    if bad:
        raise ValueError(f"invalid coupling spec: {bad[0]}")
    shape = tuple(int(s) for s in shape)
    if len(shape) != spec.d:
        raise ValueError("shape must have one entry per dimension")
    origin = tuple(origin) if origin is not None else (0,) * spec.d
    verts = tuple(tuple(o + c for o, c in zip(origin, p)) for p in itertools.product(*(range(s) for s in shape)))
    idx = {v: k for k, v in enumerate(verts)}
    disp = [x for x in spec.support() if x > tuple([0] * spec.d)]
    edges, Js = [], []
    for v in verts:
        i = idx[v]
        for x in disp:
            w = tuple(a + b for a, b in zip(v, x))
            k = idx.get(w)
            if k is not None:
                edges.append((min(i, k), max(i, k)))
                Js.append(spec.J(x))
    order = np.lexsort((np.array([e[1] for e in edges]), np.array([e[0] for e in edges]))) if edges else []
    edges = tuple(edges[k] for k in order)
    Js = np.array([Js[k] for k in order], dtype=float)
    return LatticeGraph(verts, edges, Js, spec.beta, None, name or f"block{shape}")


def lattice_point(n: int, u: Sequence[float]) -> tuple:
    """Componentwise floor of ``n * u`` for a unit vector ``u``."""
    u = np.asarray(u, dtype=float)
    if abs(float(np.linalg.norm(u)) - 1.0) > UNIT_TOL:
        raise ValueError(f"u must be a unit vector (norm {np.linalg.norm(u)!r})")
    return tuple(int(math.floor(n * c)) for c in u)


def load_coupling_config(path) -> CouplingSpec:
    """Read a YAML key-value coupling file.

    Expected keys: ``d``, ``beta`` and ``couplings`` (a list of
    ``[displacement, J]`` pairs, one per reflection orbit); ``R`` is optional.
    """
    import yaml

    with open(path) as fh:
        cfg = yaml.safe_load(fh)
    try:
        d = int(cfg["d"])
        beta = float(cfg["beta"])
        pairs = cfg["couplings"]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"coupling config {path} needs keys d, beta, couplings") from exc
    reps = {tuple(int(c) for c in x): float(j) for x, j in pairs}
    return CouplingSpec.from_orbits(d, reps, beta=beta, R=cfg.get("R"))
