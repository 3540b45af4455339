import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from isinglab import (
    CouplingSpec,
    build_block,
    build_box,
    graph_from_edges,
    lattice_point,
    load_coupling_config,
    nearest_neighbor,
    validate_couplings,
)
from isinglab.library import LIBRARY_IDS, graph_library, library_graph


def brute_edge_count(spec, N):
    pts = list(itertools.product(range(-N, N + 1), repeat=spec.d))
    count = 0
    for a, b in itertools.combinations(pts, 2):
        if spec.J(tuple(y - x for x, y in zip(a, b))) != 0:
            count += 1
    return count


class TestValidateCouplings:
    def test_nearest_neighbour_ok(self):
        assert validate_couplings(nearest_neighbor(2)) == []

    def test_missing_axis_is_irreducibility_violation(self):
        spec = CouplingSpec(2, {(1, 0): 1.0, (-1, 0): 1.0})
        kinds = {(v.kind, v.displacement) for v in validate_couplings(spec)}
        assert ("irreducibility", (0, 1)) in kinds

    def test_asymmetric_diagonal(self):
        spec = CouplingSpec(2, {**nearest_neighbor(2).entries, (1, 1): 0.5, (1, -1): 0.3, (-1, 1): 0.5, (-1, -1): 0.5})
        assert any(v.kind == "symmetry" for v in validate_couplings(spec))

    def test_negative_coupling(self):
        spec = CouplingSpec.from_orbits(2, {(1, 0): 1.0, (0, 1): 1.0, (2, 0): -0.1})
        assert [v.kind for v in validate_couplings(spec)] == ["ferromagnetism"] * 2

    def test_range(self):
        spec = CouplingSpec.from_orbits(2, {(1, 0): 1.0, (0, 1): 1.0}, R=1.0)
        assert {v.kind for v in validate_couplings(spec)} == {"range"}

    def test_orbit_conflict(self):
        with pytest.raises(ValueError):
            CouplingSpec.from_orbits(2, {(1, 1): 1.0, (1, -1): 2.0})


class TestBuildBox:
    @pytest.mark.parametrize(
        "spec, N, nv, ne",
        [
            (nearest_neighbor(2), 1, 9, 12),
            (nearest_neighbor(2, diagonal=0.5), 1, 9, 20),
            (nearest_neighbor(3), 1, 27, 54),
            (nearest_neighbor(2), 2, 25, 40),
        ],
    )
    def test_counts(self, spec, N, nv, ne):
        g = build_box(spec, N)
        assert (g.n_vertices, g.n_edges) == (nv, ne)
        assert ne == brute_edge_count(spec, N)

    def test_deterministic(self):
        a, b = build_box(nearest_neighbor(2, diagonal=0.3), 2), build_box(nearest_neighbor(2, diagonal=0.3), 2)
        assert a.vertices == b.vertices and a.edges == b.edges and a.incident == b.incident
        assert np.array_equal(a.J, b.J)

    def test_incidence_lexicographic(self):
        g = build_box(nearest_neighbor(2), 1)
        for v, order in enumerate(g.incident):
            nbrs = [g.vertices[g.other(e, v)] for e in order]
            assert nbrs == sorted(nbrs)

    def test_sign_flip_automorphism(self):
        spec = nearest_neighbor(2, J=1.0, diagonal=0.25)
        g = build_box(spec, 2)
        edges = {frozenset((g.vertices[i], g.vertices[j])): J for (i, j), J in zip(g.edges, g.J)}
        for signs in itertools.product((1, -1), repeat=2):
            flip = lambda p: tuple(s * c for s, c in zip(signs, p))  # noqa: E731
            assert {frozenset(map(flip, e)): J for e, J in edges.items()} == edges

    def test_invalid_spec(self):
        with pytest.raises(ValueError):
            build_box(CouplingSpec(2, {(1, 0): 1.0, (-1, 0): 1.0}), 1)
        with pytest.raises(ValueError):
            build_box(nearest_neighbor(2), 0)

    def test_block_shape(self):
        g = build_block(nearest_neighbor(2), (2, 4))
        assert g.n_vertices == 8 and g.n_edges == 10


class TestLatticePoint:
    def test_axis(self):
        assert lattice_point(10, (1, 0)) == (10, 0)

    def test_diagonal(self):
        assert lattice_point(3, (1 / math.sqrt(2), 1 / math.sqrt(2))) == (2, 2)

    def test_zero(self):
        assert lattice_point(0, (0.6, 0.8)) == (0, 0)

    def test_non_unit(self):
        with pytest.raises(ValueError):
            lattice_point(3, (1.0, 1e-5))

    @given(st.integers(0, 10_000), st.floats(0, 2 * math.pi))
    def test_floor_bounds(self, n, theta):
        u = (math.cos(theta), math.sin(theta))
        p = lattice_point(n, u)
        assert all(c <= n * x < c + 1 for c, x in zip(p, u))


class TestGraphs:
    def test_graph_from_edges_errors(self):
        with pytest.raises(ValueError):
            graph_from_edges((0, 1), [(0, 0)])
        with pytest.raises(ValueError):
            graph_from_edges((0, 1), [(0, 1), (1, 0)])
        with pytest.raises(ValueError):
            graph_from_edges((0, 1), [(0, 1)], J=0.0)

    def test_with_beta_keeps_topology(self):
        g = library_graph("cycle4", beta=0.3)
        h = g.with_beta(0.7)
        assert h.edges == g.edges and h.beta == 0.7 and np.allclose(h.K, 0.7 * g.J)
        assert g.key() == h.key()

    def test_library(self):
        lib = graph_library(0.5)
        assert tuple(lib) == LIBRARY_IDS
        sizes = {k: (g.n_vertices, g.n_edges) for k, g in lib.items()}
        assert sizes == {
            "single_edge": (2, 1),
            "path3": (3, 2),
            "triangle": (3, 3),
            "cycle4": (4, 4),
            "grid2x3": (6, 7),
            "grid2x4": (8, 10),
        }
        with pytest.raises(KeyError):
            library_graph("nope")

    @settings(max_examples=25, deadline=None)
    @given(st.integers(1, 3), st.integers(1, 4))
    def test_block_edge_count(self, r, c):
        g = build_block(nearest_neighbor(2), (r, c))
        assert g.n_edges == r * (c - 1) + c * (r - 1)


def test_load_coupling_config(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text("d: 2\nbeta: 0.4\ncouplings:\n  - [[1, 0], 1.0]\n  - [[0, 1], 1.0]\n  - [[1, 1], 0.2]\n")
    spec = load_coupling_config(p)
    assert spec.beta == 0.4 and spec.J((-1, -1)) == 0.2 and validate_couplings(spec) == []
    bad = tmp_path / "bad.yaml"
    bad.write_text("d: 2\n")
    with pytest.raises(ValueError):
        load_coupling_config(bad)
