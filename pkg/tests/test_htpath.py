import math

import numpy as np
import pytest

from isinglab import build_block, graph_from_edges, nearest_neighbor
from isinglab.exact import even_subgraphs
from isinglab.htpath import (
    ExtractedPath,
    HTConfig,
    edge_boundary,
    extract_path,
    path_law,
    verify_monotonicity,
    verify_parity_coupling,
)
from isinglab.library import library_graph


def looped_path(beta=0.5):
    # x-a-c-b-y with a loop c-d-e-c, so c has degree 4
    V = ("x", "a", "c", "d", "e", "b", "y")
    E = [("x", "a"), ("a", "c"), ("c", "d"), ("c", "e"), ("c", "b"), ("d", "e"), ("b", "y")]
    return graph_from_edges(V, E, beta=beta)


class TestExtract:
    def test_simple_path_verbatim(self):
        g = library_graph("path4")
        p = extract_path(HTConfig(g, 0b111, {0, 3}), 0)
        assert p.vertices == (0, 1, 2, 3) and p.edges == (0, 1, 2)

    def test_degree_four_takes_smaller_edge(self):
        g = looped_path()
        p = extract_path(HTConfig(g, (1 << g.n_edges) - 1, {"x", "y"}), "x")
        # c-d is ordered before c-b, so the loop is traversed first
        assert p.vertices == ("x", "a", "c", "d", "e", "c", "b", "y")
        assert p.edges == (0, 1, 2, 5, 3, 4, 6)
        assert p.boundary == frozenset(range(7))

    def test_not_a_source(self):
        g = library_graph("path4")
        with pytest.raises(ValueError):
            extract_path(HTConfig(g, 0b111, {0, 3}), 1)

    def test_parity_mismatch(self):
        with pytest.raises(ValueError):
            HTConfig(library_graph("path4"), 0b011, {0, 3})

    def test_path_invariants_on_grid(self):
        g = library_graph("grid2x4", beta=0.4)
        A = ((0, 0), (1, 3))
        for m in even_subgraphs(g, A).tolist():
            p = extract_path(HTConfig(g, m, A), A[0])
            assert p.end == A[1] and len(set(p.edges)) == len(p.edges)
            assert set(p.edges) <= p.boundary
            for (u, v), e in zip(zip(p.vertices, p.vertices[1:]), p.edges):
                assert {g.vertices[i] for i in g.edges[e]} == {u, v}


class TestBoundary:
    def test_line(self):
        g = library_graph("path3")
        assert edge_boundary(([0, 1, 2], [0, 1]), g) == frozenset({0, 1})

    def test_largest_edge_at_degree_four(self):
        g = looped_path()
        c = g.index("c")
        assert set(g.incident[c]) <= edge_boundary(([1, c, 5], [1, 4]), g)

    def test_single_edge(self):
        g = library_graph("single_edge")
        assert edge_boundary(([0, 1], [0]), g) == frozenset({0})

    def test_accepts_extracted_path(self):
        g = library_graph("path3")
        p = ExtractedPath((0, 1, 2), (0, 1), frozenset({0, 1}))
        assert edge_boundary(p, g) == p.boundary


class TestPathLaw:
    def test_single_edge(self):
        law = path_law(library_graph("single_edge", beta=0.3), (0, 1), 0)
        assert len(law.entries) == 1 and math.isclose(law.entries[0].p_extracted, 1.0)

    @pytest.mark.parametrize("beta", [0.2, 0.6, 1.3])
    def test_cycle4_adjacent(self, beta):
        t = math.tanh(beta)
        law = path_law(library_graph("cycle4", beta=beta), (0, 1), 0).by_path()
        assert set(law) == {(0,), (1, 3, 2)}
        assert math.isclose(law[(0,)], t / (t + t**3), rel_tol=1e-12)
        assert math.isclose(law[(1, 3, 2)], t**3 / (t + t**3), rel_tol=1e-12)

    @pytest.mark.parametrize("gid", ["triangle", "cycle4", "grid2x3", "grid2x4"])
    def test_closed_form_and_conditional(self, gid):
        g = library_graph(gid, beta=0.55)
        V = g.vertices
        for A in [(V[0], V[-1]), tuple(V[:4])]:
            if len(A) % 2 or len(set(A)) < len(A):
                continue
            law = path_law(g, A, A[0])
            assert math.isclose(law.total(), 1.0, rel_tol=1e-12)
            assert all(e.check.ok for e in law)
            assert max(e.conditional_gap for e in law) < 1e-10

    def test_x_not_in_A(self):
        with pytest.raises(ValueError):
            path_law(library_graph("cycle4"), (0, 1), 2)


class TestMonotonicity:
    def test_two_sources_identical(self):
        r = verify_monotonicity(library_graph("grid2x3", beta=0.5), ((0, 0), (1, 2)), (0, 0), (1, 2))
        assert r.ok and r.max_violation == 0 and all(c.lhs == c.rhs for c in r.checks)

    @pytest.mark.parametrize("y, n_paths", [((0, 1), 1), ((1, 0), 1), ((1, 1), 0)])
    def test_square_all_corners(self, y, n_paths):
        # with all four corners as sources only perfect matchings survive
        g = build_block(nearest_neighbor(2), (2, 2)).with_beta(0.6)
        r = verify_monotonicity(g, g.vertices, (0, 0), y)
        assert r.ok and r.n_paths == n_paths

    def test_grid2x3_random_betas(self):
        base = library_graph("grid2x3")
        A = ((0, 0), (0, 2), (1, 0), (1, 2))
        for beta in np.random.default_rng(3).uniform(0.05, 1.5, 10):
            r = verify_monotonicity(base.with_beta(float(beta)), A, (0, 0), (1, 2))
            assert r.ok

    def test_requires_distinct(self):
        with pytest.raises(ValueError):
            verify_monotonicity(library_graph("cycle4"), (0, 1), 0, 0)


class TestParityCoupling:
    def test_single_edge(self):
        assert verify_parity_coupling(library_graph("single_edge", beta=0.4), (0, 1)) < 1e-14

    def test_triangle_empty(self):
        assert verify_parity_coupling(library_graph("triangle", beta=0.9), ()) < 1e-12

    def test_cycle4_opposite(self):
        assert verify_parity_coupling(library_graph("cycle4", beta=0.7), (0, 2)) < 1e-12
