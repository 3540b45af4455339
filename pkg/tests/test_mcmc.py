import math

import numpy as np
import pytest

from isinglab import build_block, graph_from_edges, nearest_neighbor
from isinglab import exact as ex
from isinglab.library import library_graph
from isinglab.mcmc import (
    InsufficientSamples,
    batch_means,
    estimate_even_cov,
    estimate_two_point,
    estimate_xi,
    new_chain,
    run_sweeps,
    sample_observables,
    spin_observable,
    torus_correlations,
    torus_graph,
    validation_suite,
)
from isinglab.scaling import fit_rate


@pytest.fixture(scope="module")
def grid3():
    return build_block(nearest_neighbor(2), (3, 3)).with_beta(0.4)


class TestSweep:
    def test_beta_zero(self):
        st = run_sweeps(new_chain(torus_graph(8, 0.0), seed=1), 50)
        assert not st.bonds.any()
        spins = np.array([run_sweeps(st, 1).spins.copy() for _ in range(400)])
        assert abs(spins.mean()) < 4 / math.sqrt(spins.size)

    def test_spins_constant_on_clusters(self):
        st = run_sweeps(new_chain(torus_graph(8, 0.5), seed=2), 20)
        g = st.graph
        for e in np.flatnonzero(st.bonds):
            i, j = g.edges[e]
            assert st.spins[i] == st.spins[j]

    def test_single_edge_bond_frequency(self):
        g = library_graph("single_edge", beta=0.6)
        st = new_chain(g, seed=3)
        run_sweeps(st, 100)
        x = np.array([run_sweeps(st, 1).bonds[0] for _ in range(20_000)], dtype=float)
        # P(bond open) = P(agree) * (1 - e^{-2 beta}) = tanh(beta)
        m, se, _ = batch_means(x)
        assert abs(m - math.tanh(0.6)) <= 4 * se

    def test_deterministic(self, grid3):
        o = [spin_observable(grid3, [grid3.vertices[0], grid3.vertices[4]])]
        a = sample_observables(grid3, o, 1000, burnin=10, seed=7, chains=2)
        b = sample_observables(grid3, o, 1000, burnin=10, seed=7, chains=2)
        assert np.array_equal(a, b)


class TestTwoPoint:
    def test_grid3(self, grid3):
        x = grid3.vertices[0]
        for y in grid3.vertices[1:]:
            rec = estimate_two_point(grid3, x, y, sweeps=10_000, seed=11)
            assert rec.within(ex.spin_expectation(grid3, (x, y)))

    def test_same_vertex(self, grid3):
        rec = estimate_two_point(grid3, (1, 1), (1, 1), sweeps=1000)
        assert rec.mean == 1.0 and rec.stderr == 0.0

    def test_beta_zero(self):
        g = build_block(nearest_neighbor(2), (3, 3)).with_beta(0.0)
        rec = estimate_two_point(g, (0, 0), (2, 2), sweeps=1000)
        assert rec.mean == 0.0

    def test_insufficient(self, grid3):
        with pytest.raises(InsufficientSamples):
            estimate_two_point(grid3, (0, 0), (1, 1), sweeps=500)


class TestEvenCov:
    def test_grid3_adjacent_pairs(self, grid3):
        A, B = [(0, 0), (0, 1)], [(1, 0), (1, 1)]
        rec = estimate_even_cov(grid3, A, B, sweeps=40_000, seed=5)
        exact = ex.truncated_cov(grid3, A, B).spin
        assert rec.within(exact) and rec.mean > 0

    def test_disconnected(self):
        g = graph_from_edges((0, 1, 2, 3), [(0, 1), (2, 3)], beta=0.7)
        rec = estimate_even_cov(g, (0, 1), (2, 3), sweeps=20_000, seed=2)
        assert rec.within(0.0)

    def test_beta_zero(self):
        g = build_block(nearest_neighbor(2), (3, 3)).with_beta(0.0)
        rec = estimate_even_cov(g, [(0, 0), (0, 1)], [(2, 0), (2, 1)], sweeps=2000)
        assert rec.within(0.0)

    def test_preconditions(self, grid3):
        with pytest.raises(ValueError):
            estimate_even_cov(grid3, [(0, 0), (0, 1)], [(0, 1), (1, 1)])
        with pytest.raises(ValueError):
            estimate_even_cov(grid3, [(0, 0)], [(1, 1), (2, 2)])


class TestTorus:
    def test_small_torus_matches_enumeration(self):
        # 4x4 torus has 16 spins: small enough for exact enumeration
        L, beta = 4, 0.3
        g = torus_graph(L, beta)
        tc = torus_correlations(beta, L, [1, 2], sweeps=30_000, seed=9)
        for k, n in enumerate(tc.n):
            assert tc.two_point[k].within(ex.spin_expectation(g, ((0, 0), (0, int(n)))))
            A, B = ((0, 0), (1, 0)), ((0, int(n)), (1, int(n)))
            cov = ex.spin_expectation(g, A + B) - ex.spin_expectation(g, A) * ex.spin_expectation(g, B)
            assert tc.even_cov[k].within(cov)

    def test_displacement_bound(self):
        with pytest.raises(ValueError):
            torus_correlations(0.3, 8, [5], sweeps=1000)

    def test_odd_observable_zero(self):
        g = torus_graph(6, 0.35)
        d = sample_observables(g, [spin_observable(g, [(0, 0)]), spin_observable(g, [(0, 0), (1, 1), (2, 3)])],
                               4000, seed=4)
        for k in range(2):
            m, se, _ = batch_means(d[:, k])
            assert abs(m) <= 4 * se


class TestXi:
    def test_synthetic_fit(self):
        n = np.arange(2, 20, dtype=float)
        fit = fit_rate(n, np.exp(-0.5 * n) * n**-0.5, power=0.5)
        assert abs(fit.rate - 0.5) <= 1e-6

    def test_beta_zero_indeterminate(self):
        rep = estimate_xi(0.0, [1, 2, 3], 16)
        assert rep.verdict is None and math.isnan(rep.params["rate"])

    def test_window_guard(self):
        with pytest.raises(ValueError):
            estimate_xi(0.2, [1, 5], 16)
        with pytest.raises(ValueError):
            estimate_xi(0.2, [1, 2], 16, u=(math.sqrt(0.5), math.sqrt(0.5)))

    @pytest.mark.slow
    def test_decreasing_in_beta(self):
        rates = [estimate_xi(b, [1, 2, 3, 4], 16, sweeps=20_000, seed=1).params["rate"] for b in (0.1, 0.2, 0.3)]
        assert all(r > 0 and math.isfinite(r) for r in rates)
        assert rates[0] > rates[1] > rates[2]


def test_validation_suite_small():
    rows = validation_suite([library_graph("triangle"), library_graph("cycle4")], betas=(0.3,), sweeps=5000, seed=1)
    assert len(rows) == 2 + 3 + 1 + 3 + 4 + 1 + 1
    assert all(abs(z) <= 4 for *_, z in rows)
