import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from isinglab.walk import (
    Trajectory,
    check_appendix_bounds,
    cyclic_shift,
    cyclic_shift_census,
    decomposition_deviations,
    diamond_necessary_overlap,
    diamond_points,
    diamonds_intersect_exact,
    difference_walk,
    identity_report,
    in_cone,
    in_diamond,
    mc_nonintersection,
    mc_return_stats,
    nonintersection_enumerate,
    nonintersection_exact,
    nonnegative_bridge_sums,
    q_bound_ratio,
    ratio_verdicts,
    renewal_deviations,
    shift_lower_bound_instances,
    synchronize,
    verify_decomposition,
    verify_renewal,
)
from isinglab.walk.dp import TruncationError, dp_tables, q_tables
from isinglab.walk.models import make_lazy_model, make_model, make_pure_lazy_model, model_from_steps

F = Fraction

# exact values from brute-force path enumeration with rational arithmetic
PURE_LAZY = {
    "u": [1, F(1, 3), F(1, 3), F(7, 27), F(19, 81), F(17, 81), F(47, 243)],
    "f": [0, F(1, 3), F(2, 9), F(2, 27), F(4, 81), F(8, 243), F(2, 81)],
    "rbar": [1, F(2, 3), F(4, 9), F(10, 27), F(26, 81), F(70, 243), F(64, 243)],
}
LAZY = {
    "u": [1, F(2, 9), F(7, 27), F(164, 729), F(1303, 6561), F(3502, 19683), F(29261, 177147)],
    "f": [0, F(2, 9), F(17, 81), F(88, 729), F(442, 6561), F(2380, 59049), F(598, 19683)],
    "rbar": [1, F(7, 9), F(46, 81), F(326, 729), F(2492, 6561), F(20048, 59049), F(18254, 59049)],
}


@pytest.fixture(scope="module")
def pure_lazy():
    return make_pure_lazy_model()


@pytest.fixture(scope="module")
def lazy():
    return make_lazy_model()


@pytest.fixture(scope="module")
def tables_pl(pure_lazy):
    return dp_tables(pure_lazy, 512, targets=[(0,), (3,), (-3,)])


class TestModels:
    def test_pure_lazy_valid(self, pure_lazy):
        assert pure_lazy.name == "pure-lazy" and len(pure_lazy.prob) == 3
        assert np.allclose(pure_lazy.prob, 1 / 3)

    def test_delta_range(self):
        with pytest.raises(ValueError, match="delta"):
            make_pure_lazy_model(delta=0.8)

    def test_asymmetric_rejected(self):
        with pytest.raises(ValueError, match="symmetry"):
            model_from_steps(2, 0.4, {(1, (0,)): 0.5, (1, (1,)): 0.3, (1, (-1,)): 0.2})

    def test_periodic_rejected(self):
        with pytest.raises(ValueError, match="periodic"):
            model_from_steps(2, 0.4, {(1, (1,)): 0.5, (1, (-1,)): 0.5})

    def test_cone_rejected(self):
        with pytest.raises(ValueError, match="cone"):
            model_from_steps(2, 0.4, {(1, (0,)): 0.5, (1, (6,)): 0.25, (1, (-6,)): 0.25})

    @pytest.mark.parametrize("d", [2, 3, 4])
    def test_factory(self, d):
        for name in ("lazy", "pure-lazy", "geom"):
            m = make_model(name, d)
            assert m.d == d and m.flip_symmetric()
        with pytest.raises(ValueError):
            make_model("nope")


class TestTables:
    @pytest.mark.parametrize("model, ref", [("pure-lazy", PURE_LAZY), ("lazy", LAZY)])
    def test_small_levels_exact(self, model, ref):
        t = dp_tables(make_model(model), 6)
        for key in ("u", "f", "rbar"):
            np.testing.assert_allclose(getattr(t, key), [float(x) for x in ref[key]], rtol=1e-13, atol=1e-15)

    def test_first_levels(self, tables_pl):
        assert tables_pl.u[0] == 1 and tables_pl.rbar[0] == 1 and tables_pl.f[0] == 0
        assert math.isclose(tables_pl.u[0] * tables_pl.rbar[1] + tables_pl.u[1] * tables_pl.rbar[0], 1.0)

    def test_renewal(self, tables_pl):
        assert renewal_deviations(tables_pl)[0] == 0.0
        assert verify_renewal(tables_pl) <= 1e-9 + tables_pl.leaked

    def test_decomposition(self, tables_pl):
        assert verify_decomposition(tables_pl) <= 1e-9
        assert np.max(decomposition_deviations(tables_pl, (3,))) <= 1e-9
        with pytest.raises(KeyError):
            decomposition_deviations(tables_pl, (7,))

    def test_decomposition_level_one(self, tables_pl):
        p, q = tables_pl.p[(0,)], tables_pl.q[(0,)]
        assert q[0] == 0 and math.isclose(p[1], 1 / 3) and math.isclose(q[1], 1 / 3)
        assert math.isclose(p[1], tables_pl.u[1] * q[0] + tables_pl.u[0] * q[1])

    def test_unreachable_slice_zero(self, tables_pl):
        assert tables_pl.p[(3,)][2] == 0 and tables_pl.q[(3,)][2] == 0

    def test_symmetry(self, tables_pl):
        assert np.array_equal(tables_pl.p[(3,)], tables_pl.p[(-3,)])

    def test_basic_properties(self, tables_pl):
        t = tables_pl
        assert np.all(t.f <= t.u + 1e-15) and np.all((0 <= t.u) & (t.u <= 1)) and np.all(t.f >= 0)
        assert np.all(np.diff(t.rbar) <= 1e-15)
        assert np.allclose(t.r[1:], t.rbar[:-1])

    def test_leak_d3(self):
        t = dp_tables(make_lazy_model(3), 128)
        assert t.leaked < 1e-12 and verify_renewal(t) <= 1e-9 + t.leaked

    def test_truncation_error(self):
        with pytest.raises(TruncationError):
            dp_tables(make_lazy_model(4), 4096, memory=1 << 20)

    def test_bad_args(self, pure_lazy):
        with pytest.raises(ValueError):
            dp_tables(pure_lazy, 0)
        with pytest.raises(ValueError):
            dp_tables(pure_lazy, 8, tolerance=1e-20)
        with pytest.raises(ValueError):
            dp_tables(pure_lazy, 8, targets=[(1, 1)])

    def test_identity_report(self, tables_pl):
        rep = identity_report(tables_pl)
        assert rep.verdict and rep.params["renewal_max_dev"] <= 1e-9

    def test_general_start(self, pure_lazy):
        t = q_tables(pure_lazy, (2,), 6, [(0,)])
        assert t.p[(0,)][1] == 0 and math.isclose(t.p[(0,)][2], 1 / 9)

    @pytest.mark.slow
    def test_mc_agrees(self, lazy):
        t = dp_tables(lazy, 128)
        mc = mc_return_stats(lazy, [8, 32, 128], 200_000, seed=5)
        for n, (uh, us, fh, fs) in mc.items():
            assert abs(uh - t.u[n]) <= 4 * us and abs(fh - t.f[n]) <= 4 * fs


class TestTrajectories:
    def test_synchronize(self):
        a = Trajectory([(0, 0), (1, 1), (2, 0), (3, 0)])
        b = Trajectory([(0, 0), (2, 1), (3, 2)])
        sa, sb = synchronize(a, b)
        assert sa.parallel.tolist() == [0, 2, 3] == sb.parallel.tolist()
        assert synchronize(a, a) == (a, a)

    def test_synchronize_empty(self):
        with pytest.warns(RuntimeWarning):
            sa, sb = synchronize(Trajectory([(0, 0), (1, 0)]), Trajectory([(2, 0), (3, 0)]))
        assert len(sa) == len(sb) == 0

    def test_difference(self):
        a = Trajectory([(0, 0), (1, 1), (3, 2)])
        assert np.all(difference_walk((a, a)).lateral == 0)
        b = Trajectory(a.points + np.array([0, 5]))
        assert np.all(difference_walk((b, a)).lateral == 5)
        c = Trajectory([(0, 1), (1, -1), (3, 4)])
        assert difference_walk((a, c)).lateral[:, 0].tolist() == [-1, 2, -2]
        with pytest.raises(ValueError):
            difference_walk((a, Trajectory([(0, 0), (2, 0), (3, 0)])))

    def test_trajectory_validation(self, pure_lazy):
        with pytest.raises(ValueError):
            Trajectory([(0, 0), (0, 1)])
        with pytest.raises(ValueError):
            Trajectory([(0, 0), (1, 2)], model=pure_lazy)


class TestDiamonds:
    def test_apex(self):
        assert in_cone((1, 1), (1, 1), 0.4) and in_cone((1, 1), (1, 1), 0.4, "backward")
        assert in_diamond((0, 0), (0, 0), (0, 0), 0.4)

    def test_cone(self):
        assert in_cone((5, 1), (0, 0), 0.4) and not in_cone((1, 5), (0, 0), 0.4)
        assert in_cone((0, 0), (5, 1), 0.4, "backward")
        with pytest.raises(ValueError):
            in_cone((0, 0), (0, 0), 0.4, "sideways")

    def test_screen_step(self):
        assert diamond_necessary_overlap([1], 2, 0.4)
        assert not diamond_necessary_overlap([3], 2, 0.4)

    def test_screen_is_not_an_exact_criterion(self):
        # the scan finds shared lattice points even though the lateral gap exceeds 2*delta*height
        shared = diamond_points((0, 0), (2, 0), 0.4) & diamond_points((0, 3), (2, 3), 0.4)
        assert shared == {(1, 1), (1, 2)}
        assert diamonds_intersect_exact((0, 0), (2, 0), (0, 3), (2, 3), 0.4)
        assert not diamonds_intersect_exact((0, 0), (2, 0), (0, 9), (2, 9), 0.4)

    def test_empty_diamond(self):
        assert diamond_points((2, 0), (0, 0), 0.4) == set()


class TestCyclicShift:
    def test_nonnegative_unchanged(self):
        t = Trajectory.from_increments([(1, 1), (1, -1)])
        assert cyclic_shift(t, 0) == t and cyclic_shift(t) == t

    def test_hand_rotation(self):
        t = Trajectory.from_increments([(1, -1), (1, 1)])
        s = cyclic_shift(t)
        assert s.increments.tolist() == [[1, 1], [1, -1]] and s.lateral[:, 0].tolist() == [0, 1, 0]

    def test_not_closed(self):
        with pytest.raises(ValueError):
            cyclic_shift(Trajectory.from_increments([(1, 1)]))

    @given(st.lists(st.sampled_from([-1, 0, 1]), min_size=1, max_size=12))
    def test_image_nonnegative(self, zs):
        zs = zs + [-sum(zs)] if abs(sum(zs)) <= 1 else zs[:1] + [-zs[0]]
        t = Trajectory.from_increments([(1, z) for z in zs])
        s = cyclic_shift(t)
        assert s.lateral.min() >= 0 and s.points[-1].tolist() == t.points[-1].tolist()
        assert sorted(map(tuple, s.increments.tolist())) == sorted(map(tuple, t.increments.tolist()))

    def test_census_three_steps(self, pure_lazy):
        c = cyclic_shift_census(pure_lazy, 3)
        assert c.n_bridges == 7 and c.ok and c.max_fiber == 3

    @pytest.mark.parametrize("k, n", [(1, 1), (2, 3), (4, 19), (5, 51)])
    def test_census_counts(self, pure_lazy, k, n):
        c = cyclic_shift_census(pure_lazy, k)
        assert c.n_bridges == n and c.ok and c.max_fiber == k

    def test_census_lazy(self, lazy):
        assert cyclic_shift_census(lazy, 4).ok

    def test_census_needs_d2(self):
        with pytest.raises(ValueError):
            cyclic_shift_census(make_lazy_model(3), 2)

    def test_shift_chain(self, pure_lazy, tables_pl):
        res = shift_lower_bound_instances(pure_lazy, tables_pl, range(4, 200, 7))
        assert res["ok"] and math.isclose(res["c"], 1 / 3)


class TestBridges:
    @pytest.mark.parametrize("name", ["pure-lazy", "lazy", "geom"])
    def test_exact_matches_enumeration(self, name):
        m = make_model(name)
        for L, a, b in [(4, 1, 1), (5, 2, -1), (6, 2, 2)]:
            ex = nonintersection_exact(m, L, a, b)
            en = nonintersection_enumerate(m, L, a, b)
            assert all(math.isclose(x, y, rel_tol=1e-12, abs_tol=1e-300) for x, y in zip(ex, en))

    def test_identical_start(self, pure_lazy):
        assert nonintersection_exact(pure_lazy, 10, 0, 0)[0] == 0.0
        assert mc_nonintersection(pure_lazy, 10, 0, 0, 2000, seed=1).successes == 0

    def test_forced_path(self):
        # only steps (1, 0) and (1, +-1): L=1 from 1 to 2 is a single forced step
        m = make_pure_lazy_model()
        joint, bridge, ratio = nonintersection_exact(m, 1, 1, 2)
        assert math.isclose(bridge, 1 / 3) and ratio == 1.0

    def test_mc_within_error(self, lazy):
        _, _, exact = nonintersection_exact(lazy, 64, 1, 1)
        est = mc_nonintersection(lazy, 64, 1, 1, 20_000, seed=3)
        assert abs(est.estimate - exact) <= 4 * est.stderr

    def test_mc_deterministic(self, lazy):
        a = mc_nonintersection(lazy, 32, 1, 1, 5000, seed=11)
        b = mc_nonintersection(lazy, 32, 1, 1, 5000, seed=11)
        assert a == b

    def test_unreachable(self, pure_lazy):
        with pytest.raises(ValueError):
            mc_nonintersection(pure_lazy, 2, 0, 5, 10)

    def test_nonnegative_bridges(self, pure_lazy):
        B = nonnegative_bridge_sums(pure_lazy, 5)
        # Motzkin numbers over 3^m
        assert np.allclose(B, [1, 1 / 3, 2 / 9, 4 / 27, 9 / 81, 21 / 243])


class TestAppendix:
    def test_short_table_rejected(self, pure_lazy):
        with pytest.raises(ValueError):
            check_appendix_bounds(dp_tables(pure_lazy, 256))

    def test_bounds_d2(self, tables_pl):
        reps = check_appendix_bounds(tables_pl)
        assert reps and all(r.verdict for r in reps)

    def test_ratio_d2(self, lazy):
        rep = ratio_verdicts(dp_tables(lazy, 4096))
        assert rep.verdict and -1.15 <= rep.params["exponent"] <= -0.85

    def test_q_bound_finite(self, pure_lazy):
        res = q_bound_ratio(pure_lazy, [(0,), (2,)], [(0,), (3,)], [16, 64, 256])
        assert np.isfinite(res["max_ratio"]) and res["max_ratio"] > 0
