import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from isinglab.scaling import (
    ScalingReport,
    bounded_ratio,
    dyadic_windows,
    fit_power,
    fit_rate,
    fit_rate_linear,
    phi,
    psi,
    reports_from_table,
)

N = np.arange(64, 4097, dtype=float)


def test_forms():
    assert psi(2, 4.0) == 0.25 and psi(4, 7.0) == 1.0
    assert math.isclose(float(psi(3, 9.0)), math.log(10.0) ** -2)
    assert math.isclose(float(phi(2, 4.0)), 0.125)
    with pytest.raises(ValueError):
        psi(1, 3.0)


def test_dyadic_windows():
    assert dyadic_windows(64, 512) == [(64, 128), (128, 256), (256, 512)]
    assert dyadic_windows(3, 10) == [(3, 6), (6, 10)]
    with pytest.raises(ValueError):
        dyadic_windows(8, 8)


class TestFitPower:
    def test_inverse(self):
        fit = fit_power(N, 1 / N)
        assert abs(fit.exponent + 1) <= 1e-9 and fit.residual <= 1e-9

    def test_constant(self):
        fit = fit_power(N, 3 * N**-0.5)
        assert math.isclose(fit.exponent, -0.5, abs_tol=1e-12) and math.isclose(fit.constant, 3.0, rel_tol=1e-10)

    def test_zero_entry(self):
        y = 1 / N
        y[5] = 0
        with pytest.raises(ValueError):
            fit_power(N, y)

    def test_window(self):
        y = np.where(N < 1000, 1 / N, N**-2.0)
        assert math.isclose(fit_power(N, y, (64, 999)).exponent, -1.0, abs_tol=1e-9)

    @settings(max_examples=30, deadline=None)
    @given(st.floats(-3, 1), st.floats(0.01, 100))
    def test_recovers_own_model(self, a, c):
        fit = fit_power(N, c * N**a)
        assert abs(fit.exponent - a) <= 1e-9 and fit.residual <= 1e-9


class TestFitRate:
    n = np.arange(1, 41, dtype=float)

    @pytest.mark.parametrize("rate, power", [(0.8, 2.0), (0.5, 0.5)])
    def test_synthetic(self, rate, power):
        fit = fit_rate(self.n, np.exp(-rate * self.n) * self.n**-power)
        assert abs(fit.rate - rate) <= 1e-6 and abs(fit.power - power) <= 1e-6

    def test_constant_series(self):
        fit = fit_rate(self.n, np.full_like(self.n, 2.5))
        assert abs(fit.rate) <= 1e-9 and abs(fit.power) <= 1e-9 and math.isclose(fit.constant, 2.5)

    def test_fixed_power(self):
        fit = fit_rate(self.n, 4 * np.exp(-0.3 * self.n) / self.n, power=1.0)
        assert math.isclose(fit.rate, 0.3, abs_tol=1e-10) and fit.power == 1.0

    def test_weighted(self):
        y = np.exp(-0.4 * self.n)
        fit = fit_rate(self.n, y, stderr=0.01 * y, power=0.0)
        assert math.isclose(fit.rate, 0.4, abs_tol=1e-10) and fit.rate_stderr > 0

    def test_nonpositive(self):
        with pytest.raises(ValueError):
            fit_rate(self.n, np.zeros_like(self.n))

    def test_linear_space_keeps_negative_points(self):
        n = np.arange(4, 13, dtype=float)
        truth = 0.02 * np.exp(-0.8 * (n - 4)) * (n / 4) ** -2
        noise = np.array([0.0, 0, 0, 0, 0, 0, 0, -2e-7, 1e-7])
        s = np.full_like(n, 2e-7) + 0.01 * truth
        exact = fit_rate_linear(n, truth, s, power=2.0)
        assert math.isclose(exact.rate, 0.8, abs_tol=1e-8)
        noisy = fit_rate_linear(n, truth + noise, s, power=2.0)
        assert abs(noisy.rate - 0.8) < 0.05

    def test_linear_bad_stderr(self):
        with pytest.raises(ValueError):
            fit_rate_linear(self.n, np.exp(-self.n), np.zeros_like(self.n))


class TestBoundedRatio:
    def test_exact_multiple(self):
        lo, hi, ok = bounded_ratio(N, 2 * psi(2, N), lambda n: psi(2, n), factor=1.5)
        assert math.isclose(lo, 2) and math.isclose(hi, 2) and ok

    def test_vanishing_correction(self):
        lo, hi, _ = bounded_ratio(N, psi(3, N) * (1 + 1 / N), lambda n: psi(3, n))
        assert hi / lo < 1.02

    def test_drift_flagged(self):
        n = np.arange(64, 2**16 + 1, dtype=float)
        assert bounded_ratio(n, n**-1.2, lambda x: 1 / x, factor=2.0)[2] is False
        assert bounded_ratio(n, n**-1.0, lambda x: 1 / x, factor=2.0)[2] is True

    def test_no_factor(self):
        assert bounded_ratio(N, 1 / N, 1 / N)[2] is None

    @settings(max_examples=30, deadline=None)
    @given(st.floats(1.0, 10.0), st.floats(0.0, 5.0))
    def test_verdict_monotone_in_factor(self, f1, extra):
        y = N**-1.1
        a = bounded_ratio(N, y, lambda x: 1 / x, factor=f1)[2]
        b = bounded_ratio(N, y, lambda x: 1 / x, factor=f1 + extra)[2]
        assert not (a and not b)


class TestReports:
    def test_json_roundtrip(self):
        r = ScalingReport("s", (1, 2), "form", {"a": 1.0}, {"a": 0.1}, 0.0, True, "c")
        assert json.loads(r.to_json())["window"] == [1, 2]

    def test_walk_table(self):
        n = np.arange(0, 257, dtype=float)
        u = np.where(n > 0, 0.5 / np.sqrt(np.maximum(n, 1)), 1.0)
        f = np.where(n > 0, u * 0.7 / np.maximum(n, 1), 0.0)
        reps = reports_from_table({"n": n, "u": u, "f": f})
        assert [r.verdict for r in reps] == [True, True, None]
        assert math.isclose(reps[2].params["exponent"], -1.0, abs_tol=1e-9)

    def test_mc_table(self):
        n = np.arange(4, 13, dtype=float)
        y = np.exp(-0.4 * n) * n**-0.5
        rep = reports_from_table({"n": n, "estimate": y, "stderr": 0.01 * y}, power=0.5)[0]
        assert math.isclose(rep.params["rate"], 0.4, abs_tol=1e-8)

    def test_unknown_columns(self):
        with pytest.raises(ValueError):
            reports_from_table({"n": [1, 2], "x": [1, 2]})
