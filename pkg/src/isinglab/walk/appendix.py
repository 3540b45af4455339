"""Exact identities and scaling bounds for return statistics of the difference walk."""

from __future__ import annotations

import math

import numpy as np

from ..scaling import ScalingReport, bounded_ratio, dyadic_windows, fit_power, phi, psi
from .bridges import nonnegative_bridge_sums
from .dp import WalkTables, q_tables
from .models import WalkModel

__all__ = [
    "renewal_deviations",
    "verify_renewal",
    "decomposition_deviations",
    "verify_decomposition",
    "f_reference",
    "r_reference",
    "check_appendix_bounds",
    "ratio_verdicts",
    "shift_lower_bound_instances",
    "q_bound_ratio",
    "identity_report",
]


def renewal_deviations(tables: WalkTables) -> np.ndarray:
    """``|sum_{m<=n} u_m rbar_{n-m} - 1|`` for every ``n``."""
    s = np.convolve(tables.u, tables.rbar)[: len(tables.u)]
    return np.abs(s - 1.0)


def verify_renewal(tables: WalkTables) -> float:
    """Largest renewal deviation over all levels."""
    return float(renewal_deviations(tables).max())


def decomposition_deviations(tables: WalkTables, z) -> np.ndarray:
    """``|p_m(0, z) - sum_t p_{m-t}(0, 0) q_t(0, z)|`` per level (``q_0 = 0``).

    For ``z = 0`` the identity is a first-return decomposition and holds for
    ``m >= 1``; the ``m = 0`` entry is reported as zero.
    """
    z = tuple(z)
    if z not in tables.p:
        raise KeyError(f"slice {z} was not recorded; pass it in targets")
    p, q = tables.p[z], tables.q[z].copy()
    q[0] = 0.0
    rhs = np.convolve(tables.u, q)[: len(p)]
    dev = np.abs(p - rhs)
    if all(c == 0 for c in z):
        dev[0] = 0.0
    return dev


def verify_decomposition(tables: WalkTables, z=None) -> float:
    zs = [tuple(z)] if z is not None else list(tables.p)
    return max(float(decomposition_deviations(tables, y).max()) for y in zs)


def identity_report(tables: WalkTables, atol: float = 1e-9, leak_cap: float = 1e-12) -> ScalingReport:
    """Renewal and decomposition deviations against ``atol + leaked mass``; leak below ``leak_cap``."""
    leak = tables.leaked
    ren = verify_renewal(tables)
    dec = verify_decomposition(tables) if tables.p else 0.0
    ok = ren <= atol + leak and dec <= atol + leak and leak < leak_cap
    return ScalingReport(
        f"{tables.model_name}/d={tables.d}/identities",
        (0, tables.n_max),
        "exact identities",
        {"renewal_max_dev": ren, "decomposition_max_dev": dec, "leaked_mass": leak, "slices": len(tables.p)},
        {},
        max(ren, dec),
        bool(ok),
        f"dev <= {atol} + leak, leak < {leak_cap}",
    )


def f_reference(d: int, n):
    """Reference form for ``f_n``: ``n^{-3/2}``, ``n^{-1} log(1+n)^{-2}``, ``n^{-(d-1)/2}``."""
    n = np.asarray(n, dtype=float)
    if d == 2:
        return n**-1.5
    if d == 3:
        return n**-1.0 * np.log1p(n) ** -2.0
    return n ** (-(d - 1) / 2.0)


def r_reference(d: int, n):
    """Reference form for ``rbar_n``: ``n^{-1/2}`` (d=2), ``1/log n`` (d=3), ``1`` otherwise.

    ``n = 1`` is clamped to ``log 2`` for d=3; windows start far above it.
    """
    n = np.asarray(n, dtype=float)
    if d == 2:
        return n**-0.5
    if d == 3:
        return 1.0 / np.log(np.maximum(n, 2.0))
    return np.ones_like(n)


def _window(tables, lo, hi):
    hi = min(hi, tables.n_max)
    if hi < 2 * lo:
        raise ValueError(f"tables reach n={tables.n_max}; need at least {2 * lo}")
    return lo, hi


def check_appendix_bounds(tables: WalkTables, d: int | None = None, lo: int = 64, hi: int | None = None,
                          factors=None) -> list:
    """Bounded-ratio reports for ``u``, ``rbar``, ``f`` and ``f/u`` against their reference forms.

    Every report spans ``[lo, hi]`` (default: the whole table above ``lo``) and
    lists the per-dyadic-window ratio ranges under ``params['windows']``.
    """
    d = tables.d if d is None else d
    if tables.n_max < 512:
        raise ValueError("appendix bounds need n_max >= 512")
    hi = tables.n_max if hi is None else hi
    lo, hi = _window(tables, lo, hi)
    fac = {"u": 3.0, "rbar": 3.0, "f": 4.0, "f_over_u": 4.0}
    fac.update(factors or {})
    n = tables.n[1:].astype(float)
    series = {
        "u": (tables.u[1:], n ** (-(d - 1) / 2.0), "u_n vs n^{-(d-1)/2}"),
        "rbar": (tables.rbar[1:], r_reference(d, n), "rbar_n vs d-specific form"),
        "f": (tables.f[1:], f_reference(d, n), "f_n vs d-specific form"),
        "f_over_u": (tables.f[1:] / tables.u[1:], psi(d, n), "f_n/u_n vs psi_d"),
    }
    out = []
    for key, (y, ref, form) in series.items():
        if key == "rbar" and d >= 4:
            continue
        lo_r, hi_r, ok = bounded_ratio(n, y, ref, (lo, hi), fac[key])
        wins = []
        for a, b in dyadic_windows(lo, hi):
            wa, wb, _ = bounded_ratio(n, y, ref, (a, b))
            wins.append([a, b, wa, wb])
        out.append(
            ScalingReport(
                f"{tables.model_name}/d={d}/{key}",
                (lo, hi),
                form,
                {"min_ratio": lo_r, "max_ratio": hi_r, "spread": hi_r / lo_r, "factor": fac[key], "windows": wins},
                residual=0.0,
                verdict=ok,
                criterion="bounded ratio",
            )
        )
    return out


def ratio_verdicts(tables: WalkTables, d: int | None = None) -> ScalingReport:
    """The d-specific statement about ``f_n/u_n``.

    * d = 2: log-log slope over ``[64, 4096]`` in ``[-1.15, -0.85]``;
    * d = 3: max/min of ``(f_n/u_n) (log n)^2`` over ``[64, 2048]`` at most 4;
    * d >= 4: ``min f_n/u_n`` over ``[64, 512]`` at least half the value at 64.
    """
    d = tables.d if d is None else d
    n = tables.n[1:].astype(float)
    ratio = tables.f[1:] / tables.u[1:]
    name = f"{tables.model_name}/d={d}/f_over_u"
    if d == 2:
        win = _window(tables, 64, 4096)
        fit = fit_power(n, ratio, win)
        ok = -1.15 <= fit.exponent <= -0.85
        return ScalingReport(name, win, "power law", {"exponent": fit.exponent, "constant": fit.constant},
                             {"exponent": fit.stderr}, fit.residual, ok, "slope in [-1.15, -0.85]")
    if d == 3:
        win = _window(tables, 64, 2048)
        lo, hi, ok = bounded_ratio(n, ratio * np.log(n) ** 2, np.ones_like(n), win, 4.0)
        return ScalingReport(name, win, "(f/u)(log n)^2", {"min": lo, "max": hi, "spread": hi / lo}, {}, 0.0, ok,
                             "max/min <= 4")
    win = _window(tables, 64, 512)
    sel = (n >= win[0]) & (n <= win[1])
    ref = float(ratio[n == win[0]][0])
    mn = float(ratio[sel].min())
    ok = mn >= 0.5 * ref
    return ScalingReport(name, win, "f/u bounded below", {"min": mn, "at_lo": ref, "min_over_at_lo": mn / ref}, {},
                         0.0, ok, "min >= 0.5 * value at n=64")


def shift_lower_bound_instances(model: WalkModel, tables: WalkTables, n_values=None) -> dict:
    """Check ``f_n >= c^2 B_{n-2x} >= c^2 u_{n-2x} / n`` for ``d = 2``.

    ``(x, y)`` is the most likely step with ``x, y > 0`` and ``c`` its
    probability; ``B_m`` is the weight of bridges to ``(m, 0)`` staying
    laterally nonnegative (computed by constrained DP).
    """
    if model.d != 2:
        raise ValueError("the cyclic-shift bound is for d = 2")
    cands = [(p, k, z[0]) for k, z, p in model.steps() if z[0] > 0]
    if not cands:
        raise ValueError("model has no step with positive lateral part")
    c, x, y = max(cands)
    n_max = tables.n_max
    if n_values is None:
        n_values = range(2 * x, n_max + 1)
    B = nonnegative_bridge_sums(model, n_max)
    worst_first = worst_second = math.inf
    checked = 0
    for n in n_values:
        m = n - 2 * x
        if m < 0:
            continue
        lower = c * c * B[m]
        worst_first = min(worst_first, tables.f[n] - lower)
        if m >= 1:
            worst_second = min(worst_second, lower - c * c * tables.u[m] / n)
        checked += 1
    tol = 1e-15
    return {
        "step": (x, y),
        "c": c,
        "checked": checked,
        "min_gap_f_minus_bridge": worst_first,
        "min_gap_bridge_minus_u": worst_second,
        "ok": worst_first >= -tol and worst_second >= -tol,
    }


def q_bound_ratio(model: WalkModel, zs, ws, m_values, tolerance=1e-12) -> dict:
    """Max over the grid of ``q_m(z,w) / [(1+|z|)^{d+1} (1+|w|)^{d+1} phi_d(m)]``."""
    d = model.d
    m_values = sorted(int(m) for m in m_values)
    ws = [tuple(w) for w in ws]
    best, arg = 0.0, None
    for z in zs:
        z = tuple(z)
        tab = q_tables(model, z, max(m_values), ws, tolerance)
        for w in ws:
            q = tab.q[w]
            for m in m_values:
                denom = (1 + np.linalg.norm(z)) ** (d + 1) * (1 + np.linalg.norm(w)) ** (d + 1) * float(phi(d, m))
                val = q[m] / denom
                if val > best:
                    best, arg = float(val), (z, w, m)
    return {"max_ratio": best, "argmax": arg, "finite": math.isfinite(best)}
