"""Regression helpers turning tables and estimates into scaling verdicts.

All fits are ordinary (or weighted) linear least squares on transformed data,
so they are exact on series drawn from their own model class.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

__all__ = [
    "ScalingReport",
    "PowerFit",
    "RateFit",
    "psi",
    "phi",
    "dyadic_windows",
    "fit_power",
    "fit_rate",
    "fit_rate_linear",
    "bounded_ratio",
    "reports_from_table",
]


def psi(d: int, n):
    """Non-intersection scale: ``1/n`` (d=2), ``log(1+n)^-2`` (d=3), ``1`` (d>=4)."""
    n = np.asarray(n, dtype=float)
    if d == 2:
        return 1.0 / n
    if d == 3:
        return np.log1p(n) ** -2.0
    if d >= 4:
        return np.ones_like(n)
    raise ValueError("d must be >= 2")


def phi(d: int, n):
    """``n^{-(d-1)/2} psi_d(n)``."""
    n = np.asarray(n, dtype=float)
    return n ** (-(d - 1) / 2.0) * psi(d, n)


def dyadic_windows(lo: int, hi: int) -> list:
    """``[(lo, 2lo), (2lo, 4lo), ...]`` clipped to ``hi``."""
    if lo < 1 or hi <= lo:
        raise ValueError("need 1 <= lo < hi")
    out = []
    a = lo
    while a < hi:
        out.append((a, min(2 * a, hi)))
        a *= 2
    return out


def _window(n, y, window):
    n = np.asarray(n, dtype=float)
    y = np.asarray(y, dtype=float)
    if n.shape != y.shape:
        raise ValueError("n and series must have the same shape")
    if window is not None:
        sel = (n >= window[0]) & (n <= window[1])
        n, y = n[sel], y[sel]
    if len(n) == 0:
        raise ValueError("empty window")
    return n, y


@dataclass
class ScalingReport:
    """Fitted parameters and verdict for one series against one reference form."""

    series_id: str
    window: tuple
    form: str
    params: dict
    stderr: dict = field(default_factory=dict)
    residual: float = 0.0
    verdict: bool | None = None
    criterion: str = ""

    def to_dict(self) -> dict:
        d = asdict(self)
        d["window"] = list(self.window)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, default=float)


@dataclass(frozen=True)
class PowerFit:
    exponent: float
    constant: float
    stderr: float
    residual: float


def fit_power(n, series, window=None) -> PowerFit:
    """Fit ``y = C n^a`` by least squares on ``(log n, log y)``.

    Examples
    --------
    >>> n = np.arange(64, 4097)
    >>> round(fit_power(n, 3 * n ** -0.5).exponent, 9)
    -0.5
    """
    n, y = _window(n, series, window)
    if len(n) < 4:
        raise ValueError("need at least 4 points")
    if np.any(y <= 0) or np.any(n <= 0):
        raise ValueError("power fits need positive entries")
    X = np.column_stack((np.ones_like(n), np.log(n)))
    coef, *_ = np.linalg.lstsq(X, np.log(y), rcond=None)
    res = np.log(y) - X @ coef
    dof = max(len(n) - 2, 1)
    s2 = float(res @ res) / dof
    cov = s2 * np.linalg.inv(X.T @ X)
    return PowerFit(float(coef[1]), float(math.exp(coef[0])), float(math.sqrt(cov[1, 1])), float(np.linalg.norm(res)))


@dataclass(frozen=True)
class RateFit:
    rate: float
    power: float
    constant: float
    rate_stderr: float
    residual: float


def fit_rate(n, series, window=None, stderr=None, power=None) -> RateFit:
    """Fit ``y = C n^{-power} e^{-rate n}``.

    Parameters
    ----------
    n, series : array_like
        Abscissae and positive values.
    window : (lo, hi), optional
        Inclusive range of ``n`` to use.
    stderr : array_like, optional
        Standard errors of ``series``; enables weighted least squares with
        weights ``y / stderr`` (first-order error of ``log y``).
    power : float, optional
        Hold the power fixed and fit only ``rate`` and ``C``.
    """
    n_all = np.asarray(n, dtype=float)
    n, y = _window(n_all, series, window)
    if np.any(y <= 0):
        raise ValueError("rate fits need positive entries")
    w = np.ones_like(y)
    if stderr is not None:
        _, s = _window(n_all, stderr, window)
        if np.any(s <= 0):
            raise ValueError("standard errors must be positive")
        w = y / s
    target = np.log(y)
    cols = [np.ones_like(n), -n]
    if power is None:
        cols.append(-np.log(n))
    else:
        target = target + power * np.log(n)
    X = np.column_stack(cols)
    Xw, tw = X * w[:, None], target * w
    if np.linalg.matrix_rank(Xw) < X.shape[1]:
        raise ValueError("degenerate design matrix")
    coef, *_ = np.linalg.lstsq(Xw, tw, rcond=None)
    res = tw - Xw @ coef
    dof = len(n) - X.shape[1]
    s2 = float(res @ res) / dof if dof > 0 else 0.0
    if stderr is not None:
        s2 = max(s2, 1.0) if dof > 0 else 1.0
    cov = s2 * np.linalg.inv(Xw.T @ Xw)
    alpha = float(coef[2]) if power is None else float(power)
    return RateFit(float(coef[1]), alpha, float(math.exp(coef[0])), float(math.sqrt(cov[1, 1])), float(np.linalg.norm(res)))


def fit_rate_linear(n, series, stderr, window=None, power=0.0) -> RateFit:
    """Weighted nonlinear fit of ``y = C n^{-power} e^{-rate n}`` in linear space.

    Unlike :func:`fit_rate` this keeps estimates that fluctuate to zero or
    below, each with its own standard error, so no point in the window is
    dropped.  The starting point comes from a log fit of the positive entries.
    """
    from scipy.optimize import curve_fit

    n_all = np.asarray(n, dtype=float)
    n, y = _window(n_all, series, window)
    _, s = _window(n_all, stderr, window)
    if np.any(s <= 0):
        raise ValueError("standard errors must be positive")
    pos = y > 0
    if pos.sum() < 2:
        raise ValueError("need at least two positive estimates to start the fit")
    start = fit_rate(n[pos], y[pos], power=power) if pos.sum() > 2 else None
    r0 = start.rate if start is not None else float(np.log(y[pos][0] / y[pos][-1]) / (n[pos][-1] - n[pos][0]))
    c0 = start.constant if start is not None else float(y[pos][0] * n[pos][0] ** power * np.exp(r0 * n[pos][0]))
    n0 = float(n[0])

    def model(x, logc, rate):
        return np.exp(logc - rate * (x - n0)) * (x / n0) ** -power

    p0 = (math.log(c0) - r0 * n0 - power * math.log(n0), r0)
    popt, pcov = curve_fit(model, n, y, p0=p0, sigma=s, absolute_sigma=True, maxfev=20000)
    res = (y - model(n, *popt)) / s
    const = math.exp(popt[0] + popt[1] * n0) * n0**power
    return RateFit(float(popt[1]), float(power), float(const), float(math.sqrt(pcov[1, 1])), float(np.linalg.norm(res)))


def bounded_ratio(n, series, reference, window=None, factor=None):
    """Range of ``series / reference`` over a window.

    ``reference`` is an array aligned with ``n`` or a callable of ``n``.
    Returns ``(min, max, verdict)`` where ``verdict`` is ``max/min <= factor``
    (``None`` if no factor is given).
    """
    n_all = np.asarray(n, dtype=float)
    ref = reference(n_all) if callable(reference) else np.asarray(reference, dtype=float)
    n, y = _window(n_all, series, window)
    _, r = _window(n_all, ref, window)
    if np.any(y <= 0) or np.any(r <= 0):
        raise ValueError("bounded_ratio needs positive series and reference")
    q = y / r
    lo, hi = float(q.min()), float(q.max())
    verdict = None if factor is None else bool(hi <= factor * lo)
    return lo, hi, verdict


def reports_from_table(table: dict, d: int = 2, power: float = 0.5, series_id: str = "table") -> list:
    """Scaling reports for a column table produced by the walk or Monte Carlo commands.

    * columns ``n, u, f``: bounded ratios of ``u`` against ``n^{-(d-1)/2}``
      (factor 3) and of ``f/u`` against ``psi_d`` (factor 4) on
      ``[lo, n_max]`` with ``lo = min(64, n_max // 4)``, plus a power fit of
      ``f/u``;
    * columns ``n, estimate, stderr``: weighted rate fit with the prefactor
      ``n^{-power}``.
    """
    n = np.asarray(table["n"], dtype=float)
    out = []
    if "u" in table and "f" in table:
        u = np.asarray(table["u"], dtype=float)
        f = np.asarray(table["f"], dtype=float)
        n_max = int(n.max())
        win = (max(1, min(64, n_max // 4)), n_max)
        sel = n >= 1
        lo, hi, ok = bounded_ratio(n[sel], u[sel], lambda x: x ** (-(d - 1) / 2.0), win, 3.0)
        out.append(ScalingReport(f"{series_id}/u", win, "u_n vs n^{-(d-1)/2}", {"min_ratio": lo, "max_ratio": hi},
                                 {}, 0.0, ok, "max/min <= 3"))
        ratio = f[sel] / u[sel]
        lo, hi, ok = bounded_ratio(n[sel], ratio, lambda x: psi(d, x), win, 4.0)
        out.append(ScalingReport(f"{series_id}/f_over_u", win, "f_n/u_n vs psi_d", {"min_ratio": lo, "max_ratio": hi},
                                 {}, 0.0, ok, "max/min <= 4"))
        fit = fit_power(n[sel], ratio, win)
        out.append(ScalingReport(f"{series_id}/f_over_u_power", win, "C n^a",
                                 {"exponent": fit.exponent, "constant": fit.constant}, {"exponent": fit.stderr},
                                 fit.residual, None, "fit only"))
    elif "estimate" in table and "stderr" in table:
        y = np.asarray(table["estimate"], dtype=float)
        s = np.asarray(table["stderr"], dtype=float)
        win = (int(n.min()), int(n.max()))
        fit = fit_rate_linear(n, y, s, power=power)
        out.append(ScalingReport(f"{series_id}/rate", win, f"C n^-{power} e^(-r n)",
                                 {"rate": fit.rate, "power": fit.power, "constant": fit.constant},
                                 {"rate": fit.rate_stderr}, fit.residual, None, "fit only"))
    else:
        raise ValueError("table needs columns (n, u, f) or (n, estimate, stderr)")
    return out
