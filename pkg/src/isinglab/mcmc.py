"""Swendsen–Wang Monte Carlo with FK connectivity estimators.

Chains carry their own :class:`numpy.random.Generator`; the numba kernels only
consume uniforms drawn from it, so a chain is reproducible from its seed no
matter how chains are interleaved or distributed over processes.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .lattice import LatticeGraph, graph_from_edges, lattice_point
from .scaling import ScalingReport, fit_rate, fit_rate_linear

__all__ = [
    "ChainState",
    "EstimateRecord",
    "InsufficientSamples",
    "new_chain",
    "sw_sweep",
    "run_sweeps",
    "torus_graph",
    "two_point_observable",
    "even_observable",
    "spin_observable",
    "sample_observables",
    "estimate_two_point",
    "estimate_even_cov",
    "estimate_xi",
    "torus_correlations",
    "rate_doubling",
    "validation_suite",
    "batch_means",
]

BURNIN = 1000
BATCH = 100
MIN_SWEEPS = 1000


class InsufficientSamples(ValueError):
    pass


# -- kernels -----------------------------------------------------------------


@njit(cache=True)
def _find(parent, a):
    while parent[a] != a:
        parent[a] = parent[parent[a]]
        a = parent[a]
    return a


@njit(cache=True)
def _sweep(ei, ej, popen, spins, bonds, labels, ub, us):
    """One bond-then-spin update; leaves cluster roots in ``labels``."""
    nv = spins.shape[0]
    for v in range(nv):
        labels[v] = v
    for e in range(ei.shape[0]):
        a, b = ei[e], ej[e]
        if spins[a] == spins[b] and ub[e] < popen[e]:
            bonds[e] = True
            ra = _find(labels, a)
            rb = _find(labels, b)
            if ra != rb:
                if ra < rb:
                    labels[rb] = ra
                else:
                    labels[ra] = rb
        else:
            bonds[e] = False
    for v in range(nv):
        labels[v] = _find(labels, v)
    for v in range(nv):
        if labels[v] == v:
            spins[v] = 1 if us[v] < 0.5 else -1
    for v in range(nv):
        spins[v] = spins[labels[v]]


@njit(cache=True)
def _measure(labels, spins, kind, ptr, verts, out, scratch):
    """Evaluate observables; ``kind`` 0 = connectivity, 1 = evenly partitioned, 2 = spin product."""
    for k in range(kind.shape[0]):
        a, b = ptr[k], ptr[k + 1]
        if kind[k] == 0:
            out[k] = 1.0 if labels[verts[a]] == labels[verts[a + 1]] else 0.0
        elif kind[k] == 1:
            for i in range(a, b):
                scratch[labels[verts[i]]] = 0
            for i in range(a, b):
                scratch[labels[verts[i]]] ^= 1
            ok = 1.0
            for i in range(a, b):
                if scratch[labels[verts[i]]] != 0:
                    ok = 0.0
            out[k] = ok
        else:
            s = 1
            for i in range(a, b):
                s *= spins[verts[i]]
            out[k] = float(s)


@njit(cache=True)
def _torus_measure(labels, L, disp, out_two, out_ab, out_a, out_cross):
    """Translation-averaged indicators on an ``L x L`` torus (vertex ``i*L + j``).

    For each displacement ``(dx, dy)`` (with ``dy = 0`` or ``dx = 0``) and each
    of the two lattice orientations: ``x <-> x + disp``; the even event for
    the bond pair ``A = {x, x + p}``, ``B = {x + disp, x + disp + p}`` with
    ``p`` perpendicular to the axis; ``E_A`` alone; and the cross term
    ``E_{A u B}`` minus ``E_A and E_B`` (needs a cluster meeting both pairs).
    """
    nd = disp.shape[0]
    V = L * L
    for k in range(nd):
        two = 0.0
        ab = 0.0
        cross = 0.0
        for orient in range(2):
            dx = disp[k, 0]
            dy = disp[k, 1]
            # partner offset perpendicular to the displacement
            px, py = (1, 0) if dx == 0 else (0, 1)
            if orient == 1:
                dx, dy = dy, dx
                px, py = py, px
            for i in range(L):
                for j in range(L):
                    x = i * L + j
                    y = ((i + dx) % L) * L + (j + dy) % L
                    lx = labels[x]
                    ly = labels[y]
                    if lx == ly:
                        two += 1.0
                    x2 = ((i + px) % L) * L + (j + py) % L
                    y2 = ((i + dx + px) % L) * L + (j + dy + py) % L
                    l1 = labels[x2]
                    l2 = labels[y2]
                    # four points, each cluster must hold an even number of them
                    if lx == l1:
                        even = ly == l2
                    elif lx == ly:
                        even = l1 == l2
                    elif lx == l2:
                        even = l1 == ly
                    else:
                        even = False
                    if even:
                        ab += 1.0
                        if not (lx == l1 and ly == l2):
                            cross += 1.0
        out_two[k] = two / (2 * V)
        out_ab[k] = ab / (2 * V)
        out_cross[k] = cross / (2 * V)
    a = 0.0
    for i in range(L):
        for j in range(L):
            x = i * L + j
            if labels[x] == labels[i * L + (j + 1) % L]:
                a += 1.0
            if labels[x] == labels[((i + 1) % L) * L + j]:
                a += 1.0
    out_a[0] = a / (2 * V)


# -- chains --------------------------------------------------------------------


@dataclass
class ChainState:
    """Edwards–Sokal pair plus the chain's random stream.

    Attributes
    ----------
    spins : numpy.ndarray of int8
    bonds : numpy.ndarray of bool
        FK configuration from the last bond update.
    labels : numpy.ndarray of int64
        Cluster root of each vertex for ``bonds``.
    rng : numpy.random.Generator
    sweeps : int
    """

    graph: LatticeGraph
    spins: np.ndarray
    bonds: np.ndarray
    labels: np.ndarray
    rng: np.random.Generator
    sweeps: int = 0
    _arrays: tuple = field(default=None, repr=False)

    def __post_init__(self):
        if self._arrays is None:
            e = np.asarray(self.graph.edges, dtype=np.int64).reshape(-1, 2)
            popen = -np.expm1(-2.0 * self.graph.K)
            self._arrays = (e[:, 0].copy(), e[:, 1].copy(), popen)


def new_chain(graph: LatticeGraph, seed=None) -> ChainState:
    """Chain started from i.i.d. uniform spins; ``seed`` may be an int or a SeedSequence."""
    rng = np.random.default_rng(seed)
    spins = np.where(rng.random(graph.n_vertices) < 0.5, 1, -1).astype(np.int8)
    return ChainState(
        graph,
        spins,
        np.zeros(graph.n_edges, dtype=bool),
        np.arange(graph.n_vertices, dtype=np.int64),
        rng,
    )


def sw_sweep(state: ChainState) -> ChainState:
    """One Swendsen–Wang sweep in place; returns ``state``."""
    ei, ej, popen = state._arrays
    ub = state.rng.random(len(ei))
    us = state.rng.random(len(state.spins))
    _sweep(ei, ej, popen, state.spins, state.bonds, state.labels, ub, us)
    state.sweeps += 1
    return state


def run_sweeps(state: ChainState, n: int) -> ChainState:
    for _ in range(n):
        sw_sweep(state)
    return state


def torus_graph(L: int, beta: float, J: float = 1.0) -> LatticeGraph:
    """Nearest-neighbour ``L x L`` torus; vertex ``(i, j)`` has index ``i*L + j``."""
    if L < 3:
        raise ValueError("torus needs L >= 3")
    verts = [(i, j) for i in range(L) for j in range(L)]
    pairs = []
    for i in range(L):
        for j in range(L):
            pairs.append(((i, j), (i, (j + 1) % L)))
            pairs.append(((i, j), ((i + 1) % L, j)))
    return graph_from_edges(verts, pairs, J=J, beta=beta, name=f"torus(L={L})")


# -- observables and estimates ----------------------------------------------------


@dataclass(frozen=True)
class Observable:
    name: str
    kind: int
    vertices: tuple


def two_point_observable(graph, x, y) -> Observable:
    """``<sigma_x sigma_y> = P(x <-> y)``."""
    return Observable(f"two_point{(x, y)}", 0, graph.indices([x, y]) if x != y else (graph.index(x),) * 2)


def even_observable(graph, A) -> Observable:
    """``<sigma_A> = P(E_A)`` for ``|A|`` even."""
    A = list(A)
    if len(A) % 2:
        raise ValueError("even observable needs |A| even")
    return Observable(f"even{tuple(A)}", 1, graph.indices(A))


def spin_observable(graph, A) -> Observable:
    """Plain spin product (used for odd ``A``, where the FK estimator is zero)."""
    return Observable(f"spin{tuple(A)}", 2, graph.indices(A))


@dataclass(frozen=True)
class EstimateRecord:
    """Batch-means estimate of one observable.

    ``stderr`` is zero only for observables that are constant along the chain.
    """

    observable: str
    mean: float
    stderr: float
    n_samples: int
    n_eff: float

    def within(self, value, n_sigma=4.0) -> bool:
        return abs(self.mean - value) <= n_sigma * self.stderr + 1e-12


def batch_means(values: np.ndarray, batch: int = BATCH):
    """Mean, batch-means standard error and effective sample size of a 1-D series."""
    values = np.asarray(values, dtype=float)
    n = len(values)
    nb = n // batch
    if nb < 2:
        raise InsufficientSamples(f"need at least {2 * batch} samples, got {n}")
    bm = values[: nb * batch].reshape(nb, batch).mean(axis=1)
    mean = float(values[: nb * batch].mean())
    se = float(bm.std(ddof=1) / math.sqrt(nb))
    var = float(values.var())
    n_eff = float(var / se**2) if se > 0 else float(n)
    return mean, se, n_eff


def _pack(obs):
    kind = np.array([o.kind for o in obs], dtype=np.int64)
    ptr = np.zeros(len(obs) + 1, dtype=np.int64)
    ptr[1:] = np.cumsum([len(o.vertices) for o in obs])
    verts = np.array([v for o in obs for v in o.vertices], dtype=np.int64)
    return kind, ptr, verts


def _sample_chain(graph, observables, sweeps, burnin, seed):
    st = new_chain(graph, seed)
    run_sweeps(st, burnin)
    kind, ptr, verts = _pack(observables)
    out = np.empty((sweeps, len(observables)))
    scratch = np.zeros(graph.n_vertices, dtype=np.int64)
    for t in range(sweeps):
        sw_sweep(st)
        _measure(st.labels, st.spins, kind, ptr, verts, out[t], scratch)
    return out


def _seeds(seed, chains):
    return np.random.SeedSequence(seed).spawn(chains)


def _map(fn, args, jobs):
    if jobs and jobs > 1 and len(args) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            return list(ex.map(fn, *zip(*args)))
    return [fn(*a) for a in args]


def sample_observables(graph, observables, sweeps, burnin=BURNIN, seed=0, chains=1, jobs=1) -> np.ndarray:
    """Per-sweep observable values, chains concatenated in stream order: ``(chains*sweeps, k)``."""
    if sweeps < MIN_SWEEPS:
        raise InsufficientSamples(f"need at least {MIN_SWEEPS} sweeps after burn-in")
    args = [(graph, observables, sweeps, burnin, s) for s in _seeds(seed, chains)]
    return np.vstack(_map(_sample_chain, args, jobs))


def _records(observables, data, batch):
    out = []
    for k, o in enumerate(observables):
        m, se, ne = batch_means(data[:, k], batch)
        out.append(EstimateRecord(o.name, m, se, len(data), ne))
    return out


def estimate_two_point(graph, x, y, sweeps=10_000, burnin=BURNIN, seed=0, chains=1, batch=BATCH, jobs=1):
    """Connectivity estimator of ``<sigma_x sigma_y>``."""
    o = two_point_observable(graph, x, y)
    return _records([o], sample_observables(graph, [o], sweeps, burnin, seed, chains, jobs), batch)[0]


def _cov_from_blocks(ab, a, b, batch):
    """``mean(ab) - mean_even(a) * mean_odd(b)`` where even/odd refer to alternating batches."""
    nb = len(ab) // batch
    nb -= nb % 2
    if nb < 4:
        raise InsufficientSamples("covariance needs at least 4 batches")
    cut = nb * batch
    AB = ab[:cut].reshape(nb, batch).mean(axis=1)
    A = a[:cut].reshape(nb, batch).mean(axis=1)
    B = b[:cut].reshape(nb, batch).mean(axis=1)
    pairs = np.column_stack(((AB[0::2] + AB[1::2]) / 2, A[0::2], B[1::2]))
    m = pairs.mean(axis=0)
    cov = float(m[0] - m[1] * m[2])
    g = np.array([1.0, -m[2], -m[1]])
    C = np.atleast_2d(np.cov(pairs, rowvar=False)) / len(pairs)
    se = float(math.sqrt(max(g @ C @ g, 0.0)))
    return cov, se


def estimate_even_cov(graph, A, B, sweeps=20_000, burnin=BURNIN, seed=0, chains=1, batch=BATCH, jobs=1):
    """``P(E_{A u B}) - P(E_A) P(E_B)`` with the product taken over disjoint sweep blocks."""
    A, B = list(A), list(B)
    if set(A) & set(B):
        raise ValueError("A and B must be disjoint")
    if len(A) % 2 or len(B) % 2:
        raise ValueError("A and B must have even size")
    obs = [even_observable(graph, A + B), even_observable(graph, A), even_observable(graph, B)]
    data = sample_observables(graph, obs, sweeps, burnin, seed, chains, jobs)
    cov, se = _cov_from_blocks(data[:, 0], data[:, 1], data[:, 2], batch)
    return EstimateRecord(f"even_cov{(tuple(A), tuple(B))}", cov, se, len(data), float("nan"))


# -- torus runs ---------------------------------------------------------------


def _torus_chain(L, beta, disp, sweeps, burnin, seed, J=1.0):
    g = torus_graph(L, beta, J)
    st = new_chain(g, seed)
    run_sweeps(st, burnin)
    two = np.empty((sweeps, len(disp)))
    ab = np.empty((sweeps, len(disp)))
    a = np.empty((sweeps, 1))
    cross = np.empty((sweeps, len(disp)))
    for t in range(sweeps):
        sw_sweep(st)
        _torus_measure(st.labels, L, disp, two[t], ab[t], a[t], cross[t])
    return two, ab, a[:, 0], cross


@dataclass
class TorusCorrelations:
    """Translation-averaged correlations on a torus at axis displacements ``n``."""

    n: np.ndarray
    two_point: list
    even_cov: list
    cross: list
    sweeps: int
    chains: int

    def rows(self, which="two_point"):
        recs = getattr(self, which)
        return [(int(k), r.mean, r.stderr, r.n_samples) for k, r in zip(self.n, recs)]


def torus_correlations(beta, L, n_list, sweeps, burnin=BURNIN, seed=0, chains=1, batch=BATCH, jobs=1, J=1.0):
    """Two-point function and perpendicular bond-pair covariance along the axes.

    The bond-pair covariance uses ``A = {x, x + p}``, ``B = A + n e`` with ``p``
    perpendicular to the axis ``e``; both lattice axes are averaged.
    """
    n_list = np.asarray(sorted(set(int(k) for k in n_list)), dtype=np.int64)
    if n_list.max() > L // 2:
        raise ValueError("displacements must be at most L/2 on a torus")
    if sweeps < MIN_SWEEPS:
        raise InsufficientSamples(f"need at least {MIN_SWEEPS} sweeps after burn-in")
    disp = np.column_stack((np.zeros_like(n_list), n_list))
    args = [(L, beta, disp, sweeps, burnin, s, J) for s in _seeds(seed, chains)]
    parts = _map(_torus_chain, args, jobs)
    two = np.vstack([p[0] for p in parts])
    ab = np.vstack([p[1] for p in parts])
    a = np.concatenate([p[2] for p in parts])
    cr = np.vstack([p[3] for p in parts])
    tp, ec, cx = [], [], []
    for k, n in enumerate(n_list):
        m, se, ne = batch_means(two[:, k], batch)
        tp.append(EstimateRecord(f"two_point(n={n})", m, se, len(two), ne))
        cov, cse = _cov_from_blocks(ab[:, k], a, a, batch)
        ec.append(EstimateRecord(f"even_cov(n={n})", cov, cse, len(ab), float("nan")))
        m, se, ne = batch_means(cr[:, k], batch)
        cx.append(EstimateRecord(f"cross(n={n})", m, se, len(cr), ne))
    return TorusCorrelations(n_list, tp, ec, cx, sweeps, chains)


def _rate_report(series_id, n, recs, power, form):
    y = np.array([r.mean for r in recs])
    se = np.array([r.stderr for r in recs])
    if np.any(y <= 0) or np.any(se <= 0):
        return ScalingReport(series_id, (int(n[0]), int(n[-1])), form, {"rate": float("nan")},
                             {}, float("nan"), None, "indeterminate: nonpositive estimate in window")
    fit = fit_rate(n, y, stderr=se, power=power)
    return ScalingReport(series_id, (int(n[0]), int(n[-1])), form,
                         {"rate": fit.rate, "power": fit.power, "constant": fit.constant},
                         {"rate": fit.rate_stderr}, fit.residual, True, "fit")


def _linear_rate_report(series_id, n, recs, power, form):
    """Like :func:`_rate_report` but fitted in linear space, so estimates at the noise floor keep their weight."""
    y = np.array([r.mean for r in recs])
    se = np.array([r.stderr for r in recs])
    win = (int(n[0]), int(n[-1]))
    try:
        fit = fit_rate_linear(n, y, se, power=power)
    except (ValueError, RuntimeError) as exc:
        return ScalingReport(series_id, win, form, {"rate": float("nan")}, {}, float("nan"), None,
                             f"indeterminate: {exc}")
    return ScalingReport(series_id, win, form, {"rate": fit.rate, "power": fit.power, "constant": fit.constant},
                         {"rate": fit.rate_stderr}, fit.residual, True, "fit")


def estimate_xi(beta, n_list, L, u=(1.0, 0.0), sweeps=20_000, burnin=BURNIN, seed=0, chains=1, jobs=1,
                J=1.0) -> ScalingReport:
    """Fit ``<sigma_0 sigma_[nu]> ~ C n^{-1/2} e^{-xi n}`` on a 2-D torus.

    Only axis directions are supported (the torus kernel averages both axes).
    A window with a nonpositive estimate is reported with ``verdict=None``.
    """
    if max(n_list) > L // 4:
        raise ValueError("need n_max <= L/4")
    pts = {tuple(abs(c) for c in lattice_point(1, u))}
    if pts not in ({(1, 0)}, {(0, 1)}):
        raise ValueError("estimate_xi supports axis directions only")
    if beta == 0:
        n = np.asarray(sorted(n_list))
        return ScalingReport("xi", (int(n[0]), int(n[-1])), "C n^{-1/2} e^{-xi n}", {"rate": float("nan")},
                             {}, float("nan"), None, "indeterminate: no correlation at beta = 0")
    tc = torus_correlations(beta, L, n_list, sweeps, burnin, seed, chains, jobs=jobs, J=J)
    rep = _rate_report("xi", tc.n, tc.two_point, 0.5, "C n^{-1/2} e^{-xi n}")
    if rep.verdict and rep.params["rate"] < 0.05:
        warnings.warn("fitted inverse correlation length below 0.05: close to criticality", RuntimeWarning,
                      stacklevel=2)
    return rep


def rate_doubling(beta=0.35, L=64, n_list=range(4, 13), sweeps=1_000_000, burnin=BURNIN, seed=0, chains=4,
                  jobs=1, tolerance=0.2):
    """Compare the bond-pair covariance decay rate with twice the two-point rate.

    The two-point data are fitted with the prefactor ``n^{-1/2}`` (log space,
    weighted) and the covariance with ``n^{-2}`` (linear space, weighted,
    since its far points sit at the noise floor); the verdict asks
    ``|rate_even / (2 rate_odd) - 1| <= tolerance``.
    Returns ``(report, correlations)``.
    """
    per_chain = -(-sweeps // chains)
    tc = torus_correlations(beta, L, n_list, per_chain, burnin, seed, chains, jobs=jobs)
    odd = _rate_report("odd", tc.n, tc.two_point, 0.5, "C n^{-1/2} e^{-r n}")
    even = _linear_rate_report("even", tc.n, tc.even_cov, 2.0, "C n^{-2} e^{-r n}")
    params = {"odd_rate": odd.params["rate"], "even_rate": even.params["rate"],
              "odd_rate_stderr": odd.stderr.get("rate", float("nan")),
              "even_rate_stderr": even.stderr.get("rate", float("nan")),
              "sweeps": per_chain * chains}
    if odd.verdict is None or even.verdict is None:
        verdict, crit = None, "indeterminate: " + (odd.criterion if odd.verdict is None else even.criterion)
    else:
        ratio = even.params["rate"] / (2 * odd.params["rate"])
        params["ratio"] = ratio
        verdict, crit = bool(abs(ratio - 1) <= tolerance), f"|even/(2 odd) - 1| <= {tolerance}"
    rep = ScalingReport(f"rate_doubling(beta={beta},L={L})", (int(tc.n[0]), int(tc.n[-1])),
                        "even rate vs twice odd rate", params, {}, 0.0, verdict, crit)
    return rep, tc


# -- validation against exact enumeration ---------------------------------------------


def _validation_chain(graph, observables, sweeps, burnin, seed):
    return _sample_chain(graph, observables, sweeps, burnin, seed)


def validation_suite(graphs, betas=(0.2, 0.4), sweeps=20_000, burnin=BURNIN, seed=0, batch=BATCH, jobs=1):
    """Compare MC estimates with exact enumeration.

    For each graph and beta: all two-point functions from the first vertex,
    all nearest-neighbour bond energies, one four-point even observable and
    one odd spin product (exact value 0).  Returns a list of
    ``(graph, beta, observable, exact, EstimateRecord, z_score)``.
    """
    from .exact import spin_expectation

    rows = []
    tasks = []
    ss = np.random.SeedSequence(seed)
    for g0 in graphs:
        for beta in betas:
            g = g0.with_beta(beta)
            V = g.vertices
            obs = [two_point_observable(g, V[0], v) for v in V[1:]]
            obs += [even_observable(g, [V[i], V[j]]) for i, j in g.edges]
            if len(V) >= 4:
                obs.append(even_observable(g, [V[0], V[1], V[-2], V[-1]]))
            obs.append(spin_observable(g, [V[0]]))
            tasks.append((g, beta, obs))
    child = ss.spawn(len(tasks))
    data = _map(_validation_chain, [(g, obs, sweeps, burnin, s) for (g, _, obs), s in zip(tasks, child)], jobs)
    for (g, beta, obs), d in zip(tasks, data):
        for o, rec in zip(obs, _records(obs, d, batch)):
            exact = spin_expectation(g, [g.vertices[i] for i in o.vertices]) if o.vertices[0] != o.vertices[-1] or \
                len(o.vertices) != 2 else 1.0
            z = (rec.mean - exact) / rec.stderr if rec.stderr > 0 else (0.0 if rec.mean == exact else math.inf)
            rows.append((g.name, beta, o.name, exact, rec, z))
    return rows
