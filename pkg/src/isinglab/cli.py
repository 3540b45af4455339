"""Command line entry point: ``isinglab <group> <command> [options]``.

Every command writes its tables as CSV (17 significant digits) into ``--out``
together with a ``*.config.json`` echo of the full configuration.  Exit
status: 0 when every verdict passes, 1 when a verdict fails, 2 for invalid
usage or configuration.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

import yaml

from . import __version__

log = logging.getLogger("isinglab")

JOBS_ENV = "ISINGLAB_JOBS"


class ConfigError(ValueError):
    pass


# -- output helpers ------------------------------------------------------------


def _cell(v):
    if isinstance(v, bool):
        return "pass" if v else "fail"
    if isinstance(v, float):
        return format(v, ".17g")
    if hasattr(v, "item"):
        return _cell(v.item())
    return str(v)


def write_csv(path: Path, header, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_cell(v) for v in r])
    log.info("wrote %s", path)


def write_json(path: Path, obj):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")
    log.info("wrote %s", path)


def _json_default(o):
    if hasattr(o, "item"):
        return o.item()
    if hasattr(o, "tolist"):
        return o.tolist()
    if isinstance(o, (set, frozenset, tuple)):
        return list(o)
    return str(o)


def echo_config(args, stem: str):
    cfg = {k: v for k, v in sorted(vars(args).items()) if k not in ("func",)}
    cfg["version"] = __version__
    write_json(Path(args.out) / f"{stem}.config.json", cfg)


def _floats(text):
    return [float(x) for x in str(text).split(",") if x.strip()]


def _ints(text):
    return [int(x) for x in str(text).split(",") if x.strip()]


def _names(text):
    return [x.strip() for x in str(text).split(",") if x.strip()]


# -- verify ------------------------------------------------------------------


def cmd_verify_exact(args) -> int:
    from .library import LIBRARY_IDS
    from .suite import SUITES, random_betas, run_exact_suite

    graphs = _names(args.graphs) if args.graphs else list(LIBRARY_IDS)
    suites = _names(args.suites) if args.suites else list(SUITES)
    unknown = [g for g in graphs if g not in LIBRARY_IDS] + [s for s in suites if s not in SUITES]
    if unknown or args.betas < 1:
        raise ConfigError(f"invalid graphs/suites/betas: {unknown or args.betas}")
    betas = random_betas(args.betas, args.seed)
    rows = run_exact_suite(betas, graphs, suites)
    write_csv(
        Path(args.out) / "exact.csv",
        ["graph_id", "identity_id", "beta", "lhs", "rhs", "abs_diff", "verdict"],
        [(r.graph_id, r.identity_id, r.beta, r.lhs, r.rhs, r.abs_diff, r.verdict) for r in rows],
    )
    echo_config(args, "exact")
    failed = sum(r.verdict != "pass" for r in rows)
    print(f"verify exact: {len(rows)} checks, {failed} failed")
    return 1 if failed else 0


def cmd_verify_htpath(args) -> int:
    from .library import LIBRARY_IDS
    from .suite import htpath_rows

    graphs = _names(args.graphs) if args.graphs else list(LIBRARY_IDS)
    if any(g not in LIBRARY_IDS for g in graphs) or not 0 < args.beta:
        raise ConfigError("invalid graphs or beta")
    rows = htpath_rows(graphs, args.beta, args.max_sources)
    cols = ["graph_id", "A", "x", "y", "gamma_id", "p_extracted", "p_formula", "verdict"]
    write_csv(Path(args.out) / "htpath.csv", cols, [[r[c] for c in cols] for r in rows])
    echo_config(args, "htpath")
    failed = sum(r["verdict"] != "pass" for r in rows)
    print(f"verify htpath: {len(rows)} paths, {failed} failed")
    return 1 if failed else 0


# -- walk --------------------------------------------------------------------


def _model(args, name=None):
    from .walk import MODEL_NAMES, make_model

    name = name or args.model
    if name not in MODEL_NAMES:
        raise ConfigError(f"unknown model {name!r}; choose from {MODEL_NAMES}")
    kw = {"p_two": args.p_two} if name == "lazy" else {}
    try:
        return make_model(name, args.d, args.delta, **kw)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def cmd_walk_tables(args) -> int:
    from .walk import dp_tables

    if args.nmax < 1:
        raise ConfigError("--nmax must be >= 1")
    m = _model(args)
    t = dp_tables(m, args.nmax, args.tolerance)
    write_csv(Path(args.out) / "walk_tables.csv", ["n", "u", "f", "rbar", "leak"], t.rows())
    echo_config(args, "walk_tables")
    print(f"walk tables: model={m.name} d={m.d} n_max={t.n_max} leaked={t.leaked:.3g}")
    return 0


def cmd_walk_verify(args) -> int:
    from .walk import (
        check_appendix_bounds,
        cyclic_shift_census,
        dp_tables,
        identity_report,
        ratio_verdicts,
        shift_lower_bound_instances,
    )

    reports = []
    for name in _names(args.models):
        m = _model(args, name)
        e1 = (1,) + (0,) * (m.D - 1)
        e2 = (2,) + (0,) * (m.D - 1)
        t = dp_tables(m, args.nmax, args.tolerance, targets=[(0,) * m.D, e1, e2])
        reports.append(identity_report(t).to_dict())
        if t.n_max >= 512:
            reports.extend(r.to_dict() for r in check_appendix_bounds(t))
            try:
                reports.append(ratio_verdicts(t).to_dict())
            except ValueError as exc:
                log.warning("ratio verdict skipped: %s", exc)
        if m.d == 2:
            sh = shift_lower_bound_instances(m, t)
            reports.append({"series_id": f"{m.name}/shift_lower_bound", "params": sh, "verdict": bool(sh["ok"])})
            for k in range(1, args.census_max + 1):
                c = cyclic_shift_census(m, k)
                reports.append({"series_id": f"{m.name}/cyclic_shift_k={k}", "params": vars(c) | {"ok": c.ok},
                                "verdict": c.ok})
    write_json(Path(args.out) / "walk_verify.json", reports)
    echo_config(args, "walk_verify")
    failed = [r["series_id"] for r in reports if r.get("verdict") is False]
    print(f"walk verify: {len(reports)} reports, {len(failed)} failed")
    for f in failed:
        print(f"  FAIL {f}")
    return 1 if failed else 0


def cmd_walk_mc(args) -> int:
    from .walk import mc_nonintersection, nonintersection_exact

    m = _model(args)
    if m.d != 2:
        raise ConfigError("walk mc runs the d = 2 non-intersection experiment")
    rows = []
    for i, L in enumerate(_ints(args.L)):
        est = mc_nonintersection(m, L, args.start, args.start, args.samples, seed=[args.seed, i])
        _, _, ex = nonintersection_exact(m, L, args.start, args.start)
        rows.append((L, est.estimate, est.stderr, est.samples, ex))
    write_csv(Path(args.out) / "walk_mc.csv", ["L", "estimate", "stderr", "nsamples", "exact"], rows)
    echo_config(args, "walk_mc")
    print(f"walk mc: {len(rows)} lengths")
    return 0


# -- mc ------------------------------------------------------------------------


def cmd_mc_validate(args) -> int:
    from .library import library_graph
    from .mcmc import validation_suite

    graphs = [library_graph(g) for g in _names(args.graphs)]
    rows = validation_suite(graphs, _floats(args.betas), args.sweeps, args.burnin, args.seed, jobs=args.jobs)
    out = [(g, b, name, exact, r.mean, r.stderr, r.n_samples, z, abs(z) <= 4.0) for g, b, name, exact, r, z in rows]
    write_csv(Path(args.out) / "mc_validate.csv",
              ["graph_id", "beta", "observable", "exact", "estimate", "stderr", "nsamples", "z", "verdict"], out)
    echo_config(args, "mc_validate")
    failed = sum(not r[-1] for r in out)
    print(f"mc validate: {len(out)} observables, {failed} outside 4 sigma")
    return 1 if failed else 0


def _mc_checks(args):
    if args.beta is None:
        raise ConfigError("--beta is required (no critical value is assumed)")
    if args.beta < 0 or args.L < 8:
        raise ConfigError("need beta >= 0 and L >= 8")


def cmd_mc_xi(args) -> int:
    from .mcmc import estimate_xi, torus_correlations

    _mc_checks(args)
    n_list = _ints(args.n)
    rep = estimate_xi(args.beta, n_list, args.L, sweeps=args.sweeps, burnin=args.burnin, seed=args.seed,
                      chains=args.chains, jobs=args.jobs)
    tc = torus_correlations(args.beta, args.L, n_list, args.sweeps, args.burnin, args.seed, args.chains,
                            jobs=args.jobs) if args.beta > 0 else None
    if tc is not None:
        write_csv(Path(args.out) / "mc_xi.csv", ["n", "estimate", "stderr", "nsamples"], tc.rows("two_point"))
    write_json(Path(args.out) / "mc_xi.json", rep.to_dict())
    echo_config(args, "mc_xi")
    print(f"mc xi: {rep.params} ({rep.criterion})")
    return 0 if rep.verdict else 1


def cmd_mc_evencov(args) -> int:
    from .mcmc import rate_doubling

    _mc_checks(args)
    rep, tc = rate_doubling(args.beta, args.L, _ints(args.n), args.sweeps * args.chains, args.burnin, args.seed,
                            args.chains, args.jobs)
    write_csv(Path(args.out) / "mc_evencov.csv", ["n", "estimate", "stderr", "nsamples"], tc.rows("even_cov"))
    write_csv(Path(args.out) / "mc_twopoint.csv", ["n", "estimate", "stderr", "nsamples"], tc.rows("two_point"))
    write_json(Path(args.out) / "mc_evencov.json", rep.to_dict())
    echo_config(args, "mc_evencov")
    print(f"mc evencov: {rep.params} verdict={rep.verdict}")
    return 0 if rep.verdict else 1


# -- report --------------------------------------------------------------------


def cmd_report(args) -> int:
    from .scaling import reports_from_table

    out = []
    for p in args.inputs:
        with open(p, newline="") as fh:
            rows = list(csv.DictReader(fh))
        if not rows:
            raise ConfigError(f"{p} is empty")
        table = {k: [float(r[k]) for r in rows] for k in rows[0] if k in ("n", "L", "u", "f", "estimate", "stderr")}
        if "L" in table and "n" not in table:
            table["n"] = table.pop("L")
        try:
            out.extend(r.to_dict() for r in reports_from_table(table, args.d, args.power, Path(p).stem))
        except ValueError as exc:
            raise ConfigError(f"{p}: {exc}") from exc
    write_json(Path(args.out) / "report.json", out)
    echo_config(args, "report")
    failed = [r["series_id"] for r in out if r["verdict"] is False]
    print(f"report: {len(out)} reports, {len(failed)} failed")
    return 1 if failed else 0


# -- parser --------------------------------------------------------------------


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--config", help="YAML/key-value file with option defaults")
    common.add_argument("--jobs", type=int, default=int(os.environ.get(JOBS_ENV, "1")),
                        help=f"worker processes (default ${JOBS_ENV} or 1)")
    common.add_argument("-v", "--verbose", action="store_true")

    walk_common = argparse.ArgumentParser(add_help=False)
    walk_common.add_argument("--d", type=int, default=2)
    walk_common.add_argument("--delta", type=float, default=0.4)
    walk_common.add_argument("--p-two", dest="p_two", type=float, default=0.0,
                             help="P(parallel step = 2) for the lazy model")
    walk_common.add_argument("--tolerance", type=float, default=1e-12)

    mc_common = argparse.ArgumentParser(add_help=False)
    mc_common.add_argument("--sweeps", type=int, default=20_000)
    mc_common.add_argument("--burnin", type=int, default=1000)
    mc_common.add_argument("--seed", type=int, default=0)
    mc_common.add_argument("--chains", type=int, default=1)

    p = argparse.ArgumentParser(prog="isinglab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    groups = p.add_subparsers(dest="group", required=True)
    leaves = {}

    g = groups.add_parser("verify", help="exact enumeration suites").add_subparsers(dest="command", required=True)
    s = g.add_parser("exact", parents=[common], help="representation, switching and inequality suites")
    s.add_argument("--betas", type=int, default=100, help="number of random beta in (0, 1]")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--graphs", help="comma-separated library ids")
    s.add_argument("--suites", help="comma-separated: representations,switching,inequalities")
    s.set_defaults(func=cmd_verify_exact)
    leaves["verify exact"] = s
    s = g.add_parser("htpath", parents=[common], help="extracted-path law against its closed form")
    s.add_argument("--beta", type=float, default=0.5)
    s.add_argument("--graphs")
    s.add_argument("--max-sources", dest="max_sources", type=int, default=4)
    s.set_defaults(func=cmd_verify_htpath)
    leaves["verify htpath"] = s

    g = groups.add_parser("walk", help="difference-walk tables and checks").add_subparsers(dest="command",
                                                                                         required=True)
    s = g.add_parser("tables", parents=[common, walk_common], help="u, f, rbar tables by exact DP")
    s.add_argument("--model", default="lazy")
    s.add_argument("--nmax", type=int, default=16)
    s.set_defaults(func=cmd_walk_tables)
    leaves["walk tables"] = s
    s = g.add_parser("verify", parents=[common, walk_common], help="identities, bounds and cyclic shift")
    s.add_argument("--models", default="lazy,geom")
    s.add_argument("--nmax", type=int, default=1024)
    s.add_argument("--census-max", dest="census_max", type=int, default=5)
    s.set_defaults(func=cmd_walk_verify)
    leaves["walk verify"] = s
    s = g.add_parser("mc", parents=[common, walk_common], help="non-intersection Monte Carlo (d = 2)")
    s.add_argument("--model", default="pure-lazy")
    s.add_argument("--L", default="64,128,256,512")
    s.add_argument("--start", type=int, default=1)
    s.add_argument("--samples", type=int, default=40_000)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_walk_mc)
    leaves["walk mc"] = s

    g = groups.add_parser("mc", help="Swendsen-Wang Monte Carlo").add_subparsers(dest="command", required=True)
    s = g.add_parser("validate", parents=[common, mc_common], help="MC against exact enumeration")
    s.add_argument("--graphs", default="grid3x3,grid2x3,cycle4,triangle")
    s.add_argument("--betas", default="0.2,0.4")
    s.set_defaults(func=cmd_mc_validate)
    leaves["mc validate"] = s
    for name, fn, n_default in (("xi", cmd_mc_xi, "2,3,4,5,6,7,8"), ("evencov", cmd_mc_evencov, "4,5,6,7,8,9,10,11,12")):
        s = g.add_parser(name, parents=[common, mc_common], help=f"torus {name} estimate")
        s.add_argument("--beta", type=float)
        s.add_argument("--L", type=int, default=64)
        s.add_argument("--n", default=n_default)
        s.set_defaults(func=fn)
        leaves[f"mc {name}"] = s

    s = groups.add_parser("report", parents=[common], help="scaling reports from CSV tables")
    s.add_argument("inputs", nargs="+")
    s.add_argument("--d", type=int, default=2)
    s.add_argument("--power", type=float, default=0.5)
    s.set_defaults(func=cmd_report)
    leaves["report"] = s
    return p, leaves


def load_config(path) -> dict:
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh) or {}
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a key-value mapping")
    return {str(k).replace("-", "_"): v for k, v in data.items()}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, leaves = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.config:
            cfg = load_config(args.config)
            leaf = leaves[f"{args.group} {args.command}" if args.group != "report" else "report"]
            known = {a.dest for a in leaf._actions}
            bad = sorted(set(cfg) - known)
            if bad:
                raise ConfigError(f"unknown config keys: {bad}")
            leaf.set_defaults(**cfg)
            args = parser.parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
        return args.func(args)
    except ConfigError as exc:
        print(f"isinglab: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
