"""Return statistics of a directed walk and the decay of f_n / u_n in d = 2, 3.

Run with ``python demos/walk_scaling.py``; takes a few seconds.
"""

from isinglab.walk import check_appendix_bounds, identity_report, ratio_verdicts
from isinglab.walk.dp import dp_tables
from isinglab.walk.models import make_model

for d, n_max in ((2, 4096), (3, 2048)):
    t = dp_tables(make_model("lazy", d), n_max)
    ident = identity_report(t)
    print(f"d={d}: renewal deviation {ident.params['renewal_max_dev']:.1e}, leaked mass {t.leaked:.1e}")
    for n in (64, 256, 1024, n_max):
        print(f"  n={n:5d}  u={t.u[n]:.6e}  f={t.f[n]:.6e}  f/u={t.f[n] / t.u[n]:.6e}")
    rep = ratio_verdicts(t)
    print(f"  verdict: {rep.criterion} -> {rep.verdict}  {dict((k, round(v, 4)) for k, v in rep.params.items())}")
    spreads = {r.series_id.split("/")[-1]: round(r.params["spread"], 3) for r in check_appendix_bounds(t)}
    print(f"  bounded-ratio spreads: {spreads}")

