"""Directed random walks: models, exact tables, bridges and path transforms."""

from .models import (
    MODEL_NAMES,
    WalkModel,
    make_geom_model,
    make_lazy_model,
    make_model,
    make_pure_lazy_model,
    model_from_steps,
    model_violations,
)
from .dp import TruncationError, WalkTables, dp_tables, lateral_radius, q_tables
from .paths import (
    ShiftCensus,
    Trajectory,
    cyclic_shift,
    cyclic_shift_census,
    diamond_necessary_overlap,
    diamond_points,
    diamonds_intersect_exact,
    difference_walk,
    in_cone,
    in_diamond,
    synchronize,
)
from .bridges import (
    NonIntersectionEstimate,
    hitting_table,
    mc_nonintersection,
    mc_return_stats,
    nonintersection_enumerate,
    nonintersection_exact,
    nonnegative_bridge_sums,
)
from .appendix import (
    check_appendix_bounds,
    decomposition_deviations,
    identity_report,
    q_bound_ratio,
    ratio_verdicts,
    renewal_deviations,
    shift_lower_bound_instances,
    verify_decomposition,
    verify_renewal,
)
