"""Exact, Monte Carlo and random-walk tools for subcritical Ising correlations."""

from .lattice import (
    CouplingSpec,
    LatticeGraph,
    build_block,
    build_box,
    graph_from_edges,
    lattice_point,
    load_coupling_config,
    nearest_neighbor,
    validate_couplings,
)
from .library import LIBRARY_IDS, graph_library, library_graph

__version__ = "0.1.0"
