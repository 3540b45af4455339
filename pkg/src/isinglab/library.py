"""Built-in small graphs used by the exact verification suites."""

from __future__ import annotations

from .lattice import build_block, graph_from_edges, nearest_neighbor

__all__ = ["LIBRARY_IDS", "library_graph", "graph_library"]

LIBRARY_IDS = ("single_edge", "path3", "triangle", "cycle4", "grid2x3", "grid2x4")


def library_graph(name: str, beta: float = 1.0, J: float = 1.0):
    """Return the named library graph at inverse temperature ``beta``.

    Small abstract graphs are labelled ``0, 1, ...``; grids use coordinate
    tuples ``(row, column)``.
    """
    if name == "single_edge":
        return graph_from_edges((0, 1), [(0, 1)], J, beta, name)
    if name == "path3":
        return graph_from_edges((0, 1, 2), [(0, 1), (1, 2)], J, beta, name)
    if name == "path4":
        return graph_from_edges((0, 1, 2, 3), [(0, 1), (1, 2), (2, 3)], J, beta, name)
    if name == "triangle":
        return graph_from_edges((0, 1, 2), [(0, 1), (1, 2), (0, 2)], J, beta, name)
    if name == "cycle4":
        return graph_from_edges((0, 1, 2, 3), [(0, 1), (1, 2), (2, 3), (0, 3)], J, beta, name)
    if name.startswith("grid"):
        rows, cols = (int(k) for k in name[4:].split("x"))
        return build_block(nearest_neighbor(2, J, beta), (rows, cols), name=name)
    raise KeyError(f"unknown library graph {name!r}")


def graph_library(beta: float = 1.0, names=LIBRARY_IDS) -> dict:
    return {n: library_graph(n, beta) for n in names}
