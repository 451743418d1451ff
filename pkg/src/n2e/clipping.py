"""Degree clipping.

``clip_graph`` keeps an edge only when it is among the ``tau`` smallest
incident edges (global edge order) at *both* endpoints.  Node-neighbouring
inputs stay within edge distance ``tau + k`` after clipping whenever
``tau = deg^k`` of the smaller graph.

``pi_theta_clip`` is the greedy endpoint-degree clipping used for degree
histograms: edges are scanned in the same global order and kept while both
endpoints still have fewer than ``theta`` retained edges.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import Graph, count_at_least


@dataclass(frozen=True)
class ClipReport:
    clipped: Graph
    removed_edges: int
    saturated_nodes: int
    tau: int

    def as_dict(self) -> dict:
        return {
            "tau": self.tau,
            "removed_edges": self.removed_edges,
            "saturated_nodes": self.saturated_nodes,
            "nodes": self.clipped.n,
            "edges": self.clipped.m,
        }


def _incident_ranks(graph: Graph) -> np.ndarray:
    # rank of each CSR slot within its node's incident list
    starts = np.repeat(graph.indptr[:-1], graph.degrees)
    return np.arange(len(graph.neighbors)) - starts


def clip_graph(graph: Graph, tau: int) -> ClipReport:
    if tau < 1:
        raise ValueError(f"clipping threshold must be >= 1, got {tau}")
    tau = int(tau)
    if graph.m == 0 or tau >= graph.max_degree:
        return ClipReport(graph, 0, count_at_least(graph, tau), tau)
    ok = _incident_ranks(graph) < tau
    votes = np.bincount(graph._edge_ids, weights=ok, minlength=graph.m)
    keep = votes == 2
    return ClipReport(graph.with_edges(keep), int(graph.m - keep.sum()), count_at_least(graph, tau), tau)


def pi_theta_clip(graph: Graph, theta: int) -> ClipReport:
    if theta < 0:
        raise ValueError(f"theta must be >= 0, got {theta}")
    theta = int(theta)
    if theta >= graph.max_degree:
        return ClipReport(graph, 0, count_at_least(graph, max(theta, 1)), theta)
    load = [0] * graph.n
    keep = np.zeros(graph.m, bool)
    for i, (u, v) in enumerate(graph.edges.tolist()):
        if load[u] < theta and load[v] < theta:
            load[u] += 1
            load[v] += 1
            keep[i] = True
    return ClipReport(graph.with_edges(keep), int(graph.m - keep.sum()),
                      count_at_least(graph, max(theta, 1)), theta)


def clip_distance_bound(tau: int, k: int) -> int:
    """Certified edge distance between clipped node-neighbours when tau = deg^k."""
    return int(tau) + int(k)
