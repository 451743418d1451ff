"""Immutable undirected simple graphs, edge-list I/O and synthetic generators.

Nodes are dense integer ids ``0..n-1``.  Every edge is stored once as a
canonical pair ``(u, v)`` with ``u < v`` and the edge array is kept sorted
lexicographically, which is the global edge order used by the clipping
routines.  Because the order depends only on endpoint ids, an edge has the
same rank among its peers in any two graphs that share an id space.
"""

from __future__ import annotations

import io
import os
from dataclasses import dataclass
from typing import IO, Iterable, Sequence

import networkx as nx
import numpy as np


class GraphParseError(ValueError):
    """Malformed edge-list input."""

    def __init__(self, lineno: int, line: str, reason: str = "expected two non-negative integers"):
        super().__init__(f"line {lineno}: {reason}: {line!r}")
        self.lineno = lineno


class GraphIdError(ValueError):
    """Raw ids are not dense ``0..n-1`` while strict id handling was requested."""


def _freeze(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


class Graph:
    """Undirected simple graph with a canonical lexicographic edge order.

    Build instances with :meth:`from_edges`; the constructor assumes its input
    is already canonical.  Instances are never mutated after construction.
    """

    __slots__ = ("n", "edges", "indptr", "neighbors", "degrees", "_edge_ids")

    def __init__(self, n: int, edges: np.ndarray):
        self.n = int(n)
        self.edges = _freeze(np.asarray(edges, dtype=np.int64).reshape(-1, 2))
        m = len(self.edges)
        # CSR adjacency with neighbours ascending; for node v this is also the
        # list of its incident edges sorted by the global edge order.
        both = np.concatenate([self.edges, self.edges[:, ::-1]]) if m else np.empty((0, 2), np.int64)
        eid = np.concatenate([np.arange(m), np.arange(m)])
        order = np.lexsort((both[:, 1], both[:, 0])) if m else np.empty(0, np.int64)
        counts = np.bincount(both[:, 0], minlength=self.n) if m else np.zeros(self.n, np.int64)
        self.degrees = _freeze(counts.astype(np.int64))
        self.indptr = _freeze(np.concatenate([[0], np.cumsum(counts)]).astype(np.int64))
        self.neighbors = _freeze(both[order, 1] if m else np.empty(0, np.int64))
        self._edge_ids = _freeze(eid[order] if m else np.empty(0, np.int64))

    @classmethod
    def from_edges(cls, n: int | None, edges: Iterable[Sequence[int]] | np.ndarray) -> "Graph":
        """Canonicalise arbitrary pairs: drop self-loops, orient ``u < v``, dedupe, sort."""
        arr = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges, dtype=np.int64)
        arr = arr.reshape(-1, 2)
        if len(arr) and arr.min() < 0:
            raise ValueError("node ids must be non-negative")
        if n is None:
            n = int(arr.max()) + 1 if len(arr) else 0
        if len(arr) and arr.max() >= n:
            raise ValueError(f"edge endpoint {int(arr.max())} outside 0..{n - 1}")
        arr = arr[arr[:, 0] != arr[:, 1]]
        arr = np.sort(arr, axis=1)
        if len(arr):
            arr = np.unique(arr, axis=0)
        return cls(n, arr)

    @classmethod
    def empty(cls, n: int) -> "Graph":
        return cls(n, np.empty((0, 2), np.int64))

    @property
    def m(self) -> int:
        return len(self.edges)

    @property
    def max_degree(self) -> int:
        return int(self.degrees.max()) if self.n else 0

    def neighbors_of(self, v: int) -> np.ndarray:
        return self.neighbors[self.indptr[v]:self.indptr[v + 1]]

    def incident_edge_ids(self, v: int) -> np.ndarray:
        """Indices into :attr:`edges` of the edges at ``v``, in edge order."""
        return self._edge_ids[self.indptr[v]:self.indptr[v + 1]]

    def edge_set(self) -> set[tuple[int, int]]:
        return {(int(u), int(v)) for u, v in self.edges}

    def edge_keys(self, n: int | None = None) -> np.ndarray:
        """Sorted int64 codes ``u * n + v`` for set arithmetic on edges."""
        n = self.n if n is None else n
        return self.edges[:, 0] * n + self.edges[:, 1]

    def subgraph_without(self, removed: Iterable[int]) -> "Graph":
        """Drop ``removed`` nodes' incident edges; the node id space is kept."""
        mask = np.zeros(self.n, bool)
        mask[list(removed)] = True
        keep = ~(mask[self.edges[:, 0]] | mask[self.edges[:, 1]])
        return Graph(self.n, self.edges[keep])

    def with_edges(self, keep: np.ndarray) -> "Graph":
        """Edge-subgraph on the same node set selected by a boolean mask over :attr:`edges`."""
        return Graph(self.n, self.edges[keep])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.edges, other.edges)

    def __hash__(self) -> int:
        return hash((self.n, self.edges.tobytes()))

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, m={self.m})"


# ---------------------------------------------------------------- loading ---

@dataclass(frozen=True)
class LoadedGraph:
    graph: Graph
    # raw_ids[i] is the original id of dense node i
    raw_ids: tuple[int, ...]


def _read_pairs(stream: IO) -> Iterable[tuple[int, int, int, str]]:
    for lineno, raw in enumerate(stream, start=1):
        line = raw.decode("utf-8") if isinstance(raw, bytes) else raw
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        parts = s.split()
        if len(parts) < 2:
            raise GraphParseError(lineno, s)
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise GraphParseError(lineno, s) from None
        if u < 0 or v < 0:
            raise GraphParseError(lineno, s)
        yield lineno, u, v, s


def load_edge_list(source, id_policy: str = "remap") -> LoadedGraph:
    """Read a SNAP-style whitespace-separated edge list.

    ``source`` may be a path, a text/byte stream or raw bytes.  With
    ``id_policy="remap"`` raw ids are renumbered densely in order of first
    appearance; with ``"strict"`` the raw ids must already be ``0..n-1``.
    Directed duplicates and self-loops are dropped.  A self-loop still makes
    its endpoint a node.
    """
    if id_policy not in ("remap", "strict"):
        raise ValueError(f"unknown id_policy {id_policy!r}")
    if isinstance(source, (bytes, bytearray)):
        stream: IO = io.BytesIO(source)
    elif isinstance(source, (str, os.PathLike)):
        stream = open(source, "rb")
    else:
        stream = source
    try:
        ids: dict[int, int] = {}
        pairs: list[tuple[int, int]] = []
        for _, u, v, _ in _read_pairs(stream):
            for x in (u, v):
                if x not in ids:
                    ids[x] = len(ids)
            pairs.append((u, v))
    finally:
        if stream is not source:
            stream.close()

    raw = tuple(ids)
    if id_policy == "strict":
        if set(raw) != set(range(len(raw))):
            raise GraphIdError(f"ids are not dense 0..{len(raw) - 1}")
        raw = tuple(range(len(raw)))
        mapped = pairs
    else:
        mapped = [(ids[u], ids[v]) for u, v in pairs]
    return LoadedGraph(Graph.from_edges(len(raw), mapped), raw)


def write_edge_list(graph: Graph, out: IO[str], header: str | None = None) -> None:
    if header:
        for line in header.splitlines():
            out.write(f"# {line}\n")
    for u, v in graph.edges:
        out.write(f"{u} {v}\n")


# ------------------------------------------------------------- statistics ---

def kth_degree(graph: Graph, k: int) -> int:
    """k-th largest degree (1-based)."""
    if not 1 <= k <= graph.n:
        raise ValueError(f"k={k} outside 1..{graph.n}")
    return int(np.partition(graph.degrees, graph.n - k)[graph.n - k])


def count_at_least(graph: Graph, tau: float) -> int:
    """Number of nodes with degree >= tau."""
    return int(np.count_nonzero(graph.degrees >= tau))


def edge_distance(g1: Graph, g2: Graph) -> int:
    """Size of the symmetric difference of the two edge sets."""
    n = max(g1.n, g2.n, 1)
    return int(len(np.setxor1d(g1.edge_keys(n), g2.edge_keys(n), assume_unique=True)))


# -------------------------------------------------------------- neighbours ---

@dataclass(frozen=True)
class NeighborPair:
    """``extended`` is ``base`` plus one node (``differing_node``) and its edges.

    The new node is placed at ``differing_node`` in the id order, so base ids
    at or above it are shifted by one in ``extended``.  The shift is
    order-preserving, hence edge orders agree between the two graphs.
    """

    base: Graph
    extended: Graph
    differing_node: int

    def embed(self, v: int) -> int:
        return v + (v >= self.differing_node)

    def base_embedded(self) -> Graph:
        """``base`` expressed in the extended id space (differing node isolated)."""
        e = self.base.edges
        e = e + (e >= self.differing_node)
        return Graph(self.extended.n, e)


def make_node_neighbor(
    graph: Graph,
    incident: str | Sequence[int] | float = "all",
    rng: np.random.Generator | None = None,
    position: int | None = None,
) -> NeighborPair:
    """Attach one new node to ``graph``.

    ``incident`` is ``"all"``, ``"none"``, an explicit list of base node ids,
    or a probability ``p`` with which each base node is joined independently
    (drawn from ``rng``).  ``position`` is the new node's id; defaults to ``n``.
    """
    n = graph.n
    pos = n if position is None else int(position)
    if not 0 <= pos <= n:
        raise ValueError(f"position {pos} outside 0..{n}")
    if isinstance(incident, str):
        if incident == "all":
            targets = np.arange(n)
        elif incident == "none":
            targets = np.empty(0, np.int64)
        else:
            raise ValueError(f"unknown incident spec {incident!r}")
    elif isinstance(incident, float):
        if rng is None:
            raise ValueError("random attachment needs an rng")
        targets = np.flatnonzero(rng.random(n) < incident)
    else:
        targets = np.unique(np.asarray(incident, dtype=np.int64))
        if len(targets) and (targets.min() < 0 or targets.max() >= n):
            raise ValueError("attachment target outside the base graph")

    shifted = graph.edges + (graph.edges >= pos)
    t = targets + (targets >= pos)
    new = np.column_stack([np.minimum(t, pos), np.maximum(t, pos)])
    extended = Graph.from_edges(n + 1, np.concatenate([shifted, new]) if len(new) else shifted)
    return NeighborPair(graph, extended, pos)


# --------------------------------------------------------------- generators ---

def star(k: int) -> Graph:
    """K_{1,k} with centre 0."""
    return Graph.from_edges(k + 1, [(0, i) for i in range(1, k + 1)])


def cycle(n: int) -> Graph:
    if n < 3:
        raise ValueError("a cycle needs n >= 3")
    return Graph.from_edges(n, [(i, (i + 1) % n) for i in range(n)])


def complete(n: int) -> Graph:
    return Graph.from_edges(n, [(i, j) for i in range(n) for j in range(i + 1, n)])


def path(n: int) -> Graph:
    return Graph.from_edges(n, [(i, i + 1) for i in range(n - 1)])


def gnp(n: int, p: float, rng: np.random.Generator) -> Graph:
    if n < 0 or not 0 <= p <= 1:
        raise ValueError(f"invalid gnp parameters n={n}, p={p}")
    iu, ju = np.triu_indices(n, k=1)
    keep = rng.random(len(iu)) < p
    return Graph(n, np.column_stack([iu[keep], ju[keep]]))


def preferential(n: int, m: int, rng: np.random.Generator) -> Graph:
    """Barabasi-Albert preferential attachment."""
    if m < 1 or n <= m:
        raise ValueError(f"invalid preferential parameters n={n}, m={m}")
    g = nx.barabasi_albert_graph(n, m, seed=int(rng.integers(2**32)))
    return Graph.from_edges(n, list(g.edges()))


def generate(model: str, rng: np.random.Generator | None = None, **params) -> Graph:
    """Dispatch by family name: star, cycle, complete, path, empty, gnp, preferential."""
    if rng is None:
        rng = np.random.default_rng(0)
    try:
        if model == "star":
            return star(int(params["k"]))
        if model == "cycle":
            return cycle(int(params["n"]))
        if model == "complete":
            return complete(int(params["n"]))
        if model == "path":
            return path(int(params["n"]))
        if model == "empty":
            return Graph.empty(int(params["n"]))
        if model == "gnp":
            return gnp(int(params["n"]), float(params["p"]), rng)
        if model == "preferential":
            return preferential(int(params["n"]), int(params["m"]), rng)
    except KeyError as exc:
        raise ValueError(f"model {model!r} is missing parameter {exc.args[0]!r}") from None
    raise ValueError(f"unknown graph model {model!r}")


def parse_generator_spec(spec: str) -> tuple[str, dict[str, str]]:
    """``"gnp:n=200,p=0.05"`` -> ``("gnp", {"n": "200", "p": "0.05"})``."""
    name, _, rest = spec.partition(":")
    params = {}
    for item in filter(None, rest.split(",")):
        key, eq, value = item.partition("=")
        if not eq:
            raise ValueError(f"bad generator parameter {item!r} in {spec!r}")
        params[key.strip()] = value.strip()
    return name.strip(), params
