"""Edge-level task mechanisms and the node-to-edge pipeline.

The pipeline estimates a degree bound privately, clips the graph so that
node-neighbours end up within edge distance ``2 * tau_int`` (with failure
probability charged to delta), then runs an edge-level mechanism with its
budget divided by that distance.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .clipping import ClipReport, clip_graph, pi_theta_clip
from .degree_approx import DegreeApproxOutput, approximate_max_degree, edge_dp_max_degree
from .dp import EMPIRICAL, BudgetLedger, BudgetSplit, NoiseSource, PrivacyParams
from .graph import Graph


class ContractError(ValueError):
    """A mechanism precondition on its input graph does not hold."""


@dataclass
class TaskResult:
    task: str
    value: float | list[float]
    eps: float
    delta: float
    noise_draws: int = 0
    noise_scale: float = 0.0
    clip: ClipReport | None = None
    approx: DegreeApproxOutput | None = None
    ledger: BudgetLedger | None = None
    timings: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        out = {
            "task": self.task,
            "value": self.value,
            "eps": self.eps,
            "delta": self.delta,
            "noise_draws": self.noise_draws,
            "noise_scale": self.noise_scale,
            "timings": self.timings,
        }
        if self.clip is not None:
            out["clip"] = self.clip.as_dict()
        if self.approx is not None:
            out["approx"] = self.approx.as_dict()
        if self.ledger is not None:
            out["ledger"] = self.ledger.as_dict()
        return out


# ------------------------------------------------------------- histograms ---

@dataclass(frozen=True)
class HistogramSpec:
    """Log-scale degree bins {0}, {1}, [2,3], [4,7], ... up to the bin holding ``cap``."""

    cap: int

    @staticmethod
    def bin_of(d: int) -> int:
        return int(d).bit_length()

    @property
    def num_bins(self) -> int:
        return self.bin_of(self.cap) + 1

    def bin_edges(self) -> list[tuple[int, int]]:
        return [(0, 0)] + [(1 << (i - 1), (1 << i) - 1) for i in range(1, self.num_bins)]

    def counts(self, degrees: np.ndarray) -> np.ndarray:
        d = np.asarray(degrees, dtype=np.int64)
        if len(d) and d.max() > self.cap:
            raise ValueError(f"degree {int(d.max())} above histogram cap {self.cap}")
        bins = np.zeros(len(d), np.int64)
        nz = d > 0
        bins[nz] = np.floor(np.log2(d[nz])).astype(np.int64) + 1
        return np.bincount(bins, minlength=self.num_bins).astype(float)


def degree_histogram(graph: Graph, spec: HistogramSpec | None = None) -> np.ndarray:
    spec = spec or HistogramSpec(graph.max_degree)
    return spec.counts(graph.degrees)


# --------------------------------------------------------- edge mechanisms ---

def two_path_count(graph: Graph) -> int:
    d = graph.degrees
    return int(np.sum(d * (d - 1) // 2))


def edge_count_mech(graph: Graph, eps: float, src: NoiseSource) -> TaskResult:
    """Laplace edge count (edge sensitivity 1)."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    return TaskResult("ec", graph.m + src.laplace(1.0 / eps), eps, 0.0, 1, 1.0 / eps)


def two_path_count_mech(graph: Graph, eps: float, tau_clip: int, src: NoiseSource) -> TaskResult:
    """Laplace two-path count for graphs with maximum degree <= tau_clip.

    Adding one edge (u, v) raises the count by deg(u) + deg(v) <= 2(tau_clip - 1).
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    if graph.max_degree > tau_clip:
        raise ContractError(f"max degree {graph.max_degree} exceeds clip bound {tau_clip}")
    sens = 2 * (int(tau_clip) - 1)
    value = float(two_path_count(graph))
    if sens == 0:
        # every admissible graph has a zero count
        return TaskResult("tp", value, eps, 0.0, 0, 0.0)
    return TaskResult("tp", value + src.laplace(sens / eps), eps, 0.0, 1, sens / eps)


def max_degree_edge_mech(graph: Graph, eps: float, beta: float, src: NoiseSource) -> TaskResult:
    before = src.draws
    tau = edge_dp_max_degree(graph, eps, beta, src)
    return TaskResult("md", float(tau), eps, 0.0, src.draws - before, 2.0 / eps)


def degree_histogram_mech(graph: Graph, theta: int, eps: float, spec: HistogramSpec,
                          src: NoiseSource) -> TaskResult:
    """Per-bin Laplace((2 theta + 1) / eps) on a graph already clipped to degree <= theta."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    if graph.max_degree > theta:
        raise ContractError(f"max degree {graph.max_degree} exceeds theta {theta}")
    scale = (2 * int(theta) + 1) / eps
    counts = spec.counts(graph.degrees)
    noisy = counts + src.laplace_many(scale, len(counts))
    return TaskResult("dd", noisy.tolist(), eps, 0.0, len(counts), scale)


class EdgeDpMechanism:
    """Edge-level mechanism run on a graph whose maximum degree is at most ``tau_clip``."""

    name = ""

    def sensitivity(self, tau_clip: int) -> float:
        raise NotImplementedError

    def true_value(self, graph: Graph) -> float:
        raise NotImplementedError

    def run(self, graph: Graph, eps: float, delta: float, beta: float, tau_clip: int,
            src: NoiseSource) -> TaskResult:
        raise NotImplementedError


class EdgeCount(EdgeDpMechanism):
    name = "ec"

    def sensitivity(self, tau_clip):
        return 1.0

    def true_value(self, graph):
        return float(graph.m)

    def run(self, graph, eps, delta, beta, tau_clip, src):
        return edge_count_mech(graph, eps, src)


class TwoPathCount(EdgeDpMechanism):
    name = "tp"

    def sensitivity(self, tau_clip):
        return float(2 * (tau_clip - 1))

    def true_value(self, graph):
        return float(two_path_count(graph))

    def run(self, graph, eps, delta, beta, tau_clip, src):
        return two_path_count_mech(graph, eps, tau_clip, src)


class MaxDegree(EdgeDpMechanism):
    """The half-excess-degree query scanned by SVT; sensitivity refers to that query."""

    name = "md"

    def sensitivity(self, tau_clip):
        return 1.0

    def true_value(self, graph):
        return float(graph.max_degree)

    def run(self, graph, eps, delta, beta, tau_clip, src):
        return max_degree_edge_mech(graph, eps, beta, src)


MECHANISMS: dict[str, type[EdgeDpMechanism]] = {"ec": EdgeCount, "tp": TwoPathCount, "md": MaxDegree}


# --------------------------------------------------------------- pipelines ---

def _approximate(graph, parts, src, workers, cache, delta) -> DegreeApproxOutput:
    (e1, _, b1), (e2, _, b2), _ = parts
    return approximate_max_degree(graph, "poly", eps_svt=e1, eps_post=e2, beta_svt=b1, beta_post=b2,
                                  delta=delta, src=src, workers=workers, cache=cache)


def n2e_run(graph: Graph, mech: EdgeDpMechanism, p: PrivacyParams, split: BudgetSplit = EMPIRICAL,
            src: NoiseSource | None = None, workers: int = 1, cache: dict | None = None) -> TaskResult:
    """Node-DP answer from an edge-DP mechanism.

    Steps: private degree bound ``tau`` (scan + offset shares), clipping at
    ``tau``, then the edge mechanism at ``eps_3 / (2 tau)`` and
    ``delta_3 / (2 tau)``.  The node-level charge of step three is
    ``(eps_3, delta_3)``; the offset step is charged ``delta_2`` because the
    ``2 tau`` distance certificate fails with at most that probability.
    """
    src = src or NoiseSource(0)
    parts = split.parts(p)
    (e1, _, b1), (e2, d2, b2), (e3, d3, b3) = parts
    if not d2 > 0:
        raise ValueError("the distance certificate needs a positive delta share")
    ledger = BudgetLedger(p)
    t0 = time.perf_counter()
    approx = _approximate(graph, parts, src, workers, cache, d2)
    ledger.charge("degree-scan", e1, 0.0, b1)
    ledger.charge("degree-offset", e2, d2, b2)
    t1 = time.perf_counter()
    tau = approx.tau_star_int
    clip = clip_graph(graph, tau)
    t2 = time.perf_counter()
    group = 2 * tau
    res = mech.run(clip.clipped, e3 / group, d3 / group, b3, tau, src)
    ledger.charge(f"{mech.name}-mechanism", e3, d3, b3)
    t3 = time.perf_counter()
    res.clip, res.approx, res.ledger = clip, approx, ledger
    res.timings = {"approx_s": t1 - t0, "clip_s": t2 - t1, "mechanism_s": t3 - t2}
    return res


def n2e_degree_distribution(graph: Graph, p: PrivacyParams, split: BudgetSplit = EMPIRICAL,
                            src: NoiseSource | None = None, workers: int = 1,
                            cache: dict | None = None) -> TaskResult:
    """Pure-eps node-DP log-binned degree histogram.

    The degree bound comes from the LP estimator (no delta term in its offset),
    the graph is clipped greedily to that bound, and each bin gets Laplace
    noise for node sensitivity ``2 theta + 1``.
    """
    src = src or NoiseSource(0)
    parts = split.parts(p)
    (e1, _, b1), (e2, _, b2), (e3, _, b3) = parts
    ledger = BudgetLedger(p)
    t0 = time.perf_counter()
    approx = _approximate(graph, parts, src, workers, cache, None)
    ledger.charge("degree-scan", e1, 0.0, b1)
    ledger.charge("degree-offset", e2, 0.0, b2)
    t1 = time.perf_counter()
    theta = approx.tau_star_int
    clip = pi_theta_clip(graph, theta)
    t2 = time.perf_counter()
    res = degree_histogram_mech(clip.clipped, theta, e3, HistogramSpec(theta), src)
    ledger.charge("dd-histogram", e3, 0.0, b3)
    t3 = time.perf_counter()
    res.clip, res.approx, res.ledger = clip, approx, ledger
    res.timings = {"approx_s": t1 - t0, "clip_s": t2 - t1, "mechanism_s": t3 - t2}
    return res


def smallest_power_of_two_at_least(n: int) -> int:
    return 1 << max(int(n) - 1, 0).bit_length()


def group_privacy_baseline(graph: Graph, mech: EdgeDpMechanism, p: PrivacyParams, n_hat: int,
                           src: NoiseSource | None = None) -> TaskResult:
    """Edge mechanism on the unclipped graph with (eps, delta) divided by ``n_hat``."""
    if n_hat < graph.n or n_hat < 1:
        raise ValueError(f"n_hat={n_hat} must be >= the node count {graph.n}")
    src = src or NoiseSource(0)
    ledger = BudgetLedger(p)
    res = mech.run(graph, p.eps / n_hat, p.delta / n_hat, p.beta, n_hat, src)
    ledger.charge(f"{mech.name}-group-privacy", p.eps, p.delta, p.beta)
    res.ledger = ledger
    return res


__all__ = [
    "ContractError", "TaskResult", "HistogramSpec", "degree_histogram", "two_path_count",
    "edge_count_mech", "two_path_count_mech", "max_degree_edge_mech", "degree_histogram_mech",
    "EdgeDpMechanism", "EdgeCount", "TwoPathCount", "MaxDegree", "MECHANISMS",
    "n2e_run", "n2e_degree_distribution", "group_privacy_baseline", "smallest_power_of_two_at_least",
]
