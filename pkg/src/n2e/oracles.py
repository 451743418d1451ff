"""Brute-force oracles and property checks for small graphs.

Every check returns a :class:`PropertyReport`.  Deterministic properties
must report zero violations; statistical ones carry the allowed failure
frequency in ``tolerance``.  Trial ``i`` of a check seeded with ``s`` draws
its instance from ``default_rng([s, i])``, so any witness can be replayed.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Iterator

import networkx as nx
import numpy as np

from .clipping import clip_graph, pi_theta_clip
from .degree_approx import (
    approximate_max_degree,
    del_n_profile,
    edge_dp_max_degree,
    q_del_deg,
)
from .dp import NoiseSource, SvtExhausted, svt
from .graph import Graph, NeighborPair, count_at_least, edge_distance, gnp, make_node_neighbor
from .lp import ROUNDING_GUARD, LpStatus, build_del_n_lp, round_subgraph, solve
from .mechanisms import HistogramSpec

LP_TOL = 1e-6


@dataclass
class PropertyReport:
    property_id: str
    trials: int
    violations: int = 0
    checks: int = 0
    witness: dict | None = None
    tolerance: float | None = None
    detail: dict = field(default_factory=dict)

    @property
    def frequency(self) -> float:
        return self.violations / self.trials if self.trials else 0.0

    @property
    def passed(self) -> bool:
        if self.tolerance is None:
            return self.violations == 0
        return self.frequency <= self.tolerance

    def record(self, violated: bool, witness: Callable[[], dict]) -> None:
        self.checks += 1
        if violated:
            self.violations += 1
            if self.witness is None:
                self.witness = witness()

    def as_dict(self) -> dict:
        return {
            "property": self.property_id,
            "trials": self.trials,
            "checks": self.checks,
            "violations": self.violations,
            "frequency": self.frequency,
            "tolerance": self.tolerance,
            "passed": self.passed,
            "witness": self.witness,
            "detail": self.detail,
        }


def binomial_slack(beta: float, trials: int, sigmas: float = 3.0) -> float:
    """``beta`` plus ``sigmas`` binomial standard deviations at ``trials``."""
    return beta + sigmas * math.sqrt(beta * (1 - beta) / trials)


def _edges(g: Graph) -> list[list[int]]:
    return g.edges.tolist()


def _pair_witness(pair_base: Graph, pair_ext: Graph, **params) -> dict:
    return {"base": {"n": pair_base.n, "edges": _edges(pair_base)},
            "extended": {"n": pair_ext.n, "edges": _edges(pair_ext)}, **params}


# ------------------------------------------------------------- instances ---

@lru_cache(maxsize=None)
def atlas_graphs(max_n: int) -> tuple[Graph, ...]:
    """One representative of every isomorphism class on 1..max_n nodes (max_n <= 7)."""
    if max_n > 7:
        raise ValueError("the graph atlas stops at 7 nodes")
    out = []
    for g in nx.graph_atlas_g():
        if 1 <= g.number_of_nodes() <= max_n:
            out.append(Graph.from_edges(g.number_of_nodes(), list(g.edges())))
    return tuple(out)


def labeled_graphs(n: int) -> Iterator[Graph]:
    """Every labeled graph on ``n`` nodes (use only for order-sensitive checks, n <= 6)."""
    pairs = list(itertools.combinations(range(n), 2))
    for mask in range(1 << len(pairs)):
        yield Graph.from_edges(n, [pairs[i] for i in range(len(pairs)) if mask >> i & 1])


def random_graph(rng: np.random.Generator, max_n: int, min_n: int = 1) -> Graph:
    n = int(rng.integers(min_n, max_n + 1))
    return gnp(n, float(rng.uniform(0.05, 0.9)), rng)


def random_node_pair(rng: np.random.Generator, max_n: int) -> NeighborPair:
    base = random_graph(rng, max_n - 1, min_n=0)
    return make_node_neighbor(base, float(rng.uniform(0.0, 1.0)), rng,
                              position=int(rng.integers(0, base.n + 1)))


def random_edge_pair(rng: np.random.Generator, max_n: int) -> tuple[Graph, Graph] | None:
    """``(base, extended)`` where extended has one extra edge; None if base is complete."""
    g = random_graph(rng, max_n, min_n=2)
    missing = [(u, v) for u, v in itertools.combinations(range(g.n), 2) if (u, v) not in g.edge_set()]
    if not missing:
        return None
    extra = missing[int(rng.integers(len(missing)))]
    return g, Graph.from_edges(g.n, np.concatenate([g.edges, np.array([extra])]))


def exhaustive_node_pairs(max_n: int) -> Iterator[NeighborPair]:
    """Every base up to isomorphism on < max_n nodes joined to every node subset."""
    yield make_node_neighbor(Graph.empty(0), "none")
    for base in atlas_graphs(max_n - 1):
        for r in range(base.n + 1):
            for targets in itertools.combinations(range(base.n), r):
                yield make_node_neighbor(base, list(targets))


def exhaustive_edge_pairs(max_n: int) -> Iterator[tuple[Graph, Graph]]:
    for base in atlas_graphs(max_n):
        present = base.edge_set()
        for e in itertools.combinations(range(base.n), 2):
            if e not in present:
                yield base, Graph.from_edges(base.n, np.concatenate([base.edges.reshape(-1, 2), [e]]))


# -------------------------------------------------------------- clipping ---

def clip_distance_violations(pair: NeighborPair, k_rule: str = "count") -> list[tuple[int, int, int]]:
    """``(tau, k, distance)`` for every tau = deg^k(base) whose distance exceeds tau + k.

    ``k_rule="count"`` takes k = N_tau(base), the number of nodes with degree
    >= tau (the largest k with deg^k = tau).  ``"rank"`` takes the smallest
    such k, which breaks the bound whenever degrees tie.
    """
    base = pair.base_embedded()
    degs = np.sort(pair.base.degrees)[::-1]
    out = []
    for tau in sorted({int(d) for d in degs if d >= 1}):
        if k_rule == "count":
            k = count_at_least(pair.base, tau)
        elif k_rule == "rank":
            k = int(np.argmax(degs == tau)) + 1
        else:
            raise ValueError(f"unknown k rule {k_rule!r}")
        dist = edge_distance(clip_graph(base, tau).clipped, clip_graph(pair.extended, tau).clipped)
        if dist > tau + k:
            out.append((tau, k, dist))
    return out


def check_clip_distance(trials: int = 10_000, max_n: int = 30, seed: int = 0,
                        k_rule: str = "count") -> PropertyReport:
    if max_n > 30:
        raise ValueError("size bound must be <= 30")
    rep = PropertyReport(f"clip-distance[{k_rule}]", trials)
    for t in range(trials):
        pair = random_node_pair(np.random.default_rng([seed, t]), max_n)
        bad = clip_distance_violations(pair, k_rule)
        rep.record(bool(bad), lambda: _pair_witness(pair.base, pair.extended, seed=seed, trial=t,
                                                   position=pair.differing_node, tau_k_distance=bad[0]))
    return rep


def check_clip_edge_distance(trials: int = 2_000, max_n: int = 20, seed: int = 0) -> PropertyReport:
    """Edge neighbours stay within edge distance 3 after clipping at any tau."""
    rep = PropertyReport("clip-edge-distance", trials)
    for t in range(trials):
        pair = random_edge_pair(np.random.default_rng([seed, t]), max_n)
        if pair is None:
            continue
        g, h = pair
        for tau in range(1, h.max_degree + 1):
            d = edge_distance(clip_graph(g, tau).clipped, clip_graph(h, tau).clipped)
            rep.record(d > 3, lambda: _pair_witness(g, h, seed=seed, trial=t, tau=tau, distance=d))
    return rep


def check_pi_theta_sensitivity(trials: int = 2_000, max_n: int = 20, seed: int = 0) -> PropertyReport:
    """L1 distance of log-binned histograms after greedy clipping is at most 2 theta + 1."""
    rep = PropertyReport("pi-theta-sensitivity", trials)
    for t in range(trials):
        pair = random_node_pair(np.random.default_rng([seed, t]), max_n)
        for theta in range(pair.extended.max_degree + 2):
            spec = HistogramSpec(max(theta, 1))
            h0 = spec.counts(pi_theta_clip(pair.base, theta).clipped.degrees)
            h1 = spec.counts(pi_theta_clip(pair.extended, theta).clipped.degrees)
            l1 = float(np.abs(h0 - h1).sum())
            rep.record(l1 > 2 * theta + 1, lambda: _pair_witness(
                pair.base, pair.extended, seed=seed, trial=t, theta=theta, l1=l1))
    return rep


# ----------------------------------------------------------- sensitivity ---

def _lp_value(g: Graph, tau: int) -> float:
    return solve(build_del_n_lp(g, tau)).objective


def _exact_value(g: Graph, tau: int) -> float:
    if tau >= g.max_degree:
        return 0.0
    return -float(del_n_profile(g)[tau])


QUERIES: dict[str, Callable[[Graph, int], float]] = {
    "del_deg": lambda g, tau: q_del_deg(g, tau),
    "del_n_exact": _exact_value,
    "lp_del_n": _lp_value,
}


def _sensitivity_pairs(kind: str, trials: int, max_n: int, seed: int, exhaustive_n: int | None):
    if exhaustive_n:
        if kind == "edge":
            yield from (("exhaustive", i, g, h) for i, (g, h) in enumerate(exhaustive_edge_pairs(exhaustive_n)))
        else:
            yield from (("exhaustive", i, p.base, p.extended)
                        for i, p in enumerate(exhaustive_node_pairs(exhaustive_n)))
    for t in range(trials):
        rng = np.random.default_rng([seed, t])
        if kind == "edge":
            pair = random_edge_pair(rng, max_n)
            if pair is not None:
                yield ("random", t, *pair)
        else:
            p = random_node_pair(rng, max_n)
            yield ("random", t, p.base, p.extended)


def check_query_sensitivity(query: str, kind: str, trials: int = 10_000, max_n: int = 10,
                            seed: int = 0, exhaustive_n: int | None = 6,
                            tol: float | None = None) -> PropertyReport:
    """|Q(base) - Q(extended)| <= 1 (+tol) and Q(base) >= Q(extended) - tol at every tau.

    ``extended`` contains ``base``; ``kind`` selects one-edge or one-node
    neighbours.  With ``exhaustive_n`` every pair on at most that many nodes
    (up to isomorphism of the base) is checked before the random trials.
    """
    if query not in QUERIES:
        raise ValueError(f"unknown query {query!r}")
    if kind not in ("edge", "node"):
        raise ValueError("kind must be 'edge' or 'node'")
    if query == "del_n_exact" and max_n > 16:
        raise ValueError("exact deletion oracle limited to 16 nodes")
    q = QUERIES[query]
    tol = (LP_TOL if query == "lp_del_n" else 0.0) if tol is None else tol
    rep = PropertyReport(f"sensitivity[{query},{kind}]", 0)
    for source, idx, g, h in _sensitivity_pairs(kind, trials, max_n, seed, exhaustive_n):
        rep.trials += 1
        for tau in range(1, h.max_degree + 2):
            a, b = q(g, tau), q(h, tau)
            bad = abs(a - b) > 1 + tol or b > a + tol
            rep.record(bad, lambda: _pair_witness(g, h, source=source, index=idx, seed=seed,
                                                  tau=tau, q_base=a, q_extended=b))
    return rep


# ------------------------------------------------------------ LP vs exact ---

def lp_exact_violations(g: Graph, tol: float = LP_TOL) -> list[dict]:
    """All failures of the LP/exact inequalities and rounding guarantees on ``g``."""
    out = []
    if g.max_degree == 0:
        return out
    prof = del_n_profile(g)

    def exact(t):
        return 0 if t >= len(prof) else int(prof[t])

    for tau in range(1, g.max_degree + 1):
        sol = solve(build_del_n_lp(g, tau))
        lp = abs(sol.objective)
        if exact(3 * tau) > 3 * lp + tol:
            out.append({"tau": tau, "kind": "lp-bound", "exact_3tau": exact(3 * tau), "lp": lp})
        if lp > exact(tau) + tol:
            out.append({"tau": tau, "kind": "relaxation", "exact": exact(tau), "lp": lp})
        rounded = round_subgraph(g, sol)
        removed = int(np.sum(sol.x > 1 / 3 + ROUNDING_GUARD))
        if rounded.max_degree > 3 * tau or removed > 3 * lp + tol:
            out.append({"tau": tau, "kind": "rounding", "degree": rounded.max_degree, "removed": removed})
        q = exact(tau)
        if count_at_least(g, tau + q + 1) > q:
            out.append({"tau": tau, "kind": "saturation", "exact": q})
    return out


def check_lp_vs_exact(trials: int = 1_000, max_n: int = 12, seed: int = 0,
                      exhaustive_n: int | None = 6, tol: float = LP_TOL) -> PropertyReport:
    if max_n > 12:
        raise ValueError("size bound must be <= 12")
    rep = PropertyReport("lp-vs-exact", 0)
    graphs: list[tuple[str, int, Graph]] = []
    if exhaustive_n:
        graphs += [("exhaustive", i, g) for i, g in enumerate(atlas_graphs(exhaustive_n))]
    graphs += [("random", t, random_graph(np.random.default_rng([seed, t]), max_n)) for t in range(trials)]
    for source, idx, g in graphs:
        rep.trials += 1
        bad = lp_exact_violations(g, tol)
        rep.checks += max(g.max_degree, 1)
        if bad:
            rep.violations += 1
            if rep.witness is None:
                rep.witness = {"source": source, "index": idx, "seed": seed,
                               "graph": {"n": g.n, "edges": _edges(g)}, "failures": bad}
    return rep


# ----------------------------------------------------------- SVT utility ---

def check_svt_utility(eps: float = 1.0, beta: float = 0.1, family: str = "constant",
                      seeds: int = 2_000, k: int = 5, seed: int = 0) -> PropertyReport:
    """Empirical failure rate of the SVT utility guarantee (c = 1) against beta + 3 sigma.

    Families: ``constant`` (every query sits at the premise level, k = 1),
    ``ramp`` (query k is the first to reach the premise level) and
    ``edge-max-degree`` (the half-excess degree scan on gnp(200, 0.05)).
    """
    rep = PropertyReport(f"svt-utility[{family}]", seeds, tolerance=binomial_slack(beta, seeds))
    if family == "edge-max-degree":
        g = gnp(200, 0.05, np.random.default_rng(seed))
        dmax = g.max_degree
        limit = 4 / eps * math.log(dmax) + 8 / eps * math.log(2 / beta)
        for s in range(seeds):
            tau = edge_dp_max_degree(g, eps, beta, NoiseSource(seed).spawn(s))
            ok = tau <= dmax and abs(q_del_deg(g, tau)) <= limit
            rep.record(not ok, lambda: {"seed": seed, "round": s, "tau": tau, "max_degree": dmax})
        rep.detail = {"max_degree": dmax, "bound": limit}
        return rep

    threshold = 0.0
    lift = 4 / eps * math.log(2 / beta)
    if family == "constant":
        k, values = 1, [threshold + lift] * 10
    elif family == "ramp":
        values = [threshold + lift - (k - i) * 4 * lift for i in range(1, 2 * k + 1)]
    else:
        raise ValueError(f"unknown family {family!r}")
    floor = threshold - 4 / eps * math.log(2 * k / beta)
    for s in range(seeds):
        src = NoiseSource(seed).spawn(s)
        try:
            res = svt(threshold, ((i, (lambda i=i: values[i - 1])) for i in range(1, len(values) + 1)),
                      eps, src, c=1)
            ok = res.index <= k and values[res.index - 1] >= floor
        except SvtExhausted:
            ok = False
        rep.record(not ok, lambda: {"seed": seed, "round": s, "family": family})
    return rep


# ---------------------------------------------------- degree approximator ---

def utility_bounds(max_degree: int, eps: float, delta: float, beta: float, method: str) -> tuple[float, float]:
    """``(tau_star_bound, saturated_bound)`` guaranteed with probability >= 1 - beta.

    The factor is 1 for the exact estimator and 3 for the LP one; the log
    inside the log is base 2 (the number of doubling candidates).
    """
    f = 1 if method == "exp" else 3
    lnlog = math.log(max(math.log2(4 * max_degree), 1.0))
    sat = 8 * f / eps * lnlog + 16 * f / eps * math.log(4 / beta)
    tau = (2 * f * max_degree + sat + 4 * f / eps * math.log(max(1 / delta, 2 / beta)) + 1)
    return tau, sat


def check_approx_utility(graph: Graph, eps: float = 0.8, delta: float = 2.0 ** -30, beta: float = 0.1,
                         seeds: int = 500, method: str = "poly", seed: int = 0,
                         cache: dict | None = None, label: str = "") -> PropertyReport:
    """Failure frequency of the degree-bound guarantees over ``seeds`` runs.

    A run fails if tau* exceeds its bound or more than the allowed number of
    nodes have degree >= tau*.  The distance certificate
    ``tau* + N_{tau*} <= 2 tau*`` is counted separately in ``detail``.
    """
    tau_bound, sat_bound = utility_bounds(max(graph.max_degree, 1), eps, delta, beta, method)
    rep = PropertyReport(f"approx-utility[{method}{',' + label if label else ''}]", seeds,
                         tolerance=binomial_slack(beta, seeds))
    cache = {} if cache is None else cache
    cert_fail = 0
    taus = []
    for s in range(seeds):
        out = approximate_max_degree(graph, method, eps_svt=eps / 2, eps_post=eps / 2, beta_svt=beta / 2,
                                     beta_post=beta / 2, delta=delta, src=NoiseSource(seed).spawn(s),
                                     cache=cache)
        sat = count_at_least(graph, out.tau_star)
        taus.append(out.tau_star)
        cert_fail += out.tau_star + sat > 2 * out.tau_star
        rep.record(out.tau_star > tau_bound or sat > sat_bound,
                   lambda: {"seed": seed, "round": s, "tau_star": out.tau_star, "saturated": sat})
    rep.detail = {"tau_bound": tau_bound, "saturated_bound": sat_bound, "certificate_failures": cert_fail,
                  "max_degree": graph.max_degree, "tau_star_median": float(np.median(taus))}
    return rep


def check_exp_vs_poly(trials: int = 300, max_n: int = 12, seed: int = 0, eps: float = 1.0,
                      delta: float = 2.0 ** -30, beta: float = 0.1) -> PropertyReport:
    """With identical noise the LP scan stops no later than the exact scan."""
    rep = PropertyReport("exp-vs-poly", trials)
    for t in range(trials):
        g = random_graph(np.random.default_rng([seed, t]), max_n)
        kw = dict(eps_svt=eps / 2, eps_post=eps / 2, beta_svt=beta / 2, beta_post=beta / 2, delta=delta)
        e = approximate_max_degree(g, "exp", src=NoiseSource(seed).spawn(t), **kw)
        p = approximate_max_degree(g, "poly", src=NoiseSource(seed).spawn(t), **kw)
        rep.record(p.tau_svt > e.tau_svt, lambda: {"seed": seed, "trial": t, "graph": _edges(g), "n": g.n,
                                                   "exp_tau": e.tau_svt, "poly_tau": p.tau_svt})
    return rep


# ------------------------------------------------------------ early stop ---

def check_early_stop(triggered: int = 100, seed: int = 0, max_attempts: int = 2_000) -> PropertyReport:
    """Collect LP instances where the early stop fires and confirm each by a full solve."""
    rep = PropertyReport("early-stop", 0)
    for a in range(max_attempts):
        if rep.trials >= triggered:
            break
        rng = np.random.default_rng([seed, a])
        g = gnp(int(rng.integers(15, 60)), float(rng.uniform(0.05, 0.4)), rng)
        if g.max_degree < 2:
            continue
        tau = int(rng.integers(1, g.max_degree))
        p = build_del_n_lp(g, tau)
        full = solve(p)
        thr = full.objective + float(rng.uniform(0.01, 0.5)) * max(abs(full.objective), 1.0)
        early = solve(p, early_stop_below=thr)
        if early.status is not LpStatus.EARLY_STOPPED:
            continue
        rep.trials += 1
        bad = not (full.objective < thr and full.objective <= early.upper_bound + LP_TOL)
        rep.record(bad, lambda: {"seed": seed, "attempt": a, "tau": tau, "threshold": thr,
                                 "bound": early.upper_bound, "optimum": full.objective})
    rep.detail = {"attempts": a + 1}
    if rep.trials < triggered:
        rep.violations += 1
        rep.detail["shortfall"] = triggered - rep.trials
    return rep


# --------------------------------------------------------------- registry ---

PROPERTIES: dict[str, Callable[..., PropertyReport]] = {
    "clip-distance": check_clip_distance,
    "clip-edge-distance": check_clip_edge_distance,
    "pi-theta-sensitivity": check_pi_theta_sensitivity,
    "sens-del-deg": lambda **kw: check_query_sensitivity("del_deg", "edge", **kw),
    "sens-del-n": lambda **kw: check_query_sensitivity("del_n_exact", "node", **kw),
    "sens-lp": lambda **kw: check_query_sensitivity("lp_del_n", "node", **kw),
    "lp-vs-exact": check_lp_vs_exact,
    "svt-utility": check_svt_utility,
    "exp-vs-poly": check_exp_vs_poly,
    "early-stop": check_early_stop,
}
