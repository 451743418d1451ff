"""Private maximum-degree estimation.

Three estimators share one skeleton, a sparse-vector scan over candidate
degree bounds with a sensitivity-monotonic deletion query:

* :func:`edge_dp_max_degree` scans ``tau = 1, 2, 3, ...`` with the half
  excess-degree sum (edge-level privacy);
* :func:`node_dp_max_degree_exp` scans ``tau = 1, 2, 4, ...`` with the exact
  minimum number of node deletions (exponential time, small graphs only);
* :func:`node_dp_max_degree_poly` replaces the exact count by the LP
  relaxation and triples the post-processed bound to compensate.

The node-level estimators draw all their noise up front (threshold, then one
draw per candidate in ascending order, then the final offset draw), so the
answer does not depend on how many workers evaluate candidates.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import FIRST_COMPLETED, Future, ThreadPoolExecutor, wait
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from .dp import NoiseSource, SvtExhausted, laplace, svt
from .graph import Graph
from .lp import DEFAULT_TOL, LpStatus, build_del_n_lp, solve

EXACT_LIMIT = 16


class OracleSizeError(ValueError):
    pass


# ---------------------------------------------------------------- queries ---

def q_del_deg(graph: Graph, tau: float) -> float:
    """Minus half the total degree excess above ``tau``."""
    d = graph.degrees
    return -0.5 * float(np.sum(np.maximum(d - tau, 0)))


def del_n_profile(graph: Graph, limit: int = EXACT_LIMIT) -> np.ndarray:
    """``out[t]`` = fewest node deletions leaving maximum degree <= t, for t = 0..max degree.

    Enumerates every node subset at once; refuses graphs with more than
    ``limit`` nodes.
    """
    n = graph.n
    if n > limit:
        raise OracleSizeError(f"exact deletion count limited to {limit} nodes, graph has {n}")
    dmax = graph.max_degree
    if dmax == 0:
        return np.zeros(1, np.int64)
    adj = np.zeros((n, n), np.int32)
    adj[graph.edges[:, 0], graph.edges[:, 1]] = 1
    adj += adj.T
    masks = np.arange(1 << n, dtype=np.int64)
    kept = ((masks[:, None] >> np.arange(n)) & 1).astype(np.int32)
    deg = (kept @ adj) * kept
    worst = deg.max(axis=1)
    removed = n - kept.sum(axis=1)
    best = np.full(dmax + 1, n, np.int64)
    np.minimum.at(best, worst, removed)
    return np.minimum.accumulate(best)


def q_del_n_exact(graph: Graph, tau: float, limit: int = EXACT_LIMIT) -> int:
    """Minus the fewest node deletions leaving maximum degree <= tau (brute force)."""
    if graph.n > limit:
        raise OracleSizeError(f"exact deletion count limited to {limit} nodes, graph has {graph.n}")
    if tau < 0:
        raise ValueError("tau must be non-negative")
    if graph.max_degree <= tau:
        return 0
    return -int(del_n_profile(graph, limit)[int(math.floor(tau))])


# ---------------------------------------------------------- edge-level SVT ---

def edge_dp_max_degree(graph: Graph, eps: float, beta: float, src: NoiseSource) -> int:
    """Edge-DP maximum degree: first ``tau`` whose noisy excess clears the threshold.

    The scan is capped at ``n``; if nothing fires the cap is returned.
    """
    if not eps > 0 or not 0 < beta < 1:
        raise ValueError("need eps > 0 and 0 < beta < 1")
    threshold = -4.0 * math.log(2.0 / beta) / eps
    cap = max(graph.n, 1)
    queries = ((t, (lambda t=t: q_del_deg(graph, t))) for t in range(1, cap + 1))
    try:
        return svt(threshold, queries, eps, src, c=1).index
    except SvtExhausted:
        return cap


# ---------------------------------------------------------- node-level SVT ---

@dataclass
class DegreeApproxOutput:
    tau_star: float
    tau_star_int: int
    tau_svt: int
    q_at_tau: float
    iterations: int
    noisy_threshold: float
    clamped: bool = False
    exhausted: bool = False
    lp_solves: int = 0
    early_stops: int = 0
    timings: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return asdict(self)


def candidate_schedule(n: int) -> list[int]:
    """``1, 2, 4, ...`` below ``n``, then ``n`` itself as a sentinel."""
    out, t = [], 1
    while t < n:
        out.append(t)
        t *= 2
    out.append(max(n, 1))
    return out


@dataclass
class _Eval:
    fired: bool
    value: float | None  # exact query value; None when the LP stopped early
    lp_solved: bool = False
    early: bool = False


def _scan(n_candidates: int, evaluate: Callable[[int], _Eval], workers: int) -> tuple[int | None, dict[int, _Eval]]:
    """Smallest candidate index that fires with every smaller one confirmed not firing."""
    results: dict[int, _Eval] = {}
    if workers <= 1:
        for i in range(n_candidates):
            results[i] = evaluate(i)
            if results[i].fired:
                return i, results
        return None, results

    pool = ThreadPoolExecutor(max_workers=workers)
    pending: dict[Future, int] = {}
    nxt = 0  # next candidate to submit
    frontier = 0  # every index below this is known not to fire
    try:
        while frontier < n_candidates:
            while nxt < n_candidates and len(pending) < workers:
                pending[pool.submit(evaluate, nxt)] = nxt
                nxt += 1
            done, _ = wait(pending, return_when=FIRST_COMPLETED)
            for fut in done:
                results[pending.pop(fut)] = fut.result()
            while frontier in results:
                if results[frontier].fired:
                    return frontier, results
                frontier += 1
        return None, results
    finally:
        for fut in pending:
            fut.cancel()
        pool.shutdown(wait=True, cancel_futures=True)


def _offset_log(delta: float | None, beta_post: float) -> float:
    inv = 1.0 / beta_post
    if delta:
        inv = max(inv, 1.0 / delta)
    return math.log(inv)


def approximate_max_degree(
    graph: Graph,
    method: str,
    *,
    eps_svt: float,
    eps_post: float,
    beta_svt: float,
    beta_post: float,
    delta: float | None,
    src: NoiseSource,
    workers: int = 1,
    cache: dict | None = None,
    exact_limit: int = EXACT_LIMIT,
    tol: float = DEFAULT_TOL,
) -> DegreeApproxOutput:
    """Node-DP maximum degree approximation with explicit per-step budgets.

    ``method`` is ``"poly"`` (LP relaxation, factor 3) or ``"exp"`` (exact
    deletion count, factor 1).  The SVT scan spends ``eps_svt``; the noisy
    offset spends ``eps_post``.  ``delta`` only enters the additive log term;
    ``None`` drops it (pure-eps uses that do not need the distance
    certificate).  ``cache`` may map ``tau`` to exact query values of this
    graph; the query is deterministic so caching never changes the output.
    """
    if method not in ("poly", "exp"):
        raise ValueError(f"unknown method {method!r}")
    for name, val in (("eps_svt", eps_svt), ("eps_post", eps_post)):
        if not val > 0:
            raise ValueError(f"{name} must be positive")
    for name, val in (("beta_svt", beta_svt), ("beta_post", beta_post)):
        if not 0 < val < 1:
            raise ValueError(f"{name} must lie in (0, 1)")
    factor = 3 if method == "poly" else 1
    started = time.perf_counter()

    cands = candidate_schedule(graph.n)
    threshold = -4.0 * math.log(2.0 / beta_svt) / eps_svt
    noisy_t = threshold + laplace(2.0 / eps_svt, src)
    nus = [laplace(2.0 / eps_svt, src) for _ in cands]
    post_noise = laplace(factor / eps_post, src)
    cache = {} if cache is None else cache
    max_deg = graph.max_degree

    def exact(tau: int) -> float:
        if tau >= max_deg:
            return 0.0
        if tau not in cache:
            if method == "exp":
                cache[tau] = float(q_del_n_exact(graph, tau, exact_limit))
            else:
                cache[tau] = solve(build_del_n_lp(graph, tau), tol=tol).objective
        return cache[tau]

    def evaluate(i: int) -> _Eval:
        tau = cands[i]
        if method == "exp" or tau >= max_deg or tau in cache:
            q = exact(tau)
            return _Eval(q + nus[i] > noisy_t, q)
        sol = solve(build_del_n_lp(graph, tau), early_stop_below=noisy_t - nus[i], tol=tol)
        if sol.status is LpStatus.EARLY_STOPPED:
            return _Eval(False, None, True, True)
        cache[tau] = sol.objective
        return _Eval(sol.objective + nus[i] > noisy_t, sol.objective, True)

    fired, results = _scan(len(cands), evaluate, workers)
    scan_done = time.perf_counter()
    exhausted = fired is None
    idx = len(cands) - 1 if exhausted else fired
    tau = cands[idx]
    q = results[idx].value if idx in results and results[idx].value is not None else exact(tau)

    tau_star = (factor * tau + factor * abs(q) + post_noise
                + factor / eps_post * _offset_log(delta, beta_post) + 1.0)
    tau_int = max(1, math.ceil(tau_star))
    considered = [r for i, r in results.items() if i <= idx]
    return DegreeApproxOutput(
        tau_star=tau_star,
        tau_star_int=tau_int,
        tau_svt=tau,
        q_at_tau=-abs(q),
        iterations=idx + 1,
        noisy_threshold=noisy_t,
        clamped=tau_star <= 0,
        exhausted=exhausted,
        lp_solves=sum(r.lp_solved for r in considered),
        early_stops=sum(r.early for r in considered),
        timings={"scan_s": scan_done - started, "total_s": time.perf_counter() - started},
    )


def node_dp_max_degree_exp(graph: Graph, eps: float, delta: float, beta: float,
                           src: NoiseSource, **kw) -> DegreeApproxOutput:
    """Exact-deletion estimator; eps and beta are halved between scan and offset."""
    return approximate_max_degree(graph, "exp", eps_svt=eps / 2, eps_post=eps / 2,
                                  beta_svt=beta / 2, beta_post=beta / 2, delta=delta, src=src, **kw)


def node_dp_max_degree_poly(graph: Graph, eps: float, delta: float, beta: float,
                            src: NoiseSource, workers: int = 1, **kw) -> DegreeApproxOutput:
    """LP-relaxation estimator; eps and beta are halved between scan and offset."""
    return approximate_max_degree(graph, "poly", eps_svt=eps / 2, eps_post=eps / 2,
                                  beta_svt=beta / 2, beta_post=beta / 2, delta=delta, src=src,
                                  workers=workers, **kw)
