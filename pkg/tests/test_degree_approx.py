import math

import numpy as np
import pytest

from n2e.degree_approx import (
    OracleSizeError,
    approximate_max_degree,
    candidate_schedule,
    del_n_profile,
    edge_dp_max_degree,
    node_dp_max_degree_exp,
    node_dp_max_degree_poly,
    q_del_deg,
    q_del_n_exact,
)
from n2e.dp import NoiseSource, ZeroNoise
from n2e.graph import Graph, complete, count_at_least, gnp, star
from n2e.oracles import atlas_graphs


def union(*gs):
    edges, off = [], 0
    for g in gs:
        edges += [(u + off, v + off) for u, v in g.edges.tolist()]
        off += g.n
    return Graph.from_edges(off, edges)


def test_q_del_deg_examples():
    assert q_del_deg(star(4), 2) == -1
    assert q_del_deg(union(star(5), star(3)), 3) == -1
    assert q_del_deg(star(4), 4) == 0


def test_q_del_n_examples():
    assert q_del_n_exact(star(4), 2) == -1
    assert q_del_n_exact(complete(4), 1) == -2
    assert q_del_n_exact(star(4), 4) == 0
    with pytest.raises(OracleSizeError):
        q_del_n_exact(Graph.empty(17), 1)


def _subset_search(g, tau):
    import itertools
    for size in range(g.n + 1):
        for s in itertools.combinations(range(g.n), size):
            if g.subgraph_without(s).max_degree <= tau:
                return -size


def test_profile_matches_plain_search():
    for g in atlas_graphs(6)[::7]:
        for tau in range(g.max_degree + 1):
            assert q_del_n_exact(g, tau) == _subset_search(g, tau)


def test_saturation_bound_from_deletions():
    for g in atlas_graphs(6):
        prof = del_n_profile(g)
        for tau in range(1, g.max_degree + 1):
            q = int(prof[tau])
            assert count_at_least(g, tau + q + 1) <= q


def test_candidate_schedule():
    assert candidate_schedule(1) == [1]
    assert candidate_schedule(8) == [1, 2, 4, 8]
    assert candidate_schedule(10) == [1, 2, 4, 8, 10]
    assert candidate_schedule(0) == [1]


def test_edge_dp_golden():
    assert -4 * math.log(2 / 0.1) / 1.0 == pytest.approx(-11.98, abs=0.01)
    assert edge_dp_max_degree(star(10), 1.0, 0.1, ZeroNoise()) == 1
    assert edge_dp_max_degree(Graph.empty(4), 1.0, 0.1, ZeroNoise()) == 1


def test_exp_golden_empty_graph():
    out = node_dp_max_degree_exp(Graph.empty(5), 1.0, 2.0 ** -30, 0.1, ZeroNoise())
    assert out.tau_svt == 1
    assert out.tau_star == pytest.approx(1 + 2 * math.log(2 ** 30) + 1)
    assert out.tau_star == pytest.approx(43.59, abs=0.01)


def test_poly_golden_star():
    out = node_dp_max_degree_poly(star(10), 1.0, 2.0 ** -30, 0.1, ZeroNoise())
    assert out.tau_svt == 1
    assert out.q_at_tau == pytest.approx(-0.9)
    assert out.noisy_threshold == pytest.approx(-8 * math.log(40), abs=1e-9)
    assert out.tau_star == pytest.approx(3 + 2.7 + 6 * math.log(2 ** 30) + 1)
    assert out.tau_star == pytest.approx(131.47, abs=0.01)
    assert out.tau_star_int == 132


def test_noise_draw_order():
    g = gnp(40, 0.2, np.random.default_rng(3))
    src = NoiseSource(11)
    node_dp_max_degree_poly(g, 0.8, 2.0 ** -30, 0.1, src)
    # threshold + one per candidate + offset, regardless of where the scan stops
    assert src.draws == 1 + len(candidate_schedule(g.n)) + 1


@pytest.mark.parametrize("seed", range(3))
def test_parallel_scan_is_deterministic(seed):
    g = gnp(150, 0.06, np.random.default_rng(seed))
    outs = []
    for w in (1, 4, 16):
        o = node_dp_max_degree_poly(g, 0.8, 2.0 ** -30, 0.1, NoiseSource(seed), workers=w)
        outs.append((o.tau_star, o.tau_svt, o.q_at_tau, o.iterations))
    assert outs[0] == outs[1] == outs[2]


def test_cache_does_not_change_result():
    g = gnp(120, 0.08, np.random.default_rng(5))
    cache = {}
    a = [node_dp_max_degree_poly(g, 0.8, 2.0 ** -30, 0.1, NoiseSource(s), cache=cache).tau_star for s in range(6)]
    b = [node_dp_max_degree_poly(g, 0.8, 2.0 ** -30, 0.1, NoiseSource(s)).tau_star for s in range(6)]
    assert a == b


def test_exhaustion_via_threshold(monkeypatch):
    import n2e.degree_approx as da
    draws = iter([1e6] + [0.0] * 20)
    monkeypatch.setattr(da, "laplace", lambda scale, src: next(draws))
    out = da.approximate_max_degree(complete(6), "poly", eps_svt=1.0, eps_post=1.0, beta_svt=0.1,
                                    beta_post=0.1, delta=None, src=NoiseSource(0))
    assert out.exhausted and out.tau_svt == 6 and out.q_at_tau == 0


def test_argument_validation():
    with pytest.raises(ValueError):
        approximate_max_degree(star(3), "ilp", eps_svt=1, eps_post=1, beta_svt=0.1, beta_post=0.1,
                               delta=None, src=NoiseSource(0))
    with pytest.raises(ValueError):
        edge_dp_max_degree(star(3), 0.0, 0.1, NoiseSource(0))
