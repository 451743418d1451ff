import json

import numpy as np
import pytest

from n2e.dp import ZeroNoise, svt
from n2e.graph import Graph, cycle, make_node_neighbor, star
from n2e.oracles import (
    PROPERTIES,
    atlas_graphs,
    binomial_slack,
    check_approx_utility,
    check_clip_distance,
    check_clip_edge_distance,
    check_early_stop,
    check_exp_vs_poly,
    check_lp_vs_exact,
    check_pi_theta_sensitivity,
    check_query_sensitivity,
    check_svt_utility,
    clip_distance_violations,
    exhaustive_node_pairs,
    lp_exact_violations,
    utility_bounds,
)


def test_atlas_counts():
    sizes = [g.n for g in atlas_graphs(6)]
    assert [sizes.count(n) for n in range(1, 7)] == [1, 2, 4, 11, 34, 156]


def test_exhaustive_node_pairs_count():
    # empty base plus every atlas base on up to 5 nodes with every attachment subset
    assert sum(1 for _ in exhaustive_node_pairs(6)) == 1 + 1 * 2 + 2 * 4 + 4 * 8 + 11 * 16 + 34 * 32


def test_wheel_pair_depends_on_k_rule():
    pair = make_node_neighbor(cycle(5), "all", position=0)
    assert clip_distance_violations(pair, "count") == []
    assert clip_distance_violations(pair, "rank") == [(2, 1, 6)]
    same = make_node_neighbor(cycle(5), "none")
    assert clip_distance_violations(same, "rank") == []


def test_clip_checks_small():
    assert check_clip_distance(300, seed=1).passed
    assert check_clip_edge_distance(100, seed=1).passed
    assert check_pi_theta_sensitivity(100, seed=1).passed


@pytest.mark.parametrize("query,kind", [("del_deg", "edge"), ("del_n_exact", "node"), ("lp_del_n", "node"),
                                        ("del_n_exact", "edge")])
def test_sensitivity_checks_small(query, kind):
    rep = check_query_sensitivity(query, kind, trials=100, exhaustive_n=4, seed=2)
    assert rep.passed and rep.checks > 0


def test_sensitivity_check_catches_a_bad_query(monkeypatch):
    import n2e.oracles as o
    monkeypatch.setitem(o.QUERIES, "del_deg", lambda g, tau: -float(g.m))
    rep = check_query_sensitivity("del_deg", "node", trials=50, exhaustive_n=None, seed=0)
    assert not rep.passed
    w = rep.witness
    assert abs(len(w["extended"]["edges"]) - len(w["base"]["edges"])) > 1
    json.dumps(rep.as_dict())


def test_lp_vs_exact_examples():
    assert lp_exact_violations(Graph.from_edges(3, [(0, 1), (0, 2), (1, 2)])) == []
    assert lp_exact_violations(star(4)) == []
    assert lp_exact_violations(Graph.empty(4)) == []
    assert check_lp_vs_exact(50, exhaustive_n=5, seed=3).passed


def test_svt_checks():
    assert check_svt_utility(family="constant", seeds=1000).passed
    assert check_svt_utility(family="ramp", seeds=1000).passed
    vals = [5.0] * 3
    assert svt(0.0, ((i, (lambda v=v: v)) for i, v in enumerate(vals, 1)), 1.0, ZeroNoise(), c=1).index == 1


def test_binomial_slack():
    assert binomial_slack(0.1, 900) == pytest.approx(0.1 + 3 * 0.01)


def test_utility_bounds_shape():
    t1, s1 = utility_bounds(10, 0.8, 2.0 ** -30, 0.1, "exp")
    t3, s3 = utility_bounds(10, 0.8, 2.0 ** -30, 0.1, "poly")
    assert s3 == pytest.approx(3 * s1)
    assert t3 > t1 > 20


def test_small_statistical_checks():
    rep = check_approx_utility(star(8), seeds=40, method="exp")
    assert rep.passed and rep.detail["certificate_failures"] == 0
    assert check_exp_vs_poly(40, seed=5).passed
    rep = check_early_stop(10, seed=4)
    assert rep.passed and rep.trials == 10


def test_registry():
    assert {"clip-distance", "sens-lp", "lp-vs-exact", "early-stop"} <= set(PROPERTIES)
