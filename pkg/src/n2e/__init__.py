"""Node-level differentially private graph statistics via degree clipping."""

from .clipping import ClipReport, clip_graph, pi_theta_clip
from .degree_approx import (
    DegreeApproxOutput,
    approximate_max_degree,
    edge_dp_max_degree,
    node_dp_max_degree_exp,
    node_dp_max_degree_poly,
    q_del_deg,
    q_del_n_exact,
)
from .dp import EMPIRICAL, THEORY, BudgetLedger, BudgetSplit, NoiseSource, PrivacyParams, ZeroNoise
from .graph import Graph, load_edge_list
from .lp import q_lp_del_n
from .mechanisms import (
    EdgeCount,
    MaxDegree,
    TaskResult,
    TwoPathCount,
    group_privacy_baseline,
    n2e_degree_distribution,
    n2e_run,
)

__version__ = "0.1.0"

__all__ = [
    "ClipReport", "clip_graph", "pi_theta_clip", "DegreeApproxOutput", "approximate_max_degree",
    "edge_dp_max_degree", "node_dp_max_degree_exp", "node_dp_max_degree_poly", "q_del_deg",
    "q_del_n_exact", "EMPIRICAL", "THEORY", "BudgetLedger", "BudgetSplit", "NoiseSource",
    "PrivacyParams", "ZeroNoise", "Graph", "load_edge_list", "q_lp_del_n", "EdgeCount", "MaxDegree",
    "TaskResult", "TwoPathCount", "group_privacy_baseline", "n2e_degree_distribution", "n2e_run",
]
