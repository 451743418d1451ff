"""The fractional node-deletion LP and its 1/3-threshold rounding.

For a graph and a degree bound ``tau`` the LP is::

    maximize   -sum_v x_v
    subject to y_e >= 1 - x_u - x_v          for every edge e = (u, v)
               sum_{e at v} y_e <= tau       for every node v
               0 <= x_v, y_e <= 1

``x_v`` is the fractional deletion of node ``v`` and ``y_e`` the fractional
retention of edge ``e``.  Internally it is solved as the minimisation of
``sum_v x_v`` with HiGHS.  When the caller only needs to know whether the
optimum clears a threshold, :func:`solve` runs the dual simplex with an
objective cut-off and certifies the stop with a Lagrangian bound computed
from the row duals, so an early stop is never a guess.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import IO

import highspy
import numpy as np
import scipy.sparse as sp

from .graph import Graph

DEFAULT_TOL = 1e-7
ROUNDING_GUARD = 1e-9


class SolverError(RuntimeError):
    pass


class LpStatus(str, enum.Enum):
    OPTIMAL = "optimal"
    EARLY_STOPPED = "early-stopped"
    INFEASIBLE = "infeasible"


@dataclass(frozen=True)
class LpProblem:
    graph: Graph
    tau: float
    matrix: sp.csc_matrix  # rows: M edge rows, then N node rows; cols: N x's, then M y's
    row_lower: np.ndarray
    row_upper: np.ndarray

    @property
    def num_x(self) -> int:
        return self.graph.n

    @property
    def num_y(self) -> int:
        return self.graph.m

    @property
    def num_constraints(self) -> int:
        return self.matrix.shape[0]

    @property
    def cost(self) -> np.ndarray:
        # minimisation cost; the reported objective is its negation
        return np.concatenate([np.ones(self.num_x), np.zeros(self.num_y)])


@dataclass(frozen=True)
class LpSolution:
    status: LpStatus
    objective: float
    upper_bound: float
    x: np.ndarray | None
    y: np.ndarray | None
    iterations: int = 0


def build_del_n_lp(graph: Graph, tau: float) -> LpProblem:
    if not tau > 0:
        raise ValueError(f"tau must be positive, got {tau}")
    n, m = graph.n, graph.m
    u, v = graph.edges[:, 0], graph.edges[:, 1]
    e = np.arange(m)
    rows = np.concatenate([e, e, e, m + u, m + v])
    cols = np.concatenate([u, v, n + e, n + e, n + e])
    A = sp.csc_matrix((np.ones(len(rows)), (rows, cols)), shape=(m + n, n + m))
    lower = np.concatenate([np.ones(m), np.full(n, -np.inf)])
    upper = np.concatenate([np.full(m, np.inf), np.full(n, float(tau))])
    return LpProblem(graph, float(tau), A, lower, upper)


def _trivial_solution(p: LpProblem) -> LpSolution:
    # tau >= max degree: keep every edge, delete nothing
    return LpSolution(LpStatus.OPTIMAL, 0.0, 0.0, np.zeros(p.num_x), np.ones(p.num_y))


def _highs_for(p: LpProblem, tol: float) -> highspy.Highs:
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.setOptionValue("primal_feasibility_tolerance", tol)
    h.setOptionValue("dual_feasibility_tolerance", tol)
    h.setOptionValue("threads", 1)
    lp = highspy.HighsLp()
    lp.num_col_ = p.num_x + p.num_y
    lp.num_row_ = p.num_constraints
    lp.col_cost_ = p.cost
    lp.col_lower_ = np.zeros(lp.num_col_)
    lp.col_upper_ = np.ones(lp.num_col_)
    lp.row_lower_ = p.row_lower
    lp.row_upper_ = p.row_upper
    lp.a_matrix_.format_ = highspy.MatrixFormat.kColwise
    lp.a_matrix_.start_ = p.matrix.indptr
    lp.a_matrix_.index_ = p.matrix.indices
    lp.a_matrix_.value_ = p.matrix.data
    h.passModel(lp)
    return h


def lagrangian_upper_bound(p: LpProblem, row_dual: np.ndarray) -> float:
    """Upper bound on the (maximisation) optimum valid for any row multipliers.

    Multipliers are first projected onto the sign-feasible cone: non-negative
    on ``>=`` rows, non-positive on ``<=`` rows.
    """
    m = p.num_y
    lam = np.asarray(row_dual, dtype=float).copy()
    lam[:m] = np.maximum(lam[:m], 0.0)
    lam[m:] = np.minimum(lam[m:], 0.0)
    rhs = np.where(np.arange(len(lam)) < m, p.row_lower, p.row_upper)
    reduced = p.cost - p.matrix.T @ lam
    lower = float(lam @ rhs + np.minimum(reduced, 0.0).sum())
    return -lower


def solve(p: LpProblem, early_stop_below: float | None = None, tol: float = DEFAULT_TOL) -> LpSolution:
    """Solve to optimality, or stop once the optimum is certified below a threshold.

    With ``early_stop_below`` set, the result is either ``EARLY_STOPPED`` with
    ``upper_bound < early_stop_below`` (so the optimum is below it too) or an
    optimal solution.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    if p.graph.m == 0 or p.tau >= p.graph.max_degree:
        return _trivial_solution(p)

    h = _highs_for(p, tol)
    if early_stop_below is not None:
        h.setOptionValue("solver", "simplex")
        h.setOptionValue("simplex_strategy", 1)  # dual simplex: objective rises monotonically
        h.setOptionValue("presolve", "off")
        h.setOptionValue("objective_bound", -float(early_stop_below))
        h.run()
        status = h.getModelStatus()
        iters = h.getInfo().simplex_iteration_count
        if status == highspy.HighsModelStatus.kObjectiveBound:
            bound = lagrangian_upper_bound(p, np.asarray(h.getSolution().row_dual))
            if bound < early_stop_below:
                return LpSolution(LpStatus.EARLY_STOPPED, bound, bound, None, None, iters)
            # bound not certified by our own check: finish the solve
            h.setOptionValue("objective_bound", np.inf)
            h.run()
        elif status != highspy.HighsModelStatus.kOptimal:
            raise SolverError(f"HiGHS returned {h.modelStatusToString(status)} (tau={p.tau}, "
                              f"n={p.graph.n}, m={p.graph.m})")
    else:
        h.run()

    status = h.getModelStatus()
    if status == highspy.HighsModelStatus.kInfeasible:
        # cannot happen for a well-formed problem (x = 1, y = 0 is feasible)
        raise SolverError(f"LP reported infeasible (tau={p.tau}, n={p.graph.n}, m={p.graph.m})")
    if status != highspy.HighsModelStatus.kOptimal:
        raise SolverError(f"HiGHS returned {h.modelStatusToString(status)} (tau={p.tau}, "
                          f"n={p.graph.n}, m={p.graph.m})")
    sol = h.getSolution()
    z = np.clip(np.asarray(sol.col_value), 0.0, 1.0)
    obj = -float(h.getInfo().objective_function_value)
    obj = min(obj, 0.0)
    return LpSolution(LpStatus.OPTIMAL, obj, obj, z[:p.num_x], z[p.num_x:],
                      h.getInfo().simplex_iteration_count)


def q_lp_del_n(graph: Graph, tau: float, tol: float = DEFAULT_TOL) -> float:
    """Optimal value of the fractional node-deletion LP (non-positive)."""
    return solve(build_del_n_lp(graph, tau), tol=tol).objective


def round_subgraph(graph: Graph, sol: LpSolution) -> Graph:
    """Delete every node with ``x_v > 1/3`` (values within 1e-9 of 1/3 stay)."""
    if sol.x is None:
        raise ValueError("rounding needs a solution with primal values")
    removed = np.flatnonzero(sol.x > 1.0 / 3.0 + ROUNDING_GUARD)
    return graph.subgraph_without(removed)


def write_lp(p: LpProblem, out: IO[str]) -> None:
    """Dump the problem in CPLEX LP text format (maximisation form)."""
    n, m = p.num_x, p.num_y
    out.write("\\ fractional node deletion, tau = %r\n" % p.tau)
    out.write("Maximize\n obj:")
    out.write("".join(f" - x{v}" for v in range(n)) or " 0 x0")
    out.write("\nSubject To\n")
    for i, (u, v) in enumerate(p.graph.edges.tolist()):
        out.write(f" e{i}: x{u} + x{v} + y{i} >= 1\n")
    for v in range(n):
        ids = p.graph.incident_edge_ids(v)
        if len(ids):
            out.write(f" d{v}: " + " + ".join(f"y{i}" for i in ids) + f" <= {p.tau!r}\n")
    out.write("Bounds\n")
    for v in range(n):
        out.write(f" 0 <= x{v} <= 1\n")
    for i in range(m):
        out.write(f" 0 <= y{i} <= 1\n")
    out.write("End\n")
