"""CVaR portfolio optimization via linear programming.

Two equivalent routes are provided.  The primal LP carries one auxiliary
hinge variable per scenario (n + N + 1 variables, N + 1 rows), so its size
grows with the sample.  The dual LP keeps only n structural rows plus a
normalization row; the optimal portfolio is recovered from the row duals.
The textbook dual of the hinge formulation needs the normalization row
``sum(u) = 1`` (it is the column of the free threshold variable); without it
the program is unbounded whenever every instrument has negative mean
weighted return, and strong duality against the primal verifies the
completed form.

The hinge objective itself is kept as a direct evaluation oracle for
cross-checks against the sample CVaR.
"""

from __future__ import annotations

import time

import numpy as np

from ._validation import as_vector, check_alpha
from .evar import PortfolioSolution
from .measures import cvar_sample
from .scenarios import ScenarioSet, portfolio_loss, validate_portfolio
from .simplex import LinearProgram, LpSolution, simplex_solve

__all__ = [
    "build_primal_lp",
    "build_dual_lp",
    "cvar_nondiff_objective",
    "solve_cvar_portfolio",
]

#: Rough cap on dense-tableau entries; the primal LP needs O(N^2) memory,
#: so very large samples must go through the dual route.
_MAX_TABLEAU_ENTRIES = 300_000_000


def build_primal_lp(scenarios: ScenarioSet, alpha: float) -> LinearProgram:
    """Hinge-variable LP: variables (w, z, t), rows z_j + a_j @ w + t >= 0.

    Objective: minimize t + (1/alpha) * sum_j p_j z_j subject to the simplex
    constraint on w; w and z are nonnegative, the threshold t is free.
    """
    a = check_alpha(alpha)
    R, p = scenarios.returns, scenarios.probs
    n_scen, n = R.shape
    n_vars = n + n_scen + 1

    c = np.zeros(n_vars)
    c[n : n + n_scen] = p / a
    c[-1] = 1.0

    A = np.zeros((n_scen + 1, n_vars))
    A[:n_scen, :n] = R
    A[:n_scen, n : n + n_scen] = np.eye(n_scen)
    A[:n_scen, -1] = 1.0
    A[n_scen, :n] = 1.0
    b = np.concatenate([np.zeros(n_scen), [1.0]])
    senses = [">="] * n_scen + ["="]

    lo = np.zeros(n_vars)
    lo[-1] = -np.inf
    hi = np.full(n_vars, np.inf)
    return LinearProgram(sense="min", c=c, A=A, row_senses=senses, b=b, lo=lo, hi=hi)


def build_dual_lp(scenarios: ScenarioSet, alpha: float) -> LinearProgram:
    """Dual LP: maximize xi over xi + sum_j a_ij u_j <= 0, sum(u) = 1,
    0 <= u_j <= p_j / alpha."""
    a = check_alpha(alpha)
    R, p = scenarios.returns, scenarios.probs
    n_scen, n = R.shape
    n_vars = 1 + n_scen

    c = np.zeros(n_vars)
    c[0] = 1.0

    A = np.zeros((n + 1, n_vars))
    A[:n, 0] = 1.0
    A[:n, 1:] = R.T
    A[n, 1:] = 1.0
    b = np.concatenate([np.zeros(n), [1.0]])
    senses = ["<="] * n + ["="]

    lo = np.concatenate([[-np.inf], np.zeros(n_scen)])
    hi = np.concatenate([[np.inf], p / a])
    return LinearProgram(sense="max", c=c, A=A, row_senses=senses, b=b, lo=lo, hi=hi)


def cvar_nondiff_objective(w, t: float, scenarios: ScenarioSet, alpha: float) -> float:
    """The piecewise-linear objective t + (1/alpha) * E[(-a @ w - t)+]."""
    a = check_alpha(alpha)
    w_arr = as_vector(w, "w")
    losses = -(scenarios.returns @ w_arr)
    hinge = np.maximum(losses - t, 0.0)
    return float(t + np.dot(scenarios.probs, hinge) / a)


def _weights_from(vec: np.ndarray) -> np.ndarray:
    """Clamp round-off negatives and renormalize onto the simplex."""
    w = np.clip(vec, 0.0, None)
    total = w.sum()
    if total <= 0.0:
        raise ValueError("degenerate weight recovery: nonpositive total")
    return w / total


def solve_cvar_portfolio(
    scenarios: ScenarioSet,
    alpha: float,
    method: str = "dual_lp",
    max_pivots: int = 200_000,
) -> PortfolioSolution:
    """Minimize the sample CVaR over the long-only simplex via LP.

    ``method`` selects the primal hinge LP ("primal_lp", weights read off
    directly) or its dual ("dual_lp", weights recovered from the duals of the
    n structural rows).  Either way the reported objective is re-checked
    against the sample CVaR at the returned weights.
    """
    a = check_alpha(alpha)
    n = scenarios.n_assets
    t_begin = time.perf_counter()
    if method == "primal_lp":
        n_scen = scenarios.n_scenarios
        approx_entries = (n_scen + 1) * (n + 3 * n_scen + 3)
        if approx_entries > _MAX_TABLEAU_ENTRIES:
            raise MemoryError(
                f"primal LP tableau would need ~{approx_entries:.2e} entries; "
                "use method='dual_lp' for large samples"
            )
        lp = build_primal_lp(scenarios, a)
        sol = _solved(lp, max_pivots)
        weights = _weights_from(sol.x[:n])
        objective = float(sol.objective)
    elif method == "dual_lp":
        lp = build_dual_lp(scenarios, a)
        sol = _solved(lp, max_pivots)
        weights = _weights_from(sol.duals[:n])
        objective = float(sol.objective)
    else:
        raise ValueError(f"unknown method {method!r}; expected 'primal_lp' or 'dual_lp'")
    wall_ms = (time.perf_counter() - t_begin) * 1e3

    portfolio = validate_portfolio(weights)
    check = cvar_sample(portfolio_loss(portfolio, scenarios), a)
    if abs(check - objective) > 1e-7 * max(1.0, abs(objective)):
        raise AssertionError(
            f"CVaR LP objective {objective!r} disagrees with the sample CVaR "
            f"{check!r} at the recovered weights"
        )
    return PortfolioSolution(
        portfolio=portfolio,
        objective=objective,
        alpha=a,
        method=f"cvar_{method}",
        iterations=sol.pivots,
        wall_ms=wall_ms,
    )


def _solved(lp: LinearProgram, max_pivots: int) -> LpSolution:
    sol = simplex_solve(lp, max_pivots=max_pivots)
    if sol.status != "optimal":
        raise RuntimeError(f"CVaR LP terminated with status {sol.status!r}")
    return sol
