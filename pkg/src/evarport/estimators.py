"""Scikit-learn style front-ends for the portfolio optimizers.

Both estimators are fit on an (n_observations, n_assets) matrix of scenario
return rates (optionally with per-scenario weights) and expose the optimal
long-only weights as ``weights_``.  ``predict`` maps scenario returns to
portfolio returns, so the estimators compose with pipelines and model
selection utilities via ``get_params`` / ``set_params``.
"""

from __future__ import annotations

from sklearn.base import BaseEstimator

from . import cvar as _cvar
from . import evar as _evar
from . import ipm as _ipm
from ._validation import check_returns_matrix
from .measures import cvar_sample, evar_sample
from .scenarios import build_scenario_set, portfolio_loss

__all__ = ["EvarPortfolio", "CvarPortfolio"]


class _PortfolioEstimator(BaseEstimator):
    def _scenarios(self, X, probs):
        return build_scenario_set(check_returns_matrix(X), probs)

    def predict(self, X):
        """Portfolio return per scenario row."""
        X = check_returns_matrix(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {X.shape[1]} assets, estimator was fit with {self.n_features_in_}"
            )
        return X @ self.weights_


class EvarPortfolio(_PortfolioEstimator):
    """Minimum entropic value-at-risk portfolio.

    Parameters
    ----------
    alpha : float, default=0.05
        Risk level (confidence is 1 - alpha).
    min_return : float or None, default=None
        Optional lower bound on the expected portfolio return; a phase-I
        stage finds a strictly feasible start when set.
    mu : float, default=5.0
        Gap reduction factor of the interior-point iteration.
    tol : float, default=1e-6
        Feasibility and surrogate-gap tolerance.
    max_iter : int, default=200

    Attributes
    ----------
    weights_ : ndarray of shape (n_assets,)
    risk_ : float
        Optimal EVaR of the portfolio loss.
    t_star_ : float
        Minimizing risk-dual variable.
    n_iter_ : int
    solution_ : PortfolioSolution
    """

    def __init__(self, alpha=0.05, min_return=None, mu=5.0, tol=1e-6, max_iter=200):
        self.alpha = alpha
        self.min_return = min_return
        self.mu = mu
        self.tol = tol
        self.max_iter = max_iter

    def fit(self, X, y=None, *, probs=None):
        scen = self._scenarios(X, probs)
        spec = _evar.EvarProblemSpec(scenarios=scen, alpha=self.alpha, min_return=self.min_return)
        params = _ipm.IpmParams(mu=self.mu, eps=self.tol, eps_feas=self.tol, max_iter=self.max_iter)
        sol = _evar.solve_evar_portfolio(spec, params)
        self.solution_ = sol
        self.weights_ = sol.portfolio.weights
        self.risk_ = sol.objective
        self.t_star_ = sol.t_star
        self.n_iter_ = sol.iterations
        self.n_features_in_ = scen.n_assets
        return self

    def score(self, X, y=None, *, probs=None):
        """Negative EVaR of the fitted portfolio's loss on new scenarios."""
        scen = self._scenarios(X, probs)
        return -evar_sample(portfolio_loss(self.weights_, scen), self.alpha).value


class CvarPortfolio(_PortfolioEstimator):
    """Minimum conditional value-at-risk portfolio via linear programming.

    ``method`` picks the scenario-sized primal hinge LP ("primal_lp") or the
    instrument-sized dual LP ("dual_lp", default).  See :class:`EvarPortfolio`
    for the shared attribute conventions; here ``n_iter_`` counts simplex
    pivots.
    """

    def __init__(self, alpha=0.05, method="dual_lp", max_pivots=200_000):
        self.alpha = alpha
        self.method = method
        self.max_pivots = max_pivots

    def fit(self, X, y=None, *, probs=None):
        scen = self._scenarios(X, probs)
        sol = _cvar.solve_cvar_portfolio(scen, self.alpha, method=self.method, max_pivots=self.max_pivots)
        self.solution_ = sol
        self.weights_ = sol.portfolio.weights
        self.risk_ = sol.objective
        self.n_iter_ = sol.iterations
        self.n_features_in_ = scen.n_assets
        return self

    def score(self, X, y=None, *, probs=None):
        """Negative CVaR of the fitted portfolio's loss on new scenarios."""
        scen = self._scenarios(X, probs)
        return -cvar_sample(portfolio_loss(self.weights_, scen), self.alpha)
