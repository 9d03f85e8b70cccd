"""Portfolio optimization with the entropic value-at-risk.

The decision vector is x = (w, t) with w the portfolio weights and t > 0 the
reparameterized dual variable of the risk measure.  The objective

    f0(w, t) = t * lse(-R w / t + log p) - t * log(alpha)

is jointly convex in (w, t) (it is the perspective of a log-sum-exp) and has
closed-form derivatives, so the whole program is solved by the primal-dual
interior-point method with a KKT system whose size depends only on the
number of instruments, never on the number of scenarios.

All exponentials are taken in max-shifted space; the shift cancels in every
ratio appearing in the gradient and Hessian.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from . import ipm
from ._validation import as_vector, check_alpha
from .measures import evar_sample
from .scenarios import Portfolio, ScenarioSet, portfolio_loss, validate_portfolio

__all__ = [
    "lse",
    "EvarProblemSpec",
    "PortfolioSolution",
    "evar_objective",
    "evar_gradient",
    "evar_hessian",
    "assemble_program",
    "solve_evar_portfolio",
    "evar_grid_oracle",
]


def lse(v) -> float:
    """Numerically stable log-sum-exp: max(v) + log(sum(exp(v - max(v))))."""
    arr = as_vector(v, "v")
    m = float(np.max(arr))
    return m + math.log(float(np.sum(np.exp(arr - m))))


@dataclass(frozen=True)
class EvarProblemSpec:
    """An EVaR portfolio instance: scenarios, risk level, optional floor on
    the expected portfolio return."""

    scenarios: ScenarioSet
    alpha: float = 0.05
    min_return: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "alpha", check_alpha(self.alpha))
        if self.min_return is not None:
            object.__setattr__(self, "min_return", float(self.min_return))

    @property
    def n_assets(self) -> int:
        return self.scenarios.n_assets


@dataclass(frozen=True)
class PortfolioSolution:
    """Optimal portfolio with solver diagnostics."""

    portfolio: Portfolio
    objective: float
    alpha: float
    method: str
    t_star: float | None = None
    iterations: int = 0
    r_dual: float = 0.0
    r_pri: float = 0.0
    eta_hat: float = 0.0
    wall_ms: float = 0.0
    trace: tuple = ()

    def to_json_dict(self) -> dict:
        out = {
            "weights": [float(w) for w in self.portfolio.weights],
            "alpha": self.alpha,
            "method": self.method,
            "objective": self.objective,
        }
        if self.method == "evar_pd":
            out.update({
                "t_star": self.t_star,
                "evar": self.objective,
                "iterations": self.iterations,
                "r_dual": self.r_dual,
                "r_pri": self.r_pri,
                "eta_hat": self.eta_hat,
            })
        out["wall_ms"] = self.wall_ms
        return out


class _EntropicObjective:
    """Shared workspace for the objective callbacks at a common point.

    One O(N n) pass builds the softmax weights s over the shifted exponent
    vector y = -R w / t + log p; the objective, gradient, and Hessian are all
    expressed through s and u = R w / t, so evaluating the three callbacks at
    the same point costs a single pass plus the O(N n^2) Hessian product.
    """

    def __init__(self, returns: np.ndarray, probs: np.ndarray, alpha: float):
        self.R = returns
        self.log_p = np.log(probs)
        self.log_alpha = math.log(alpha)
        self._key: bytes | None = None
        self._ws: dict | None = None

    def _workspace(self, x: np.ndarray) -> dict:
        key = x.tobytes()
        if key == self._key:
            return self._ws
        w = x[:-1]
        t = float(x[-1])
        if not t > 0.0:
            raise ValueError(f"t must stay positive, got {t!r}")
        u = (self.R @ w) / t
        y = -u + self.log_p
        y_max = float(np.max(y))
        ey = np.exp(y - y_max)                  # shifted exponentials
        S = float(np.sum(ey))
        s = ey / S                              # softmax(y); shift cancels
        su = float(np.dot(s, u))
        ws = {
            "w": w, "t": t, "u": u, "s": s, "su": su,
            "lse": y_max + math.log(S),
        }
        self._key, self._ws = key, ws
        return ws

    def f0(self, x: np.ndarray) -> float:
        ws = self._workspace(np.asarray(x, dtype=float))
        return ws["t"] * ws["lse"] - ws["t"] * self.log_alpha

    def grad(self, x: np.ndarray) -> np.ndarray:
        ws = self._workspace(np.asarray(x, dtype=float))
        g_w = -(self.R.T @ ws["s"])
        g_t = ws["lse"] + ws["su"] - self.log_alpha
        return np.concatenate([g_w, [g_t]])

    def hess(self, x: np.ndarray) -> np.ndarray:
        ws = self._workspace(np.asarray(x, dtype=float))
        s, u, t, su = ws["s"], ws["u"], ws["t"], ws["su"]
        n = self.R.shape[1]
        g = self.R.T @ s                        # softmax-weighted mean row
        sR = self.R * s[:, None]
        M = self.R.T @ sR
        M = 0.5 * (M + M.T)                     # BLAS products are not bitwise symmetric
        H = np.empty((n + 1, n + 1))
        H[:n, :n] = (M - np.outer(g, g)) / t
        cross = (-(self.R.T @ (s * u)) + g * su) / t
        H[:n, -1] = cross
        H[-1, :n] = cross
        H[-1, -1] = (float(np.dot(s, u * u)) - su * su) / t
        return H


def _objective_for(spec: EvarProblemSpec) -> _EntropicObjective:
    return _EntropicObjective(spec.scenarios.returns, spec.scenarios.probs, spec.alpha)


def _as_point(w, t: float) -> np.ndarray:
    w_arr = as_vector(w, "w")
    return np.concatenate([w_arr, [float(t)]])


def evar_objective(w, t: float, spec: EvarProblemSpec) -> float:
    """Objective value at (w, t); defined for any real w and t > 0."""
    return _objective_for(spec).f0(_as_point(w, t))


def evar_gradient(w, t: float, spec: EvarProblemSpec) -> np.ndarray:
    """Closed-form gradient of the objective, stacked as (d/dw, d/dt)."""
    return _objective_for(spec).grad(_as_point(w, t))


def evar_hessian(w, t: float, spec: EvarProblemSpec) -> np.ndarray:
    """Closed-form Hessian at (w, t): symmetric positive semidefinite.

    All four blocks are softmax covariances scaled by 1/t (the objective is
    positively homogeneous of degree one, so its Hessian annihilates the
    point (w, t) itself).
    """
    return _objective_for(spec).hess(_as_point(w, t))


def assemble_program(spec: EvarProblemSpec) -> ipm.ConvexProgram:
    """Standard-form program over x = (w, t).

    Inequalities: -w_i <= 0, optionally r_min - r^T w <= 0, and -t <= 0
    (last).  One equality row sum(w) = 1.  All constraints are affine, so the
    weighted constraint Hessian is zero and the KKT dimension is independent
    of the number of scenarios.
    """
    n = spec.n_assets
    obj = _objective_for(spec)
    rows = [np.hstack([-np.eye(n), np.zeros((n, 1))])]
    r_min = spec.min_return
    mean_r = spec.scenarios.mean_returns() if r_min is not None else None
    if r_min is not None:
        rows.append(np.hstack([-mean_r, [0.0]]).reshape(1, -1))
    rows.append(np.hstack([np.zeros(n), [-1.0]]).reshape(1, -1))
    Df = np.vstack(rows)
    m = Df.shape[0]

    def f(x):
        if r_min is None:
            return -x
        return np.concatenate([-x[:-1], [r_min - float(mean_r @ x[:-1])], [-x[-1]]])

    G = np.hstack([np.ones(n), [0.0]]).reshape(1, -1)
    return ipm.ConvexProgram(
        n_x=n + 1,
        m=m,
        f0=obj.f0,
        grad_f0=obj.grad,
        hess_f0=obj.hess,
        f=f,
        jac_f=lambda x: Df,
        G=G,
        h=np.array([1.0]),
        name="evar-portfolio",
    )


def _phase1_start(spec: EvarProblemSpec, params: ipm.IpmParams) -> np.ndarray:
    """Strictly feasible weights for the constrained problem via phase I.

    The feasibility stage works in w-space only (the risk variable t affects
    no constraint), relaxing every inequality by the auxiliary scalar.
    """
    n = spec.n_assets
    r = spec.scenarios.mean_returns()
    Df_w = np.vstack([-np.eye(n), -r.reshape(1, -1)])

    def f_w(w):
        return np.concatenate([-w, [spec.min_return - float(r @ w)]])

    result = ipm.phase1(
        f=f_w,
        jac_f=lambda w: Df_w,
        m=n + 1,
        n_x=n,
        x0=np.full(n, 1.0 / n),
        G=np.ones((1, n)),
        h=np.array([1.0]),
        params=params,
    )
    if not result.strictly_feasible:
        raise ipm.InfeasibleProblemError(
            f"no portfolio meets the minimum-return requirement "
            f"(feasibility optimum s_bar={result.s_bar:.3e})",
            s_bar=result.s_bar,
        )
    return result.x


def solve_evar_portfolio(
    spec: EvarProblemSpec,
    params: ipm.IpmParams | None = None,
    start: Portfolio | None = None,
) -> PortfolioSolution:
    """Minimize the EVaR of the portfolio loss over the long-only simplex.

    Without a minimum-return constraint the solve starts from uniform
    weights and t = 1; with one, a phase-I stage locates a strictly feasible
    start first (raising ``InfeasibleProblemError`` when none exists).  The
    returned weights are renormalized onto the simplex and the objective is
    cross-checked against the sample EVaR of the realized losses.
    """
    params = params or ipm.IpmParams()
    prog = assemble_program(spec)
    t_begin = time.perf_counter()
    if start is not None:
        w0 = start.weights if isinstance(start, Portfolio) else as_vector(start, "start")
        x0 = np.concatenate([w0, [1.0]])
        if not np.all(np.asarray(prog.f(x0)) < 0.0):
            raise ValueError("provided start is not strictly feasible for the constraints")
    elif spec.min_return is not None:
        w0 = _phase1_start(spec, params)
        x0 = np.concatenate([w0, [1.0]])
    else:
        x0 = np.concatenate([np.full(spec.n_assets, 1.0 / spec.n_assets), [1.0]])

    sol = ipm.solve(prog, x0, params=params)
    wall_ms = (time.perf_counter() - t_begin) * 1e3

    w_raw = np.clip(sol.x[:-1], 0.0, None)
    portfolio = validate_portfolio(w_raw / w_raw.sum())
    t_star = float(sol.x[-1])
    objective = evar_objective(portfolio.weights, t_star, spec)

    check = evar_sample(portfolio_loss(portfolio, spec.scenarios), spec.alpha)
    if abs(check.value - objective) > 1e-5 * max(1.0, abs(objective)):
        raise ipm.IpmError(
            f"solution failed the risk-measure cross-check: objective={objective!r} "
            f"vs sample EVaR={check.value!r}"
        )
    return PortfolioSolution(
        portfolio=portfolio,
        objective=objective,
        alpha=spec.alpha,
        method="evar_pd",
        t_star=t_star,
        iterations=sol.iterations,
        r_dual=sol.r_dual_norm,
        r_pri=sol.r_pri_norm,
        eta_hat=sol.eta_hat,
        wall_ms=wall_ms,
        trace=tuple(sol.trace),
    )


def _batch_evar_values(loss_rows: np.ndarray, probs: np.ndarray, alpha: float) -> np.ndarray:
    """Row-wise sample EVaR of a batch of loss vectors.

    Same mathematics as :func:`evarport.measures.evar_sample` (log-grid
    bracket plus golden-section over t, boundary regimes handled
    analytically), with every row minimized simultaneously.
    """
    G, _ = loss_rows.shape
    log_p = np.log(probs)
    x_max = loss_rows.max(axis=1)
    out = np.empty(G)
    if alpha == 1.0:
        return loss_rows @ probs
    p_at_max = np.where(loss_rows == x_max[:, None], probs, 0.0).sum(axis=1)
    boundary = p_at_max >= alpha
    out[boundary] = x_max[boundary]
    interior = ~boundary
    if not np.any(interior):
        return out
    rows = loss_rows[interior]
    spread = np.maximum(rows.max(axis=1) - rows.min(axis=1), 1.0)

    def f_sub(t):
        y = rows / t[:, None] + log_p
        m = y.max(axis=1)
        return t * (m + np.log(np.exp(y - m[:, None]).sum(axis=1))) - t * math.log(alpha)

    exps = np.linspace(-6.0, 4.0, 41)
    vals = np.stack([f_sub(spread * 10.0 ** e) for e in exps], axis=1)
    k = vals.argmin(axis=1)
    lo = spread * 10.0 ** exps[np.maximum(k - 1, 0)]
    hi = spread * 10.0 ** exps[np.minimum(k + 1, exps.size - 1)]

    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c = hi - invphi * (hi - lo)
    d = lo + invphi * (hi - lo)
    fc, fd = f_sub(c), f_sub(d)
    for _ in range(60):
        left = fc < fd                       # minimum bracketed in [lo, d]
        lo = np.where(left, lo, c)
        hi = np.where(left, d, hi)
        width = hi - lo
        probe = np.where(left, hi - invphi * width, lo + invphi * width)
        f_probe = f_sub(probe)
        c, d = np.where(left, probe, d), np.where(left, c, probe)
        fc, fd = np.where(left, f_probe, fd), np.where(left, fc, f_probe)
        if np.all(width <= 1e-7 * hi):
            break
    out[interior] = f_sub(0.5 * (lo + hi))
    return out


def evar_grid_oracle(scenarios: ScenarioSet, alpha: float, step: float = 1e-3) -> float:
    """Brute-force minimum EVaR over a weight grid (small n only).

    Enumerates simplex weight vectors at the given resolution and evaluates
    the exact 1-D sample EVaR at each; used as an independent check of the
    interior-point solve.  Supports up to three instruments.
    """
    n = scenarios.n_assets
    a = check_alpha(alpha)
    k = int(round(1.0 / step))
    if n == 1:
        weights = np.array([[1.0]])
    elif n == 2:
        w1 = np.arange(k + 1) / k
        weights = np.column_stack([w1, 1.0 - w1])
    elif n == 3:
        weights = np.array(
            [[i / k, j / k, 1.0 - (i + j) / k] for i in range(k + 1) for j in range(k + 1 - i)]
        )
    else:
        raise ValueError("grid oracle supports at most three instruments")
    losses = -(weights @ scenarios.returns.T)
    return float(_batch_evar_values(losses, scenarios.probs, a).min())
