"""Primal-dual interior-point solver for smooth convex programs.

Solves problems in the standard form

    minimize    f0(x)
    subject to  f_i(x) <= 0,  i = 1..m
                G x = h

given callbacks for the objective and constraint values and derivatives.
Each iteration linearizes the relaxed KKT conditions, eliminates the
multiplier block analytically, solves the reduced symmetric system in
(dx, dnu) densely, and backtracks on the residual norm.  The KKT dimension
is fixed by (n_x, m, p); any sample-size dependence of the problem lives
inside the callbacks.

The inequality multipliers stay strictly positive and the iterates strictly
feasible for the inequalities throughout; equality-infeasible starts are
allowed (the primal residual is driven to zero by the Newton steps).
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

__all__ = [
    "ConvexProgram",
    "IpmParams",
    "IpmState",
    "IpmSolution",
    "IpmError",
    "SingularKktError",
    "LineSearchError",
    "MaxIterationsError",
    "CallbackError",
    "InfeasibleProblemError",
    "residuals",
    "surrogate_gap",
    "newton_direction",
    "line_search",
    "solve",
    "phase1",
    "Phase1Result",
    "write_trace_csv",
]


class IpmError(RuntimeError):
    """Base class for solver failures."""


class SingularKktError(IpmError):
    """The reduced KKT system could not be solved reliably."""


class LineSearchError(IpmError):
    """Backtracking exhausted its step budget."""


class MaxIterationsError(IpmError):
    """Iteration limit reached before the stopping conditions held."""


class CallbackError(IpmError):
    """A problem callback returned non-finite values."""


class InfeasibleProblemError(IpmError):
    """Phase I certified that no strictly feasible point exists."""

    def __init__(self, message: str, s_bar: float):
        super().__init__(message)
        self.s_bar = s_bar


@dataclass
class ConvexProgram:
    """Callback bundle describing one standard-form convex program.

    ``hess_ineq(x, lam)`` must return ``sum_i lam_i * hess(f_i)(x)``; it
    defaults to zero, which is exact for affine inequality constraints.
    ``G``/``h`` may be omitted for problems without equality constraints.
    """

    n_x: int
    m: int
    f0: Callable[[np.ndarray], float]
    grad_f0: Callable[[np.ndarray], np.ndarray]
    hess_f0: Callable[[np.ndarray], np.ndarray]
    f: Callable[[np.ndarray], np.ndarray]
    jac_f: Callable[[np.ndarray], np.ndarray]
    G: np.ndarray | None = None
    h: np.ndarray | None = None
    hess_ineq: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None
    name: str = ""

    def __post_init__(self):
        if self.G is None:
            self.G = np.zeros((0, self.n_x))
            self.h = np.zeros(0)
        self.G = np.asarray(self.G, dtype=np.float64).reshape(-1, self.n_x)
        self.h = np.asarray(self.h, dtype=np.float64).reshape(-1)
        if self.G.shape[0] != self.h.shape[0]:
            raise ValueError("G and h have inconsistent row counts")
        p = self.G.shape[0]
        if p > 0:
            if p >= self.n_x:
                raise ValueError(f"equality system has {p} rows for {self.n_x} variables")
            if np.linalg.matrix_rank(self.G) != p:
                raise ValueError("equality constraint matrix G is rank deficient")

    @property
    def p(self) -> int:
        return self.G.shape[0]


@dataclass
class IpmParams:
    """Algorithm parameters: gap reduction mu, tolerances, backtracking."""

    mu: float = 5.0
    eps: float = 1e-6
    eps_feas: float = 1e-6
    beta: float = 0.5
    delta: float = 0.05
    max_iter: int = 200
    max_linesearch_steps: int = 60

    def __post_init__(self):
        if not self.mu > 1.0:
            raise ValueError("mu must exceed 1")
        if not (0.0 < self.beta < 1.0):
            raise ValueError("beta must lie in (0, 1)")
        if not (0.0 < self.delta < 1.0):
            raise ValueError("delta must lie in (0, 1)")
        if self.eps <= 0 or self.eps_feas <= 0:
            raise ValueError("tolerances must be positive")


@dataclass
class IpmState:
    """One primal-dual iterate with its residual blocks at a given z."""

    x: np.ndarray
    lam: np.ndarray
    nu: np.ndarray
    r_dual: np.ndarray
    r_cent: np.ndarray
    r_pri: np.ndarray
    eta_hat: float

    @property
    def residual_norm(self) -> float:
        return float(np.sqrt(
            np.dot(self.r_dual, self.r_dual)
            + np.dot(self.r_cent, self.r_cent)
            + np.dot(self.r_pri, self.r_pri)
        ))


def _check_finite(arr: np.ndarray, what: str) -> np.ndarray:
    if not np.all(np.isfinite(arr)):
        raise CallbackError(f"{what} returned non-finite values")
    return arr


def surrogate_gap(f_vals: np.ndarray, lam: np.ndarray) -> float:
    """Surrogate duality gap -f(x)^T lam (the true gap at feasible points)."""
    return float(-np.dot(np.asarray(f_vals, dtype=float), np.asarray(lam, dtype=float)))


def residuals(prog: ConvexProgram, x, lam, nu, z: float):
    """Dual, centrality, and primal residual blocks of the relaxed KKT map."""
    f_val = _check_finite(np.asarray(prog.f(x), dtype=float), "f")
    Df = _check_finite(np.asarray(prog.jac_f(x), dtype=float), "jac_f")
    g0 = _check_finite(np.asarray(prog.grad_f0(x), dtype=float), "grad_f0")
    r_dual = g0 + Df.T @ lam + prog.G.T @ nu
    r_cent = -lam * f_val - (1.0 / z) * np.ones(prog.m)
    r_pri = prog.G @ x - prog.h
    return r_dual, r_cent, r_pri


def evaluate_state(prog: ConvexProgram, x, lam, nu, z: float) -> IpmState:
    r_dual, r_cent, r_pri = residuals(prog, x, lam, nu, z)
    eta = surrogate_gap(prog.f(x), lam) if prog.m > 0 else 0.0
    return IpmState(x=x, lam=lam, nu=nu, r_dual=r_dual, r_cent=r_cent, r_pri=r_pri, eta_hat=eta)


def kkt_block_matrix(prog: ConvexProgram, x, lam) -> np.ndarray:
    """Assemble the full (n_x + m + p) Newton block matrix (for verification)."""
    n, m, p = prog.n_x, prog.m, prog.p
    f_val = np.asarray(prog.f(x), dtype=float)
    Df = np.asarray(prog.jac_f(x), dtype=float)
    H = np.asarray(prog.hess_f0(x), dtype=float).copy()
    if prog.hess_ineq is not None:
        H = H + np.asarray(prog.hess_ineq(x, lam), dtype=float)
    top = np.hstack([H, Df.T, prog.G.T])
    mid = np.hstack([-(lam[:, None] * Df), -np.diag(f_val), np.zeros((m, p))])
    bot = np.hstack([prog.G, np.zeros((p, m)), np.zeros((p, p))])
    return np.vstack([top, mid, bot])


#: Mixed (absolute + relative) tolerance for the post-solve consistency check
#: of the Newton direction against the full block system.
_DIRECTION_CHECK_TOL = 1e-8


def newton_direction(prog: ConvexProgram, x, lam, nu, z: float):
    """Primal-dual search direction from the linearized relaxed KKT system.

    The multiplier block is eliminated analytically and the reduced
    symmetric system in (dx, dnu) is solved densely; the back-substituted
    full solution is verified against the block equations.
    """
    n, m, p = prog.n_x, prog.m, prog.p
    r_dual, r_cent, r_pri = residuals(prog, x, lam, nu, z)
    f_val = np.asarray(prog.f(x), dtype=float)
    Df = np.asarray(prog.jac_f(x), dtype=float)
    H = np.asarray(prog.hess_f0(x), dtype=float).copy()
    _check_finite(H, "hess_f0")
    if prog.hess_ineq is not None:
        H = H + np.asarray(prog.hess_ineq(x, lam), dtype=float)

    # dlam = diag(1/f) (r_cent - lam * (Df @ dx)); substituting into the dual
    # row leaves a symmetric system in (dx, dnu).
    scale = lam / f_val                      # negative at interior iterates
    H_red = H - Df.T @ (scale[:, None] * Df)
    rhs_x = -(r_dual + Df.T @ (r_cent / f_val))

    kkt = np.zeros((n + p, n + p))
    kkt[:n, :n] = H_red
    kkt[:n, n:] = prog.G.T
    kkt[n:, :n] = prog.G
    rhs = np.concatenate([rhs_x, -r_pri])
    try:
        sol = np.linalg.solve(kkt, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularKktError(f"reduced KKT system is singular ({prog.name or 'program'})") from exc
    dx = sol[:n]
    dnu = sol[n:]
    dlam = (r_cent - lam * (Df @ dx)) / f_val

    # Verify the full block equations; backward error should be tiny.
    big = kkt_block_matrix(prog, x, lam)
    r_full = np.concatenate([r_dual, r_cent, r_pri])
    dy = np.concatenate([dx, dlam, dnu])
    err = np.linalg.norm(big @ dy + r_full)
    if not np.isfinite(err) or err > _DIRECTION_CHECK_TOL * (1.0 + np.linalg.norm(r_full)):
        raise SingularKktError(
            f"Newton direction failed the block-system check (residual {err:.3e})"
        )
    return dx, dlam, dnu


def max_multiplier_step(lam: np.ndarray, dlam: np.ndarray) -> float:
    """Largest step in [0, 1] keeping lam + gamma*dlam nonnegative."""
    neg = dlam < 0.0
    if not np.any(neg):
        return 1.0
    return float(min(1.0, np.min(-lam[neg] / dlam[neg])))


def line_search(prog: ConvexProgram, state: IpmState, direction, z: float, params: IpmParams):
    """Backtrack from 0.99 * gamma_max until strict feasibility and decrease.

    Feasibility (f(x+) < 0) is restored first so the residual map is only
    evaluated inside the objective's domain; the residual-norm decrease
    condition then uses the same z as the current state.
    """
    dx, dlam, dnu = direction
    gamma = 0.99 * max_multiplier_step(state.lam, dlam)
    if gamma <= 0.0:
        raise LineSearchError("no admissible step: multiplier block at its boundary")
    r_norm0 = state.residual_norm
    steps = 0
    # Phase 1: strict inequality feasibility of the trial primal point.
    while True:
        if steps >= params.max_linesearch_steps:
            raise LineSearchError("line search could not restore strict feasibility")
        trial_f = np.asarray(prog.f(state.x + gamma * dx), dtype=float)
        if np.all(np.isfinite(trial_f)) and np.all(trial_f < 0.0):
            break
        gamma *= params.beta
        steps += 1
    # Phase 2: sufficient decrease of the residual norm.
    while True:
        if steps >= params.max_linesearch_steps:
            raise LineSearchError("line search could not achieve a residual decrease")
        x_new = state.x + gamma * dx
        lam_new = state.lam + gamma * dlam
        nu_new = state.nu + gamma * dnu
        candidate = evaluate_state(prog, x_new, lam_new, nu_new, z)
        if candidate.residual_norm <= (1.0 - params.delta * gamma) * r_norm0:
            break
        gamma *= params.beta
        steps += 1
    assert np.all(candidate.lam > 0.0)
    assert np.all(np.asarray(prog.f(candidate.x)) < 0.0)
    assert candidate.residual_norm <= (1.0 - params.delta * gamma) * r_norm0
    return gamma, candidate


def write_trace_csv(trace: list, path_or_file) -> None:
    """Dump an iteration trace as ``iter,r_dual,r_pri,eta_hat,gamma,z``."""
    if isinstance(path_or_file, (str, bytes)):
        with open(path_or_file, "w", encoding="utf-8", newline="") as fh:
            write_trace_csv(trace, fh)
            return
    path_or_file.write("iter,r_dual,r_pri,eta_hat,gamma,z\n")
    for rec in trace:
        path_or_file.write(
            f"{rec['iter']},{rec['r_dual']:.17g},{rec['r_pri']:.17g},"
            f"{rec['eta_hat']:.17g},{rec['gamma']:.17g},{rec['z']:.17g}\n"
        )


@dataclass
class IpmSolution:
    """Converged iterate with diagnostics and the per-iteration trace."""

    x: np.ndarray
    lam: np.ndarray
    nu: np.ndarray
    iterations: int
    r_dual_norm: float
    r_pri_norm: float
    eta_hat: float
    trace: list = field(default_factory=list)
    wall_ms: float = 0.0

    def write_trace_csv(self, path_or_file) -> None:
        write_trace_csv(self.trace, path_or_file)


def default_multipliers(prog: ConvexProgram, x0: np.ndarray) -> np.ndarray:
    """Uniform multipliers scaled so the initial surrogate gap equals one."""
    if prog.m == 0:
        return np.zeros(0)
    f0_val = np.asarray(prog.f(x0), dtype=float)
    return np.full(prog.m, 1.0 / float(-(f0_val.sum())))


def solve(
    prog: ConvexProgram,
    x0,
    lam0=None,
    nu0=None,
    params: IpmParams | None = None,
) -> IpmSolution:
    """Run the primal-dual iteration from a strictly feasible start.

    Stops when ``|r_pri| <= eps_feas``, ``|r_dual| <= eps_feas`` and the
    surrogate gap is at most ``eps``; raises a distinct error on iteration
    exhaustion, line-search failure, or a singular KKT system.
    """
    params = params or IpmParams()
    x = np.asarray(x0, dtype=float).copy()
    if x.shape != (prog.n_x,):
        raise ValueError(f"x0 has shape {x.shape}, expected ({prog.n_x},)")
    f_val = np.asarray(prog.f(x), dtype=float)
    if f_val.shape != (prog.m,):
        raise ValueError(f"f(x) returned shape {f_val.shape}, expected ({prog.m},)")
    if not np.all(f_val < 0.0):
        raise ValueError("starting point is not strictly feasible for the inequalities")
    lam = default_multipliers(prog, x) if lam0 is None else np.asarray(lam0, dtype=float).copy()
    if np.any(lam <= 0.0) and prog.m > 0:
        raise ValueError("initial multipliers must be strictly positive")
    nu = np.zeros(prog.p) if nu0 is None else np.asarray(nu0, dtype=float).copy()

    t_start = time.perf_counter()
    trace: list[dict] = []
    for it in range(params.max_iter):
        eta = surrogate_gap(prog.f(x), lam) if prog.m > 0 else 0.0
        z = params.mu * prog.m / eta if prog.m > 0 else np.inf
        state = evaluate_state(prog, x, lam, nu, z)
        r_dual_norm = float(np.linalg.norm(state.r_dual))
        r_pri_norm = float(np.linalg.norm(state.r_pri))
        if r_dual_norm <= params.eps_feas and r_pri_norm <= params.eps_feas and eta <= params.eps:
            wall = (time.perf_counter() - t_start) * 1e3
            return IpmSolution(
                x=x, lam=lam, nu=nu, iterations=it,
                r_dual_norm=r_dual_norm, r_pri_norm=r_pri_norm, eta_hat=eta,
                trace=trace, wall_ms=wall,
            )
        direction = newton_direction(prog, x, lam, nu, z)
        gamma, state = line_search(prog, state, direction, z, params)
        x, lam, nu = state.x, state.lam, state.nu
        assert prog.m == 0 or np.all(lam > 0.0)
        trace.append({
            "iter": it,
            "r_dual": float(np.linalg.norm(state.r_dual)),
            "r_pri": float(np.linalg.norm(state.r_pri)),
            "eta_hat": state.eta_hat,
            "gamma": gamma,
            "z": z,
        })
    raise MaxIterationsError(
        f"no convergence within {params.max_iter} iterations "
        f"(eta_hat={surrogate_gap(prog.f(x), lam) if prog.m else 0.0:.3e})"
    )


# ---------------------------------------------------------------------------
# Phase I: locate a strictly feasible point (or certify there is none)
# ---------------------------------------------------------------------------


@dataclass
class Phase1Result:
    """Outcome of the feasibility stage.

    ``strictly_feasible`` is True when the auxiliary optimum s_bar is
    negative, in which case ``x`` strictly satisfies every inequality.
    A nonnegative s_bar within the solver tolerance of zero is reported as
    infeasible without any strict claim (see ``s_bar``).
    """

    strictly_feasible: bool
    x: np.ndarray
    s_bar: float
    solution: IpmSolution


def phase1(
    f: Callable[[np.ndarray], np.ndarray],
    jac_f: Callable[[np.ndarray], np.ndarray],
    m: int,
    n_x: int,
    x0,
    G=None,
    h=None,
    params: IpmParams | None = None,
    hess_ineq: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None,
) -> Phase1Result:
    """Minimize s subject to f_i(x) <= s and Gx = h from an equality-feasible x0.

    The augmented variable vector is (x, s); the start s0 exceeds
    max_i f_i(x0) so the auxiliary program is strictly feasible by
    construction.
    """
    params = params or IpmParams()
    x0 = np.asarray(x0, dtype=float)
    f_at_x0 = np.asarray(f(x0), dtype=float)
    s0 = float(np.max(f_at_x0)) + 1.0

    def f_aug(xs):
        return np.asarray(f(xs[:-1]), dtype=float) - xs[-1]

    def jac_aug(xs):
        J = np.asarray(jac_f(xs[:-1]), dtype=float)
        return np.hstack([J, -np.ones((m, 1))])

    def hess_aug(xs, lam):
        out = np.zeros((n_x + 1, n_x + 1))
        if hess_ineq is not None:
            out[:n_x, :n_x] = np.asarray(hess_ineq(xs[:-1], lam), dtype=float)
        return out

    e_s = np.zeros(n_x + 1)
    e_s[-1] = 1.0
    G_aug = None
    h_aug = None
    if G is not None and np.asarray(G).size:
        G_arr = np.asarray(G, dtype=float).reshape(-1, n_x)
        G_aug = np.hstack([G_arr, np.zeros((G_arr.shape[0], 1))])
        h_aug = np.asarray(h, dtype=float).reshape(-1)

    prog = ConvexProgram(
        n_x=n_x + 1,
        m=m,
        f0=lambda xs: float(xs[-1]),
        grad_f0=lambda xs: e_s,
        hess_f0=lambda xs: np.zeros((n_x + 1, n_x + 1)),
        f=f_aug,
        jac_f=jac_aug,
        G=G_aug,
        h=h_aug,
        hess_ineq=hess_aug,
        name="phase-1",
    )
    sol = solve(prog, np.concatenate([x0, [s0]]), params=params)
    x_found = sol.x[:-1]
    s_bar = float(sol.x[-1])
    strictly = s_bar < 0.0 and bool(np.all(np.asarray(f(x_found), dtype=float) < 0.0))
    return Phase1Result(strictly_feasible=strictly, x=x_found, s_bar=s_bar, solution=sol)
