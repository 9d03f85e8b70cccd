"""Bounded-variable dense tableau simplex.

Solves LPs of the form

    min/max  c @ x
    s.t.     A x (<= | = | >=) b        (row senses per row)
             lo <= x <= hi              (entries may be -inf / +inf)

The problem is brought to the canonical form ``min c x, A x = b,
0 <= x <= u`` (free variables split, finite lower bounds shifted, rows
slacked), then a two-phase primal simplex with implicit upper-bound
handling runs on a dense tableau.  Dantzig pricing switches to Bland's rule
after a run of degenerate pivots, so the iteration cannot cycle.  The final
basic solution is recomputed exactly from the basis columns and verified
against the raw data (feasibility and reduced-cost optimality) before it is
returned.

Deliberately dense and tableau-based: target sizes are desk scale and the
priority is a solver whose every state can be checked directly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "LinearProgram",
    "LpSolution",
    "LpError",
    "PivotLimitError",
    "simplex_solve",
    "write_lp_text",
]

_PIVOT_TOL = 1e-9
_COST_TOL = 1e-9
_FEAS_TOL = 1e-8
_DEGEN_STALL_LIMIT = 50


class LpError(RuntimeError):
    """Simplex failure unrelated to problem status (numerical or limits)."""


class PivotLimitError(LpError):
    """The pivot budget was exhausted."""


@dataclass
class LinearProgram:
    """Dense LP data with row senses and per-variable bounds."""

    sense: str                # "min" or "max"
    c: np.ndarray
    A: np.ndarray
    row_senses: list[str]     # "<=", "=", ">=" per row
    b: np.ndarray
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=np.float64).reshape(-1)
        self.A = np.asarray(self.A, dtype=np.float64)
        self.b = np.asarray(self.b, dtype=np.float64).reshape(-1)
        self.lo = np.asarray(self.lo, dtype=np.float64).reshape(-1)
        self.hi = np.asarray(self.hi, dtype=np.float64).reshape(-1)
        if self.sense not in ("min", "max"):
            raise ValueError(f"sense must be 'min' or 'max', got {self.sense!r}")
        m, n = self.A.shape
        if self.c.shape[0] != n or self.lo.shape[0] != n or self.hi.shape[0] != n:
            raise ValueError("objective/bounds length does not match the column count")
        if self.b.shape[0] != m or len(self.row_senses) != m:
            raise ValueError("rhs/senses length does not match the row count")
        if any(s not in ("<=", "=", ">=") for s in self.row_senses):
            raise ValueError("row senses must be one of <=, =, >=")
        for arr, what in ((self.c, "c"), (self.A, "A"), (self.b, "b")):
            if np.any(np.isnan(arr)):
                raise ValueError(f"{what} contains NaN")
        if np.any(self.lo > self.hi):
            raise ValueError("some variable has lo > hi")

    @property
    def n_vars(self) -> int:
        return self.A.shape[1]

    @property
    def n_rows(self) -> int:
        return self.A.shape[0]


@dataclass
class LpSolution:
    """Verified LP outcome.

    For ``status == "optimal"`` the solution carries the primal point, the
    objective in the problem's own sense, row duals in the problem's own
    sign convention, the basis column identifiers (canonical-space), and the
    pivot count.
    """

    status: str               # "optimal" | "infeasible" | "unbounded"
    x: np.ndarray | None = None
    objective: float | None = None
    duals: np.ndarray | None = None
    basis: tuple = ()
    pivots: int = 0
    phase1_objective: float = 0.0


@dataclass
class _Canonical:
    """min c x, A x = b, 0 <= x <= u, plus bookkeeping to map back."""

    A: np.ndarray
    b: np.ndarray
    c: np.ndarray
    u: np.ndarray
    n_struct: int             # structural + slack columns (artificials follow)
    obj_offset: float
    var_map: list             # per original var: ("shift", col, lo) | ("mirror", col, hi) | ("split", cp, cm)
    row_sign: np.ndarray
    max_sense: bool
    slack_basis: list = None  # per row: slack column usable as initial basic, or -1


def _canonicalize(lp: LinearProgram) -> _Canonical:
    m, n = lp.n_rows, lp.n_vars
    max_sense = lp.sense == "max"
    c_in = -lp.c if max_sense else lp.c

    cols: list[np.ndarray] = []
    costs: list[float] = []
    ubs: list[float] = []
    var_map: list = []
    b = lp.b.astype(np.float64).copy()
    offset = 0.0

    for j in range(n):
        a = lp.A[:, j]
        lo, hi = lp.lo[j], lp.hi[j]
        if np.isfinite(lo):
            # x = lo + x', 0 <= x' <= hi - lo
            b -= a * lo
            offset += c_in[j] * lo
            cols.append(a.copy())
            costs.append(float(c_in[j]))
            ubs.append(float(hi - lo) if np.isfinite(hi) else np.inf)
            var_map.append(("shift", len(cols) - 1, float(lo)))
        elif np.isfinite(hi):
            # x = hi - x', x' >= 0
            b -= a * hi
            offset += c_in[j] * hi
            cols.append(-a)
            costs.append(float(-c_in[j]))
            ubs.append(np.inf)
            var_map.append(("mirror", len(cols) - 1, float(hi)))
        else:
            cols.append(a.copy())
            costs.append(float(c_in[j]))
            ubs.append(np.inf)
            cols.append(-a)
            costs.append(float(-c_in[j]))
            ubs.append(np.inf)
            var_map.append(("split", len(cols) - 2, len(cols) - 1))

    slack_col = [-1] * m
    for i, s in enumerate(lp.row_senses):
        if s == "=":
            continue
        e = np.zeros(m)
        e[i] = 1.0 if s == "<=" else -1.0
        cols.append(e)
        costs.append(0.0)
        ubs.append(np.inf)
        slack_col[i] = len(cols) - 1

    A_can = np.column_stack(cols)
    row_sign = np.ones(m)
    neg = b < 0
    row_sign[neg] = -1.0
    A_can[neg, :] *= -1.0
    b[neg] *= -1.0

    # A slack whose post-normalization coefficient is +1 can seed the basis
    # for its row; other rows start from an artificial.
    slack_basis = [
        j if j >= 0 and A_can[i, j] > 0.5 else -1
        for i, j in enumerate(slack_col)
    ]

    n_struct = A_can.shape[1]
    A_can = np.hstack([A_can, np.eye(m)])          # artificial columns
    c_can = np.concatenate([np.array(costs), np.zeros(m)])
    u_can = np.concatenate([np.array(ubs), np.full(m, np.inf)])
    return _Canonical(
        A=A_can, b=b, c=c_can, u=u_can, n_struct=n_struct,
        obj_offset=offset, var_map=var_map, row_sign=row_sign, max_sense=max_sense,
        slack_basis=slack_basis,
    )


class _Tableau:
    """Mutable simplex state: dense B^{-1}A, basic values, bound flags."""

    def __init__(self, can: _Canonical):
        self.can = can
        self.m, self.n_all = can.A.shape
        self.T = can.A.copy()
        self.xB = can.b.copy()
        self.basis = [
            sb if sb >= 0 else can.n_struct + i
            for i, sb in enumerate(can.slack_basis)
        ]
        self.at_upper = np.zeros(self.n_all, dtype=bool)
        self.in_basis = np.zeros(self.n_all, dtype=bool)
        self.in_basis[self.basis] = True
        self.pivots = 0
        self.bland = False
        self._stall = 0

    def reduced_costs(self, costs: np.ndarray) -> np.ndarray:
        return costs - costs[self.basis] @ self.T

    def _choose_entering(self, d: np.ndarray, allowed: np.ndarray) -> int | None:
        lower_ok = allowed & ~self.in_basis & ~self.at_upper & (d < -_COST_TOL)
        upper_ok = allowed & ~self.in_basis & self.at_upper & (d > _COST_TOL)
        cand = np.flatnonzero(lower_ok | upper_ok)
        if cand.size == 0:
            return None
        if self.bland:
            return int(cand[0])
        return int(cand[np.argmax(np.abs(d[cand]))])

    def _ratio_test(self, q: int):
        """Return (theta, leaving_row, leaves_at_upper) for entering column q."""
        direction = -1.0 if self.at_upper[q] else 1.0
        eff = direction * self.T[:, q]
        theta = self.can.u[q]          # full traverse to the opposite bound
        row = -1
        leaves_upper = False
        uB = self.can.u[self.basis]
        with np.errstate(divide="ignore", invalid="ignore"):
            drop = np.where(eff > _PIVOT_TOL, self.xB / eff, np.inf)
            rise = np.where((eff < -_PIVOT_TOL) & np.isfinite(uB), (uB - self.xB) / (-eff), np.inf)
        # Tiny negative basic values from tableau drift must not produce
        # negative steps; treat them as degenerate zeros.
        drop = np.maximum(drop, 0.0)
        rise = np.maximum(rise, 0.0)
        per_row = np.minimum(drop, rise)
        best = float(per_row.min()) if per_row.size else np.inf
        if best < theta - 1e-12:
            ties = np.flatnonzero(per_row <= best + 1e-12)
            if self.bland:
                basis_arr = np.asarray(self.basis)
                row = int(ties[np.argmin(basis_arr[ties])])
            else:
                row = int(ties[np.argmax(np.abs(eff[ties]))])
            theta = float(per_row[row])
            leaves_upper = rise[row] < drop[row]
        return theta, row, leaves_upper, direction

    def _pivot(self, row: int, q: int, leaves_upper: bool) -> None:
        """Exchange basis[row] for column q via row operations on the tableau."""
        leaving = self.basis[row]
        piv = self.T[row, q]
        self.T[row, :] /= piv
        col = self.T[:, q].copy()
        col[row] = 0.0
        self.T -= np.outer(col, self.T[row, :])
        self.in_basis[leaving] = False
        self.at_upper[leaving] = leaves_upper
        self.in_basis[q] = True
        self.at_upper[q] = False
        self.basis[row] = q

    def force_pivot(self, row: int, q: int) -> None:
        """Degenerate pivot bringing nonbasic q (at lower, value 0) into row."""
        self.pivots += 1
        self._pivot(row, q, leaves_upper=False)
        self.xB[row] = 0.0

    def step(self, q: int) -> bool:
        """One pivot (basis change or bound flip); False when unbounded."""
        theta, row, leaves_upper, direction = self._ratio_test(q)
        if not np.isfinite(theta):
            return False
        if theta > 1e-12:
            # Strict progress: drop back to Dantzig pricing.  Any infinite
            # loop would eventually consist of degenerate pivots only, which
            # re-engage Bland's rule permanently, so termination holds.
            self._stall = 0
            self.bland = False
        else:
            self._stall += 1
            if self._stall >= _DEGEN_STALL_LIMIT:
                self.bland = True
        self.pivots += 1
        if row < 0:
            # Bound flip: the entering variable traverses to its other bound.
            self.xB = self.xB - direction * theta * self.T[:, q]
            self.at_upper[q] = ~self.at_upper[q]
            return True
        self.xB = self.xB - direction * theta * self.T[:, q]
        self.xB[row] = theta if direction > 0 else self.can.u[q] - theta
        self._pivot(row, q, leaves_upper)
        return True


def _run_phase(tab: _Tableau, costs: np.ndarray, allowed: np.ndarray, max_pivots: int) -> str:
    d = tab.reduced_costs(costs)
    refreshed_at = tab.pivots
    while True:
        q = tab._choose_entering(d, allowed)
        if q is None:
            return "optimal"
        if tab.pivots >= max_pivots:
            raise PivotLimitError(f"pivot limit of {max_pivots} exceeded")
        row_before = tab.basis.copy()
        if not tab.step(q):
            return "unbounded"
        if tab.basis != row_before:
            r = next(i for i in range(tab.m) if tab.basis[i] != row_before[i])
            d = d - d[q] * tab.T[r, :]
            d[tab.basis[r]] = 0.0
        if tab.pivots - refreshed_at >= 100:
            d = tab.reduced_costs(costs)
            refreshed_at = tab.pivots


def simplex_solve(lp: LinearProgram, max_pivots: int = 200_000) -> LpSolution:
    """Two-phase bounded-variable simplex with post-solve verification."""
    can = _canonicalize(lp)
    tab = _Tableau(can)
    m = tab.m

    # Phase 1: minimize the artificial sum from the all-artificial basis.
    c1 = np.zeros(tab.n_all)
    c1[can.n_struct:] = 1.0
    allowed1 = np.ones(tab.n_all, dtype=bool)
    allowed1[can.n_struct:] = False        # artificials never re-enter
    status = _run_phase(tab, c1, allowed1, max_pivots)
    if status == "unbounded":
        raise LpError("phase 1 reported an unbounded direction (numerical failure)")
    phase1_obj = float(c1[tab.basis] @ tab.xB)
    scale = 1.0 + float(np.max(np.abs(can.b))) if can.b.size else 1.0
    if phase1_obj > _FEAS_TOL * scale:
        return LpSolution(status="infeasible", pivots=tab.pivots, phase1_objective=phase1_obj)

    # Kick basic artificials out where the row has structural support, then
    # clamp every artificial's upper bound to zero: any phase-2 pivot that
    # would re-inflate one is turned into a degenerate basis exchange by the
    # ratio test.  Rows without structural support are redundant and their
    # artificial stays frozen at zero.
    for r in range(m):
        if tab.basis[r] >= can.n_struct:
            support = [
                int(j)
                for j in np.flatnonzero(np.abs(tab.T[r, : can.n_struct]) > 1e-7)
                if not tab.in_basis[j] and not tab.at_upper[j]
            ]
            if support:
                tab.force_pivot(r, support[0])
    can.u[can.n_struct :] = 0.0

    # Phase 2 on the true costs.
    allowed2 = allowed1
    status = _run_phase(tab, can.c, allowed2, max_pivots)
    if status == "unbounded":
        return LpSolution(status="unbounded", pivots=tab.pivots, phase1_objective=phase1_obj)

    # Recompute the basic values exactly from the basis columns (the tableau
    # path may carry drift); then verify against the raw canonical data.
    basis = list(tab.basis)
    B = can.A[:, basis]
    upper_cols = np.flatnonzero(tab.at_upper & ~tab.in_basis & np.isfinite(can.u))
    rhs = can.b.copy()
    if upper_cols.size:
        rhs = rhs - can.A[:, upper_cols] @ can.u[upper_cols]
    try:
        xB_exact = np.linalg.solve(B, rhs)
        y = np.linalg.solve(B.T, can.c[basis])
    except np.linalg.LinAlgError as exc:
        raise LpError("final basis matrix is singular") from exc

    x_can = np.zeros(tab.n_all)
    x_can[upper_cols] = can.u[upper_cols]
    x_can[basis] = xB_exact
    _verify_canonical(can, x_can, y, tab)

    # Map back to original variables, duals, and objective sense.
    x = np.empty(lp.n_vars)
    for j, entry in enumerate(can.var_map):
        kind = entry[0]
        if kind == "shift":
            x[j] = x_can[entry[1]] + entry[2]
        elif kind == "mirror":
            x[j] = entry[2] - x_can[entry[1]]
        else:
            x[j] = x_can[entry[1]] - x_can[entry[2]]
    duals = y * can.row_sign
    objective = float(lp.c @ x)
    if can.max_sense:
        duals = -duals
    return LpSolution(
        status="optimal",
        x=x,
        objective=objective,
        duals=duals,
        basis=tuple(sorted(basis)),
        pivots=tab.pivots,
        phase1_objective=phase1_obj,
    )


def _verify_canonical(can: _Canonical, x: np.ndarray, y: np.ndarray, tab: _Tableau) -> None:
    """Feasibility and reduced-cost optimality from the raw canonical data."""
    scale_b = 1.0 + (float(np.max(np.abs(can.b))) if can.b.size else 0.0)
    if np.max(np.abs(x[can.n_struct :]), initial=0.0) > _FEAS_TOL * scale_b:
        raise LpError("an artificial variable is nonzero in the final solution")
    resid = can.A @ x - can.b
    if np.max(np.abs(resid), initial=0.0) > _FEAS_TOL * scale_b:
        raise LpError(f"solution failed the feasibility re-check (|Ax-b| = {np.max(np.abs(resid)):.3e})")
    if np.min(x, initial=0.0) < -_FEAS_TOL:
        raise LpError("solution violates a lower bound")
    over = x - can.u
    if np.max(over[np.isfinite(can.u)], initial=0.0) > _FEAS_TOL:
        raise LpError("solution violates an upper bound")
    scale_c = 1.0 + float(np.max(np.abs(can.c)))
    d = can.c - y @ can.A
    tol = _FEAS_TOL * scale_c * 10.0
    at_upper = tab.at_upper & ~tab.in_basis
    for j in range(can.A.shape[1]):
        if j >= can.n_struct and not tab.in_basis[j]:
            continue                      # nonbasic artificials carry no certificate
        if tab.in_basis[j]:
            ok = abs(d[j]) <= tol
        elif at_upper[j]:
            ok = d[j] <= tol
        else:
            ok = d[j] >= -tol
        if not ok:
            raise LpError(f"solution failed the reduced-cost optimality re-check (column {j}, d={d[j]:.3e})")


def write_lp_text(lp: LinearProgram, path_or_file) -> None:
    """Serialize an LP in a self-describing plain-text format.

    Layout (one record per line, whitespace separated)::

        sense min|max
        vars <n>
        obj c1 ... cn
        row <sense> b a1 ... an        (one line per row)
        bounds lo1 hi1 ... (pairs; -inf/inf spelled out)

    Intended for eyeballing and for feeding external solvers in cross-checks.
    """
    if isinstance(path_or_file, (str, bytes)):
        with open(path_or_file, "w", encoding="utf-8") as fh:
            write_lp_text(lp, fh)
            return
    out = path_or_file
    out.write(f"sense {lp.sense}\n")
    out.write(f"vars {lp.n_vars}\n")
    out.write("obj " + " ".join(f"{v:.17g}" for v in lp.c) + "\n")
    for i in range(lp.n_rows):
        coeffs = " ".join(f"{v:.17g}" for v in lp.A[i])
        out.write(f"row {lp.row_senses[i]} {lp.b[i]:.17g} {coeffs}\n")
    pairs = " ".join(f"{lo:.17g} {hi:.17g}" for lo, hi in zip(lp.lo, lp.hi))
    out.write("bounds " + pairs + "\n")
