import io
import itertools

import numpy as np
import pytest

from evarport.simplex import LinearProgram, PivotLimitError, simplex_solve, write_lp_text

INF = np.inf


def lp(sense, c, A, senses, b, lo=None, hi=None):
    c = np.asarray(c, dtype=float)
    n = c.size
    lo = np.zeros(n) if lo is None else np.asarray(lo, dtype=float)
    hi = np.full(n, INF) if hi is None else np.asarray(hi, dtype=float)
    return LinearProgram(sense=sense, c=c, A=np.asarray(A, dtype=float), row_senses=list(senses), b=np.asarray(b, dtype=float), lo=lo, hi=hi)


def enumerate_vertices(c, A_eq, b_eq):
    """Brute-force optimum of min c x, A x = b, x >= 0 by basis enumeration.

    Only for tiny instances: tries every square basis, keeps feasible basic
    solutions, returns the best objective (None if infeasible, -inf if a
    feasible improving ray exists is NOT detected - callers pick bounded
    instances).
    """
    m, n = A_eq.shape
    best = None
    for cols in itertools.combinations(range(n), m):
        B = A_eq[:, cols]
        if abs(np.linalg.det(B)) < 1e-10:
            continue
        xb = np.linalg.solve(B, b_eq)
        if np.any(xb < -1e-9):
            continue
        x = np.zeros(n)
        x[list(cols)] = xb
        val = float(c @ x)
        if best is None or val < best:
            best = val
    return best


def to_standard_form(p: LinearProgram):
    """Rewrite a (min, x >= 0, no upper bounds) LP with slacks for the oracle."""
    rows = []
    cols_extra = 0
    senses = p.row_senses
    n = p.n_vars
    extra = sum(1 for s in senses if s != "=")
    A = np.zeros((p.n_rows, n + extra))
    A[:, :n] = p.A
    c = np.concatenate([p.c, np.zeros(extra)])
    k = n
    for i, s in enumerate(senses):
        if s == "<=":
            A[i, k] = 1.0
            k += 1
        elif s == ">=":
            A[i, k] = -1.0
            k += 1
    return c, A, p.b.copy()


class TestExamples:
    def test_box_max(self):
        sol = simplex_solve(lp("max", [1, 1], [[1, 1]], ["<="], [1]))
        assert sol.status == "optimal"
        assert sol.objective == pytest.approx(1.0, abs=1e-12)

    def test_infeasible(self):
        sol = simplex_solve(lp("min", [1], [[1]], ["<="], [-1]))
        assert sol.status == "infeasible"

    def test_unbounded(self):
        sol = simplex_solve(lp("min", [-1], [[0]], ["<="], [1]))
        assert sol.status == "unbounded"

    def test_upper_bounds_respected(self):
        sol = simplex_solve(lp("max", [1, 2], [[1, 1]], ["<="], [4], lo=[0, 0], hi=[3, 2]))
        assert sol.objective == pytest.approx(6.0, abs=1e-12)
        np.testing.assert_allclose(sol.x, [2.0, 2.0], atol=1e-12)

    def test_free_variable(self):
        # min t s.t. t >= -5 (via row), t free
        sol = simplex_solve(lp("min", [1], [[1]], [">="], [-5], lo=[-INF], hi=[INF]))
        assert sol.objective == pytest.approx(-5.0, abs=1e-12)

    def test_equality_rows(self):
        sol = simplex_solve(lp("min", [1, 2, 3], [[1, 1, 1], [1, 0, -1]], ["=", "="], [1, 0]))
        assert sol.status == "optimal"
        x = sol.x
        assert abs(x.sum() - 1) < 1e-9 and abs(x[0] - x[2]) < 1e-9

    def test_redundant_row_handled(self):
        # Second row is a duplicate of the first; the artificial for it stays
        # frozen at zero.
        sol = simplex_solve(lp("min", [1, 1], [[1, 1], [1, 1]], ["=", "="], [1, 1]))
        assert sol.status == "optimal"
        assert sol.objective == pytest.approx(1.0, abs=1e-10)

    def test_pivot_limit_error(self):
        with pytest.raises(PivotLimitError):
            simplex_solve(lp("min", [1, 2, 3], [[1, 1, 1]], ["="], [1]), max_pivots=0)


class TestDegeneracy:
    def test_beale_cycling_instance_terminates(self):
        # Classic instance that cycles under most-negative-cost pricing with
        # textbook tie-breaking; the stall counter flips to Bland's rule.
        c = [-0.75, 150, -0.02, 6]
        A = [[0.25, -60, -1 / 25, 9], [0.5, -90, -1 / 50, 3], [0, 0, 1, 0]]
        sol = simplex_solve(lp("min", c, A, ["<=", "<=", "<="], [0, 0, 1]))
        assert sol.status == "optimal"
        assert sol.objective == pytest.approx(-0.05, abs=1e-9)


class TestOracles:
    @pytest.mark.parametrize("seed", range(25))
    def test_vertex_enumeration_on_tiny_lps(self, seed):
        rng = np.random.default_rng(seed)
        m, n = int(rng.integers(1, 4)), int(rng.integers(2, 6))
        A = rng.normal(size=(m, n))
        x_feas = rng.uniform(0.1, 1.0, size=n)
        b = A @ x_feas                      # feasible by construction
        senses = [("<=", "=", ">=")[i] for i in rng.integers(0, 3, size=m)]
        c = rng.uniform(0.1, 2.0, size=n)   # positive costs keep min bounded
        p = lp("min", c, A, senses, b)
        sol = simplex_solve(p)
        assert sol.status == "optimal"
        cs, As, bs = to_standard_form(p)
        ref = enumerate_vertices(cs, As, bs)
        assert ref is not None
        assert sol.objective == pytest.approx(ref, abs=1e-9)

    @pytest.mark.parametrize("seed", range(40))
    def test_against_scipy_on_random_lps(self, seed):
        from scipy.optimize import linprog

        rng = np.random.default_rng(1000 + seed)
        m, n = int(rng.integers(2, 21)), int(rng.integers(2, 41))
        A = rng.normal(size=(m, n))
        b = rng.normal(size=m)
        c = rng.normal(size=n)
        senses = [("<=", "=", ">=")[i] for i in rng.integers(0, 3, size=m)]
        lo = np.where(rng.random(n) < 0.7, 0.0, -INF)
        hi = np.where(rng.random(n) < 0.4, rng.random(n) * 2, INF)
        hi = np.maximum(hi, lo)
        p = lp("min", c, A, senses, b, lo=lo, hi=hi)
        mine = simplex_solve(p)

        A_ub, b_ub, A_eq, b_eq = [], [], [], []
        for i, s in enumerate(senses):
            if s == "<=":
                A_ub.append(A[i]); b_ub.append(b[i])
            elif s == ">=":
                A_ub.append(-A[i]); b_ub.append(-b[i])
            else:
                A_eq.append(A[i]); b_eq.append(b[i])
        ref = linprog(
            c,
            A_ub=np.array(A_ub) if A_ub else None, b_ub=np.array(b_ub) if b_ub else None,
            A_eq=np.array(A_eq) if A_eq else None, b_eq=np.array(b_eq) if b_eq else None,
            bounds=list(zip(np.where(np.isfinite(lo), lo, None), np.where(np.isfinite(hi), hi, None))),
            method="highs",
        )
        ref_status = {0: "optimal", 2: "infeasible", 3: "unbounded"}[ref.status]
        assert mine.status == ref_status
        if mine.status == "optimal":
            assert mine.objective == pytest.approx(ref.fun, abs=1e-7 * (1 + abs(ref.fun)))


class TestSolutionContract:
    def test_feasibility_and_duals_reverified(self):
        rng = np.random.default_rng(77)
        n, m = 8, 5
        A = rng.normal(size=(m, n))
        x_feas = rng.uniform(0.2, 1.0, size=n)
        b = A @ x_feas
        c = rng.uniform(0.1, 1.0, size=n)
        p = lp("min", c, A, ["="] * m, b)
        sol = simplex_solve(p)
        assert sol.status == "optimal"
        np.testing.assert_allclose(p.A @ sol.x, b, atol=1e-8)
        assert np.min(sol.x) >= -1e-9
        # strong duality: c x* = y b for an all-equality LP with x* >= 0
        assert sol.objective == pytest.approx(float(sol.duals @ b), abs=1e-7)
        # reduced costs nonnegative at a min-LP optimum with x at lower bounds
        d = p.c - p.A.T @ sol.duals
        assert np.min(d) >= -1e-7

    def test_basis_and_pivots_reported(self):
        sol = simplex_solve(lp("max", [1, 1], [[1, 2]], ["<="], [2]))
        assert sol.pivots >= 1
        assert len(sol.basis) == 1


class TestLpText:
    def test_serialization_shape(self):
        p = lp("max", [1.5, -2], [[1, 0], [0, 1]], ["<=", ">="], [3, -1], lo=[0, -INF], hi=[INF, 4])
        buf = io.StringIO()
        write_lp_text(p, buf)
        lines = buf.getvalue().splitlines()
        assert lines[0] == "sense max"
        assert lines[1] == "vars 2"
        assert lines[2].startswith("obj 1.5 -2")
        assert lines[3].startswith("row <= 3")
        assert lines[4].startswith("row >= -1")
        assert lines[5].startswith("bounds 0 inf -inf 4")
