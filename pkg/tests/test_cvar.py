import numpy as np
import pytest

from evarport.cvar import (
    build_dual_lp,
    build_primal_lp,
    cvar_nondiff_objective,
    solve_cvar_portfolio,
)
from evarport.measures import cvar_sample
from evarport.sampling import generate_instance
from evarport.scenarios import build_scenario_set, portfolio_loss
from evarport.simplex import simplex_solve


def random_scenarios(seed, n, n_scen, scale=0.05):
    rng = np.random.default_rng(seed)
    return build_scenario_set(rng.normal(0.0, scale, size=(n_scen, n)))


class TestPrimalLp:
    def test_shape_counts(self):
        lp = build_primal_lp(random_scenarios(0, 2, 3), 0.1)
        assert lp.n_vars == 2 + 3 + 1
        assert lp.n_rows == 3 + 1
        assert lp.row_senses == [">="] * 3 + ["="]

    def test_hinge_cost_coefficients(self):
        scen = build_scenario_set([[0.1], [0.2]], probs=[0.25, 0.75])
        lp = build_primal_lp(scen, 0.05)
        np.testing.assert_allclose(lp.c[1:3], scen.probs / 0.05)
        assert lp.c[-1] == 1.0
        assert lp.lo[-1] == -np.inf          # threshold variable is free

    def test_single_scenario_alpha_one(self):
        scen = build_scenario_set([[0.1, 0.2]])
        sol = simplex_solve(build_primal_lp(scen, 1.0))
        assert sol.objective == pytest.approx(-0.2, abs=1e-12)


class TestDualLp:
    def test_row_counts(self):
        lp = build_dual_lp(random_scenarios(1, 4, 50), 0.1)
        assert lp.n_rows == 4 + 1                # structural rows + normalization
        assert lp.n_vars == 1 + 50

    def test_bound_structure(self):
        scen = build_scenario_set([[0.1], [0.3]], probs=[0.4, 0.6])
        lp = build_dual_lp(scen, 0.2)
        assert lp.lo[0] == -np.inf and lp.hi[0] == np.inf
        np.testing.assert_allclose(lp.hi[1:], scen.probs / 0.2)

    def test_alpha_one_forces_probability_vector(self):
        scen = random_scenarios(2, 3, 20)
        sol = simplex_solve(build_dual_lp(scen, 1.0))
        u = sol.x[1:]
        np.testing.assert_allclose(u, scen.probs, atol=1e-10)
        means = scen.mean_returns()
        assert sol.objective == pytest.approx(-means.max(), abs=1e-10)

    @pytest.mark.parametrize("seed", range(10))
    def test_strong_duality(self, seed):
        rng = np.random.default_rng(seed)
        scen = random_scenarios(100 + seed, int(rng.integers(1, 11)), int(rng.integers(10, 200)))
        alpha = float(rng.uniform(0.02, 1.0))
        p = simplex_solve(build_primal_lp(scen, alpha))
        d = simplex_solve(build_dual_lp(scen, alpha))
        assert p.status == d.status == "optimal"
        assert abs(p.objective - d.objective) <= 1e-8


class TestNondiffObjective:
    def test_breakpoint_minimum_equals_cvar(self):
        rng = np.random.default_rng(9)
        scen = random_scenarios(9, 3, 120)
        for _ in range(5):
            w = rng.dirichlet(np.ones(3))
            alpha = float(rng.uniform(0.05, 1.0))
            losses = portfolio_loss(w, scen).losses
            best = min(cvar_nondiff_objective(w, float(t), scen, alpha) for t in losses)
            assert best == pytest.approx(cvar_sample(losses, alpha, scen.probs), abs=1e-12)

    def test_large_threshold_collapses_to_t(self):
        scen = random_scenarios(10, 2, 40)
        w = np.array([0.5, 0.5])
        t = float(portfolio_loss(w, scen).losses.max()) + 1.0
        assert cvar_nondiff_objective(w, t, scen, 0.1) == pytest.approx(t, rel=1e-15)

    def test_alpha_one_limit_toward_mean(self):
        scen = random_scenarios(11, 2, 60)
        w = np.array([0.3, 0.7])
        losses = portfolio_loss(w, scen).losses
        mean_loss = float(scen.probs @ losses)
        prev = None
        for big in (10.0, 100.0, 1000.0):
            val = cvar_nondiff_objective(w, -big, scen, 1.0)
            err = abs(val - mean_loss)
            if prev is not None:
                assert err <= prev + 1e-12
            prev = err
        assert prev <= 1e-10


class TestSolvePortfolio:
    @pytest.mark.parametrize("seed", range(6))
    def test_methods_agree(self, seed):
        rng = np.random.default_rng(300 + seed)
        scen = random_scenarios(200 + seed, int(rng.integers(2, 8)), int(rng.integers(20, 150)))
        alpha = float(rng.uniform(0.03, 0.9))
        a = solve_cvar_portfolio(scen, alpha, method="primal_lp")
        b = solve_cvar_portfolio(scen, alpha, method="dual_lp")
        assert abs(a.objective - b.objective) <= 1e-8

    def test_single_instrument(self):
        scen = random_scenarios(12, 1, 100)
        sol = solve_cvar_portfolio(scen, 0.05)
        np.testing.assert_allclose(sol.portfolio.weights, [1.0])
        assert sol.objective == pytest.approx(cvar_sample(-scen.returns[:, 0], 0.05), abs=1e-10)

    def test_two_instruments_grid_bruteforce(self):
        scen = random_scenarios(13, 2, 500)
        sol = solve_cvar_portfolio(scen, 0.05)
        best = min(
            cvar_sample(portfolio_loss(np.array([w1, 1 - w1]), scen).losses, 0.05, scen.probs)
            for w1 in np.arange(0.0, 1.0 + 1e-12, 0.001)
        )
        assert sol.objective == pytest.approx(best, abs=1e-3)
        assert sol.objective <= best + 1e-10      # LP optimum cannot exceed the grid

    def test_recovered_weights_reproduce_objective(self):
        scen = random_scenarios(14, 6, 300)
        sol = solve_cvar_portfolio(scen, 0.05, method="dual_lp")
        val = cvar_sample(portfolio_loss(sol.portfolio, scen).losses, 0.05, scen.probs)
        assert val == pytest.approx(sol.objective, abs=1e-8)

    def test_unknown_method(self):
        with pytest.raises(ValueError):
            solve_cvar_portfolio(random_scenarios(15, 2, 10), 0.05, method="nope")

    def test_primal_memory_guard(self):
        scen = generate_instance(5, 40_000, "normal", "cov1", seed=1)
        with pytest.raises(MemoryError):
            solve_cvar_portfolio(scen, 0.05, method="primal_lp")
