import io

import numpy as np
import pytest

from evarport.scenarios import (
    build_scenario_set,
    portfolio_loss,
    read_scenario_csv,
    validate_portfolio,
    write_scenario_csv,
)


class TestBuildScenarioSet:
    def test_uniform_default(self):
        s = build_scenario_set([[0.1], [0.2]])
        np.testing.assert_allclose(s.probs, [0.5, 0.5])
        assert s.n_scenarios == 2 and s.n_assets == 1

    def test_renormalizes_given_probs(self):
        s = build_scenario_set([[0.1], [0.2]], probs=[2.0, 2.0])
        np.testing.assert_allclose(s.probs, [0.5, 0.5])

    def test_rejects_nonpositive_prob(self):
        with pytest.raises(ValueError, match="strictly positive"):
            build_scenario_set([[0.1], [0.2]], probs=[1.0, -1.0])

    def test_rejects_empty_matrix(self):
        with pytest.raises(ValueError, match="empty"):
            build_scenario_set(np.zeros((0, 3)))

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError, match="non-finite"):
            build_scenario_set([[0.1], [np.nan]])

    def test_prob_sum_tight(self):
        rng = np.random.default_rng(0)
        s = build_scenario_set(rng.normal(size=(1000, 2)), probs=rng.uniform(0.1, 3.0, 1000))
        assert abs(s.probs.sum() - 1.0) <= 1e-12

    def test_idempotent_on_own_output(self):
        rng = np.random.default_rng(1)
        s = build_scenario_set(rng.normal(size=(50, 3)), probs=rng.uniform(0.5, 2.0, 50))
        s2 = build_scenario_set(s.returns, probs=s.probs)
        np.testing.assert_array_equal(s.returns, s2.returns)
        np.testing.assert_array_equal(s.probs, s2.probs)

    def test_arrays_are_frozen(self):
        s = build_scenario_set([[0.1], [0.2]])
        with pytest.raises(ValueError):
            s.returns[0, 0] = 9.0
        with pytest.raises(ValueError):
            s.probs[0] = 9.0


class TestPortfolioLoss:
    def test_sign_flip(self):
        s = build_scenario_set([[0.1], [-0.2]])
        ls = portfolio_loss(validate_portfolio([1.0]), s)
        np.testing.assert_allclose(ls.losses, [-0.1, 0.2])

    def test_dot_product(self):
        s = build_scenario_set([[0.2, 0.0]])
        ls = portfolio_loss(validate_portfolio([0.5, 0.5]), s)
        assert ls.losses[0] == pytest.approx(-0.1)

    def test_dimension_mismatch(self):
        s = build_scenario_set([[0.1, 0.2]])
        with pytest.raises(ValueError, match="instruments"):
            portfolio_loss(np.array([0.2, 0.3, 0.5]), s)

    def test_linearity_in_weights(self):
        rng = np.random.default_rng(2)
        s = build_scenario_set(rng.normal(size=(200, 4)))
        for _ in range(20):
            w1 = rng.dirichlet(np.ones(4))
            w2 = rng.dirichlet(np.ones(4))
            tau = rng.uniform()
            mix = portfolio_loss(tau * w1 + (1 - tau) * w2, s).losses
            combo = tau * portfolio_loss(w1, s).losses + (1 - tau) * portfolio_loss(w2, s).losses
            np.testing.assert_allclose(mix, combo, atol=1e-14)

    def test_loss_sample_len(self):
        s = build_scenario_set([[0.1], [0.2], [0.3]])
        assert len(portfolio_loss(np.array([1.0]), s)) == 3


class TestValidatePortfolio:
    def test_accepts_simplex_point(self):
        p = validate_portfolio([0.3, 0.7])
        np.testing.assert_allclose(p.weights, [0.3, 0.7])

    def test_rejects_negative(self):
        with pytest.raises(ValueError, match="negative"):
            validate_portfolio([1.1, -0.1])

    def test_rejects_bad_sum(self):
        with pytest.raises(ValueError, match="sum"):
            validate_portfolio([0.6, 0.6])

    def test_sum_tolerance_boundary(self):
        validate_portfolio([0.5, 0.5 + 9e-10])  # inside 1e-9
        with pytest.raises(ValueError):
            validate_portfolio([0.5, 0.5 + 1e-8])


class TestScenarioCsv:
    def test_round_trip_with_probs(self):
        rng = np.random.default_rng(3)
        s = build_scenario_set(rng.normal(size=(17, 3)), probs=rng.uniform(0.5, 2.0, 17))
        buf = io.StringIO()
        write_scenario_csv(s, buf)
        s2 = read_scenario_csv(io.StringIO(buf.getvalue()))
        np.testing.assert_array_equal(s.returns, s2.returns)
        np.testing.assert_array_equal(s.probs, s2.probs)

    def test_round_trip_without_probs(self):
        rng = np.random.default_rng(4)
        s = build_scenario_set(rng.normal(size=(9, 2)))
        buf = io.StringIO()
        write_scenario_csv(s, buf, include_probs=False)
        text = buf.getvalue()
        assert text.splitlines()[0] == "r1,r2"
        s2 = read_scenario_csv(io.StringIO(text))
        np.testing.assert_array_equal(s.returns, s2.returns)
        np.testing.assert_allclose(s2.probs, 1.0 / 9)

    def test_headerless_assumes_prob_column(self):
        s = read_scenario_csv(io.StringIO("0.5,0.1\n0.5,0.2\n"))
        np.testing.assert_allclose(s.probs, [0.5, 0.5])
        np.testing.assert_allclose(s.returns[:, 0], [0.1, 0.2])

    def test_rejects_garbage(self):
        with pytest.raises(ValueError):
            read_scenario_csv(io.StringIO("p,r1\nx,oops\n"))
        with pytest.raises(ValueError):
            read_scenario_csv(io.StringIO(""))
