"""Scenario and portfolio data model.

A :class:`ScenarioSet` is a discrete distribution of instrument return rates:
an N x n matrix whose rows are per-scenario return vectors, together with a
strictly positive probability weight per scenario.  A :class:`Portfolio` is a
long-only weight vector on the unit simplex.  The loss of a portfolio under a
scenario is the negative portfolio return, ``-returns @ w``.

All containers are immutable after construction (arrays are frozen), so they
can be shared freely across threads.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from ._validation import check_probabilities, check_returns_matrix, check_weights_vector

__all__ = [
    "ScenarioSet",
    "Portfolio",
    "LossSample",
    "build_scenario_set",
    "portfolio_loss",
    "validate_portfolio",
    "read_scenario_csv",
    "write_scenario_csv",
]

#: Largest tolerated |sum(weights) - 1| for a valid portfolio.  Tighter than
#: the solver tolerance (1e-6) so solver output always validates after one
#: explicit renormalization.
PORTFOLIO_SUM_TOL = 1e-9

#: Probabilities must sum to one within this tolerance after normalization.
PROB_SUM_TOL = 1e-12


def _frozen(arr: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(arr, dtype=np.float64)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class ScenarioSet:
    """Discrete joint distribution of instrument returns.

    Attributes
    ----------
    returns : ndarray of shape (N, n)
        Per-scenario, per-instrument return rates; row j is scenario j.
    probs : ndarray of shape (N,)
        Strictly positive scenario probabilities summing to one.
    """

    returns: np.ndarray
    probs: np.ndarray

    @property
    def n_scenarios(self) -> int:
        return self.returns.shape[0]

    @property
    def n_assets(self) -> int:
        return self.returns.shape[1]

    def mean_returns(self) -> np.ndarray:
        """Probability-weighted mean return per instrument."""
        return self.probs @ self.returns


@dataclass(frozen=True)
class Portfolio:
    """Long-only portfolio weights summing to one."""

    weights: np.ndarray

    @property
    def n_assets(self) -> int:
        return self.weights.shape[0]


@dataclass(frozen=True)
class LossSample:
    """Realized losses of a portfolio under a scenario set, with weights."""

    losses: np.ndarray
    probs: np.ndarray

    def __len__(self) -> int:
        return self.losses.shape[0]


def build_scenario_set(returns, probs=None) -> ScenarioSet:
    """Build a validated :class:`ScenarioSet`.

    When ``probs`` is omitted every scenario gets weight 1/N.  Given
    probabilities must be strictly positive; they are renormalized to sum
    exactly to one (input files routinely carry rounding noise, and weights
    like (2, 2) are accepted as (0.5, 0.5)).
    """
    arr = check_returns_matrix(returns)
    n_scen = arr.shape[0]
    if probs is None:
        p = np.full(n_scen, 1.0 / n_scen)
    else:
        p = check_probabilities(probs, n_scen)
    # Renormalize only when needed, so rebuilding from a ScenarioSet's own
    # fields reproduces the probabilities bit-for-bit.
    for _ in range(2):
        if abs(p.sum() - 1.0) <= PROB_SUM_TOL:
            break
        p = p / p.sum()
    return ScenarioSet(returns=_frozen(arr), probs=_frozen(p))


def portfolio_loss(portfolio: Portfolio | np.ndarray, scenarios: ScenarioSet) -> LossSample:
    """Per-scenario portfolio loss, i.e. the negative portfolio return."""
    w = portfolio.weights if isinstance(portfolio, Portfolio) else check_weights_vector(portfolio)
    if w.shape[0] != scenarios.n_assets:
        raise ValueError(
            f"portfolio has {w.shape[0]} weights but scenario set has "
            f"{scenarios.n_assets} instruments"
        )
    losses = -(scenarios.returns @ w)
    return LossSample(losses=_frozen(losses), probs=scenarios.probs)


def validate_portfolio(weights) -> Portfolio:
    """Validate long-only simplex conditions and return a :class:`Portfolio`.

    Raises ``ValueError`` on any negative weight or when the weights sum
    deviates from one by more than ``PORTFOLIO_SUM_TOL``.
    """
    w = check_weights_vector(weights)
    if np.any(w < 0.0):
        raise ValueError("portfolio has negative weights (short positions are not allowed)")
    total = w.sum()
    if abs(total - 1.0) > PORTFOLIO_SUM_TOL:
        raise ValueError(f"portfolio weights sum to {total!r}, expected 1 within {PORTFOLIO_SUM_TOL}")
    return Portfolio(weights=_frozen(w))


# ---------------------------------------------------------------------------
# Scenario CSV format
#
#   p,r1,...,rn          <- optional header
#   0.25,0.01,-0.02      <- probability followed by per-instrument returns
#
# A header of the form r1,...,rn (no leading "p") marks a file without the
# probability column; uniform weights are implied.  Headerless files are
# assumed to carry the probability column.
# ---------------------------------------------------------------------------


def _looks_like_header(row: list[str]) -> bool:
    for cell in row:
        try:
            float(cell)
        except ValueError:
            return True
    return False


def read_scenario_csv(path_or_file) -> ScenarioSet:
    """Read the scenario CSV format; see module docs for layout rules."""
    if isinstance(path_or_file, (str, bytes)):
        with open(path_or_file, "r", encoding="utf-8", newline="") as fh:
            return read_scenario_csv(fh)
    rows = [row for row in csv.reader(path_or_file) if row and any(c.strip() for c in row)]
    if not rows:
        raise ValueError("scenario CSV is empty")
    has_probs = True
    if _looks_like_header(rows[0]):
        has_probs = rows[0][0].strip().lower() == "p"
        rows = rows[1:]
        if not rows:
            raise ValueError("scenario CSV has a header but no data rows")
    try:
        data = np.array([[float(c) for c in row] for row in rows], dtype=np.float64)
    except ValueError as exc:
        raise ValueError(f"scenario CSV has a non-numeric data cell: {exc}") from exc
    if data.ndim != 2:
        raise ValueError("scenario CSV rows have inconsistent lengths")
    if has_probs:
        if data.shape[1] < 2:
            raise ValueError("scenario CSV with probability column needs at least two columns")
        return build_scenario_set(data[:, 1:], probs=data[:, 0])
    return build_scenario_set(data)


def write_scenario_csv(scenarios: ScenarioSet, path_or_file, include_probs: bool = True) -> None:
    """Write a scenario set in the CSV format read by :func:`read_scenario_csv`."""
    if isinstance(path_or_file, (str, bytes)):
        with open(path_or_file, "w", encoding="utf-8", newline="") as fh:
            write_scenario_csv(scenarios, fh, include_probs=include_probs)
            return
    out: io.TextIOBase = path_or_file
    n = scenarios.n_assets
    names = [f"r{i + 1}" for i in range(n)]
    header = (["p"] if include_probs else []) + names
    out.write(",".join(header) + "\n")
    for j in range(scenarios.n_scenarios):
        cells = []
        if include_probs:
            cells.append(f"{scenarios.probs[j]:.17g}")
        cells.extend(f"{v:.17g}" for v in scenarios.returns[j])
        out.write(",".join(cells) + "\n")
