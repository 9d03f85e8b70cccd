"""Side-by-side portfolio comparison on a common scenario distribution.

For each metric (mean return, return standard deviation, and loss VaR at a
list of confidence levels) the report carries the ratio metric(A)/metric(B),
plus the L1 distance between the weight vectors.  Ratios whose denominator
is numerically zero are reported as undefined (None) rather than infinity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._validation import check_weights_vector
from .measures import var_sample
from .scenarios import ScenarioSet

__all__ = ["ComparisonReport", "compare_portfolios"]

_DENOM_FLOOR = 1e-12


@dataclass(frozen=True)
class ComparisonReport:
    """Metric ratios of portfolio A over portfolio B plus their L1 distance."""

    mean_ratio: float | None
    sd_ratio: float | None
    var_ratios: tuple            # pairs (confidence_level, ratio-or-None)
    distance: float

    def to_json_dict(self) -> dict:
        return {
            "mean_ratio": self.mean_ratio,
            "sd_ratio": self.sd_ratio,
            "var_ratios": {f"{lvl:g}": r for lvl, r in self.var_ratios},
            "portfolio_distance": self.distance,
        }


def _ratio(a: float, b: float) -> float | None:
    if abs(b) < _DENOM_FLOOR:
        return None
    return float(a / b)


def compare_portfolios(weights_a, weights_b, scenarios: ScenarioSet, var_levels=(0.99, 0.95, 0.90, 0.85, 0.80)) -> ComparisonReport:
    """Build a :class:`ComparisonReport` for two weight vectors.

    ``var_levels`` are confidence levels 1 - alpha of the loss VaR entries.
    """
    wa = check_weights_vector(weights_a)
    wb = check_weights_vector(weights_b)
    if wa.shape[0] != scenarios.n_assets or wb.shape[0] != scenarios.n_assets:
        raise ValueError("weight vectors do not match the scenario dimension")
    ra = scenarios.returns @ wa
    rb = scenarios.returns @ wb
    p = scenarios.probs
    mean_a, mean_b = float(p @ ra), float(p @ rb)
    sd_a = float(np.sqrt(p @ (ra - mean_a) ** 2))
    sd_b = float(np.sqrt(p @ (rb - mean_b) ** 2))
    var_ratios = []
    for level in var_levels:
        alpha = 1.0 - float(level)
        va = var_sample(-ra, alpha, p)
        vb = var_sample(-rb, alpha, p)
        var_ratios.append((float(level), _ratio(va, vb)))
    return ComparisonReport(
        mean_ratio=_ratio(mean_a, mean_b),
        sd_ratio=_ratio(sd_a, sd_b),
        var_ratios=tuple(var_ratios),
        distance=float(np.abs(wa - wb).sum()),
    )
