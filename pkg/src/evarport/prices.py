"""Price-panel ingestion and return-rate computation.

Input is a CSV with a ``date,asset1,...,assetK`` header; empty cells mark
missing prices.  Interior gaps are filled by linear interpolation in price
space; leading and trailing gaps shrink the asset's usable window instead of
being extrapolated.  Returns are overlapping simple returns over a fixed
horizon measured in rows (trading days for daily data), aligned on the
window where every asset is observed.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .scenarios import ScenarioSet, build_scenario_set

__all__ = ["PricePanel", "load_price_csv", "prices_to_returns"]


@dataclass(frozen=True)
class PricePanel:
    """Aligned date/price table with per-asset observation windows.

    ``prices`` holds NaN outside an asset's observed window; inside it,
    gaps have been interpolated.  ``n_interpolated`` counts filled cells per
    asset.
    """

    dates: tuple
    names: tuple
    prices: np.ndarray
    n_interpolated: tuple

    @property
    def n_assets(self) -> int:
        return self.prices.shape[1]


def _interpolate_column(col: np.ndarray) -> tuple[np.ndarray, int]:
    """Fill interior NaN runs linearly; leave leading/trailing NaN in place."""
    out = col.copy()
    obs = np.flatnonzero(~np.isnan(col))
    if obs.size < 2:
        raise ValueError("asset has fewer than 2 observed prices")
    first, last = obs[0], obs[-1]
    filled = 0
    for a, b in zip(obs[:-1], obs[1:]):
        gap = b - a
        if gap > 1:
            frac = np.arange(1, gap) / gap
            out[a + 1 : b] = col[a] + frac * (col[b] - col[a])
            filled += gap - 1
    return out, filled


def load_price_csv(path_or_file) -> PricePanel:
    """Parse and clean a price CSV; see the module docs for the format."""
    if isinstance(path_or_file, (str, bytes)):
        with open(path_or_file, "r", encoding="utf-8", newline="") as fh:
            return load_price_csv(fh)
    reader = csv.reader(path_or_file)
    try:
        header = next(reader)
    except StopIteration:
        raise ValueError("price CSV is empty") from None
    if len(header) < 2 or header[0].strip().lower() != "date":
        raise ValueError("price CSV must start with a 'date,asset1,...' header")
    names = tuple(h.strip() for h in header[1:])
    dates: list[str] = []
    rows: list[list[float]] = []
    for lineno, row in enumerate(reader, start=2):
        if not row or not any(c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise ValueError(f"price CSV row {lineno} has {len(row)} cells, expected {len(header)}")
        dates.append(row[0].strip())
        vals = []
        for cell in row[1:]:
            cell = cell.strip()
            if not cell:
                vals.append(np.nan)
                continue
            try:
                v = float(cell)
            except ValueError:
                raise ValueError(f"price CSV row {lineno} has a non-numeric cell {cell!r}") from None
            if v <= 0.0:
                raise ValueError(f"price CSV row {lineno} has a nonpositive price {v!r}")
            vals.append(v)
        rows.append(vals)
    if not rows:
        raise ValueError("price CSV has no data rows")
    if any(b <= a for a, b in zip(dates[:-1], dates[1:])):
        raise ValueError("price CSV dates must be strictly increasing")
    prices = np.array(rows, dtype=np.float64)
    counts = []
    for k in range(prices.shape[1]):
        prices[:, k], filled = _interpolate_column(prices[:, k])
        counts.append(filled)
    prices.setflags(write=False)
    return PricePanel(dates=tuple(dates), names=names, prices=prices, n_interpolated=tuple(counts))


def prices_to_returns(panel: PricePanel, horizon: int = 21) -> ScenarioSet:
    """Overlapping simple returns p[t+h]/p[t] - 1 on the common date window."""
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    prices = panel.prices
    observed = ~np.isnan(prices)
    first = max(int(np.argmax(observed[:, k])) for k in range(panel.n_assets))
    last = min(
        prices.shape[0] - 1 - int(np.argmax(observed[::-1, k])) for k in range(panel.n_assets)
    )
    if last - first < horizon:
        raise ValueError(
            f"common observation window of {last - first + 1} rows is too short "
            f"for a {horizon}-row horizon"
        )
    window = prices[first : last + 1]
    returns = window[horizon:] / window[:-horizon] - 1.0
    return build_scenario_set(returns)
