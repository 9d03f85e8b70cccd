"""Input validation helpers shared across the package."""

from __future__ import annotations

import numpy as np

__all__ = [
    "check_returns_matrix",
    "check_probabilities",
    "check_alpha",
    "check_weights_vector",
    "as_vector",
]


def as_vector(x, name: str = "x") -> np.ndarray:
    """Coerce to a contiguous 1-D float64 array."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    return np.ascontiguousarray(arr)


def check_returns_matrix(returns) -> np.ndarray:
    """Validate an N x n matrix of per-scenario return rates."""
    arr = np.asarray(returns, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise ValueError(f"returns must be a 2-D matrix, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError("returns matrix is empty: need at least one scenario and one instrument")
    if not np.all(np.isfinite(arr)):
        raise ValueError("returns matrix contains non-finite entries")
    return np.ascontiguousarray(arr)


def check_probabilities(probs, n_scenarios: int) -> np.ndarray:
    """Validate a vector of scenario probabilities (positive, right length)."""
    p = as_vector(probs, "probs")
    if p.shape[0] != n_scenarios:
        raise ValueError(f"probs has length {p.shape[0]}, expected {n_scenarios}")
    if not np.all(np.isfinite(p)):
        raise ValueError("probs contains non-finite entries")
    if np.any(p <= 0.0):
        raise ValueError("probs must be strictly positive")
    return p


def check_alpha(alpha: float, *, allow_one: bool = True) -> float:
    """Validate a risk level alpha in (0, 1] (or (0, 1) if allow_one is False)."""
    a = float(alpha)
    if not np.isfinite(a) or a <= 0.0 or a > 1.0 or (not allow_one and a == 1.0):
        dom = "(0, 1]" if allow_one else "(0, 1)"
        raise ValueError(f"alpha must lie in {dom}, got {alpha!r}")
    return a


def check_weights_vector(weights) -> np.ndarray:
    """Coerce a candidate weight vector to 1-D float64 without simplex checks."""
    w = as_vector(weights, "weights")
    if w.shape[0] < 1:
        raise ValueError("weights vector is empty")
    if not np.all(np.isfinite(w)):
        raise ValueError("weights vector contains non-finite entries")
    return w
