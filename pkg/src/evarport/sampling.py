"""Seeded scenario generation: covariance factories and samplers.

Randomness comes from numpy's Philox generator, a counter-based engine whose
stream depends only on the seed, so every instance is reproducible
bit-for-bit across platforms and runs.  The Student-t sampler draws its
Gaussian component first, from the same stream position as the normal
sampler, so the t instance for a seed is a fat-tailed transform of the
corresponding normal instance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._validation import as_vector
from .scenarios import ScenarioSet, build_scenario_set

__all__ = [
    "make_rng",
    "gen_cov1",
    "gen_cov2",
    "sample_mvn",
    "sample_mvt",
    "CovarianceSpec",
    "DistributionSpec",
    "generate_instance",
]

#: Ridge added to the Gram-matrix covariance so Cholesky cannot fail from
#: numerically zero eigenvalues; far below every solver tolerance in use.
_COV2_RIDGE = 1e-10


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based generator pinned for cross-platform reproducibility."""
    return np.random.Generator(np.random.Philox(seed))


def gen_cov1(n: int, seed: int) -> np.ndarray:
    """Diagonally dominant covariance: U[0,1] off-diagonals, each diagonal
    entry set to its row's off-diagonal sum plus a draw from (0, 1]."""
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = make_rng(seed)
    m = rng.uniform(0.0, 1.0, size=(n, n))
    cov = np.triu(m, k=1)
    cov = cov + cov.T
    slack = 1.0 - rng.uniform(0.0, 1.0, size=n)    # in (0, 1]
    np.fill_diagonal(cov, np.abs(cov).sum(axis=1) + slack)
    return cov


def gen_cov2(n: int, seed: int) -> np.ndarray:
    """Gram-matrix covariance M @ M.T (entries of M uniform) plus a tiny ridge."""
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = make_rng(seed)
    m = rng.uniform(0.0, 1.0, size=(n, n))
    return m @ m.T + _COV2_RIDGE * np.eye(n)


def _cholesky(cov: np.ndarray) -> np.ndarray:
    cov = np.asarray(cov, dtype=np.float64)
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as exc:
        raise ValueError("covariance matrix is not positive definite") from exc


def sample_mvn(mean, cov, n_samples: int, seed: int) -> ScenarioSet:
    """Multivariate normal scenario set with uniform probabilities."""
    mean = as_vector(mean, "mean")
    L = _cholesky(cov)
    rng = make_rng(seed)
    z = rng.standard_normal(size=(n_samples, mean.shape[0]))
    return build_scenario_set(mean + z @ L.T)


def sample_mvt(mean, cov, dof: float, n_samples: int, seed: int) -> ScenarioSet:
    """Multivariate Student-t scenarios sharing the normal draws of the seed.

    Rows are mean + (L z) / sqrt(g / dof) with g chi-squared; the Gaussian
    draws z are consumed first so they coincide with :func:`sample_mvn` at
    the same seed.  Requires dof > 2 (finite covariance).
    """
    if not dof > 2.0:
        raise ValueError("dof must exceed 2 for a finite covariance")
    mean = as_vector(mean, "mean")
    L = _cholesky(cov)
    rng = make_rng(seed)
    z = rng.standard_normal(size=(n_samples, mean.shape[0]))
    g = rng.chisquare(dof, size=n_samples)
    scale = np.sqrt(g / dof)
    return build_scenario_set(mean + (z @ L.T) / scale[:, None])


@dataclass(frozen=True)
class CovarianceSpec:
    """Which covariance factory to use, at what dimension and seed."""

    kind: str                 # "cov1" | "cov2"
    n: int
    seed: int

    def build(self) -> np.ndarray:
        if self.kind == "cov1":
            return gen_cov1(self.n, self.seed)
        if self.kind == "cov2":
            return gen_cov2(self.n, self.seed)
        raise ValueError(f"unknown covariance kind {self.kind!r}")


@dataclass(frozen=True)
class DistributionSpec:
    """Return distribution family; mean defaults to zero."""

    family: str               # "normal" | "t"
    dof: float = 5.0

    def __post_init__(self):
        if self.family not in ("normal", "t"):
            raise ValueError(f"unknown family {self.family!r}")
        if self.family == "t" and not self.dof > 2.0:
            raise ValueError("t family requires dof > 2")


def generate_instance(
    n: int, n_samples: int, family: str, cov_kind: str, seed: int, dof: float = 5.0
) -> ScenarioSet:
    """One reproducible test instance: covariance, then scenario draws.

    The covariance uses the same seed as the draws, so the tuple
    (cov_kind, n, n_samples, family, seed) pins the instance bytes.
    """
    cov = CovarianceSpec(kind=cov_kind, n=n, seed=seed).build()
    dist = DistributionSpec(family=family, dof=dof)
    mean = np.zeros(n)
    if dist.family == "normal":
        return sample_mvn(mean, cov, n_samples, seed)
    return sample_mvt(mean, cov, dist.dof, n_samples, seed)
