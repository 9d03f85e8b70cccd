"""Benchmark harness: timed solver runs over generated instance grids.

A plan is a list of cells, each fixing (n, N, family, covariance kind) and
carrying seeds and methods.  Every (cell, seed, method) run records wall
time around the solve call only, the achieved objective, and an optimality
gap against an oracle: the dual-LP optimum for CVaR methods, a weight-grid
brute force for EVaR at up to three instruments, and the solver's certified
surrogate-gap bound otherwise.  Per-cell aggregates average over seeds for
each covariance kind and pooled over both.
"""

from __future__ import annotations

import csv
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import cvar as _cvar
from . import evar as _evar
from . import ipm as _ipm
from .sampling import generate_instance
from .scenarios import ScenarioSet

__all__ = [
    "PlanCell",
    "BenchRecord",
    "load_plan",
    "run_benchmark",
    "compute_gap",
    "aggregate_records",
    "write_records_csv",
    "write_aggregates_csv",
]

_METHODS = ("evar_pd", "cvar_primal_lp", "cvar_dual_lp")


@dataclass(frozen=True)
class PlanCell:
    n: int
    n_samples: int
    family: str
    cov: str
    seeds: tuple
    methods: tuple
    dof: float = 5.0

    def __post_init__(self):
        if self.family not in ("normal", "t"):
            raise ValueError(f"unknown family {self.family!r}")
        if self.cov not in ("cov1", "cov2"):
            raise ValueError(f"unknown covariance kind {self.cov!r}")
        bad = [m for m in self.methods if m not in _METHODS]
        if bad:
            raise ValueError(f"unknown methods {bad}; expected subset of {_METHODS}")


@dataclass
class BenchRecord:
    """One solver run on one generated instance."""

    n: int
    n_samples: int
    family: str
    cov: str
    method: str
    seed: int
    wall_ms: float = float("nan")
    objective: float = float("nan")
    gap: float = float("nan")
    gap_kind: str = ""
    status: str = "ok"

    def csv_row(self) -> list:
        return [
            self.n, self.n_samples, self.family, self.cov, self.method, self.seed,
            f"{self.wall_ms:.6g}", f"{self.objective:.12g}", f"{self.gap:.6g}", self.status,
        ]


def load_plan(path_or_file) -> tuple[list[PlanCell], float]:
    """Read a JSON plan: {"alpha": ..., "cells": [{...}, ...]}."""
    if isinstance(path_or_file, (str, bytes)):
        with open(path_or_file, "r", encoding="utf-8") as fh:
            return load_plan(fh)
    doc = json.load(path_or_file)
    alpha = float(doc.get("alpha", 0.05))
    cells = [
        PlanCell(
            n=int(c["n"]),
            n_samples=int(c["N"]),
            family=c["family"],
            cov=c["cov"],
            seeds=tuple(int(s) for s in c["seeds"]),
            methods=tuple(c["methods"]),
            dof=float(c.get("dof", 5.0)),
        )
        for c in doc["cells"]
    ]
    return cells, alpha


def _dual_lp_objective(scenarios: ScenarioSet, alpha: float) -> float:
    from .simplex import simplex_solve

    sol = simplex_solve(_cvar.build_dual_lp(scenarios, alpha))
    if sol.status != "optimal":
        raise RuntimeError(f"oracle dual LP ended with status {sol.status!r}")
    return float(sol.objective)


def compute_gap(objective: float, scenarios: ScenarioSet, alpha: float, method: str):
    """Absolute optimality gap against the method's oracle.

    Returns (gap, kind) where kind names the oracle that produced it:
    "dual_lp" for CVaR methods, "grid" for EVaR with n <= 3, and
    "eta_bound" when only the solver's own certified surrogate gap is
    available (the gap value is then that bound, not a measured distance).
    """
    if method.startswith("cvar"):
        oracle = _dual_lp_objective(scenarios, alpha)
        return abs(objective - oracle), "dual_lp"
    if scenarios.n_assets <= 3:
        step = 1e-3 if scenarios.n_assets <= 2 else 2e-2
        oracle = _evar.evar_grid_oracle(scenarios, alpha, step=step)
        return abs(objective - oracle), "grid"
    return float("nan"), "eta_bound"


def _run_single(cell: PlanCell, seed: int, method: str, alpha: float) -> BenchRecord:
    rec = BenchRecord(
        n=cell.n, n_samples=cell.n_samples, family=cell.family, cov=cell.cov,
        method=method, seed=seed,
    )
    try:
        scen = generate_instance(cell.n, cell.n_samples, cell.family, cell.cov, seed, cell.dof)
        t0 = time.perf_counter()
        if method == "evar_pd":
            spec = _evar.EvarProblemSpec(scenarios=scen, alpha=alpha)
            sol = _evar.solve_evar_portfolio(spec, _ipm.IpmParams())
        else:
            sol = _cvar.solve_cvar_portfolio(scen, alpha, method=method.removeprefix("cvar_"))
        rec.wall_ms = (time.perf_counter() - t0) * 1e3
        rec.objective = sol.objective
        gap, kind = compute_gap(sol.objective, scen, alpha, method)
        rec.gap_kind = kind
        rec.gap = sol.eta_hat if kind == "eta_bound" else gap
    except Exception as exc:  # the run continues; failures live in the record
        rec.status = f"error: {type(exc).__name__}: {exc}"
    return rec


def run_benchmark(cells: list[PlanCell], alpha: float = 0.05, workers: int = 1) -> list[BenchRecord]:
    """Execute a plan. ``workers > 1`` distributes (cell, seed, method) runs
    over processes; keep the default for clean timing measurements."""
    tasks = [
        (cell, seed, method, alpha)
        for cell in cells
        for seed in cell.seeds
        for method in cell.methods
    ]
    if workers <= 1:
        return [_run_single(*t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_single, *zip(*tasks)))


@dataclass
class AggregateRow:
    n: int
    n_samples: int
    family: str
    method: str
    cov: str                  # "cov1" | "cov2" | "cov" (pooled)
    mean_wall_ms: float
    mean_objective: float
    mean_gap: float
    n_runs: int


def aggregate_records(records: list[BenchRecord]) -> list[AggregateRow]:
    """Per-cell means over seeds, by covariance kind plus the pooled row.

    The pooled "cov" row is the grand mean; with equal seed counts per kind
    it equals the mean of the two per-kind aggregates.
    """
    groups: dict = {}
    for r in records:
        if r.status != "ok":
            continue
        groups.setdefault((r.n, r.n_samples, r.family, r.method), []).append(r)
    rows: list[AggregateRow] = []
    for (n, N, fam, method), recs in sorted(groups.items()):
        buckets = {"cov1": [], "cov2": []}
        for r in recs:
            buckets[r.cov].append(r)
        for kind in ("cov1", "cov2"):
            if buckets[kind]:
                rows.append(_mean_row(n, N, fam, method, kind, buckets[kind]))
        rows.append(_mean_row(n, N, fam, method, "cov", recs))
    return rows


def _mean_row(n, N, fam, method, kind, recs) -> AggregateRow:
    return AggregateRow(
        n=n, n_samples=N, family=fam, method=method, cov=kind,
        mean_wall_ms=float(np.mean([r.wall_ms for r in recs])),
        mean_objective=float(np.mean([r.objective for r in recs])),
        mean_gap=float(np.mean([r.gap for r in recs])),
        n_runs=len(recs),
    )


def write_records_csv(records: list[BenchRecord], path_or_file) -> None:
    if isinstance(path_or_file, (str, bytes)):
        with open(path_or_file, "w", encoding="utf-8", newline="") as fh:
            write_records_csv(records, fh)
            return
    writer = csv.writer(path_or_file)
    writer.writerow(["n", "N", "family", "cov", "method", "seed", "wall_ms", "objective", "gap", "status"])
    for r in records:
        writer.writerow(r.csv_row())


def write_aggregates_csv(rows: list[AggregateRow], path_or_file) -> None:
    if isinstance(path_or_file, (str, bytes)):
        with open(path_or_file, "w", encoding="utf-8", newline="") as fh:
            write_aggregates_csv(rows, fh)
            return
    writer = csv.writer(path_or_file)
    writer.writerow(["n", "N", "family", "method", "cov", "mean_wall_ms", "mean_objective", "mean_gap", "n_runs"])
    for r in rows:
        writer.writerow([
            r.n, r.n_samples, r.family, r.method, r.cov,
            f"{r.mean_wall_ms:.6g}", f"{r.mean_objective:.12g}", f"{r.mean_gap:.6g}", r.n_runs,
        ])
