"""Command-line interface.

Subcommands::

    gen         write a generated scenario CSV plus a JSON sidecar
    solve-evar  minimize EVaR over the simplex, print/write a solution JSON
    solve-cvar  minimize CVaR via LP (primal or dual route)
    eval-risk   VaR/CVaR/EVaR of a portfolio's loss on a scenario CSV
    bench       run a benchmark plan, write records and aggregate CSVs
    ingest      price CSV -> scenario CSV of overlapping returns
    compare     metric ratios and L1 distance between two solutions

All outputs are deterministic given (inputs, seed, flags); timing fields are
the only exception.  Errors exit nonzero with a message on stderr.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import bench as _bench
from . import cvar as _cvar
from . import evar as _evar
from . import ipm as _ipm
from .compare import compare_portfolios
from .measures import risk_report
from .prices import load_price_csv, prices_to_returns
from .sampling import generate_instance
from .scenarios import (
    portfolio_loss,
    read_scenario_csv,
    validate_portfolio,
    write_scenario_csv,
)

__all__ = ["main"]


def _write_json(doc: dict, out_path: str | None) -> None:
    text = json.dumps(doc, indent=2)
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _load_weights(arg_weights: str | None, arg_file: str | None, n: int) -> np.ndarray:
    if arg_weights and arg_file:
        raise SystemExit("pass either --weights or --weights-file, not both")
    if arg_weights:
        w = np.array([float(tok) for tok in arg_weights.split(",")])
    elif arg_file:
        with open(arg_file, "r", encoding="utf-8") as fh:
            w = np.array(json.load(fh)["weights"], dtype=float)
    else:
        w = np.full(n, 1.0 / n)
    return validate_portfolio(w).weights


def _add_common_solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--alpha", type=float, default=0.05, help="risk level (default 0.05)")
    p.add_argument("--mu", type=float, default=5.0, help="gap reduction factor (default 5)")
    p.add_argument("--tol", type=float, default=1e-6, help="solver tolerance (default 1e-6)")


def _build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="evarport", description=__doc__.split("\n")[0])
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a scenario CSV")
    p.add_argument("--n", type=int, required=True, help="instrument count")
    p.add_argument("--N", type=int, required=True, dest="n_samples", help="sample size")
    p.add_argument("--family", choices=("normal", "t"), default="normal")
    p.add_argument("--cov", choices=("cov1", "cov2"), default="cov1")
    p.add_argument("--dof", type=float, default=5.0, help="t degrees of freedom")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output CSV path (sidecar gets .json)")

    p = sub.add_parser("solve-evar", help="minimum-EVaR portfolio")
    p.add_argument("--scenarios", required=True)
    _add_common_solver_flags(p)
    p.add_argument("--min-return", type=float, default=None)
    p.add_argument("--out", default=None, help="solution JSON path (stdout otherwise)")
    p.add_argument("--trace", default=None, help="write the iteration trace CSV here")

    p = sub.add_parser("solve-cvar", help="minimum-CVaR portfolio")
    p.add_argument("--scenarios", required=True)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--method", choices=("primal_lp", "dual_lp"), default="dual_lp")
    p.add_argument("--out", default=None)

    p = sub.add_parser("eval-risk", help="VaR/CVaR/EVaR of a portfolio loss")
    p.add_argument("--scenarios", required=True)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--weights", default=None, help="comma-separated weights")
    p.add_argument("--weights-file", default=None, help="solution JSON with a 'weights' key")
    p.add_argument("--out", default=None)

    p = sub.add_parser("bench", help="run a benchmark plan")
    p.add_argument("--plan", required=True, help="plan JSON path")
    p.add_argument("--out", required=True, help="records CSV path (aggregates get _agg.csv)")
    p.add_argument("--workers", type=int, default=1, help="parallel worker processes (default sequential)")

    p = sub.add_parser("ingest", help="price CSV -> scenario CSV")
    p.add_argument("--prices", required=True)
    p.add_argument("--horizon", type=int, default=21, help="return horizon in rows (default 21)")
    p.add_argument("--out", required=True)

    p = sub.add_parser("compare", help="compare two solution JSONs on shared scenarios")
    p.add_argument("--scenarios", required=True)
    p.add_argument("--wa", required=True, help="solution JSON for portfolio A")
    p.add_argument("--wb", required=True, help="solution JSON for portfolio B")
    p.add_argument("--levels", default="0.99,0.95,0.90,0.85,0.80")
    p.add_argument("--out", default=None)
    return top


def _cmd_gen(args) -> int:
    scen = generate_instance(args.n, args.n_samples, args.family, args.cov, args.seed, args.dof)
    write_scenario_csv(scen, args.out)
    sidecar = {
        "n": args.n, "N": args.n_samples, "family": args.family,
        "cov": args.cov, "seed": args.seed, "rng": "philox",
    }
    if args.family == "t":
        sidecar["dof"] = args.dof
    _write_json(sidecar, args.out + ".json")
    return 0


def _cmd_solve_evar(args) -> int:
    scen = read_scenario_csv(args.scenarios)
    spec = _evar.EvarProblemSpec(scenarios=scen, alpha=args.alpha, min_return=args.min_return)
    params = _ipm.IpmParams(mu=args.mu, eps=args.tol, eps_feas=args.tol)
    sol = _evar.solve_evar_portfolio(spec, params)
    if args.trace:
        _ipm.write_trace_csv(list(sol.trace), args.trace)
    _write_json(sol.to_json_dict(), args.out)
    return 0


def _cmd_solve_cvar(args) -> int:
    scen = read_scenario_csv(args.scenarios)
    sol = _cvar.solve_cvar_portfolio(scen, args.alpha, method=args.method)
    doc = sol.to_json_dict()
    doc["cvar"] = sol.objective
    doc["pivots"] = sol.iterations
    _write_json(doc, args.out)
    return 0


def _cmd_eval_risk(args) -> int:
    scen = read_scenario_csv(args.scenarios)
    w = _load_weights(args.weights, args.weights_file, scen.n_assets)
    report = risk_report(portfolio_loss(w, scen), args.alpha)
    _write_json({
        "alpha": report.alpha,
        "var": report.var,
        "cvar": report.cvar,
        "evar": report.evar,
        "evar_t_star": report.evar_t_star,
        "evar_regime": report.evar_regime,
    }, args.out)
    return 0


def _cmd_bench(args) -> int:
    cells, alpha = _bench.load_plan(args.plan)
    records = _bench.run_benchmark(cells, alpha=alpha, workers=args.workers)
    _bench.write_records_csv(records, args.out)
    agg_path = args.out[:-4] + "_agg.csv" if args.out.endswith(".csv") else args.out + "_agg.csv"
    _bench.write_aggregates_csv(_bench.aggregate_records(records), agg_path)
    failures = [r for r in records if r.status != "ok"]
    for r in failures:
        print(f"warning: {r.method} n={r.n} N={r.n_samples} seed={r.seed}: {r.status}", file=sys.stderr)
    return 0


def _cmd_ingest(args) -> int:
    panel = load_price_csv(args.prices)
    scen = prices_to_returns(panel, horizon=args.horizon)
    write_scenario_csv(scen, args.out)
    filled = dict(zip(panel.names, panel.n_interpolated))
    total = sum(panel.n_interpolated)
    print(f"ingested {scen.n_scenarios} scenarios x {scen.n_assets} assets "
          f"({total} interpolated cells)", file=sys.stderr)
    if total:
        detail = ", ".join(f"{k}: {v}" for k, v in filled.items() if v)
        print(f"interpolations by asset: {detail}", file=sys.stderr)
    return 0


def _cmd_compare(args) -> int:
    scen = read_scenario_csv(args.scenarios)
    wa = _load_weights(None, args.wa, scen.n_assets)
    wb = _load_weights(None, args.wb, scen.n_assets)
    levels = tuple(float(tok) for tok in args.levels.split(","))
    report = compare_portfolios(wa, wb, scen, var_levels=levels)
    _write_json(report.to_json_dict(), args.out)
    return 0


_COMMANDS = {
    "gen": _cmd_gen,
    "solve-evar": _cmd_solve_evar,
    "solve-cvar": _cmd_solve_cvar,
    "eval-risk": _cmd_eval_risk,
    "bench": _cmd_bench,
    "ingest": _cmd_ingest,
    "compare": _cmd_compare,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ValueError, OSError, RuntimeError, MemoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
