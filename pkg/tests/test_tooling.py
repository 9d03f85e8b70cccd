import csv
import io
import json

import numpy as np
import pytest

from evarport.bench import (
    PlanCell,
    aggregate_records,
    compute_gap,
    load_plan,
    run_benchmark,
    write_aggregates_csv,
    write_records_csv,
)
from evarport.cli import main
from evarport.compare import compare_portfolios
from evarport.cvar import solve_cvar_portfolio
from evarport.evar import EvarProblemSpec, solve_evar_portfolio
from evarport.sampling import generate_instance
from evarport.scenarios import build_scenario_set, read_scenario_csv, write_scenario_csv


class TestComparePortfolios:
    def test_identity_row(self):
        scen = generate_instance(3, 200, "normal", "cov1", seed=1)
        w = np.array([0.2, 0.3, 0.5])
        rep = compare_portfolios(w, w, scen)
        assert rep.mean_ratio == 1.0 and rep.sd_ratio == 1.0
        assert all(r == 1.0 for _, r in rep.var_ratios)
        assert rep.distance == 0.0

    def test_disjoint_vertices_distance(self):
        scen = generate_instance(2, 50, "normal", "cov1", seed=2)
        rep = compare_portfolios(np.array([1.0, 0.0]), np.array([0.0, 1.0]), scen)
        assert rep.distance == pytest.approx(2.0)

    def test_near_zero_denominator_undefined(self):
        scen = build_scenario_set([[0.0, 0.1], [0.0, -0.1]])  # asset 1 always 0
        rep = compare_portfolios(np.array([0.0, 1.0]), np.array([1.0, 0.0]), scen)
        assert rep.mean_ratio is None

    def test_dimension_mismatch(self):
        scen = generate_instance(3, 20, "normal", "cov1", seed=3)
        with pytest.raises(ValueError):
            compare_portfolios(np.array([0.5, 0.5]), np.array([1 / 3] * 3), scen)


class TestComputeGap:
    def test_cvar_gap_zero_against_own_oracle(self):
        scen = generate_instance(3, 150, "normal", "cov2", seed=4)
        sol = solve_cvar_portfolio(scen, 0.05, method="dual_lp")
        gap, kind = compute_gap(sol.objective, scen, 0.05, "cvar_dual_lp")
        assert kind == "dual_lp" and gap <= 1e-8

    def test_cvar_primal_gap_small(self):
        scen = generate_instance(2, 100, "normal", "cov1", seed=5)
        sol = solve_cvar_portfolio(scen, 0.05, method="primal_lp")
        gap, kind = compute_gap(sol.objective, scen, 0.05, "cvar_primal_lp")
        assert gap <= 1e-8

    def test_evar_grid_gap_small_n(self):
        scen = generate_instance(2, 400, "normal", "cov1", seed=6)
        sol = solve_evar_portfolio(EvarProblemSpec(scenarios=scen, alpha=0.05))
        gap, kind = compute_gap(sol.objective, scen, 0.05, "evar_pd")
        assert kind == "grid" and gap <= 1e-4

    def test_evar_large_n_reports_bound(self):
        scen = generate_instance(6, 100, "normal", "cov1", seed=7)
        gap, kind = compute_gap(1.0, scen, 0.05, "evar_pd")
        assert kind == "eta_bound" and np.isnan(gap)


class TestRunBenchmark:
    def test_record_counts_and_aggregates(self):
        cells = [
            PlanCell(n=2, n_samples=120, family="normal", cov="cov1",
                     seeds=(1, 2), methods=("evar_pd", "cvar_dual_lp")),
            PlanCell(n=2, n_samples=120, family="normal", cov="cov2",
                     seeds=(1, 2), methods=("evar_pd", "cvar_dual_lp")),
        ]
        records = run_benchmark(cells, alpha=0.05)
        assert len(records) == 8
        assert all(r.status == "ok" for r in records)
        agg = aggregate_records(records)
        # per method: cov1, cov2, pooled
        assert len(agg) == 6
        pooled = {(a.method, a.cov): a for a in agg}
        for method in ("evar_pd", "cvar_dual_lp"):
            c1 = pooled[(method, "cov1")].mean_wall_ms
            c2 = pooled[(method, "cov2")].mean_wall_ms
            cv = pooled[(method, "cov")].mean_wall_ms
            assert cv == pytest.approx(0.5 * (c1 + c2), rel=1e-12)

    def test_failure_recorded_run_continues(self):
        cells = [
            PlanCell(n=2, n_samples=40_000, family="normal", cov="cov1",
                     seeds=(1,), methods=("cvar_primal_lp",)),   # memory guard trips
            PlanCell(n=2, n_samples=60, family="normal", cov="cov1",
                     seeds=(1,), methods=("evar_pd",)),
        ]
        records = run_benchmark(cells, alpha=0.05)
        assert records[0].status.startswith("error")
        assert records[1].status == "ok"

    def test_records_csv_schema(self):
        cells = [PlanCell(n=2, n_samples=60, family="t", cov="cov1", seeds=(3,), methods=("evar_pd",))]
        records = run_benchmark(cells)
        buf = io.StringIO()
        write_records_csv(records, buf)
        rows = list(csv.reader(io.StringIO(buf.getvalue())))
        assert rows[0] == ["n", "N", "family", "cov", "method", "seed", "wall_ms", "objective", "gap", "status"]
        assert len(rows) == 2

    def test_aggregates_csv(self):
        cells = [PlanCell(n=2, n_samples=60, family="t", cov="cov2", seeds=(3, 4), methods=("evar_pd",))]
        rows = aggregate_records(run_benchmark(cells))
        buf = io.StringIO()
        write_aggregates_csv(rows, buf)
        out = list(csv.reader(io.StringIO(buf.getvalue())))
        assert out[0][0] == "n" and len(out) == 3   # cov2 + pooled rows

    def test_plan_loading(self):
        doc = {"alpha": 0.1, "cells": [
            {"n": 3, "N": 50, "family": "normal", "cov": "cov1", "seeds": [1], "methods": ["evar_pd"]},
        ]}
        cells, alpha = load_plan(io.StringIO(json.dumps(doc)))
        assert alpha == 0.1 and cells[0].n == 3

    def test_parallel_workers_match_sequential(self):
        cells = [PlanCell(n=2, n_samples=80, family="normal", cov="cov1",
                          seeds=(5, 6), methods=("evar_pd",))]
        seq = run_benchmark(cells, workers=1)
        par = run_benchmark(cells, workers=2)
        for a, b in zip(seq, par):
            assert a.objective == pytest.approx(b.objective, abs=0)


class TestCli:
    def test_eval_risk_constant_loss(self, tmp_path, capsys):
        scen_path = tmp_path / "const.csv"
        scen_path.write_text("p,r1\n0.5,-0.3\n0.5,-0.3\n")
        out = tmp_path / "risk.json"
        rc = main(["eval-risk", "--scenarios", str(scen_path), "--weights", "1.0",
                   "--alpha", "0.05", "--out", str(out)])
        assert rc == 0
        doc = json.loads(out.read_text())
        assert doc["var"] == doc["cvar"] == doc["evar"] == pytest.approx(0.3)
        assert doc["evar_regime"] == "esssup"

    def test_solve_evar_alpha_one_picks_best_mean(self, tmp_path):
        rng = np.random.default_rng(31)
        returns = rng.normal(0.0, 0.02, size=(300, 3)) + np.array([0.001, 0.006, 0.002])
        scen = build_scenario_set(returns)
        scen_path = tmp_path / "scen.csv"
        write_scenario_csv(scen, str(scen_path))
        out = tmp_path / "sol.json"
        rc = main(["solve-evar", "--scenarios", str(scen_path), "--alpha", "1.0", "--out", str(out)])
        assert rc == 0
        doc = json.loads(out.read_text())
        w = np.array(doc["weights"])
        assert int(np.argmax(w)) == int(np.argmax(scen.mean_returns()))
        assert w.max() >= 1.0 - 1e-4

    def test_gen_solve_compare_pipeline(self, tmp_path):
        scen_path = tmp_path / "gen.csv"
        rc = main(["gen", "--n", "2", "--N", "300", "--family", "normal", "--cov", "cov1",
                   "--seed", "5", "--out", str(scen_path)])
        assert rc == 0
        sidecar = json.loads((tmp_path / "gen.csv.json").read_text())
        assert sidecar["seed"] == 5 and sidecar["rng"] == "philox"

        evar_out = tmp_path / "evar.json"
        cvar_out = tmp_path / "cvar.json"
        assert main(["solve-evar", "--scenarios", str(scen_path), "--out", str(evar_out)]) == 0
        assert main(["solve-cvar", "--scenarios", str(scen_path), "--out", str(cvar_out)]) == 0
        cmp_out = tmp_path / "cmp.json"
        assert main(["compare", "--scenarios", str(scen_path), "--wa", str(evar_out),
                     "--wb", str(cvar_out), "--out", str(cmp_out)]) == 0
        rep = json.loads(cmp_out.read_text())
        assert rep["portfolio_distance"] >= 0.0
        assert set(rep["var_ratios"]) == {"0.99", "0.95", "0.9", "0.85", "0.8"}

    def test_gen_reproducible_bitwise(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        argv = ["gen", "--n", "3", "--N", "50", "--family", "t", "--cov", "cov2", "--seed", "9"]
        assert main(argv + ["--out", str(a)]) == 0
        assert main(argv + ["--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_solve_deterministic_modulo_timing(self, tmp_path):
        scen_path = tmp_path / "s.csv"
        main(["gen", "--n", "2", "--N", "200", "--family", "normal", "--cov", "cov1",
              "--seed", "3", "--out", str(scen_path)])
        outs = []
        for name in ("x.json", "y.json"):
            out = tmp_path / name
            main(["solve-evar", "--scenarios", str(scen_path), "--out", str(out)])
            doc = json.loads(out.read_text())
            doc.pop("wall_ms")
            outs.append(doc)
        assert outs[0] == outs[1]

    def test_bench_cli(self, tmp_path):
        plan = tmp_path / "plan.json"
        plan.write_text(json.dumps({"alpha": 0.05, "cells": [
            {"n": 2, "N": 60, "family": "normal", "cov": "cov1",
             "seeds": [1, 2], "methods": ["evar_pd", "cvar_dual_lp"]},
        ]}))
        out = tmp_path / "bench.csv"
        assert main(["bench", "--plan", str(plan), "--out", str(out)]) == 0
        rows = list(csv.reader(io.StringIO(out.read_text())))
        assert rows[0] == ["n", "N", "family", "cov", "method", "seed", "wall_ms", "objective", "gap", "status"]
        assert len(rows) == 5
        assert (tmp_path / "bench_agg.csv").exists()

    def test_ingest_cli(self, tmp_path):
        out = tmp_path / "scen.csv"
        rc = main(["ingest", "--prices", "tests/data/synthetic_prices_20.csv",
                   "--horizon", "21", "--out", str(out)])
        assert rc == 0
        scen = read_scenario_csv(str(out))
        assert scen.n_assets == 20 and scen.n_scenarios > 300

    def test_error_exit_nonzero(self, tmp_path, capsys):
        rc = main(["solve-evar", "--scenarios", str(tmp_path / "missing.csv")])
        assert rc == 1
        assert "error:" in capsys.readouterr().err

    def test_min_return_flag(self, tmp_path):
        rng = np.random.default_rng(33)
        returns = rng.normal(0.002, 0.02, size=(200, 2)) + np.array([0.0, 0.004])
        scen = build_scenario_set(returns)
        scen_path = tmp_path / "s.csv"
        write_scenario_csv(scen, str(scen_path))
        out = tmp_path / "sol.json"
        r_min = float(scen.mean_returns().mean())
        rc = main(["solve-evar", "--scenarios", str(scen_path), "--min-return", str(r_min),
                   "--out", str(out)])
        assert rc == 0
        w = np.array(json.loads(out.read_text())["weights"])
        assert float(scen.mean_returns() @ w) >= r_min - 1e-8
