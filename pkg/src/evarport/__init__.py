"""Portfolio optimization with the entropic value-at-risk.

Core pieces: risk measures on discrete loss samples (VaR, CVaR, EVaR), a
primal-dual interior-point solver for smooth convex programs, the EVaR
portfolio program with closed-form derivatives, CVaR linear-programming
baselines on a bounded-variable dense simplex, seeded scenario generation,
and benchmarking/ingestion tooling exposed through the ``evarport`` CLI.
"""

from .scenarios import (
    ScenarioSet,
    Portfolio,
    LossSample,
    build_scenario_set,
    portfolio_loss,
    validate_portfolio,
    read_scenario_csv,
    write_scenario_csv,
)
from .measures import (
    var_sample,
    cvar_sample,
    evar_sample,
    evar_objective_1d,
    EvarResult,
    risk_normal_closed_form,
    risk_report,
    RiskReport,
    monotonicity_counterexample,
)
from .ipm import (
    ConvexProgram,
    IpmParams,
    IpmSolution,
    IpmError,
    solve as ipm_solve,
    phase1,
)
from .evar import (
    EvarProblemSpec,
    PortfolioSolution,
    solve_evar_portfolio,
    evar_objective,
    evar_gradient,
    evar_hessian,
    assemble_program,
    lse,
)
from .cvar import (
    build_primal_lp,
    build_dual_lp,
    cvar_nondiff_objective,
    solve_cvar_portfolio,
)
from .simplex import LinearProgram, LpSolution, simplex_solve, write_lp_text
from .sampling import gen_cov1, gen_cov2, sample_mvn, sample_mvt
from .estimators import EvarPortfolio, CvarPortfolio

__version__ = "0.1.0"

__all__ = [
    "ScenarioSet",
    "Portfolio",
    "LossSample",
    "build_scenario_set",
    "portfolio_loss",
    "validate_portfolio",
    "read_scenario_csv",
    "write_scenario_csv",
    "var_sample",
    "cvar_sample",
    "evar_sample",
    "evar_objective_1d",
    "EvarResult",
    "risk_normal_closed_form",
    "risk_report",
    "RiskReport",
    "monotonicity_counterexample",
    "ConvexProgram",
    "IpmParams",
    "IpmSolution",
    "IpmError",
    "ipm_solve",
    "phase1",
    "EvarProblemSpec",
    "PortfolioSolution",
    "solve_evar_portfolio",
    "evar_objective",
    "evar_gradient",
    "evar_hessian",
    "assemble_program",
    "lse",
    "build_primal_lp",
    "build_dual_lp",
    "cvar_nondiff_objective",
    "solve_cvar_portfolio",
    "LinearProgram",
    "LpSolution",
    "simplex_solve",
    "write_lp_text",
    "gen_cov1",
    "gen_cov2",
    "sample_mvn",
    "sample_mvt",
    "EvarPortfolio",
    "CvarPortfolio",
]
