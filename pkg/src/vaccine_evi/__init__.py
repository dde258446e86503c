"""Equilibria of the time-dependent vaccination game and their Lagrange multipliers."""

from .duality import (
    DualityReport,
    MultiplierPair,
    Regime,
    RegimeClassification,
    SignConditionError,
    check_sign_conditions,
    classify_regimes,
    complementarity_check,
    dual_grid_oracle,
    duality_gap,
    duality_report,
    extract_multipliers,
    kkt_residual,
    lagrangian_value,
    saddle_point_check,
)
from .evi_solver import (
    NoCertifiedSolution,
    SliceDiagnostics,
    SolverParams,
    StrategyProfile,
    TimeGrid,
    check_k_pseudomonotone,
    evi_value,
    evi_values,
    natural_residual,
    solve_profile,
    solve_slice,
)
from .model import (
    DomainError,
    FunctionSpec,
    GameModel,
    GroupSpec,
    PiModel,
    ValidationError,
    coverage,
    eval_grad,
    eval_payoff,
    eval_pi,
    fd_gradient_check,
    validate_model,
)
from .oracle import OracleParams, best_response, equilibrium_oracle, nash_check
from .scenario_io import (
    Scenario,
    ScenarioError,
    load_scenario,
    parse_scenario,
    serialize_scenario,
    write_report,
    write_timeseries_csv,
)

__version__ = "0.1.0"
