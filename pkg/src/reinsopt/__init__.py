"""Optimal proportional reinsurance under solvency constraints.

Calibrates the terminal-wealth design that maximizes quadratic utility of
the insurance surplus subject to one of five solvency regimes (none,
strict floor, tail probability, expected shortfall under the real-world
or the kernel measure), reconstructs the optimally controlled surplus
path and reinsurance proportion over time, and verifies every closed form
against an independent Monte-Carlo oracle.
"""

from .calibrate import (
    calibrate,
    calibrate_es_p,
    calibrate_es_q,
    calibrate_strict,
    calibrate_unconstrained,
    calibrate_var,
    check_unconstrained_feasible,
)
from .config import RunConfig, default_config, load_config, parse_config, serialize_config
from .design import (
    REGIMES,
    CalibratedDesign,
    ConstraintSpec,
    branches,
    budget_value,
    expected_shortfall_p,
    expected_shortfall_q,
    payoff,
    prob_above_floor,
)
from .errors import ConfigError, InfeasibleError, InvalidParams, ReinsoptError
from .kernel import (
    Interval,
    ModelParams,
    kernel_f,
    kernel_g,
    kernel_h,
    kernel_m,
    kernel_zfz,
    kernel_zhz,
    std_normal_cdf,
    std_normal_quantile,
    z_cdf,
    z_moment1,
    z_moment2,
)
from .oracle import (
    McEstimate,
    mc_functional,
    mc_wealth,
    pointwise_optimality_check,
    sample_terminal_kernel,
    utility_dominance_check,
)
from .paths import (
    PathCoefficients,
    PathTrace,
    controlled_trace,
    path_coefficients,
    proportion_at,
    simulate_brownian,
    wealth_at,
)

__version__ = "0.1.0"

__all__ = [
    "CalibratedDesign",
    "ConfigError",
    "ConstraintSpec",
    "InfeasibleError",
    "Interval",
    "InvalidParams",
    "McEstimate",
    "ModelParams",
    "PathCoefficients",
    "PathTrace",
    "REGIMES",
    "ReinsoptError",
    "RunConfig",
    "branches",
    "budget_value",
    "calibrate",
    "calibrate_es_p",
    "calibrate_es_q",
    "calibrate_strict",
    "calibrate_unconstrained",
    "calibrate_var",
    "check_unconstrained_feasible",
    "controlled_trace",
    "default_config",
    "expected_shortfall_p",
    "expected_shortfall_q",
    "kernel_f",
    "kernel_g",
    "kernel_h",
    "kernel_m",
    "kernel_zfz",
    "kernel_zhz",
    "load_config",
    "mc_functional",
    "mc_wealth",
    "parse_config",
    "path_coefficients",
    "payoff",
    "pointwise_optimality_check",
    "prob_above_floor",
    "proportion_at",
    "sample_terminal_kernel",
    "serialize_config",
    "simulate_brownian",
    "std_normal_cdf",
    "std_normal_quantile",
    "utility_dominance_check",
    "wealth_at",
    "z_cdf",
    "z_moment1",
    "z_moment2",
]
