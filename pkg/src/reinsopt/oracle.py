"""Independent Monte-Carlo and brute-force verification of the closed forms.

Nothing in here reuses the closed-form truncated moments: functionals are
estimated by plain averaging over exact lognormal draws of the terminal
kernel, and optimality is checked by maximizing the per-outcome penalized
objective over a dense grid of candidate terminal values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .calibrate import bisect_root, _grow_until_negative, calibrate_strict
from .design import (
    CalibratedDesign,
    ConstraintSpec,
    branches,
    budget_value,
    expected_shortfall_p,
    expected_shortfall_q,
    payoff,
    prob_above_floor,
)
from .errors import InfeasibleError, InvalidParams
from .kernel import ModelParams

FUNCTIONAL_KINDS = ("budget", "utility", "prob_floor", "es_p", "es_q")


@dataclass(frozen=True)
class McEstimate:
    """Monte-Carlo point estimate with its standard error."""

    mean: float
    stderr: float
    n: int
    seed: int

    def within(self, target: float, n_se: float = 3.0) -> bool:
        return abs(self.mean - target) <= n_se * self.stderr


def sample_terminal_kernel(params: ModelParams, n: int, seed: int) -> np.ndarray:
    """Exact draws of Z_T = exp(-beta^2 T / 2 + beta sqrt(T) xi)."""
    rng = np.random.default_rng(seed)
    xi = rng.standard_normal(n)
    beta, T = params.beta, params.T
    return np.exp(-0.5 * beta * beta * T + beta * math.sqrt(T) * xi)


def _functional_samples(kind: str, design: CalibratedDesign, params: ModelParams,
                        z: np.ndarray) -> np.ndarray:
    pay = payoff(design, params, z)
    if kind == "budget":
        return z * pay
    if kind == "utility":
        return -0.5 * np.square(params.k - pay)
    floor = branches(design, params).floor
    if floor is None:
        raise InvalidParams("design has no floor to measure against")
    if kind == "prob_floor":
        return (pay >= floor).astype(float)
    if kind == "es_p":
        return np.maximum(floor - pay, 0.0)
    if kind == "es_q":
        return z * np.maximum(floor - pay, 0.0)
    raise InvalidParams(f"unknown functional kind {kind!r}")


def mc_functional(kind: str, design: CalibratedDesign, params: ModelParams,
                  n: int, seed: int) -> McEstimate:
    """Plain Monte-Carlo estimate of a design functional over Z_T draws."""
    if n < 1000:
        raise InvalidParams(f"need n >= 1000 samples, got {n}")
    z = sample_terminal_kernel(params, n, seed)
    s = _functional_samples(kind, design, params, z)
    return McEstimate(mean=float(s.mean()), stderr=float(s.std(ddof=1) / math.sqrt(n)),
                      n=n, seed=seed)


def mc_wealth(design: CalibratedDesign, params: ModelParams, t: float, z: float,
              n: int, seed: int) -> McEstimate:
    """MC estimate of the conditional wealth E[(Z_T / Z_t) X_T | Z_t = z].

    The increment Z_T / Z_t is an independent copy of Z_{T-t}, so the
    estimate needs no path simulation.
    """
    if not 0.0 <= t < params.T:
        raise InvalidParams("need 0 <= t < T")
    rng = np.random.default_rng(seed)
    tau = params.T - t
    beta = params.beta
    zz = np.exp(-0.5 * beta * beta * tau + beta * math.sqrt(tau) * rng.standard_normal(n))
    s = zz * payoff(design, params, z * zz)
    return McEstimate(mean=float(s.mean()), stderr=float(s.std(ddof=1) / math.sqrt(n)),
                      n=n, seed=seed)


@dataclass(frozen=True)
class OptimalityReport:
    passed: bool
    max_violation: float
    tol: float


def _lagrangian(design: CalibratedDesign, params: ModelParams,
                z_col: np.ndarray, b_row: np.ndarray) -> np.ndarray:
    """Per-outcome penalized objective f(B; z) on the (z, B) grid."""
    lam = design.lam
    base = -0.5 * np.square(params.k - b_row) - lam * (z_col * b_row - params.x)
    family = design.family
    if family in ("U", "C"):
        return base
    if design.multiplier is None:
        raise InvalidParams("design carries no multiplier data for optimality checks")
    mult = design.multiplier
    C = design.floor
    cons = design.constraint
    if family == "P":
        eps = cons.epsilon if cons is not None and cons.epsilon is not None else 0.0
        return base + mult * ((b_row >= C).astype(float) - (1.0 - eps))
    nu = cons.nu if cons is not None and cons.nu is not None else 0.0
    shortfall = np.maximum(C - b_row, 0.0)
    if family == "E":
        return base - mult * (shortfall - nu)
    return base - mult * (z_col * shortfall - nu)  # family Q


def pointwise_optimality_check(design: CalibratedDesign, params: ModelParams,
                               z_grid, b_grid, tol: float = 1e-9) -> OptimalityReport:
    """Grid search confirming the payoff maximizes f(B; z) at every z.

    The candidate grid is restricted to B <= k (and to B >= C for the
    strict family, where the floor is a hard support constraint).  The
    payoff attains the continuum maximum, so the grid maximum may never
    exceed it by more than roundoff.
    """
    z_col = np.asarray(z_grid, dtype=float).reshape(-1, 1)
    b_row = np.asarray(b_grid, dtype=float)
    b_row = b_row[b_row <= params.k]
    if design.family == "C":
        b_row = b_row[b_row >= design.floor]
    if b_row.size == 0:
        raise InvalidParams("candidate grid is empty after support restriction")
    b_row = b_row.reshape(1, -1)
    grid_max = _lagrangian(design, params, z_col, b_row).max(axis=1)
    pay = payoff(design, params, z_col.ravel())
    at_payoff = np.diagonal(_lagrangian(design, params, z_col, pay.reshape(1, -1)))
    max_violation = float((grid_max - at_payoff).max())
    return OptimalityReport(passed=max_violation <= tol, max_violation=max_violation,
                            tol=tol)


def _resolve_budget_lambda(family: str, second: float, floor: float,
                           params: ModelParams, constraint: ConstraintSpec | None,
                           ) -> CalibratedDesign:
    """Re-solve lam so a perturbed (family, second) pair is budget-exact."""

    def make(lam: float) -> CalibratedDesign:
        return CalibratedDesign(family=family, lam=lam, second=second, floor=floor,
                                constraint=constraint)

    def residual(lam: float) -> float:
        return budget_value(make(lam), params) - params.x

    lo = second if family == "Q" else 1e-300
    if family == "Q" and residual(lo) < 0.0:
        raise InfeasibleError("no budget-exact slope above delta")
    hi = _grow_until_negative(residual, max(2.0 * abs(lo), 1.0), what="rival budget")
    return make(bisect_root(residual, lo, hi))


def _is_feasible(design: CalibratedDesign, params: ModelParams,
                 regime: ConstraintSpec, slack: float = 1e-9) -> bool:
    if abs(budget_value(design, params) - params.x) > 1e-6:
        return False
    kind = regime.kind
    if kind == "unconstrained":
        return True
    C = regime.floor(params)
    br = branches(design, params)
    if br.floor is None or br.floor < C - slack:
        return False
    if kind == "strict":
        return math.isinf(br.z_hi)
    if kind == "var":
        return prob_above_floor(design, params) >= 1.0 - regime.epsilon - slack
    if kind == "es_p":
        return expected_shortfall_p(design, params) <= regime.nu + slack
    return expected_shortfall_q(design, params) <= regime.nu + slack


_PERTURB_FACTORS = (0.80, 0.85, 0.90, 0.95, 1.05, 1.10, 1.15, 1.20, 1.25)
_FLOOR_FRACTIONS = tuple(i / 20.0 for i in range(1, 20))


def generate_rivals(design: CalibratedDesign, params: ModelParams,
                    count: int = 24) -> tuple[CalibratedDesign, ...]:
    """Budget-exact, constraint-feasible rivals for a calibrated design.

    Candidates come from two deterministic sources: hard-floor designs at
    floors laddered between the regime floor and x (feasible under every
    regime), and same-family designs with the second parameter perturbed
    multiplicatively and lam re-solved to restore the budget.  Infeasible
    candidates are dropped.
    """
    regime = design.constraint
    if regime is None:
        raise InvalidParams("design carries no constraint specification")
    floor = design.floor if design.floor is not None else params.x - 1.0
    candidates: list[CalibratedDesign] = [design]
    for frac in _FLOOR_FRACTIONS:
        c_floor = floor + frac * (params.x - floor)
        if c_floor >= params.x:
            continue
        try:
            candidates.append(calibrate_strict(params, c_floor))
        except InfeasibleError:
            continue
    if design.second is not None and design.binding:
        for fac in _PERTURB_FACTORS:
            try:
                candidates.append(
                    _resolve_budget_lambda(design.family, design.second * fac,
                                           design.floor, params, regime)
                )
            except (InfeasibleError, InvalidParams):
                continue
    feasible = [d for d in candidates if _is_feasible(d, params, regime)]
    return tuple(feasible[:count])


@dataclass(frozen=True)
class DominanceReport:
    passed: bool
    n_rivals: int
    n_skipped: int
    worst_margin: float  # min over rivals of mean(u_design - u_rival) + 3 se


def utility_dominance_check(design: CalibratedDesign, params: ModelParams,
                            rivals=None, n: int = 200_000, seed: int = 0,
                            ) -> DominanceReport:
    """MC check that no feasible rival beats the design's expected utility.

    Rivals and the design are evaluated on common random numbers, so the
    comparison error is the standard error of the pathwise utility
    difference; each rival must satisfy mean(diff) >= -3 se.
    """
    if rivals is None:
        rivals = generate_rivals(design, params)
    regime = design.constraint
    z = sample_terminal_kernel(params, n, seed)
    u_design = -0.5 * np.square(params.k - payoff(design, params, z))
    margins = []
    skipped = 0
    for rival in rivals:
        if regime is not None and not _is_feasible(rival, params, regime):
            skipped += 1
            continue
        diff = u_design + 0.5 * np.square(params.k - payoff(rival, params, z))
        se = float(diff.std(ddof=1) / math.sqrt(n))
        margins.append(float(diff.mean()) + 3.0 * se)
    if not margins:
        raise InfeasibleError("no feasible rivals to compare against")
    worst = min(margins)
    return DominanceReport(passed=worst >= 0.0, n_rivals=len(margins),
                           n_skipped=skipped, worst_margin=worst)
