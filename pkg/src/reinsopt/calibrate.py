"""Calibration of the optimal design for each solvency regime.

Every regime reduces to one or two scalar root-finds: parameters are set
so that the budget E[Z_T X_T] equals the initial capital x and the
regime's constraint binds.  Brackets come straight from the monotonicity
facts that guarantee existence (budgets decrease in lam with known
limits), grown geometrically when an endpoint is not known a priori, and
are refined by plain bisection to interval width 1e-12.  The policy is
fixed, so identical inputs give bit-identical parameters.

If the unconstrained optimum already satisfies the requested constraint,
the regime returns that optimum tagged with the requested family in
degenerate form (c = C, gamma = 0, or delta = lam) with multiplier zero
and ``binding = False``.
"""

from __future__ import annotations

import math
from typing import Callable

from .design import (
    CalibratedDesign,
    ConstraintSpec,
    budget_value,
    expected_shortfall_p,
    expected_shortfall_q,
    prob_above_floor,
)
from .errors import InfeasibleError
from .kernel import ModelParams, kernel_f, std_normal_quantile, z_cdf

BISECT_WIDTH = 1e-12
BISECT_MAX_ITER = 200
_TINY = 1e-300


def bisect_root(
    fn: Callable[[float], float],
    lo: float,
    hi: float,
    *,
    xtol: float = BISECT_WIDTH,
    max_iter: int = BISECT_MAX_ITER,
) -> float:
    """Bisection on a bracketing interval, refined to width ``xtol``."""
    flo = fn(lo)
    if flo == 0.0:
        return lo
    fhi = fn(hi)
    if fhi == 0.0:
        return hi
    if (flo > 0.0) == (fhi > 0.0):
        raise InfeasibleError(f"no sign change on bracket [{lo}, {hi}]")
    for _ in range(max_iter):
        if hi - lo <= xtol:
            break
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break  # interval no longer splittable in floating point
        fm = fn(mid)
        if fm == 0.0:
            return mid
        if (fm > 0.0) == (flo > 0.0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _grow_until_negative(fn: Callable[[float], float], hi: float, *, factor: float = 2.0,
                         max_steps: int = 256, what: str = "bracket") -> float:
    for _ in range(max_steps):
        if fn(hi) < 0.0:
            return hi
        hi *= factor
    raise InfeasibleError(f"could not bracket the {what} root by geometric growth")


def _constraint_for(kind: str, params: ModelParams, C: float | None,
                    epsilon: float | None = None, nu: float | None = None) -> ConstraintSpec:
    if kind == "unconstrained":
        return ConstraintSpec("unconstrained")
    C_tilde = C + (params.a - params.b) * params.T
    return ConstraintSpec(kind, C_tilde=C_tilde, epsilon=epsilon, nu=nu)


def _unconstrained_lambda(params: ModelParams) -> float:
    """Root of the floorless budget, bisected and checked against k - lam e^{b^2 T} = x."""
    k, x = params.k, params.x
    m2 = math.exp(params.beta * params.beta * params.T)

    def residual(lam: float) -> float:
        return (k - lam * m2) - x

    hi = _grow_until_negative(residual, 1.0, what="unconstrained budget")
    lam = bisect_root(residual, _TINY, hi)
    closed = (k - x) * math.exp(-params.beta * params.beta * params.T)
    if abs(lam - closed) > 1e-10:
        raise InfeasibleError(
            f"root finder drifted from the affine budget solution: {lam} vs {closed}"
        )
    return lam


def calibrate_unconstrained(params: ModelParams,
                            constraint: ConstraintSpec | None = None) -> CalibratedDesign:
    """Solve the budget for the affine design k - lam Z_T.

    The budget is k - lam e^{beta^2 T}, strictly decreasing from k > x,
    so the root exists and is unique whenever x < k.
    """
    cons = constraint if constraint is not None else ConstraintSpec("unconstrained")
    floor = cons.floor(params) if cons.C_tilde is not None else None
    lam = _unconstrained_lambda(params)
    return CalibratedDesign(
        family="U", lam=lam, floor=floor, constraint=cons, binding=False,
    )


def check_unconstrained_feasible(constraint: ConstraintSpec, params: ModelParams) -> bool:
    """True when the unconstrained optimum already satisfies the constraint.

    A strict floor can never hold surely under an affine payoff, so the
    strict regime always reports False.
    """
    if constraint.kind == "unconstrained":
        return True
    if constraint.kind == "strict":
        return False
    u = calibrate_unconstrained(params, constraint)
    if constraint.kind == "var":
        return prob_above_floor(u, params) >= 1.0 - constraint.epsilon
    if constraint.kind == "es_p":
        return expected_shortfall_p(u, params) <= constraint.nu
    return expected_shortfall_q(u, params) <= constraint.nu


def _degenerate_from_unconstrained(kind: str, params: ModelParams,
                                   cons: ConstraintSpec) -> CalibratedDesign:
    # Unconstrained optimum re-tagged with the regime's family; the flat
    # segment collapses so the payoff is unchanged and the multiplier is 0.
    C = cons.floor(params)
    lam = _unconstrained_lambda(params)
    second = {"var": C, "es_p": 0.0, "es_q": lam}[kind]
    family = {"var": "P", "es_p": "E", "es_q": "Q"}[kind]
    return CalibratedDesign(
        family=family, lam=lam, second=second, floor=C,
        constraint=cons, multiplier=0.0, binding=False,
    )


def calibrate_strict(params: ModelParams, C: float) -> CalibratedDesign:
    """Solve the budget for max(k - lam Z_T, C); needs C < x < k.

    The floored budget decreases in lam from k toward C, so a sign change
    always exists once the upper endpoint is grown past the root.
    """
    if params.x <= C:
        raise InfeasibleError(
            f"strict floor C={C} requires x > C, got x={params.x}", stage="feasibility"
        )
    cons = _constraint_for("strict", params, C)

    def residual(lam: float) -> float:
        d = CalibratedDesign(family="C", lam=lam, floor=C, constraint=cons)
        return budget_value(d, params) - params.x

    seed = (params.k - params.x) * math.exp(-params.beta * params.beta * params.T)
    hi = _grow_until_negative(residual, max(2.0 * seed, 1.0), what="strict budget")
    lam = bisect_root(residual, _TINY, hi)
    return CalibratedDesign(family="C", lam=lam, floor=C, constraint=cons)


def calibrate_var(params: ModelParams, C: float, epsilon: float) -> CalibratedDesign:
    """Calibrate the tail-probability design.

    The binding probability fixes the jump location in kernel space,
    g2 = exp(-beta^2 T / 2 - beta sqrt(T) q(1 - epsilon)), after which the
    budget is solved for g1 in (0, g2]; lam = (k - C)/g1 and c = k - lam g2
    recover the payoff parameters.
    """
    if params.x < C:
        raise InfeasibleError(f"var regime requires x >= C, got x={params.x} < C={C}",
                              stage="feasibility")
    cons = _constraint_for("var", params, C, epsilon=epsilon)
    if check_unconstrained_feasible(cons, params):
        return _degenerate_from_unconstrained("var", params, cons)

    # q(1 - eps) computed through the lower tail to keep tiny eps exact
    q = -std_normal_quantile(epsilon) if epsilon < 0.5 else std_normal_quantile(1.0 - epsilon)
    b2t = params.beta * params.beta * params.T
    g2 = math.exp(-0.5 * b2t - params.beta * math.sqrt(params.T) * q)
    k = params.k

    def design_of(g1: float) -> CalibratedDesign:
        lam = (k - C) / g1
        c = min(k - lam * g2, C)  # exact value is <= C; clamp roundoff at g1 = g2
        return CalibratedDesign(
            family="P", lam=lam, second=c, floor=C, constraint=cons,
            multiplier=0.5 * (C - c) ** 2,
        )

    def residual(g1: float) -> float:
        return budget_value(design_of(g1), params) - params.x

    if residual(g2) < 0.0:
        raise InfeasibleError("tail-probability constraint cannot be funded from x",
                              stage="budget")
    g1 = bisect_root(residual, g2 * 1e-15, g2)
    return design_of(g1)


def _kernel_call_value(params: ModelParams, h: float) -> float:
    """E[(Z_T - h)_+], the kernel call value above level h."""
    tail_m1 = 1.0 - float(kernel_f(params, params.T, h))
    tail_p = 1.0 - float(z_cdf(params, params.T, h))
    return tail_m1 - h * tail_p


def calibrate_es_p(params: ModelParams, C: float, nu: float) -> CalibratedDesign:
    """Calibrate the real-world expected-shortfall design.

    Binding the shortfall gives lam as a function of the outer kink,
    lam(h2) = nu / E[(Z_T - h2)_+], so the budget becomes a scalar
    equation in h2 alone (scheme h2 -> lam -> h1, gamma = lam h2 - (k - C)).
    The search starts at the fixed point h0 = h1(lam(h0)), where gamma = 0
    and the design degenerates to the unconstrained one with a budget
    above x, and expands geometrically until the budget falls below x.
    """
    if params.x < C:
        raise InfeasibleError(f"es_p regime requires x >= C, got x={params.x} < C={C}",
                              stage="feasibility")
    cons = _constraint_for("es_p", params, C, nu=nu)
    if check_unconstrained_feasible(cons, params):
        return _degenerate_from_unconstrained("es_p", params, cons)

    k = params.k
    span = k - C

    def fixed_point_residual(h: float) -> float:
        # h = h1(lam(h))  <=>  h nu - (k - C) E[(Z - h)_+] = 0, increasing in h
        return h * nu - span * _kernel_call_value(params, h)

    h0 = bisect_root(fixed_point_residual, _TINY, span / nu, xtol=1e-10)
    if not math.isfinite(h0) or h0 <= 0.0:
        raise InfeasibleError("gamma = 0 fixed point not found", stage="fixed-point")

    def design_of(h2: float) -> CalibratedDesign:
        lam = nu / _kernel_call_value(params, h2)
        gamma = max(0.0, lam * h2 - span)
        return CalibratedDesign(
            family="E", lam=lam, second=gamma, floor=C, constraint=cons,
            multiplier=gamma,
        )

    def residual(h2: float) -> float:
        return budget_value(design_of(h2), params) - params.x

    if residual(h0) <= 0.0:
        # constraint is barely binding; the root sits at the fixed point itself
        return design_of(h0)
    hi = _grow_until_negative(residual, max(2.0 * h0, 1.0), what="shortfall budget")
    h2 = bisect_root(residual, h0, hi)
    return design_of(h2)


def calibrate_es_q(params: ModelParams, C: float, nu: float) -> CalibratedDesign:
    """Calibrate the kernel-measure expected-shortfall design.

    Stage one: the shortfall depends only on the lower-branch slope and is
    increasing in it, so delta solves E[Z_T (C - (k - delta Z_T))_+] = nu
    on its own.  Stage two: with delta fixed, the budget decreases in lam
    from the unconstrained value at lam = delta toward C - nu < x, so lam
    is bisected on [delta, Lambda] with Lambda grown geometrically.
    """
    if params.x < C:
        raise InfeasibleError(f"es_q regime requires x >= C, got x={params.x} < C={C}",
                              stage="feasibility")
    cons = _constraint_for("es_q", params, C, nu=nu)
    if check_unconstrained_feasible(cons, params):
        return _degenerate_from_unconstrained("es_q", params, cons)

    def shortfall_of(delta: float) -> float:
        probe = CalibratedDesign(family="Q", lam=delta, second=delta, floor=C,
                                 constraint=cons)
        return expected_shortfall_q(probe, params)

    hi = 1.0
    for _ in range(256):
        if shortfall_of(hi) > nu:
            break
        hi *= 2.0
    else:
        raise InfeasibleError("shortfall level cannot be reached", stage="shortfall")
    delta = bisect_root(lambda d: shortfall_of(d) - nu, _TINY, hi)

    def design_of(lam: float) -> CalibratedDesign:
        return CalibratedDesign(
            family="Q", lam=lam, second=delta, floor=C, constraint=cons,
            multiplier=lam - delta,
        )

    def residual(lam: float) -> float:
        return budget_value(design_of(lam), params) - params.x

    if residual(delta) < 0.0:
        raise InfeasibleError("budget cannot be met at any slope above delta",
                              stage="budget")
    hi = _grow_until_negative(residual, 2.0 * delta, what="kernel-shortfall budget")
    lam = bisect_root(residual, delta, hi)
    return design_of(lam)


def calibrate(constraint: ConstraintSpec, params: ModelParams) -> CalibratedDesign:
    """Dispatch to the regime-specific calibration."""
    if constraint.kind == "unconstrained":
        return calibrate_unconstrained(params, constraint)
    C = constraint.floor(params)
    if constraint.kind == "strict":
        return calibrate_strict(params, C)
    if constraint.kind == "var":
        return calibrate_var(params, C, constraint.epsilon)
    if constraint.kind == "es_p":
        return calibrate_es_p(params, C, constraint.nu)
    return calibrate_es_q(params, C, constraint.nu)
