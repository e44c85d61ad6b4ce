"""Terminal-payoff families and their closed-form solvency functionals.

Each solvency regime admits an optimal terminal wealth that is piecewise
linear in the terminal kernel value z, bounded above by the auxiliary
target k:

    family U (no constraint)        k - lam z
    family C (strict floor)         max(k - lam z, C)
    family P (tail-probability)     k - lam z outside [g1, g2], floor C inside,
                                    g1 = (k - C)/lam, g2 = (k - c)/lam; one jump at g2
    family E (expected shortfall,   k - lam z above the floor, floor C on [h1, h2],
              real-world measure)   then the parallel line k - lam z + gamma
    family Q (expected shortfall,   k - lam z up to (k - C)/lam, floor C, then the
              kernel measure)       flatter line k - delta z through (0, k)

All five share one branch layout: an upper line of slope -lam, a flat
floor segment [z_lo, z_hi] at C, and a lower line (k + shift) - slope * z.
The budget E[Z_T X_T], the floor probability P[X_T >= C], and both
expected-shortfall functionals then assemble from the truncated kernel
moments of :mod:`reinsopt.kernel` over those segments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import InvalidParams
from .kernel import ModelParams, kernel_f, kernel_g, z_cdf

REGIMES = ("unconstrained", "strict", "var", "es_p", "es_q")
FAMILIES = ("U", "C", "P", "E", "Q")
FAMILY_FOR_REGIME = {
    "unconstrained": "U",
    "strict": "C",
    "var": "P",
    "es_p": "E",
    "es_q": "Q",
}
SECOND_PARAM_NAME = {"U": None, "C": None, "P": "c", "E": "gamma", "Q": "delta"}


@dataclass(frozen=True)
class ConstraintSpec:
    """A solvency regime with its tolerance parameters (original scale)."""

    kind: str
    C_tilde: float | None = None
    epsilon: float | None = None
    nu: float | None = None

    def __post_init__(self):
        if self.kind not in REGIMES:
            raise InvalidParams(f"unknown constraint kind {self.kind!r}")
        if self.kind == "unconstrained":
            if not (self.C_tilde is None and self.epsilon is None and self.nu is None):
                raise InvalidParams("unconstrained regime takes no floor or tolerance")
            return
        if self.C_tilde is None or not math.isfinite(self.C_tilde):
            raise InvalidParams(f"{self.kind} regime needs a finite floor C_tilde")
        if self.kind == "strict":
            if self.epsilon is not None or self.nu is not None:
                raise InvalidParams("strict regime takes no probability/shortfall tolerance")
        elif self.kind == "var":
            if self.nu is not None:
                raise InvalidParams("var regime takes epsilon, not nu")
            if self.epsilon is None or not 0.0 < self.epsilon < 1.0:
                raise InvalidParams(f"var regime needs epsilon in (0, 1), got {self.epsilon}")
        else:  # es_p / es_q
            if self.epsilon is not None:
                raise InvalidParams(f"{self.kind} regime takes nu, not epsilon")
            if self.nu is None or not self.nu > 0.0 or not math.isfinite(self.nu):
                raise InvalidParams(f"{self.kind} regime needs nu > 0, got {self.nu}")

    def floor(self, params: ModelParams) -> float:
        """Auxiliary-scale floor C = C_tilde - (a - b) T."""
        if self.C_tilde is None:
            raise InvalidParams(f"{self.kind} constraint carries no floor")
        return self.C_tilde - (params.a - params.b) * params.T


@dataclass(frozen=True)
class CalibratedDesign:
    """A payoff family with calibrated parameters and optimality data.

    ``second`` is the family-specific second parameter: absent for U and C,
    the lower kink ``c`` for P, the vertical shift ``gamma`` for E, the
    lower-branch slope ``delta`` for Q.  ``multiplier`` carries the
    Lagrange data used by the pointwise optimality checks ((C - c)^2 / 2
    for P, gamma for E, lam - delta for Q).  ``binding`` is False when the
    unconstrained optimum already satisfied the constraint and was
    returned tagged with the requested family in degenerate form.
    """

    family: str
    lam: float
    second: float | None = None
    floor: float | None = None
    constraint: ConstraintSpec | None = None
    multiplier: float | None = None
    binding: bool = True

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InvalidParams(f"unknown payoff family {self.family!r}")
        if not (math.isfinite(self.lam) and self.lam > 0.0):
            raise InvalidParams(f"need lam > 0, got {self.lam}")
        if self.family in ("U", "C"):
            if self.second is not None:
                raise InvalidParams(f"family {self.family} has no second parameter")
        elif self.second is None or not math.isfinite(self.second):
            raise InvalidParams(f"family {self.family} needs a finite second parameter")
        if self.family != "U" and self.floor is None:
            raise InvalidParams(f"family {self.family} needs a floor")
        if self.family == "P" and self.second > self.floor:
            raise InvalidParams(f"family P needs c <= C, got c={self.second}, C={self.floor}")
        if self.family == "E" and self.second < 0.0:
            raise InvalidParams(f"family E needs gamma >= 0, got {self.second}")
        if self.family == "Q" and not 0.0 < self.second <= self.lam:
            raise InvalidParams(
                f"family Q needs delta in (0, lam], got delta={self.second}, lam={self.lam}"
            )

    @property
    def c(self) -> float:
        if self.family != "P":
            raise InvalidParams(f"family {self.family} has no lower kink c")
        return self.second

    @property
    def gamma(self) -> float:
        if self.family != "E":
            raise InvalidParams(f"family {self.family} has no shift gamma")
        return self.second

    @property
    def delta(self) -> float:
        if self.family != "Q":
            raise InvalidParams(f"family {self.family} has no lower slope delta")
        return self.second

    def flat_interval(self, params: ModelParams) -> tuple[float, float] | None:
        """Kernel-space interval on which the payoff sits at the floor."""
        br = branches(self, params)
        if br.floor is None:
            return None
        return br.z_lo, br.z_hi


class Branches(NamedTuple):
    """Uniform branch layout shared by all five families."""

    z_lo: float
    z_hi: float
    slope: float
    shift: float
    floor: float | None


def branches(design: CalibratedDesign, params: ModelParams) -> Branches:
    """Resolve a design into the common (upper, flat, lower) branch layout."""
    k = params.k
    lam = design.lam
    C = design.floor
    if design.family == "U":
        if C is None:
            return Branches(math.inf, math.inf, lam, 0.0, None)
        q = (k - C) / lam
        return Branches(q, q, lam, 0.0, C)
    if design.family == "C":
        return Branches((k - C) / lam, math.inf, lam, 0.0, C)
    if design.family == "P":
        return Branches((k - C) / lam, (k - design.c) / lam, lam, 0.0, C)
    if design.family == "E":
        return Branches((k - C) / lam, (k + design.gamma - C) / lam, lam, design.gamma, C)
    # family Q
    return Branches((k - C) / lam, (k - C) / design.delta, design.delta, 0.0, C)


def payoff(design: CalibratedDesign, params: ModelParams, z):
    """Terminal wealth as a function of the terminal kernel value z > 0.

    Boundary points of the flat segment are assigned to the floor branch;
    the choice is measure-zero and keeps evaluation deterministic.
    """
    z_arr = np.asarray(z, dtype=float)
    br = branches(design, params)
    upper = params.k - design.lam * z_arr
    if br.floor is None:
        out = upper
    else:
        lower = (params.k + br.shift) - br.slope * z_arr
        out = np.where(z_arr < br.z_lo, upper, np.where(z_arr <= br.z_hi, br.floor, lower))
    if np.ndim(z) == 0:
        return float(out)
    return out


def budget_value(design: CalibratedDesign, params: ModelParams) -> float:
    """Initial-capital cost E[Z_T X_T] of the design, in closed form."""
    T = params.T
    k = params.k
    m2 = math.exp(params.beta * params.beta * T)
    br = branches(design, params)
    if br.floor is None:
        return k - design.lam * m2
    f_lo = float(kernel_f(params, T, br.z_lo))
    g_lo = float(kernel_g(params, T, br.z_lo))
    f_hi = float(kernel_f(params, T, br.z_hi))
    g_hi = float(kernel_g(params, T, br.z_hi))
    upper = k * f_lo - design.lam * g_lo
    flat = br.floor * (f_hi - f_lo)
    lower = (k + br.shift) * (1.0 - f_hi) - br.slope * (m2 - g_hi)
    return upper + flat + lower


def prob_above_floor(design: CalibratedDesign, params: ModelParams) -> float:
    """P[X_T >= C]; the payoff clears the floor exactly on {Z_T <= z_hi}."""
    br = branches(design, params)
    if br.floor is None:
        raise InvalidParams("design has no floor to measure against")
    if math.isinf(br.z_hi):
        return 1.0
    return float(z_cdf(params, params.T, br.z_hi))


def _floor_crossing(br: Branches, params: ModelParams) -> float:
    # z at which the lower branch crosses the floor.  Equals z_hi for the
    # continuous families; for the jump family the branch already sits
    # below the floor at z_hi, so the crossing is back at z_lo.
    return (params.k + br.shift - br.floor) / br.slope


def expected_shortfall_p(design: CalibratedDesign, params: ModelParams) -> float:
    """Real-world expected shortfall E[(C - X_T)_+].

    Below the floor the payoff runs along the lower branch, so the
    shortfall is slope * (Z_T - z_c) on {Z_T > z_hi}, with z_c the point
    where that branch crosses the floor (z_c < z_hi across a jump).
    """
    br = branches(design, params)
    if br.floor is None:
        raise InvalidParams("design has no floor to measure against")
    if math.isinf(br.z_hi):
        return 0.0
    T = params.T
    tail_m1 = 1.0 - float(kernel_f(params, T, br.z_hi))
    tail_p = 1.0 - float(z_cdf(params, T, br.z_hi))
    return br.slope * (tail_m1 - _floor_crossing(br, params) * tail_p)


def expected_shortfall_q(design: CalibratedDesign, params: ModelParams) -> float:
    """Kernel-weighted expected shortfall E[Z_T (C - X_T)_+].

    Same tail event as the real-world shortfall, one moment order higher;
    this is the price of the unbought stop-loss protection below C.
    """
    br = branches(design, params)
    if br.floor is None:
        raise InvalidParams("design has no floor to measure against")
    if math.isinf(br.z_hi):
        return 0.0
    T = params.T
    m2 = math.exp(params.beta * params.beta * T)
    tail_m2 = m2 - float(kernel_g(params, T, br.z_hi))
    tail_m1 = 1.0 - float(kernel_f(params, T, br.z_hi))
    return br.slope * (tail_m2 - _floor_crossing(br, params) * tail_m1)
