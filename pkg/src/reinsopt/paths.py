"""Seeded simulation of the optimally controlled surplus and proportion.

Because X Z is a martingale, the controlled auxiliary surplus at time t is
the conditional expectation

    X_t = E[(Z_T / Z_t) X_T | Z_t = z],

which for every payoff family is a fixed linear combination

    X_t = const + sum_j w_j * kind_j(T - t, a_j / z) - xi * m(T - t, z),

with kind_j one of the kernel building blocks f or h; conditioning simply
divides each branch boundary a_j by the current kernel value.  Matching
the diffusion coefficient of that expression against (1 - pi) sigma gives
the reinsurance proportion

    pi = 1 + (beta / sigma) * (sum_j w_j * zD_j(T - t, a_j / z) + xi * m(T - t, z)),

where zD_j is the scaled boundary sensitivity (z f_z or z h_z).
Equivalently pi = 1 - (beta z / sigma) * dX/dz, which the tests pin by
finite differences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .design import CalibratedDesign, branches, payoff
from .errors import InvalidParams
from .kernel import ModelParams, kernel_f, kernel_h, kernel_m, kernel_zfz, kernel_zhz


class PathTerm(NamedTuple):
    weight: float
    boundary: float
    kind: str  # "f" or "h"


@dataclass(frozen=True)
class PathCoefficients:
    """Linear-combination coefficients for the conditional wealth."""

    const: float
    terms: tuple[PathTerm, ...]
    xi: float


def path_coefficients(design: CalibratedDesign, params: ModelParams) -> PathCoefficients:
    """Per-family coefficients of the conditional-wealth combination."""
    k = params.k
    br = branches(design, params)
    if br.floor is None or br.z_lo == br.z_hi:
        # affine payoff: X_t = k - lam * m(T - t, z)
        return PathCoefficients(const=k, terms=(), xi=design.lam)
    C = br.floor
    if math.isinf(br.z_hi):
        # hard floor: X_t = C + (k - C) (f - h) at the single boundary
        return PathCoefficients(
            const=C,
            terms=(
                PathTerm(k - C, br.z_lo, "f"),
                PathTerm(-(k - C), br.z_lo, "h"),
            ),
            xi=0.0,
        )
    return PathCoefficients(
        const=k + br.shift,
        terms=(
            PathTerm(k - C, br.z_lo, "f"),
            PathTerm(-(k - C + br.shift), br.z_hi, "f"),
            PathTerm(-(k - C), br.z_lo, "h"),
            PathTerm(br.slope * br.z_hi, br.z_hi, "h"),
        ),
        xi=br.slope,
    )


def _check_interior_time(params: ModelParams, t) -> None:
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0.0) or np.any(t_arr >= params.T):
        raise InvalidParams(f"time must lie in [0, T), T={params.T}")


def wealth_at(design: CalibratedDesign, params: ModelParams, t, z):
    """Controlled auxiliary surplus X_t given kernel value z; broadcasts."""
    _check_interior_time(params, t)
    tau = params.T - np.asarray(t, dtype=float)
    z_arr = np.asarray(z, dtype=float)
    coeffs = path_coefficients(design, params)
    out = coeffs.const - coeffs.xi * kernel_m(params, tau, z_arr)
    for term in coeffs.terms:
        block = kernel_f if term.kind == "f" else kernel_h
        out = out + term.weight * block(params, tau, term.boundary / z_arr)
    if np.ndim(t) == 0 and np.ndim(z) == 0:
        return float(out)
    return out


def proportion_at(design: CalibratedDesign, params: ModelParams, t, z):
    """Reinsurance proportion pi_t given kernel value z; broadcasts.

    Values outside [0, 1] are legitimate: pi < 0 means taking on extra
    risk at the reinsurer's premium rate, pi > 1 means shorting the
    retained risk.
    """
    _check_interior_time(params, t)
    tau = params.T - np.asarray(t, dtype=float)
    z_arr = np.asarray(z, dtype=float)
    coeffs = path_coefficients(design, params)
    acc = coeffs.xi * kernel_m(params, tau, z_arr)
    for term in coeffs.terms:
        block = kernel_zfz if term.kind == "f" else kernel_zhz
        acc = acc + term.weight * block(params, tau, term.boundary / z_arr)
    out = 1.0 + (params.beta / params.sigma) * acc
    if np.ndim(t) == 0 and np.ndim(z) == 0:
        return float(out)
    return out


def simulate_brownian(seed: int, n_steps: int, T: float):
    """Standard Brownian path on an even grid over [0, T].

    Increments are i.i.d. centred Gaussians with variance T / n_steps from
    numpy's PCG64 ``default_rng(seed)``; the draw is deterministic per
    seed (for a fixed numpy version).
    """
    if n_steps < 1:
        raise InvalidParams(f"need n_steps >= 1, got {n_steps}")
    rng = np.random.default_rng(seed)
    dt = T / n_steps
    increments = rng.standard_normal(n_steps) * math.sqrt(dt)
    w = np.empty(n_steps + 1)
    w[0] = 0.0
    np.cumsum(increments, out=w[1:])
    times = np.linspace(0.0, T, n_steps + 1)
    return times, w


@dataclass(frozen=True)
class PathTrace:
    """One seeded realization of the controlled surplus and proportion.

    ``x`` is the auxiliary-scale surplus, ``x_tilde`` the original scale
    (x + (a - b) t), and ``uncontrolled`` the original-scale surplus with
    no reinsurance at all.  The proportion at the final node repeats the
    last interior value (the closed form degenerates at t = T);
    ``pi_final_carried`` flags that convention.
    """

    times: np.ndarray
    w: np.ndarray
    z: np.ndarray
    x: np.ndarray
    x_tilde: np.ndarray
    pi: np.ndarray
    uncontrolled: np.ndarray
    seed: int
    design: CalibratedDesign
    pi_final_carried: bool = True


def controlled_trace(design: CalibratedDesign, params: ModelParams, seed: int,
                     n_steps: int = 1000) -> PathTrace:
    """Simulate one controlled path on an even grid of ``n_steps`` intervals.

    Interior wealth comes from the conditional-expectation formula; the
    terminal node is set directly from the terminal payoff, so terminal
    consistency holds exactly on every path.
    """
    times, w = simulate_brownian(seed, n_steps, params.T)
    beta = params.beta
    z = np.exp(-0.5 * beta * beta * times + beta * w)
    x = np.empty_like(times)
    x[:-1] = wealth_at(design, params, times[:-1], z[:-1])
    x[-1] = payoff(design, params, float(z[-1]))
    pi = np.empty_like(times)
    pi[:-1] = proportion_at(design, params, times[:-1], z[:-1])
    pi[-1] = pi[-2]
    shift = params.drift_shift(times)
    uncontrolled = params.x + params.a * times + params.sigma * w
    return PathTrace(
        times=times, w=w, z=z, x=x, x_tilde=x + shift, pi=pi,
        uncontrolled=uncontrolled, seed=seed, design=design,
    )
