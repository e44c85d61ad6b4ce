"""Closed-form primitives for the exponential pricing kernel of a Brownian
surplus model.

The retained-risk surplus is priced against the kernel

    Z_t = exp(-beta^2 t / 2 + beta W_t),        beta = -b / sigma < 0,

a unit-mean lognormal martingale (dZ = beta Z dW).  Every budget,
constraint functional, and conditional-wealth expression downstream
reduces to truncated moments of Z_t, each a single Gaussian CDF call:

    E[Z_t   ; Z_t <= z] = f(t, z) = Phi((beta^2 t / 2     - ln z) / (beta sqrt(t)))
    E[Z_t^2 ; Z_t <= z] = g(t, z) = e^{beta^2 t} Phi((3 beta^2 t / 2 - ln z) / (beta sqrt(t)))

together with h(t, z) = g(t, z) / z and the linear term m(t, z) =
z e^{beta^2 t}.  Because beta < 0, large upside surplus outcomes (W_t
large) correspond to *small* kernel values, and the Phi arguments above
are increasing in z; ``kernel_f(t, z) -> 1`` as ``z -> inf``.

All functions broadcast over ``t`` and ``z`` with numpy semantics and
treat ``z = 0`` and ``z = inf`` as the corresponding one-sided limits, so
open-ended truncation intervals need no special-casing by callers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc, ndtri

from .errors import InfeasibleError, InvalidParams

_SQRT2 = math.sqrt(2.0)
_INV_SQRT2PI = 1.0 / math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class ModelParams:
    """Market and surplus primitives, plus the derived auxiliary constants.

    Original-scale inputs: drift ``a`` of the uninsured surplus, full-risk
    drift ``b`` demanded by the reinsurer (non-cheap cover means b > a),
    volatility ``sigma``, initial surplus ``x``, horizon ``T``, surplus
    target ``k_tilde``, and optionally a solvency floor ``C_tilde``.

    Removing the deterministic full-cover drift (a - b) t maps the target
    and floor to the auxiliary scale used by every formula in this
    package:  k = k_tilde - (a - b) T  and  C = C_tilde - (a - b) T.
    """

    a: float
    b: float
    sigma: float
    x: float
    T: float
    k_tilde: float
    C_tilde: float | None = None

    def __post_init__(self):
        values = [self.a, self.b, self.sigma, self.x, self.T, self.k_tilde]
        if self.C_tilde is not None:
            values.append(self.C_tilde)
        if not all(math.isfinite(v) for v in values):
            raise InvalidParams("model parameters must be finite")
        if not self.b > self.a > 0.0:
            raise InvalidParams(f"need b > a > 0, got a={self.a}, b={self.b}")
        if self.sigma <= 0.0:
            raise InvalidParams(f"need sigma > 0, got sigma={self.sigma}")
        if self.T <= 0.0:
            raise InvalidParams(f"need T > 0, got T={self.T}")
        if self.x >= self.k:
            raise InfeasibleError(
                f"initial surplus x={self.x} must lie below the auxiliary "
                f"target k={self.k}; no design can reach the target budget"
            )
        if self.C is not None:
            if self.C >= self.k:
                raise InfeasibleError(
                    f"auxiliary floor C={self.C} at or above the target k={self.k}"
                )
            if self.x < self.C:
                raise InfeasibleError(
                    f"initial surplus x={self.x} below the auxiliary floor C={self.C}"
                )

    @property
    def beta(self) -> float:
        """Kernel loading beta = -b / sigma (negative by construction)."""
        return -self.b / self.sigma

    @property
    def k(self) -> float:
        """Auxiliary surplus target k = k_tilde - (a - b) T."""
        return self.k_tilde - (self.a - self.b) * self.T

    @property
    def C(self) -> float | None:
        """Auxiliary floor C = C_tilde - (a - b) T, or None without a floor."""
        if self.C_tilde is None:
            return None
        return self.C_tilde - (self.a - self.b) * self.T

    def drift_shift(self, t):
        """Deterministic gap between original and auxiliary scale at time t."""
        return (self.a - self.b) * t


@dataclass(frozen=True)
class Interval:
    """Truncation interval in kernel space; ``lo = 0`` / ``hi = inf`` are limits."""

    lo: float
    hi: float

    def __post_init__(self):
        if math.isnan(self.lo) or math.isnan(self.hi):
            raise InvalidParams("interval bounds must not be NaN")
        if not 0.0 <= self.lo <= self.hi:
            raise InvalidParams(f"need 0 <= lo <= hi, got [{self.lo}, {self.hi}]")


def std_normal_cdf(u):
    """Standard normal CDF, accurate to ~1e-16 and saturating cleanly at 0/1."""
    return 0.5 * erfc(np.negative(u) / _SQRT2)


def std_normal_pdf(u):
    """Standard normal density."""
    return _INV_SQRT2PI * np.exp(-0.5 * np.square(u))


def std_normal_quantile(p: float) -> float:
    """Inverse of :func:`std_normal_cdf` on (0, 1).

    Rational approximation followed by one Newton step on the CDF, which
    pins the round-trip identity to machine precision.
    """
    if not 0.0 < p < 1.0:
        raise InvalidParams(f"quantile needs p in (0, 1), got {p}")
    u = float(ndtri(p))
    dens = std_normal_pdf(u)
    if dens > 0.0:
        u -= float(std_normal_cdf(u) - p) / float(dens)
    return u


def _tilted_arg(beta: float, t, z, tilt: float):
    # (tilt * beta^2 t - ln z) / (beta sqrt(t)); z = 0 and z = inf map to -/+ inf
    # because beta < 0 flips the sign of the diverging numerator.
    s = beta * np.sqrt(t)
    with np.errstate(divide="ignore"):
        num = tilt * beta * beta * t - np.log(z)
    return num / s


def kernel_f(params: ModelParams, t, z):
    """Lower-truncated first moment f(t, z) = E[Z_t ; Z_t <= z]."""
    return std_normal_cdf(_tilted_arg(params.beta, t, z, 0.5))


def kernel_g(params: ModelParams, t, z):
    """Lower-truncated second moment g(t, z) = E[Z_t^2 ; Z_t <= z]."""
    b2t = params.beta * params.beta * t
    return np.exp(b2t) * std_normal_cdf(_tilted_arg(params.beta, t, z, 1.5))


def kernel_h(params: ModelParams, t, z):
    """h(t, z) = g(t, z) / z, the second moment deflated by the boundary."""
    return kernel_g(params, t, z) / z


def kernel_m(params: ModelParams, t, z):
    """m(t, z) = z e^{beta^2 t}, the conditional second-moment growth line."""
    return z * np.exp(params.beta * params.beta * t)


def kernel_zfz(params: ModelParams, t, z):
    """z * df/dz, the scaled boundary sensitivity of :func:`kernel_f`."""
    beta = params.beta
    s = beta * np.sqrt(t)
    return (-1.0 / s) * std_normal_pdf(_tilted_arg(beta, t, z, 0.5))


def kernel_zhz(params: ModelParams, t, z):
    """z * dh/dz, the scaled boundary sensitivity of :func:`kernel_h`."""
    beta = params.beta
    s = beta * np.sqrt(t)
    arg = _tilted_arg(beta, t, z, 1.5)
    b2t = beta * beta * t
    return (np.exp(b2t) / z) * ((-1.0 / s) * std_normal_pdf(arg) - std_normal_cdf(arg))


def z_cdf(params: ModelParams, t, z):
    """Distribution function P[Z_t <= z] of the lognormal kernel."""
    beta = params.beta
    s = beta * np.sqrt(t)
    with np.errstate(divide="ignore"):
        arg = (np.log(z) + 0.5 * beta * beta * t) / (-s)
    return std_normal_cdf(arg)


def z_moment1(params: ModelParams, t: float, iv: Interval) -> float:
    """E[Z_t ; Z_t in [iv.lo, iv.hi]]; equals 1 over the whole half-line."""
    return float(kernel_f(params, t, iv.hi) - kernel_f(params, t, iv.lo))


def z_moment2(params: ModelParams, t: float, iv: Interval) -> float:
    """E[Z_t^2 ; Z_t in [iv.lo, iv.hi]]; equals e^{beta^2 t} over the half-line."""
    return float(kernel_g(params, t, iv.hi) - kernel_g(params, t, iv.lo))
