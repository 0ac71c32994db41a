"""Explicit nonlinear normal densities and limit-parameter selection.

Two closed-form limit densities arise in the nonlinear CLTs: one for mean
uncertainty (parameter alpha may take any sign) and one for variance
uncertainty (both scale parameters strictly positive).  The selection rules
map an uncertainty interval plus the test function's shape on the right of
its center to the density parameters of the matching sup/inf limit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParams, UnsupportedCombination
from .numerics import (
    Grid1D,
    INV_SQRT_2PI,
    SQRT2,
    erfcx_arr,
    quad_integrate,
    std_normal_cdf_arr,
)

MEAN_FAMILY = "chen_epstein"
VARIANCE_FAMILY = "cez"


@dataclass(frozen=True)
class DensityParams:
    alpha: float
    beta: float
    c: float


@dataclass(frozen=True)
class MeanInterval:
    """Interval of attainable conditional means [mu_low, mu_high]."""

    mu_low: float
    mu_high: float

    def __post_init__(self):
        if not self.mu_low <= self.mu_high:
            raise InvalidParams(
                f"mean interval needs mu_low <= mu_high, got "
                f"[{self.mu_low}, {self.mu_high}]")

    @property
    def half_width(self) -> float:
        return 0.5 * (self.mu_high - self.mu_low)

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.mu_high + self.mu_low)


@dataclass(frozen=True)
class VarianceInterval:
    """Interval of attainable conditional standard deviations."""

    sigma_low: float
    sigma_high: float

    def __post_init__(self):
        if not 0 < self.sigma_low <= self.sigma_high:
            raise InvalidParams(
                f"variance interval needs 0 < sigma_low <= sigma_high, got "
                f"[{self.sigma_low}, {self.sigma_high}]")

    @property
    def theta(self) -> float:
        return self.sigma_low / self.sigma_high


def chen_epstein_pdf(p: DensityParams, y):
    """Mean-uncertainty limit density f^{alpha,beta,c}, vectorized in y.

    For alpha = 0 this is exactly the unit-variance normal density centered
    at beta.  The second term is evaluated through the scaled complementary
    error function so that large |y| neither overflows nor loses the
    cancellation between the growing exponential and the shrinking tail.
    """
    y = np.asarray(y, dtype=float)
    alpha, beta, c = p.alpha, p.beta, p.c
    t = np.abs(y - c)
    a = abs(c - beta)
    first = INV_SQRT_2PI * np.exp(
        -0.5 * ((y - beta) ** 2 - 2.0 * alpha * (t - a) + alpha * alpha))
    z = a + t + alpha
    # alpha * exp(2 alpha t) * Phi(-z); for z >= 0 rewrite through erfcx
    safe = z >= 0
    zs = np.where(safe, z, 0.0)
    tail = 0.5 * alpha * erfcx_arr(zs / SQRT2) * np.exp(2.0 * alpha * t - 0.5 * zs * zs)
    direct = alpha * np.exp(2.0 * alpha * t) * std_normal_cdf_arr(-z)
    second = np.where(safe, tail, direct)
    out = first - second
    return float(out) if out.ndim == 0 else out


def cez_pdf(p: DensityParams, y):
    """Variance-uncertainty limit density q^{alpha,beta,c}, vectorized in y.

    The piecewise scale is sigma(y) = alpha on [c, inf) and beta on
    (-inf, c); the sign factor uses sgn(0) = +1 to match the right-closed
    indicator.  Degenerates to the N(0, sigma^2) density when
    alpha = beta = sigma.
    """
    if not (p.alpha > 0 and p.beta > 0):
        raise InvalidParams(
            f"cez density needs alpha > 0 and beta > 0, got "
            f"({p.alpha}, {p.beta})")
    y = np.asarray(y, dtype=float)
    alpha, beta, c = p.alpha, p.beta, p.c
    right = y >= c
    sig_y = np.where(right, alpha, beta)
    sig_0 = alpha if 0.0 >= c else beta
    sgn = np.where(right, 1.0, -1.0)
    base = c / sig_0
    u = base + (y - c) / sig_y
    v = abs(base) + np.abs(y - c) / sig_y
    coef = (beta - alpha) / (beta + alpha)
    out = (INV_SQRT_2PI / sig_y) * (np.exp(-0.5 * u * u)
                                    + coef * sgn * np.exp(-0.5 * v * v))
    return float(out) if out.ndim == 0 else out


def select_mean_limit_params(m: MeanInterval, c: float, monotone_on_right: str,
                             side: str) -> DensityParams:
    """Density parameters of the explicit mean-uncertainty limit.

    beta is always the interval midpoint; the sign of alpha encodes which
    of the four (monotonicity, side) limits applies.
    """
    if monotone_on_right not in ("increasing", "decreasing"):
        raise InvalidParams(f"unknown monotonicity {monotone_on_right!r}")
    if side not in ("sup", "inf"):
        raise InvalidParams(f"unknown side {side!r}")
    half = m.half_width
    positive = (monotone_on_right == "increasing") == (side == "sup")
    return DensityParams(alpha=half if positive else -half,
                         beta=m.midpoint, c=c)


_VARIANCE_CASES = {
    # (convexity_on_right, side, envelope) -> low scale goes first?
    ("concave", "sup", "phibar"): True,
    ("concave", "inf", "phi"): False,
    ("convex", "sup", "phi"): False,
    ("convex", "inf", "phibar"): True,
}


def select_variance_limit_params(v: VarianceInterval, c: float,
                                 convexity_on_right: str, side: str,
                                 envelope: str) -> DensityParams:
    """Density parameters of the explicit variance-uncertainty limit.

    Only the four (convexity, side, envelope) combinations stated by the
    theorem are meaningful; anything else raises UnsupportedCombination.
    """
    if convexity_on_right not in ("concave", "convex"):
        raise InvalidParams(f"unknown convexity {convexity_on_right!r}")
    if side not in ("sup", "inf"):
        raise InvalidParams(f"unknown side {side!r}")
    if envelope not in ("phi", "phibar"):
        raise InvalidParams(f"unknown envelope {envelope!r}")
    key = (convexity_on_right, side, envelope)
    if key not in _VARIANCE_CASES:
        raise UnsupportedCombination(
            f"no explicit limit for convexity={convexity_on_right}, "
            f"side={side}, envelope={envelope}")
    if _VARIANCE_CASES[key]:
        return DensityParams(alpha=v.sigma_low, beta=v.sigma_high, c=c)
    return DensityParams(alpha=v.sigma_high, beta=v.sigma_low, c=c)


def density_pdf(family: str, p: DensityParams):
    """Bind one of the two density families to its parameters."""
    if family == MEAN_FAMILY:
        return lambda y: chen_epstein_pdf(p, y)
    if family == VARIANCE_FAMILY:
        if not (p.alpha > 0 and p.beta > 0):
            raise InvalidParams("cez density needs alpha > 0 and beta > 0")
        return lambda y: cez_pdf(p, y)
    raise InvalidParams(f"unknown density family {family!r}")


def emit_density_curve(p: DensityParams, family: str, grid: Grid1D) -> np.ndarray:
    """Table of (y, density) rows over the grid, one row per grid point."""
    pdf = density_pdf(family, p)
    y = grid.values()
    return np.column_stack([y, pdf(y)])


def density_normalization(family: str, p: DensityParams,
                          abs_tol: float = 1e-9) -> float:
    """Integral of the density over the real line (adaptive quadrature)."""
    pdf = density_pdf(family, p)
    center = p.c
    spread = 8.0 * (1.0 + abs(p.alpha) + abs(p.beta) + abs(p.c))
    left = quad_integrate(pdf, center - spread, center, abs_tol=abs_tol / 2)
    right = quad_integrate(pdf, center, center + spread, abs_tol=abs_tol / 2)
    return left.value + right.value


def count_local_maxima(curve: np.ndarray) -> int:
    """Strict interior local maxima of a sampled (y, density) curve."""
    d = np.diff(curve[:, 1])
    rising = d > 0
    falling = d < 0
    return int(np.sum(rising[:-1] & falling[1:]))
