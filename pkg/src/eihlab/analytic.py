"""Closed-form pricing of index-numeraire digital claims.

A digital exchange claim pays ``I_T`` times the indicator that the
ratio ``S_T / I_T`` finishes at or beyond a threshold.  Under the
measure that makes the index the numeraire, the ratio is lognormal with
volatility ``delta = ||sigma_s - sigma_i||`` and drift ``-delta^2 / 2``,
so the claim value is the current index level times a normal tail
probability.  All valuation here flows through that single expression;
the ``at_most`` direction is priced as one minus the ``at_least``
probability at the same threshold, which is algebraically identical to
flipping the sign inside the CDF.

Thresholds are computed and stored in log space.  Strategy payoffs and
event predicates compare ``ln(S_T / I_T)`` against the same stored
float, which is what makes "payoff fired" and "event failed" exact
complements path by path instead of agreeing only up to rounding.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple, TYPE_CHECKING

import numpy as np

from .normal import (
    cached_upper_quantile,
    std_normal_cdf,
    std_normal_pdf,
    std_normal_quantile,
    upper_quantile,
)

if TYPE_CHECKING:
    from .market import ReducedParams

__all__ = [
    "Direction",
    "DigitalSpec",
    "HedgeRatios",
    "claim_value",
    "digital_price",
    "gaussian_halfspace_expectation",
    "hedge_ratios",
    "log_thresholds",
    "std_normal_cdf",
    "std_normal_pdf",
    "std_normal_quantile",
    "thresholds",
    "upper_quantile",
]


class Direction(enum.Enum):
    """Which side of the threshold the claim pays on."""

    AT_LEAST = "at_least"
    AT_MOST = "at_most"


@dataclass(frozen=True)
class DigitalSpec:
    """A digital claim on the ratio S_T / I_T.

    ``log_threshold`` is the canonical comparison level; ``threshold``
    is its exponential, kept for reporting.  Build specs through
    :meth:`at_level` (price-space threshold) or :meth:`at_log_level`.
    """

    direction: Direction
    threshold: float
    log_threshold: float

    def __post_init__(self):
        if not self.threshold > 0.0:
            raise ValueError("threshold must be positive")

    @classmethod
    def at_level(cls, direction: Direction, threshold: float) -> "DigitalSpec":
        threshold = float(threshold)
        if not threshold > 0.0:
            raise ValueError("threshold must be positive")
        return cls(direction, threshold, math.log(threshold))

    @classmethod
    def at_log_level(cls, direction: Direction, log_threshold: float) -> "DigitalSpec":
        log_threshold = float(log_threshold)
        return cls(direction, math.exp(log_threshold), log_threshold)

    def payoff_indicator(self, log_ratio) -> np.ndarray:
        """Whether the claim pays, from the terminal log ratio."""
        log_ratio = np.asarray(log_ratio)
        if self.direction is Direction.AT_LEAST:
            return log_ratio >= self.log_threshold
        return log_ratio <= self.log_threshold


class HedgeRatios(NamedTuple):
    """Replicating positions: stock units, index units, bond leg value."""

    units_s: float
    units_i: float
    bond_value: float


def gaussian_halfspace_expectation(u, v, c: float):
    """E[exp(u . xi) 1{v . xi >= c}] for xi a standard normal pair.

    Equals ``exp(||u||^2 / 2) F((u . v - c) / ||v||)``; ``v`` must be
    nonzero.  Always lies strictly between 0 and ``exp(||u||^2 / 2)``.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    norm_v = float(np.linalg.norm(v))
    if norm_v == 0.0:
        raise ValueError("v must be nonzero")
    norm_u_sq = float(u @ u)
    return float(np.exp(0.5 * norm_u_sq)) * std_normal_cdf((float(u @ v) - c) / norm_v)


def log_thresholds(delta_norm: float, horizon: float, delta: float) -> tuple[float, float]:
    """Log-space band edges (ln a, ln b) for tail mass ``delta/2`` each.

    ``ln b = -delta_norm^2 T / 2 + z_{delta/2} delta_norm sqrt(T)`` and
    ``ln a`` mirrors it.  This is the canonical computation: every payoff
    indicator and event predicate compares against these exact floats.
    """
    z = cached_upper_quantile(delta / 2.0)
    center = -0.5 * delta_norm * delta_norm * horizon
    half_width = z * delta_norm * math.sqrt(horizon)
    return center - half_width, center + half_width


def thresholds(reduced: "ReducedParams", horizon: float, delta: float) -> tuple[float, float]:
    """Band edges (a, b) in ratio space for a given escape mass ``delta``."""
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    if not horizon > 0.0:
        raise ValueError("horizon must be positive")
    log_a, log_b = log_thresholds(reduced.delta_norm, horizon, delta)
    return math.exp(log_a), math.exp(log_b)


def _ratio_probability(spec: DigitalSpec, log_ratio, delta_norm: float, tau):
    """Index-measure probability that the claim pays, from ln(S_t/I_t)."""
    scale = delta_norm * np.sqrt(tau)
    d = (np.asarray(log_ratio, dtype=float) - spec.log_threshold
         - 0.5 * delta_norm * delta_norm * tau) / scale
    p = std_normal_cdf(d)
    if spec.direction is Direction.AT_MOST:
        p = 1.0 - p
    return p


def digital_price(reduced: "ReducedParams", spec: DigitalSpec, tau: float) -> float:
    """Time-(T - tau) claim value per unit index when S/I currently equals 1."""
    if not tau > 0.0:
        raise ValueError("tau must be positive")
    delta_norm = reduced.delta_norm
    if delta_norm == 0.0:
        raise ValueError("reduced volatility pair must differ")
    return float(_ratio_probability(spec, 0.0, delta_norm, tau))


def claim_value(
    reduced: "ReducedParams",
    spec: DigitalSpec,
    t: float,
    s_t,
    i_t,
    horizon: float,
):
    """Value of the claim at time ``t < horizon`` given current prices.

    Scalar prices give a float; arrays broadcast elementwise.  The value
    is degree-1 homogeneous in ``(s_t, i_t)`` and nonnegative.
    """
    if not 0.0 <= t < horizon:
        raise ValueError("valuation time must satisfy 0 <= t < horizon")
    s_t = np.asarray(s_t, dtype=float)
    i_t = np.asarray(i_t, dtype=float)
    if np.any(s_t <= 0.0) or np.any(i_t <= 0.0):
        raise ValueError("prices must be strictly positive")
    tau = horizon - t
    value = i_t * _ratio_probability(spec, np.log(s_t / i_t), reduced.delta_norm, tau)
    return float(value) if value.ndim == 0 else value


def hedge_ratios(
    reduced: "ReducedParams",
    spec: DigitalSpec,
    t: float,
    s_t,
    i_t,
    horizon: float,
) -> HedgeRatios:
    """Replicating portfolio of the claim at ``(t, s_t, i_t)``.

    Positions are the price partials; because the value is degree-1
    homogeneous in the two assets, the residual bond leg vanishes
    (returned as the computed residual, a hard zero up to rounding).
    """
    if not 0.0 <= t < horizon:
        raise ValueError("valuation time must satisfy 0 <= t < horizon")
    s_t = np.asarray(s_t, dtype=float)
    i_t = np.asarray(i_t, dtype=float)
    if np.any(s_t <= 0.0) or np.any(i_t <= 0.0):
        raise ValueError("prices must be strictly positive")
    tau = horizon - t
    delta_norm = reduced.delta_norm
    scale = delta_norm * np.sqrt(tau)
    ratio = s_t / i_t
    d = (np.log(ratio) - spec.log_threshold - 0.5 * delta_norm * delta_norm * tau) / scale
    sign = 1.0 if spec.direction is Direction.AT_LEAST else -1.0
    density = std_normal_pdf(d)
    units_s = sign * density / (ratio * scale)
    units_i = std_normal_cdf(sign * d) - sign * density / scale
    value = i_t * std_normal_cdf(sign * d)
    bond = value - units_s * s_t - units_i * i_t
    if np.asarray(units_s).ndim == 0:
        return HedgeRatios(float(units_s), float(units_i), float(bond))
    return HedgeRatios(units_s, units_i, bond)
