"""Standard normal distribution primitives.

The rest of the package leans on two accuracy guarantees:

* ``std_normal_cdf`` is accurate to better than 1e-12 absolute error
  (it is a thin erfc identity, so in practice machine precision);
* quantiles round-trip through the CDF to better than 1e-9 in
  probability, achieved by a rational initial guess polished with one
  Newton step.

Threshold levels enter prices exponentially, which is why the quantile
is refined rather than used straight from the rational approximation.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy.special import erfc

_SQRT2 = float(np.sqrt(2.0))
_INV_SQRT_2PI = 1.0 / float(np.sqrt(2.0 * np.pi))

# Rational approximation coefficients (Acklam), central region |p-1/2| <= 0.47575
_A = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
      1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
_B = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
      6.680131188771972e+01, -1.328068155288572e+01)
# tail region
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
      -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
      3.754408661907416e+00)
_P_LOW = 0.02425


def _maybe_scalar(x: np.ndarray, scalar: bool) -> np.ndarray | float:
    return float(x) if scalar else x


def std_normal_cdf(x) -> np.ndarray | float:
    """Distribution function of N(0, 1), elementwise.

    Monotone, satisfies F(-x) = 1 - F(x), absolute error below 1e-12.
    """
    arr = np.asarray(x, dtype=float)
    return _maybe_scalar(0.5 * erfc(-arr / _SQRT2), arr.ndim == 0)


def std_normal_pdf(x) -> np.ndarray | float:
    """Density of N(0, 1), elementwise."""
    arr = np.asarray(x, dtype=float)
    return _maybe_scalar(_INV_SQRT_2PI * np.exp(-0.5 * arr * arr), arr.ndim == 0)


def _rational_quantile(p: np.ndarray) -> np.ndarray:
    """Acklam's rational approximation to the N(0,1) quantile on (0, 1)."""
    z = np.empty_like(p)

    lo = p < _P_LOW
    hi = p > 1.0 - _P_LOW
    mid = ~(lo | hi)

    if np.any(mid):
        q = p[mid] - 0.5
        r = q * q
        num = ((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]
        den = ((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0
        z[mid] = q * num / den
    if np.any(lo):
        q = np.sqrt(-2.0 * np.log(p[lo]))
        num = ((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]
        den = (((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0
        z[lo] = num / den
    if np.any(hi):
        q = np.sqrt(-2.0 * np.log1p(-p[hi]))
        num = ((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]
        den = (((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0
        z[hi] = -num / den
    return z


def std_normal_quantile(p) -> np.ndarray | float:
    """Inverse of ``std_normal_cdf`` on (0, 1), elementwise.

    Raises ``ValueError`` outside the open unit interval.
    """
    arr = np.asarray(p, dtype=float)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    if np.any(arr <= 0.0) or np.any(arr >= 1.0):
        raise ValueError("quantile argument must lie strictly inside (0, 1)")

    z = _rational_quantile(arr)
    # One Newton step against the erfc-based CDF; skipped where the density
    # underflows (far tails, |z| > ~37), where the raw approximation stands.
    pdf = _INV_SQRT_2PI * np.exp(-0.5 * z * z)
    safe = pdf > 1e-300
    resid = 0.5 * erfc(-z[safe] / _SQRT2) - arr[safe]
    z[safe] -= resid / pdf[safe]
    return _maybe_scalar(z[0] if scalar else z, scalar)


def upper_quantile(p) -> np.ndarray | float:
    """Level z with P(xi >= z) = p for xi ~ N(0, 1), elementwise.

    Defined as -inf for p >= 1; rejects p <= 0.
    """
    arr = np.asarray(p, dtype=float)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    if np.any(arr <= 0.0):
        raise ValueError("upper_quantile requires p > 0")

    z = np.full(arr.shape, -np.inf)
    interior = arr < 1.0
    if np.any(interior):
        z[interior] = -np.atleast_1d(std_normal_quantile(arr[interior]))
    return _maybe_scalar(z[0] if scalar else z, scalar)


@lru_cache(maxsize=4096)
def cached_upper_quantile(p: float) -> float:
    """Memoized scalar ``upper_quantile`` for hot level computations."""
    return float(upper_quantile(p))
