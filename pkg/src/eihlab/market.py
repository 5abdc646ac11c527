"""Two-security geometric Brownian market and its exact samplers.

An index and a stock load on ``d >= 2`` independent Brownian drivers
through volatility vectors ``sigma_i`` and ``sigma_s``.  Because only
the span of the two vectors matters, everything is reduced to two
driving motions via an orthonormal basis of that span; samplers then
draw the exact lognormal solution (no Euler bias), one normal pair per
(path, step) through the counter-based generator in :mod:`eihlab.rng`.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import rng

_COLLINEAR_TOL = 1e-12


class Measure(enum.Enum):
    """Drift convention for sampling: real-world or risk-neutral."""

    PHYSICAL = "physical"
    RISK_NEUTRAL = "risk_neutral"


def _as_vector(value, name: str) -> np.ndarray:
    arr = np.array(value, dtype=float, copy=True).reshape(-1)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class MarketParams:
    """Model parameters. Initial prices are pinned to I0 = S0 = 1."""

    mu_i: float
    mu_s: float
    sigma_i: np.ndarray
    sigma_s: np.ndarray
    r: float
    t: float

    I0 = 1.0
    S0 = 1.0

    def __post_init__(self):
        object.__setattr__(self, "sigma_i", _as_vector(self.sigma_i, "sigma_i"))
        object.__setattr__(self, "sigma_s", _as_vector(self.sigma_s, "sigma_s"))
        for name in ("mu_i", "mu_s", "r", "t"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if self.t <= 0.0:
            raise ValueError("horizon t must be positive")
        if self.sigma_i.shape != self.sigma_s.shape:
            raise ValueError("sigma_i and sigma_s must have equal length")
        if self.d < 2:
            raise ValueError("at least two Brownian drivers are required (d >= 2)")
        if not np.any(self.sigma_i):
            raise ValueError("sigma_i must be nonzero")
        if not np.any(self.sigma_s):
            raise ValueError("sigma_s must be nonzero")
        if np.array_equal(self.sigma_i, self.sigma_s):
            raise ValueError("sigma_i and sigma_s must differ")

    @property
    def d(self) -> int:
        return self.sigma_i.size


@dataclass(frozen=True, eq=False)
class ReducedParams:
    """Volatility pair expressed in an orthonormal basis of its span."""

    sigma_i_bar: np.ndarray
    sigma_s_bar: np.ndarray
    basis_e1: np.ndarray
    basis_e2: np.ndarray

    def __post_init__(self):
        for name in ("sigma_i_bar", "sigma_s_bar", "basis_e1", "basis_e2"):
            object.__setattr__(self, name, _as_vector(getattr(self, name), name))

    @property
    def delta_norm(self) -> float:
        """Norm of the volatility spread, the lognormal ratio volatility."""
        return float(np.linalg.norm(self.sigma_s_bar - self.sigma_i_bar))

    @property
    def norm_i(self) -> float:
        return float(np.linalg.norm(self.sigma_i_bar))

    @property
    def norm_s(self) -> float:
        return float(np.linalg.norm(self.sigma_s_bar))


def reduce_dimension(params: MarketParams) -> ReducedParams:
    """Project the two volatility vectors onto a 2-d orthonormal basis.

    ``e1`` points along ``sigma_i``; ``e2`` is the normalized remainder
    of ``sigma_s`` after removing its ``e1`` component.  When the two
    vectors are (numerically) collinear the remainder vanishes and
    ``e2`` is completed with any unit vector orthogonal to ``e1``.
    Norms and the inner product of the pair are preserved exactly.
    """
    norm_i = float(np.linalg.norm(params.sigma_i))
    norm_s = float(np.linalg.norm(params.sigma_s))
    e1 = params.sigma_i / norm_i
    proj = float(params.sigma_s @ e1)
    remainder = params.sigma_s - proj * e1
    rem_norm = float(np.linalg.norm(remainder))
    if rem_norm <= _COLLINEAR_TOL * max(1.0, norm_s):
        # collinear: use the signed norm so that bitwise-equal sigma
        # vectors reduce to bitwise-equal coordinates
        e2 = _orthogonal_unit(e1)
        s_bar = np.array([math.copysign(norm_s, proj), 0.0])
    else:
        e2 = remainder / rem_norm
        s_bar = np.array([proj, rem_norm])
    return ReducedParams(
        sigma_i_bar=np.array([norm_i, 0.0]),
        sigma_s_bar=s_bar,
        basis_e1=e1,
        basis_e2=e2,
    )


def reduce_dimension_vs_bond(params: MarketParams) -> ReducedParams:
    """Reduced pair for comparing the index with the zero-coupon bond.

    The bond has no Brownian exposure, so the pair is (sigma_i, 0) and
    the ratio volatility equals the index volatility norm.
    """
    norm_i = float(np.linalg.norm(params.sigma_i))
    e1 = params.sigma_i / norm_i
    return ReducedParams(
        sigma_i_bar=np.array([norm_i, 0.0]),
        sigma_s_bar=np.array([0.0, 0.0]),
        basis_e1=e1,
        basis_e2=_orthogonal_unit(e1),
    )


def _orthogonal_unit(e1: np.ndarray) -> np.ndarray:
    """A unit vector orthogonal to e1, built from the flattest axis."""
    j = int(np.argmin(np.abs(e1)))
    v = np.zeros_like(e1)
    v[j] = 1.0
    v -= (v @ e1) * e1
    return v / np.linalg.norm(v)


def drift_pair(params: MarketParams, measure: Measure) -> tuple[float, float]:
    """Appreciation rates of (index, stock) under the given measure."""
    if measure is Measure.RISK_NEUTRAL:
        return params.r, params.r
    return params.mu_i, params.mu_s


class TerminalSample(NamedTuple):
    """Terminal prices for a batch of paths."""

    index: np.ndarray
    stock: np.ndarray


class LogRatioLaw(NamedTuple):
    """Normal law of ln(S_T / I_T)."""

    mean: float
    std: float


@dataclass(frozen=True, eq=False)
class PathSample:
    """One discretized path: grid times, prices, and driver increments."""

    times: np.ndarray
    index_values: np.ndarray
    stock_values: np.ndarray
    driver_increments: np.ndarray

    def __post_init__(self):
        for name in ("times", "index_values", "stock_values", "driver_increments"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        if self.index_values[0] != 1.0 or self.stock_values[0] != 1.0:
            raise ValueError("paths must start at I0 = S0 = 1")
        if np.any(self.index_values <= 0.0) or np.any(self.stock_values <= 0.0):
            raise ValueError("prices must stay strictly positive")
        if np.any(np.diff(self.times) <= 0.0) or self.times[0] != 0.0:
            raise ValueError("times must increase strictly from 0")


class PathBatch(NamedTuple):
    """Vectorized paths: times (m+1,), prices (n, m+1), increments (n, m, 2)."""

    times: np.ndarray
    index_values: np.ndarray
    stock_values: np.ndarray
    driver_increments: np.ndarray


def simulate_terminal(
    params: MarketParams,
    measure: Measure,
    n_paths: int,
    seed: int,
    *,
    first_path: int = 0,
) -> TerminalSample:
    """Draw (I_T, S_T) pairs exactly from their joint lognormal law.

    Path ``k`` uses the normal pair at counter ``(seed, first_path + k)``,
    so results are reproducible regardless of batching.
    """
    if n_paths < 1:
        raise ValueError("n_paths must be at least 1")
    reduced = reduce_dimension(params)
    mu_i, mu_s = drift_pair(params, measure)
    xi = rng.normal_pairs(seed, np.arange(first_path, first_path + n_paths))
    sqrt_t = np.sqrt(params.t)
    log_i = (mu_i - 0.5 * reduced.norm_i**2) * params.t + sqrt_t * (xi @ reduced.sigma_i_bar)
    log_s = (mu_s - 0.5 * reduced.norm_s**2) * params.t + sqrt_t * (xi @ reduced.sigma_s_bar)
    return TerminalSample(index=np.exp(log_i), stock=np.exp(log_s))


def path_from_increments(
    params: MarketParams,
    measure: Measure,
    times: np.ndarray,
    increments: np.ndarray,
) -> PathSample:
    """Build a path by exact lognormal stepping from given 2-d increments.

    ``increments[k]`` is the driver increment over ``(times[k], times[k+1])``.
    Passing zeros yields the deterministic drift-only path.
    """
    batch = _paths_from_increments(params, measure, np.asarray(times, float),
                                   np.asarray(increments, float)[None, :, :])
    return PathSample(
        times=batch.times,
        index_values=batch.index_values[0],
        stock_values=batch.stock_values[0],
        driver_increments=batch.driver_increments[0],
    )


def _paths_from_increments(
    params: MarketParams,
    measure: Measure,
    times: np.ndarray,
    increments: np.ndarray,
) -> PathBatch:
    reduced = reduce_dimension(params)
    mu_i, mu_s = drift_pair(params, measure)
    dt = np.diff(times)
    n = increments.shape[0]

    def levels(mu: float, sigma_bar: np.ndarray) -> np.ndarray:
        steps = (mu - 0.5 * float(sigma_bar @ sigma_bar)) * dt + increments @ sigma_bar
        out = np.empty((n, times.size))
        out[:, 0] = 1.0
        np.exp(np.cumsum(steps, axis=1), out=out[:, 1:])
        return out

    return PathBatch(
        times=times,
        index_values=levels(mu_i, reduced.sigma_i_bar),
        stock_values=levels(mu_s, reduced.sigma_s_bar),
        driver_increments=increments,
    )


def simulate_paths(
    params: MarketParams,
    measure: Measure,
    n_steps: int,
    n_paths: int,
    seed: int,
    *,
    first_path: int = 0,
) -> PathBatch:
    """Exact stepping of a batch of paths on the uniform grid."""
    if n_steps < 1:
        raise ValueError("n_steps must be at least 1")
    if n_paths < 1:
        raise ValueError("n_paths must be at least 1")
    times = np.linspace(0.0, params.t, n_steps + 1)
    lanes = np.arange(first_path, first_path + n_paths, dtype=np.uint64)[:, None]
    blocks = np.arange(n_steps, dtype=np.uint64)[None, :]
    xi = rng.normal_pairs(seed, lanes, blocks)
    increments = np.sqrt(params.t / n_steps) * xi
    return _paths_from_increments(params, measure, times, increments)


def simulate_path(
    params: MarketParams,
    measure: Measure,
    n_steps: int,
    seed: int,
    path_index: int,
) -> PathSample:
    """Single path; identical to the corresponding row of a batched run."""
    batch = simulate_paths(params, measure, n_steps, 1, seed, first_path=path_index)
    return PathSample(
        times=batch.times,
        index_values=batch.index_values[0],
        stock_values=batch.stock_values[0],
        driver_increments=batch.driver_increments[0],
    )


def log_ratio_law(params: MarketParams, measure: Measure = Measure.PHYSICAL) -> LogRatioLaw:
    """Exact normal law of ln(S_T / I_T) under the given measure."""
    reduced = reduce_dimension(params)
    mu_i, mu_s = drift_pair(params, measure)
    mean = (mu_s - mu_i) * params.t + 0.5 * (reduced.norm_i**2 - reduced.norm_s**2) * params.t
    std = reduced.delta_norm * np.sqrt(params.t)
    return LogRatioLaw(mean=float(mean), std=float(std))
