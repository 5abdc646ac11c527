"""Prudent index-beating strategies built from digital exchange claims.

A strategy is a basket of digital claims on a ratio: stock/index for
the stock constructions, bond/index for the equity-premium ones.  Each
claim is replicable, so the basket is self-financing with nonnegative
wealth (a sum of claim values), and its terminal wealth is an exact
indicator payoff.  That exactness is what the verification experiments
lean on: "the band event failed" and "the strategy collected the 1/delta
multiple of the index" are complementary booleans computed from one
comparison, never two formulas that agree only in exact arithmetic.

Wealth is tracked two ways: the analytic track sums claim values along
a path (the ground truth used to verify the propositions), and the
hedged track rebalances a discrete self-financing portfolio to the
closed-form deltas, as a numerical-fidelity study.  Rebalancing stops
one grid step before expiry because digital deltas diverge there.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .analytic import DigitalSpec, Direction, claim_value, hedge_ratios, log_thresholds
from .market import (
    MarketParams,
    PathSample,
    ReducedParams,
    reduce_dimension,
    reduce_dimension_vs_bond,
)
from .normal import cached_upper_quantile

__all__ = [
    "BoundReport",
    "DigitalComponent",
    "PrudentStrategy",
    "Side",
    "Underlying",
    "WealthTrack",
    "analytic_wealth",
    "bond_drift_gap",
    "bound_check",
    "build_capm_composite",
    "build_index_vs_bond",
    "build_one_sided",
    "build_two_sided",
    "drift_gap",
    "event_one_sided",
    "event_recover",
    "event_two_sided",
    "hedged_wealth",
    "strategy_fires",
    "terminal_wealth",
]


class Underlying(enum.Enum):
    """Which asset forms the ratio numerator against the index."""

    STOCK = "stock"
    BOND = "bond"


class Side(enum.Enum):
    """Tail direction of a one-sided construction."""

    UPPER = "upper"
    LOWER = "lower"


@dataclass(frozen=True)
class DigitalComponent:
    """One digital claim plus how many units of it the strategy holds.

    ``initial_wealth`` is the time-0 price of a single unit; replication
    of ``w`` units of wealth holds ``w / initial_wealth`` units.
    """

    spec: DigitalSpec
    reduced: ReducedParams
    underlying: Underlying
    initial_wealth: float
    units: float = 1.0

    def __post_init__(self):
        if not self.initial_wealth > 0.0:
            raise ValueError("component initial wealth must be positive")

    @property
    def wealth0(self) -> float:
        return self.units * self.initial_wealth


@dataclass(frozen=True)
class PrudentStrategy:
    """A basket of digital components with a label naming its purpose."""

    components: tuple[DigitalComponent, ...]
    label: str

    @property
    def total_initial_wealth(self) -> float:
        return sum(c.wealth0 for c in self.components)


@dataclass(frozen=True)
class WealthTrack:
    """Strategy wealth along one path: analytic and (optionally) hedged."""

    times: np.ndarray
    analytic: np.ndarray
    hedged: np.ndarray | None = None


@dataclass(frozen=True)
class BoundReport:
    """One side-by-side evaluation of a drift bound."""

    lhs: float
    rhs: float
    holds: bool
    proposition: str


def _scaled(strategy: PrudentStrategy, target_wealth: float, label: str) -> PrudentStrategy:
    """Linearly rescale the basket to a target initial wealth."""
    factor = target_wealth / strategy.total_initial_wealth
    comps = tuple(replace(c, units=c.units * factor) for c in strategy.components)
    return PrudentStrategy(components=comps, label=label)


def drift_gap(params: MarketParams) -> float:
    """mu_s - mu_i + ||sigma_i||^2 - sigma_s . sigma_i.

    Zero exactly when the stock's appreciation rate sits at its
    index-implied level; its sign picks the profitable one-sided tail.
    """
    norm_i_sq = float(params.sigma_i @ params.sigma_i)
    cross = float(params.sigma_s @ params.sigma_i)
    return params.mu_s - params.mu_i + norm_i_sq - cross


def bond_drift_gap(params: MarketParams) -> float:
    """r - mu_i + ||sigma_i||^2: the drift gap with the bond as the stock."""
    return params.r - params.mu_i + float(params.sigma_i @ params.sigma_i)


# ---------------------------------------------------------------------------
# Construction


def _band_components(
    reduced: ReducedParams,
    underlying: Underlying,
    horizon: float,
    delta: float,
) -> tuple[DigitalComponent, DigitalComponent]:
    log_a, log_b = log_thresholds(reduced.delta_norm, horizon, delta)
    lower = DigitalComponent(
        spec=DigitalSpec.at_log_level(Direction.AT_MOST, log_a),
        reduced=reduced,
        underlying=underlying,
        initial_wealth=delta / 2.0,
    )
    upper = DigitalComponent(
        spec=DigitalSpec.at_log_level(Direction.AT_LEAST, log_b),
        reduced=reduced,
        underlying=underlying,
        initial_wealth=delta / 2.0,
    )
    return lower, upper


def _one_sided_component(
    reduced: ReducedParams,
    underlying: Underlying,
    horizon: float,
    delta: float,
    side: Side,
) -> DigitalComponent:
    z = cached_upper_quantile(delta)
    delta_norm = reduced.delta_norm
    center = -0.5 * delta_norm * delta_norm * horizon
    width = z * delta_norm * math.sqrt(horizon)
    if side is Side.UPPER:
        spec = DigitalSpec.at_log_level(Direction.AT_LEAST, center + width)
    else:
        spec = DigitalSpec.at_log_level(Direction.AT_MOST, center - width)
    return DigitalComponent(
        spec=spec,
        reduced=reduced,
        underlying=underlying,
        initial_wealth=delta,
    )


def _check_delta(delta: float) -> None:
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")


def build_two_sided(params: MarketParams, delta: float) -> PrudentStrategy:
    """Band strategy: pays I_T whenever S_T/I_T escapes (a, b).

    Two digital claims priced at delta/2 each; on escape paths the
    terminal wealth is I_T, a 1/delta multiple of the initial wealth
    times the index.
    """
    _check_delta(delta)
    comps = _band_components(reduce_dimension(params), Underlying.STOCK, params.t, delta)
    return PrudentStrategy(components=comps, label="two_sided")


def build_one_sided(params: MarketParams, delta: float, side: Side | str) -> PrudentStrategy:
    """Single-tail variant with the delta-quantile replacing delta/2."""
    _check_delta(delta)
    side = Side(side)
    comp = _one_sided_component(
        reduce_dimension(params), Underlying.STOCK, params.t, delta, side
    )
    return PrudentStrategy(components=(comp,), label=f"one_sided_{side.value}")


def build_index_vs_bond(params: MarketParams, delta: float) -> PrudentStrategy:
    """Band strategy on the bond/index ratio.

    Same construction with the stock replaced by the bond, so the band
    event says the index outperforms the bond by roughly the squared
    index volatility over the horizon.
    """
    _check_delta(delta)
    comps = _band_components(
        reduce_dimension_vs_bond(params), Underlying.BOND, params.t, delta
    )
    return PrudentStrategy(components=comps, label="index_vs_bond")


def _bond_one_sided(params: MarketParams, delta: float) -> PrudentStrategy:
    side = Side.UPPER if bond_drift_gap(params) >= 0.0 else Side.LOWER
    comp = _one_sided_component(
        reduce_dimension_vs_bond(params), Underlying.BOND, params.t, delta, side
    )
    return PrudentStrategy(components=(comp,), label=f"index_vs_bond_{side.value}")


def build_capm_composite(
    params: MarketParams,
    delta: float,
    eps: float,
    variant: str,
) -> PrudentStrategy:
    """Strategies behind the drift-bound guarantees.

    ``prop_mu``      band strategy on the stock ratio (wealth delta).
    ``prop_mu_bis``  one-sided stock strategy, tail picked by the sign
                     of the drift gap (wealth delta).
    ``cor_2delta``   prop_mu_bis and a one-sided bond strategy, each
                     rescaled to wealth 1; beats by 1/(2 delta) when
                     either fires.
    ``cor_3delta``   one-sided bond strategy (wealth 1) plus the
                     cor_2delta basket (wealth 2); beats by 1/(3 delta).
    """
    _check_delta(delta)
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie in (0, 1)")
    if variant == "prop_mu":
        return PrudentStrategy(build_two_sided(params, delta).components, label="prop_mu")
    if variant == "prop_mu_bis":
        side = Side.UPPER if drift_gap(params) >= 0.0 else Side.LOWER
        strat = build_one_sided(params, delta, side)
        return PrudentStrategy(strat.components, label="prop_mu_bis")
    if variant == "cor_2delta":
        stock = _scaled(build_capm_composite(params, delta, eps, "prop_mu_bis"), 1.0, "")
        bond = _scaled(_bond_one_sided(params, delta), 1.0, "")
        return PrudentStrategy(stock.components + bond.components, label="cor_2delta")
    if variant == "cor_3delta":
        bond = _scaled(_bond_one_sided(params, delta), 1.0, "")
        inner = build_capm_composite(params, delta, eps, "cor_2delta")
        return PrudentStrategy(bond.components + inner.components, label="cor_3delta")
    raise ValueError(f"unknown composite variant: {variant!r}")


# ---------------------------------------------------------------------------
# Ratio plumbing shared by payoffs, events, and valuation


def _terminal_log_ratio(
    comp_underlying: Underlying, params: MarketParams, i_terminal, s_terminal
) -> np.ndarray:
    """ln(numerator/index) at expiry; the one expression both payoff
    indicators and event predicates are built from."""
    i_terminal = np.asarray(i_terminal, dtype=float)
    if comp_underlying is Underlying.STOCK:
        return np.log(np.asarray(s_terminal, dtype=float) / i_terminal)
    return params.r * params.t - np.log(i_terminal)


def _running_numerator(
    comp_underlying: Underlying, params: MarketParams, t: float, stock_t
) -> np.ndarray:
    if comp_underlying is Underlying.STOCK:
        return np.asarray(stock_t, dtype=float)
    return np.asarray(math.exp(params.r * t))


def terminal_wealth(strategy: PrudentStrategy, params: MarketParams, i_terminal, s_terminal):
    """Exact terminal wealth of the basket on given terminal prices."""
    i_terminal = np.asarray(i_terminal, dtype=float)
    total = np.zeros(i_terminal.shape)
    for comp in strategy.components:
        log_ratio = _terminal_log_ratio(comp.underlying, params, i_terminal, s_terminal)
        total += comp.units * i_terminal * comp.spec.payoff_indicator(log_ratio)
    return total


def strategy_fires(strategy: PrudentStrategy, params: MarketParams, i_terminal, s_terminal):
    """Whether any component pays off (boolean, elementwise)."""
    fired = None
    for comp in strategy.components:
        log_ratio = _terminal_log_ratio(comp.underlying, params, i_terminal, s_terminal)
        ind = comp.spec.payoff_indicator(log_ratio)
        fired = ind if fired is None else (fired | ind)
    return fired


# ---------------------------------------------------------------------------
# Event predicates, stated as in the propositions


def event_two_sided(params: MarketParams, delta: float, s_terminal, i_terminal):
    """|ln(S_T/I_T) + delta_norm^2 T/2| < z_{delta/2} delta_norm sqrt(T).

    Exact complement of the two-sided strategy's payoff: both compare
    the same log ratio against the same stored band edges.
    """
    _check_delta(delta)
    reduced = reduce_dimension(params)
    log_a, log_b = log_thresholds(reduced.delta_norm, params.t, delta)
    x = _terminal_log_ratio(Underlying.STOCK, params, i_terminal, s_terminal)
    return (x > log_a) & (x < log_b)


def event_one_sided(params: MarketParams, delta: float, s_terminal, i_terminal, side: Side | str):
    """One-tail band event; upper: centered log ratio stays below the
    z_delta width, lower: stays above its negative."""
    _check_delta(delta)
    side = Side(side)
    comp = _one_sided_component(reduce_dimension(params), Underlying.STOCK, params.t, delta, side)
    x = _terminal_log_ratio(Underlying.STOCK, params, i_terminal, s_terminal)
    return ~comp.spec.payoff_indicator(x)


def event_recover(params: MarketParams, delta: float, i_terminal):
    """|ln(I_T e^{-rT}) - ||sigma_i||^2 T/2| < z_{delta/2} ||sigma_i|| sqrt(T)."""
    _check_delta(delta)
    reduced = reduce_dimension_vs_bond(params)
    log_a, log_b = log_thresholds(reduced.delta_norm, params.t, delta)
    x = _terminal_log_ratio(Underlying.BOND, params, i_terminal, None)
    return (x > log_a) & (x < log_b)


# ---------------------------------------------------------------------------
# Wealth tracking


def _analytic_values(
    strategy: PrudentStrategy,
    params: MarketParams,
    times: np.ndarray,
    index_values: np.ndarray,
    stock_values: np.ndarray,
) -> np.ndarray:
    """Claim-value sum on a (n_paths, n_times) price grid; exact payoff at T."""
    n, m_plus_1 = index_values.shape
    wealth = np.zeros((n, m_plus_1))
    for k, t in enumerate(times[:-1]):
        for comp in strategy.components:
            numer = _running_numerator(comp.underlying, params, float(t), stock_values[:, k])
            wealth[:, k] += comp.units * claim_value(
                comp.reduced, comp.spec, float(t), numer, index_values[:, k], params.t
            )
    wealth[:, -1] = terminal_wealth(
        strategy, params, index_values[:, -1], stock_values[:, -1]
    )
    return wealth


def _aggregate_deltas(
    strategy: PrudentStrategy,
    params: MarketParams,
    t: float,
    stock_t: np.ndarray,
    index_t: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Total stock and index positions of the basket at time t.

    Bond-ratio components hedge with the bond and the index; their bond
    position lands in the cash leg via the self-financing residual, so
    only their index units show up here.
    """
    h_stock = np.zeros(index_t.shape)
    h_index = np.zeros(index_t.shape)
    for comp in strategy.components:
        numer = _running_numerator(comp.underlying, params, t, stock_t)
        ratios = hedge_ratios(comp.reduced, comp.spec, t, numer, index_t, params.t)
        h_index += comp.units * np.asarray(ratios.units_i)
        if comp.underlying is Underlying.STOCK:
            h_stock += comp.units * np.asarray(ratios.units_s)
    return h_stock, h_index


def _self_financing_track(
    v0: np.ndarray,
    times: np.ndarray,
    stock_values: np.ndarray,
    index_values: np.ndarray,
    rate: float,
    positions: Callable[[float, np.ndarray, np.ndarray], tuple[np.ndarray, np.ndarray]],
    rebalance_cutoff: float,
) -> np.ndarray:
    """Discrete self-financing portfolio value on a price grid.

    At each grid time up to the cutoff the stock/index positions are
    reset by ``positions``; the residual is cash accruing at ``rate``.
    After the cutoff the last positions are held to expiry.
    """
    n, m_plus_1 = index_values.shape
    value = np.empty((n, m_plus_1))
    value[:, 0] = v0
    h_stock = np.zeros(n)
    h_index = np.zeros(n)
    for k in range(m_plus_1 - 1):
        t = float(times[k])
        if t <= rebalance_cutoff:
            h_stock, h_index = positions(t, stock_values[:, k], index_values[:, k])
        cash = value[:, k] - h_stock * stock_values[:, k] - h_index * index_values[:, k]
        growth = math.exp(rate * float(times[k + 1] - times[k]))
        value[:, k + 1] = (
            h_stock * stock_values[:, k + 1] + h_index * index_values[:, k + 1] + cash * growth
        )
    return value


def analytic_wealth(
    strategy: PrudentStrategy, params: MarketParams, path: PathSample
) -> WealthTrack:
    """Claim-value wealth along one path (exact payoff at the horizon)."""
    wealth = _analytic_values(
        strategy,
        params,
        path.times,
        path.index_values[None, :],
        path.stock_values[None, :],
    )
    return WealthTrack(times=path.times, analytic=wealth[0])


def hedged_wealth(
    strategy: PrudentStrategy,
    params: MarketParams,
    path: PathSample,
    rebalance_cutoff: float,
) -> WealthTrack:
    """Analytic track plus its discrete self-financing replication.

    The hedged track starts at the analytic value and rebalances to the
    closed-form deltas at every grid time up to ``rebalance_cutoff``
    (which must be before expiry), then holds.
    """
    if not rebalance_cutoff < params.t:
        raise ValueError("rebalance cutoff must precede the horizon")
    index_values = path.index_values[None, :]
    stock_values = path.stock_values[None, :]
    analytic = _analytic_values(strategy, params, path.times, index_values, stock_values)

    def positions(t, s, i):
        return _aggregate_deltas(strategy, params, t, s, i)

    hedged = _self_financing_track(
        analytic[:, 0], path.times, stock_values, index_values,
        params.r, positions, rebalance_cutoff,
    )
    return WealthTrack(times=path.times, analytic=analytic[0], hedged=hedged[0])


# ---------------------------------------------------------------------------
# Drift bounds


def bound_check(params: MarketParams, delta: float, eps: float, which: str) -> BoundReport:
    """Evaluate one of the drift bounds at the given tail masses.

    ``mu``         |drift gap| < (z_{delta/2} + z_eps) delta_norm / sqrt(T)
    ``mu_bis``     same with z_delta
    ``index``      |mu_i - r - ||sigma_i||^2| < (z_delta + z_eps) ||sigma_i|| / sqrt(T)
    ``capm1``      |mu_s - r - sigma_s . sigma_i| < (z_delta + z_eps)(||sigma_i|| + delta_norm) / sqrt(T)
    ``capm_final`` |mu_s - r - beta (mu_i - r)| <= (z_delta + z_eps)(||sigma_i|| + ||sigma_s|| + delta_norm) / sqrt(T)
                   with beta = sigma_s . sigma_i / ||sigma_i||^2
    """
    _check_delta(delta)
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie in (0, 1)")
    sqrt_t = math.sqrt(params.t)
    norm_i = float(np.linalg.norm(params.sigma_i))
    norm_s = float(np.linalg.norm(params.sigma_s))
    delta_norm = float(np.linalg.norm(params.sigma_s - params.sigma_i))
    cross = float(params.sigma_s @ params.sigma_i)
    z_eps = cached_upper_quantile(eps)
    z_delta = cached_upper_quantile(delta)

    if which == "mu":
        lhs = abs(drift_gap(params))
        rhs = (cached_upper_quantile(delta / 2.0) + z_eps) * delta_norm / sqrt_t
    elif which == "mu_bis":
        lhs = abs(drift_gap(params))
        rhs = (z_delta + z_eps) * delta_norm / sqrt_t
    elif which == "index":
        lhs = abs(params.mu_i - params.r - norm_i**2)
        rhs = (z_delta + z_eps) * norm_i / sqrt_t
    elif which == "capm1":
        lhs = abs(params.mu_s - params.r - cross)
        rhs = (z_delta + z_eps) * (norm_i + delta_norm) / sqrt_t
    elif which == "capm_final":
        beta = cross / norm_i**2
        lhs = abs(params.mu_s - params.r - beta * (params.mu_i - params.r))
        rhs = (z_delta + z_eps) * (norm_i + norm_s + delta_norm) / sqrt_t
        return BoundReport(lhs=lhs, rhs=rhs, holds=lhs <= rhs, proposition=which)
    else:
        raise ValueError(f"unknown bound: {which!r}")
    return BoundReport(lhs=lhs, rhs=rhs, holds=lhs < rhs, proposition=which)
