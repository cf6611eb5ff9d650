"""Self-financing portfolio strategies over simulated markets.

Cash is the zeroth asset with a constant unit price. Indicator strategies
share one rebalancing rule: on a sell flag a ``psi`` fraction of the asset
is sold into cash, then a ``phi`` fraction of the available cash is split
equally (by value) across the assets carrying a buy flag.

Arrays carry optional leading batch axes; the asset axis is last for
holdings and second-to-last for price paths of shape (..., n, K+1).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .indicators import MacdSpec, RsiSpec, macd_signals, rsi_signals
from .market import MarketScenario

KINDS = ("passive", "cash-passive", "macd", "rsi")
SIGNAL_KINDS = ("macd", "rsi")


@dataclass(frozen=True)
class StrategySpec:
    kind: str = "passive"
    psi: float = 0.5
    phi: float = 0.5
    indicator: Optional[Union[MacdSpec, RsiSpec]] = None
    cash_share: float = 0.0
    # value weights of the invested part; None splits it equally
    weights: Optional[tuple] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown strategy kind {self.kind!r}; expected one of {KINDS}")
        for name in ("psi", "phi", "cash_share"):
            val = getattr(self, name)
            if not 0.0 <= val <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {val}")
        if self.kind == "macd":
            if self.indicator is None:
                object.__setattr__(self, "indicator", MacdSpec())
            elif not isinstance(self.indicator, MacdSpec):
                raise ValueError("a macd strategy needs a MacdSpec indicator")
        elif self.kind == "rsi":
            if self.indicator is None:
                object.__setattr__(self, "indicator", RsiSpec())
            elif not isinstance(self.indicator, RsiSpec):
                raise ValueError("an rsi strategy needs an RsiSpec indicator")
        elif self.indicator is not None:
            raise ValueError(f"a {self.kind} strategy takes no indicator")
        if self.weights is not None:
            w = tuple(float(x) for x in self.weights)
            if any(x < 0 for x in w) or not sum(w) > 0:
                raise ValueError("allocation weights must be non-negative and not all zero")
            object.__setattr__(self, "weights", w)

    @property
    def trades(self) -> bool:
        return self.kind in SIGNAL_KINDS


@dataclass
class PortfolioState:
    q0: np.ndarray
    q: np.ndarray
    wealth: np.ndarray


@dataclass
class PortfolioHistory:
    """Holdings and wealth over the grid (time is the last axis).

    ``wealth_temp`` is the pre-trade valuation of the previous holdings at
    the current prices; at t = 0 it equals ``wealth``. ``trades`` counts the
    flagged sell and buy legs acted on at each point.
    """

    q0: np.ndarray
    q: np.ndarray
    wealth: np.ndarray
    wealth_temp: np.ndarray
    trades: np.ndarray = field(default=None)

    def self_financing_error(self) -> float:
        """Largest relative gap between post-trade and pre-trade wealth."""
        return float(np.max(np.abs(self.wealth - self.wealth_temp) / np.abs(self.wealth)))


def portfolio_wealth(q0, q, prices) -> np.ndarray:
    """``q0 + sum_i prices_i * q_i`` summed in fixed asset order.

    ``q`` and ``prices`` have the asset axis last. The explicit fold keeps
    results bit-identical across batch shapes.
    """
    q = np.asarray(q, dtype=float)
    prices = np.asarray(prices, dtype=float)
    w = np.asarray(q0, dtype=float)
    for i in range(q.shape[-1]):
        w = w + prices[..., i] * q[..., i]
    return w


def _fold_assets(values) -> np.ndarray:
    total = values[..., 0]
    for i in range(1, values.shape[-1]):
        total = total + values[..., i]
    return total


def initialize(wealth0: float, prices0, spec: StrategySpec) -> PortfolioState:
    prices0 = np.asarray(prices0, dtype=float)
    if not wealth0 > 0:
        raise ValueError(f"initial wealth must be positive, got {wealth0}")
    if prices0.ndim < 1 or prices0.shape[-1] == 0:
        raise ValueError("at least one asset price is required")
    if not np.all(prices0 > 0):
        raise ValueError("initial prices must be positive")
    n = prices0.shape[-1]
    if spec.weights is None:
        weights = np.full(n, 1.0 / n)
    else:
        if len(spec.weights) != n:
            raise ValueError(f"{len(spec.weights)} allocation weights for {n} assets")
        weights = np.array(spec.weights) / sum(spec.weights)
    invested = (1.0 - spec.cash_share) * wealth0
    q = invested * weights / prices0
    q0 = np.full(prices0.shape[:-1], spec.cash_share * wealth0)
    return PortfolioState(q0, q, portfolio_wealth(q0, q, prices0))


def step_passive(state: PortfolioState, prices_t) -> PortfolioState:
    return PortfolioState(state.q0, state.q, portfolio_wealth(state.q0, state.q, prices_t))


def step_signal(state: PortfolioState, prices_t, buy, sell, psi: float, phi: float) -> PortfolioState:
    """Sell phase then buy phase at one grid point.

    When no buy flag is set the cash earmarked for buying is kept.
    """
    prices_t = np.asarray(prices_t, dtype=float)
    sell_frac = psi * np.asarray(sell, dtype=float)
    buy = np.asarray(buy, dtype=float)

    q_mid = state.q * (1.0 - sell_frac)
    q0_mid = state.q0 + _fold_assets(prices_t * state.q * sell_frac)

    count = _fold_assets(buy)
    spend = np.where(count > 0, phi * q0_mid, 0.0)
    per_asset = spend / np.maximum(count, 1.0)
    q_new = q_mid + (per_asset[..., None] / prices_t) * buy
    q0_new = q0_mid - spend
    return PortfolioState(q0_new, q_new, portfolio_wealth(q0_new, q_new, prices_t))


def strategy_signals(prices, spec: StrategySpec) -> tuple[np.ndarray, np.ndarray]:
    """Buy/sell flags per asset and grid point, computed from each asset's own path."""
    if spec.kind == "macd":
        return macd_signals(prices, spec.indicator)
    if spec.kind == "rsi":
        return rsi_signals(prices, spec.indicator)
    raise ValueError(f"{spec.kind} strategies do not use signals")


def run_paths(prices, spec: StrategySpec, wealth0: float = 1000.0) -> PortfolioHistory:
    """Run a strategy over price paths of shape (..., n, K+1)."""
    prices = np.asarray(prices, dtype=float)
    state = initialize(wealth0, prices[..., 0], spec)
    size = prices.shape[-1]
    batch = prices.shape[:-2]
    n = prices.shape[-2]

    if not spec.trades:
        q = np.broadcast_to(state.q[..., None], prices.shape)
        q0 = np.broadcast_to(state.q0[..., None], batch + (size,))
        wealth = np.asarray(state.q0)[..., None]
        for i in range(n):
            wealth = wealth + prices[..., i, :] * state.q[..., i, None]
        wealth = np.broadcast_to(wealth, batch + (size,))
        return PortfolioHistory(q0.copy(), q.copy(), wealth.copy(), wealth.copy(), np.zeros(batch + (size,), dtype=int))

    buy, sell = strategy_signals(prices, spec)
    q0_hist = np.empty(batch + (size,))
    q_hist = np.empty(batch + (n, size))
    w_hist = np.empty(batch + (size,))
    wt_hist = np.empty(batch + (size,))
    trades = np.zeros(batch + (size,), dtype=int)
    q0_hist[..., 0] = state.q0
    q_hist[..., 0] = state.q
    w_hist[..., 0] = state.wealth
    wt_hist[..., 0] = state.wealth
    for k in range(1, size):
        s_k = prices[..., k]
        wt_hist[..., k] = portfolio_wealth(state.q0, state.q, s_k)
        state = step_signal(state, s_k, buy[..., k], sell[..., k], spec.psi, spec.phi)
        q0_hist[..., k] = state.q0
        q_hist[..., k] = state.q
        w_hist[..., k] = state.wealth
        trades[..., k] = np.sum(sell[..., k], axis=-1) * (spec.psi > 0) + np.sum(buy[..., k], axis=-1) * (spec.phi > 0)
    return PortfolioHistory(q0_hist, q_hist, w_hist, wt_hist, trades)


def run_strategy(scenario: MarketScenario, spec: StrategySpec, wealth0: float = 1000.0) -> PortfolioHistory:
    return run_paths(scenario.prices, spec, wealth0)
