"""EMA, MACD and RSI over discrete price series.

All functions work along the last axis, so a (n_assets, K+1) price matrix
or a (batch, n_assets, K+1) stack can be passed directly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter


@dataclass(frozen=True)
class EmaSpec:
    lag: int

    def __post_init__(self):
        if int(self.lag) != self.lag or self.lag < 1:
            raise ValueError(f"EMA lag must be a positive integer, got {self.lag}")

    @property
    def alpha(self) -> float:
        return 2.0 / (self.lag + 1)


@dataclass(frozen=True)
class MacdSpec:
    fast: int = 12
    slow: int = 26
    signal: int = 9
    # "price": EMA of the price minus the MACD line (as published);
    # "macd": MACD line minus its own EMA (textbook signal-line crossover)
    line: str = "price"

    def __post_init__(self):
        for name in ("fast", "slow", "signal"):
            EmaSpec(getattr(self, name))
        if self.line not in ("price", "macd"):
            raise ValueError(f"MACD line must be 'price' or 'macd', got {self.line!r}")
        if not self.signal < self.fast < self.slow:
            raise ValueError(
                f"MACD lags must satisfy signal < fast < slow, got "
                f"signal={self.signal}, fast={self.fast}, slow={self.slow}"
            )


@dataclass(frozen=True)
class RsiSpec:
    lag: int = 27
    buy_below: float = 30.0
    sell_above: float = 70.0

    def __post_init__(self):
        EmaSpec(self.lag)
        if not 0.0 <= self.buy_below < self.sell_above <= 100.0:
            raise ValueError(
                f"RSI thresholds must satisfy 0 <= buy_below < sell_above <= 100, "
                f"got {self.buy_below}, {self.sell_above}"
            )


def ema(series, lag: int) -> np.ndarray:
    """Exponential moving average seeded with the first value."""
    x = np.asarray(series, dtype=float)
    if x.shape[-1] == 0:
        raise ValueError("ema of an empty series")
    alpha = EmaSpec(lag).alpha
    if alpha == 1.0:
        return x.copy()
    # filter deviations from the first value so constant stretches stay exact
    first = x[..., :1]
    return lfilter([alpha], [1.0, alpha - 1.0], x - first, axis=-1) + first


def macd_line(prices, fast: int, slow: int) -> np.ndarray:
    if not fast < slow:
        raise ValueError(f"MACD needs fast < slow, got fast={fast}, slow={slow}")
    return ema(prices, fast) - ema(prices, slow)


def macd_final_line(prices, spec: MacdSpec) -> np.ndarray:
    """The line whose sign changes trigger trades.

    By default this is the EMA of the price at the signal lag minus the MACD
    line. For positive prices it stays close to the price level and rarely,
    if ever, changes sign. ``line="macd"`` selects the textbook variant, the
    MACD line minus its own EMA.
    """
    m = macd_line(prices, spec.fast, spec.slow)
    if spec.line == "macd":
        return m - ema(m, spec.signal)
    return ema(prices, spec.signal) - m


def crossing_signals(line) -> tuple[np.ndarray, np.ndarray]:
    """Buy where ``line`` goes from strictly negative to strictly positive, sell on the reverse."""
    f = np.asarray(line, dtype=float)
    buy = np.zeros(f.shape, dtype=bool)
    sell = np.zeros(f.shape, dtype=bool)
    prev, cur = f[..., :-1], f[..., 1:]
    buy[..., 1:] = (prev < 0) & (cur > 0)
    sell[..., 1:] = (prev > 0) & (cur < 0)
    return buy, sell


def macd_signals(prices, spec: MacdSpec) -> tuple[np.ndarray, np.ndarray]:
    return crossing_signals(macd_final_line(prices, spec))


def rsi_components(prices, lag: int) -> tuple[np.ndarray, np.ndarray]:
    """Running means of the smoothed gains and loss magnitudes, ``(a, b)``."""
    s = np.asarray(prices, dtype=float)
    if s.shape[-1] == 0:
        raise ValueError("rsi of an empty series")
    diff = np.zeros_like(s)
    diff[..., 1:] = s[..., 1:] - s[..., :-1]
    gains = np.where(diff > 0, diff, 0.0)
    losses = np.where(diff < 0, -diff, 0.0)
    counts = np.arange(1, s.shape[-1] + 1)
    a = np.cumsum(ema(gains, lag), axis=-1) / counts
    b = np.cumsum(ema(losses, lag), axis=-1) / counts
    return a, b


def rsi_from_components(a, b) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    out = np.full(np.broadcast(a, b).shape, 50.0)
    pos = b > 0
    with np.errstate(divide="ignore", invalid="ignore"):
        rs = a / b
        out = np.where(pos, 100.0 - 100.0 / (1.0 + rs), out)
    out = np.where(~pos & (a > 0), 100.0, out)
    return out


def rsi(prices, spec: RsiSpec | int = RsiSpec()) -> np.ndarray:
    """Relative strength index in [0, 100].

    With no recorded losses the index is 100, and 50 when there is neither
    a gain nor a loss yet (always the case at the first point).
    """
    lag = spec if isinstance(spec, int) else spec.lag
    a, b = rsi_components(prices, lag)
    return rsi_from_components(a, b)


def threshold_signals(values, buy_below: float, sell_above: float) -> tuple[np.ndarray, np.ndarray]:
    """Level flags; the first point never carries a flag."""
    r = np.asarray(values, dtype=float)
    buy = r < buy_below
    sell = r > sell_above
    buy[..., 0] = False
    sell[..., 0] = False
    return buy, sell


def rsi_signals(prices, spec: RsiSpec) -> tuple[np.ndarray, np.ndarray]:
    return threshold_signals(rsi(prices, spec), spec.buy_below, spec.sell_above)
