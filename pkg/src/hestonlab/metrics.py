"""Wealth, growth and Monte Carlo averaging of growth curves."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .market import MarketScenario, TimeGrid
from .strategies import PortfolioHistory, portfolio_wealth


def wealth_series(history: PortfolioHistory, scenario: MarketScenario) -> np.ndarray:
    prices = np.asarray(scenario.prices)
    if history.q.shape != prices.shape:
        raise ValueError(f"holdings shape {history.q.shape} does not match price paths {prices.shape}")
    # move time in front of the asset axis so the asset axis is last
    return portfolio_wealth(history.q0, np.swapaxes(history.q, -1, -2), np.swapaxes(prices, -1, -2))


def growth_series(wealth, grid: TimeGrid) -> np.ndarray:
    """``log(W(t)/W(0)) / t`` along the last axis, with ``g(0) = 0``."""
    w = np.asarray(wealth, dtype=float)
    if w.shape[-1] != grid.size:
        raise ValueError(f"wealth has {w.shape[-1]} points but the grid has {grid.size}")
    if not np.all(w[..., 0] > 0):
        raise ValueError("initial wealth must be positive")
    g = np.zeros_like(w)
    g[..., 1:] = np.log(w[..., 1:] / w[..., :1]) / grid.times()[1:]
    return g


@dataclass(frozen=True)
class GrowthStats:
    mean: np.ndarray
    stderr: np.ndarray
    count: int


class GrowthAccumulator:
    """Running mean and sum of squared deviations of per-trial curves.

    Batches are combined with the pairwise update of Chan et al., so merging
    chunk accumulators in a fixed order gives a result that does not depend
    on which worker produced which chunk.
    """

    def __init__(self, size: int):
        self.count = 0
        self.mean = np.zeros(size)
        self.m2 = np.zeros(size)

    def add(self, curves) -> "GrowthAccumulator":
        curves = np.asarray(curves, dtype=float)
        if curves.ndim == 1:
            curves = curves[None]
        other = GrowthAccumulator(curves.shape[-1])
        other.count = curves.shape[0]
        other.mean = curves.mean(axis=0)
        other.m2 = ((curves - other.mean) ** 2).sum(axis=0)
        return self.merge(other)

    def merge(self, other: "GrowthAccumulator") -> "GrowthAccumulator":
        if other.count == 0:
            return self
        if self.count == 0:
            self.count, self.mean, self.m2 = other.count, other.mean.copy(), other.m2.copy()
            return self
        total = self.count + other.count
        delta = other.mean - self.mean
        self.mean = self.mean + delta * (other.count / total)
        self.m2 = self.m2 + other.m2 + delta**2 * (self.count * other.count / total)
        self.count = total
        return self

    def stats(self) -> GrowthStats:
        if self.count == 0:
            raise ValueError("no trials accumulated")
        if self.count == 1:
            stderr = np.zeros_like(self.mean)
        else:
            stderr = np.sqrt(self.m2 / (self.count - 1) / self.count)
        return GrowthStats(self.mean.copy(), stderr, self.count)


def average_growth(trials: Sequence) -> GrowthStats:
    """Pointwise mean and standard error of the mean over trials."""
    trials = [np.asarray(t, dtype=float) for t in trials]
    if not trials:
        raise ValueError("cannot average an empty list of trials")
    size = trials[0].shape[-1]
    if any(t.shape != trials[0].shape for t in trials):
        raise ValueError("growth series must all have the same length")
    return GrowthAccumulator(size).add(np.stack(trials)).stats()


def growth_difference(g_a, g_b) -> np.ndarray:
    """Per-trial paired difference ``g_a - g_b``."""
    return np.asarray(g_a, dtype=float) - np.asarray(g_b, dtype=float)
