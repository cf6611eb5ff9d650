"""Correlated multi-asset Heston market simulation.

Prices follow log-Euler steps and variances a full-truncation Euler scheme,
so prices stay strictly positive and stored variances may touch zero but
never go below it after the positive part is taken.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

SEED_LIMIT = 2**64


class NotPSDError(ValueError):
    """Raised when a correlation matrix admits no real factorization."""


@dataclass(frozen=True)
class HestonParams:
    mu: float = 0.1
    kappa: float = 1.2
    theta: float = 0.05
    sigma: float = 0.5
    rho: float = -0.66
    s0: float = 100.0
    v0: float = 0.025

    def __post_init__(self):
        if not self.s0 > 0:
            raise ValueError(f"s0 must be positive, got {self.s0}")
        if not self.v0 > 0:
            raise ValueError(f"v0 must be positive, got {self.v0}")
        if not self.kappa > 0:
            raise ValueError(f"kappa must be positive, got {self.kappa}")
        if not self.theta > 0:
            raise ValueError(f"theta must be positive, got {self.theta}")
        if not self.sigma >= 0:
            raise ValueError(f"sigma must be non-negative, got {self.sigma}")
        if not -1.0 <= self.rho <= 1.0:
            raise ValueError(f"rho must lie in [-1, 1], got {self.rho}")
        if not math.isfinite(self.mu):
            raise ValueError(f"mu must be finite, got {self.mu}")


@dataclass(frozen=True)
class TimeGrid:
    horizon: float = 2.0
    dt: float = 2.0**-8

    def __post_init__(self):
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not (self.horizon > 0 and math.isfinite(self.horizon)):
            raise ValueError(f"horizon must be positive, got {self.horizon}")
        steps = round(self.horizon / self.dt)
        if steps < 1 or abs(steps * self.dt - self.horizon) > 1e-9 * self.horizon:
            raise ValueError(
                f"horizon {self.horizon} is not an integer multiple of dt {self.dt}"
            )

    @property
    def steps(self) -> int:
        return round(self.horizon / self.dt)

    @property
    def size(self) -> int:
        return self.steps + 1

    def times(self) -> np.ndarray:
        return np.arange(self.size) * self.dt


@dataclass(frozen=True)
class MarketScenario:
    """One realization: ``prices`` and ``variances`` have shape (n, K+1)."""

    prices: np.ndarray
    variances: np.ndarray
    grid: TimeGrid

    @property
    def n_assets(self) -> int:
        return self.prices.shape[0]


def validate_correlations(matrix, tol: float = 1e-12) -> np.ndarray:
    """Return a lower-triangular L with L @ L.T == matrix.

    Semidefinite matrices (e.g. perfectly correlated assets) are accepted;
    a zero pivot just yields a zero column.
    """
    a = np.array(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"correlation matrix must be square, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("correlation matrix has non-finite entries")
    if not np.allclose(np.diag(a), 1.0, rtol=0, atol=tol):
        raise ValueError("correlation matrix must have a unit diagonal")
    if not np.allclose(a, a.T, rtol=0, atol=tol):
        raise ValueError("correlation matrix must be symmetric")

    n = a.shape[0]
    low = np.zeros_like(a)
    for j in range(n):
        pivot = a[j, j] - low[j, :j] @ low[j, :j]
        if pivot < -tol:
            raise NotPSDError(f"correlation matrix is not positive semidefinite (pivot {j} = {pivot:.3g})")
        if pivot <= tol:
            # zero column: the remaining entries of column j must already be explained
            for i in range(j + 1, n):
                resid = a[i, j] - low[i, :j] @ low[j, :j]
                if abs(resid) > 1e-9:
                    raise NotPSDError(f"correlation matrix is not positive semidefinite (column {j})")
            continue
        low[j, j] = math.sqrt(pivot)
        for i in range(j + 1, n):
            low[i, j] = (a[i, j] - low[i, :j] @ low[j, :j]) / low[j, j]
    return low


def trial_rng(seed: int, trial_index: int) -> np.random.Generator:
    """Counter-based stream for one trial: Philox keyed by (seed, trial_index)."""
    if not 0 <= seed < SEED_LIMIT:
        raise ValueError(f"seed must lie in [0, 2**64), got {seed}")
    if not 0 <= trial_index < SEED_LIMIT:
        raise ValueError(f"trial_index must lie in [0, 2**64), got {trial_index}")
    return np.random.Generator(np.random.Philox(key=seed + (trial_index << 64)))


def draw_increments(factor: np.ndarray, rho: Sequence[float], rng: np.random.Generator, steps: int) -> np.ndarray:
    """Standard Gaussian increments of shape (2n, K).

    Rows ``0..n-1`` drive prices and carry the asset correlation encoded in
    ``factor``; rows ``n..2n-1`` drive variances, each correlated with its own
    price row by ``rho[i]``.
    """
    factor = np.asarray(factor, dtype=float)
    rho = np.asarray(rho, dtype=float)
    n = factor.shape[0]
    raw = rng.standard_normal((2, n, steps))
    z_price = factor @ raw[0]
    z_var = rho[:, None] * z_price + np.sqrt(1.0 - rho * rho)[:, None] * raw[1]
    return np.concatenate([z_price, z_var])


def _param_columns(params: Sequence[HestonParams]) -> dict[str, np.ndarray]:
    return {
        name: np.array([getattr(p, name) for p in params], dtype=float)
        for name in ("mu", "kappa", "theta", "sigma", "rho", "s0", "v0")
    }


def evolve(params: Sequence[HestonParams], grid: TimeGrid, increments: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Run the discretization on pre-drawn increments.

    ``increments`` has shape (..., 2n, K); leading axes are batch axes and
    every batch row is computed with elementwise operations only, so a row
    does not depend on its neighbours.
    """
    cols = _param_columns(params)
    n = len(params)
    dt = grid.dt
    sqdt = math.sqrt(dt)
    steps = increments.shape[-1]
    batch = increments.shape[:-2]

    z_price = increments[..., :n, :]
    z_var = increments[..., n:, :]

    prices = np.empty(batch + (n, steps + 1))
    var = np.empty(batch + (n, steps + 1))
    prices[..., 0] = cols["s0"]
    var[..., 0] = cols["v0"]

    mu, kappa, theta, sigma = cols["mu"], cols["kappa"], cols["theta"], cols["sigma"]
    v = np.broadcast_to(cols["v0"], batch + (n,)).copy()
    for k in range(steps):
        vp = np.maximum(v, 0.0)
        root = np.sqrt(vp) * sqdt
        prices[..., k + 1] = prices[..., k] * np.exp((mu - 0.5 * vp) * dt + root * z_price[..., k])
        v = v + kappa * (theta - vp) * dt + sigma * root * z_var[..., k]
        var[..., k + 1] = v

    return prices, np.maximum(var, 0.0)


def simulate_paths(params: Sequence[HestonParams], matrix, grid: TimeGrid, seed: int, trial_index: int) -> MarketScenario:
    """Simulate one scenario, fully determined by ``(seed, trial_index)``."""
    factor = validate_correlations(matrix)
    if factor.shape[0] != len(params):
        raise ValueError(f"correlation matrix is {factor.shape[0]}x{factor.shape[0]} but {len(params)} assets given")
    rho = [p.rho for p in params]
    inc = draw_increments(factor, rho, trial_rng(seed, trial_index), grid.steps)
    prices, variances = evolve(params, grid, inc)
    return MarketScenario(prices, variances, grid)


def simulate_batch(params: Sequence[HestonParams], factor: np.ndarray, grid: TimeGrid, seed: int, trial_indices: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
    """Simulate several trials at once; row b equals ``simulate_paths(..., trial_indices[b])``."""
    rho = [p.rho for p in params]
    inc = np.stack([draw_increments(factor, rho, trial_rng(seed, t), grid.steps) for t in trial_indices])
    return evolve(params, grid, inc)
