"""Monte Carlo campaigns comparing portfolio strategies.

Every trial draws its market noise from a stream keyed by
``(seed, trial_index)``; all markets of one trial share that stream and
all portfolios on a market see the same scenario. Trials are processed in
fixed-size chunks and the chunk statistics are folded in index order, so
the worker count never changes a single bit of the result.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .market import HestonParams, TimeGrid, simulate_batch, validate_correlations
from .metrics import GrowthAccumulator, GrowthStats, growth_series
from .strategies import StrategySpec, run_paths

log = logging.getLogger(__name__)

CHUNK_TRIALS = 50

ASSET_SWEEPS = ("mu", "kappa", "theta", "sigma", "rho", "s0", "v0")
STRATEGY_SWEEPS = ("psi", "phi", "cash_share")


class TrialError(RuntimeError):
    def __init__(self, trial_index: int, sweep_value, cause: BaseException):
        super().__init__(f"trial {trial_index} (sweep value {sweep_value}) failed: {cause!r}")
        self.trial_index = trial_index
        self.sweep_value = sweep_value
        self.cause = cause

    def __reduce__(self):
        return TrialError, (self.trial_index, self.sweep_value, self.cause)


@dataclass(frozen=True)
class MarketSpec:
    assets: tuple
    correlation: tuple

    def __post_init__(self):
        assets = tuple(self.assets)
        if not assets:
            raise ValueError("a market needs at least one asset")
        corr = tuple(tuple(float(x) for x in row) for row in self.correlation)
        object.__setattr__(self, "assets", assets)
        object.__setattr__(self, "correlation", corr)
        if len(corr) != len(assets) or any(len(row) != len(assets) for row in corr):
            raise ValueError(f"correlation matrix must be {len(assets)}x{len(assets)}")
        validate_correlations(corr)

    @classmethod
    def uniform(cls, asset: HestonParams, n: int, pairwise: float = 0.0) -> "MarketSpec":
        corr = np.full((n, n), pairwise)
        np.fill_diagonal(corr, 1.0)
        return cls((asset,) * n, tuple(map(tuple, corr)))

    @property
    def n_assets(self) -> int:
        return len(self.assets)


@dataclass(frozen=True)
class PortfolioSpec:
    label: str
    market: str
    strategy: StrategySpec


@dataclass(frozen=True)
class SweepSpec:
    parameter: str
    values: tuple

    def __post_init__(self):
        if self.parameter not in ASSET_SWEEPS + STRATEGY_SWEEPS:
            raise ValueError(f"cannot sweep {self.parameter!r}; expected one of {ASSET_SWEEPS + STRATEGY_SWEEPS}")
        values = tuple(float(v) for v in self.values)
        if not values or not all(np.isfinite(values)):
            raise ValueError("sweep values must be a non-empty list of finite numbers")
        object.__setattr__(self, "values", values)


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    markets: dict
    portfolios: tuple
    grid: TimeGrid = TimeGrid()
    trials: int = 1000
    seed: int = 0
    family: str = "custom"
    comparisons: tuple = ()
    sweep: Optional[SweepSpec] = None
    initial_wealth: float = 1000.0

    def __post_init__(self):
        if int(self.trials) != self.trials or self.trials < 1:
            raise ValueError(f"trials must be a positive integer, got {self.trials}")
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must lie in [0, 2**64), got {self.seed}")
        if not self.initial_wealth > 0:
            raise ValueError("initial wealth must be positive")
        object.__setattr__(self, "portfolios", tuple(self.portfolios))
        object.__setattr__(self, "comparisons", tuple(tuple(c) for c in self.comparisons))
        labels = [p.label for p in self.portfolios]
        if not labels:
            raise ValueError("at least one portfolio is required")
        if len(set(labels)) != len(labels):
            raise ValueError("portfolio labels must be unique")
        for p in self.portfolios:
            if p.market not in self.markets:
                raise ValueError(f"portfolio {p.label!r} refers to unknown market {p.market!r}")
            w = p.strategy.weights
            if w is not None and len(w) != self.markets[p.market].n_assets:
                raise ValueError(f"portfolio {p.label!r} has {len(w)} weights for {self.markets[p.market].n_assets} assets")
        for a, b in self.comparisons:
            if a not in labels or b not in labels:
                raise ValueError(f"comparison ({a}, {b}) names an unknown portfolio")

    def with_overrides(self, seed: Optional[int] = None, trials: Optional[int] = None) -> "ExperimentConfig":
        changes = {}
        if seed is not None:
            changes["seed"] = seed
        if trials is not None:
            changes["trials"] = trials
        return replace(self, **changes)

    def sweep_values(self) -> list:
        return list(self.sweep.values) if self.sweep else [None]

    def resolved(self, value) -> tuple[dict, tuple]:
        """Markets and portfolios with the sweep value applied."""
        if self.sweep is None or value is None:
            return self.markets, self.portfolios
        name = self.sweep.parameter
        if name in ASSET_SWEEPS:
            markets = {
                key: replace(m, assets=tuple(replace(a, **{name: value}) for a in m.assets))
                for key, m in self.markets.items()
            }
            return markets, self.portfolios
        portfolios = []
        for p in self.portfolios:
            s = p.strategy
            if name == "cash_share" and s.kind != "passive":
                s = replace(s, cash_share=value)
            elif name in ("psi", "phi") and s.trades:
                s = replace(s, **{name: value})
            portfolios.append(replace(p, strategy=s))
        return self.markets, tuple(portfolios)


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    times: np.ndarray
    sweep_values: list
    growth: list  # per sweep value: {label: GrowthStats}
    differences: list  # per sweep value: {(a, b): GrowthStats}
    self_financing_error: float
    provenance: dict = field(default_factory=dict)

    def final_growth(self, label: str, sweep_index: int = 0) -> tuple[float, float]:
        s = self.growth[sweep_index][label]
        return float(s.mean[-1]), float(s.stderr[-1])

    def comparison_curve(self, a: str, b: str) -> tuple[np.ndarray, np.ndarray]:
        """Mean paired final-growth difference ``g_a(T) - g_b(T)`` and its standard error per sweep value."""
        means = np.array([d[(a, b)].mean[-1] for d in self.differences])
        errs = np.array([d[(a, b)].stderr[-1] for d in self.differences])
        return means, errs


def _chunks(trials: int) -> list[tuple[int, int]]:
    return [(start, min(start + CHUNK_TRIALS, trials)) for start in range(0, trials, CHUNK_TRIALS)]


def _simulate_chunk(config: ExperimentConfig, sweep_index: int, trial_indices: list) -> tuple[dict, dict, float]:
    value = config.sweep_values()[sweep_index]
    markets, portfolios = config.resolved(value)
    grid = config.grid
    prices = {}
    for key in sorted({p.market for p in portfolios}):
        m = markets[key]
        factor = validate_correlations(m.correlation)
        prices[key], _ = simulate_batch(m.assets, factor, grid, config.seed, trial_indices)
    curves = {}
    sf_err = 0.0
    for p in portfolios:
        hist = run_paths(prices[p.market], p.strategy, config.initial_wealth)
        if p.strategy.trades:
            sf_err = max(sf_err, hist.self_financing_error())
        curves[p.label] = growth_series(hist.wealth, grid)
        if not np.all(np.isfinite(curves[p.label])):
            raise FloatingPointError(f"non-finite growth for portfolio {p.label!r}")
    diffs = {(a, b): curves[a] - curves[b] for a, b in config.comparisons}
    return curves, diffs, sf_err


def run_chunk(config: ExperimentConfig, sweep_index: int, start: int, stop: int):
    """Accumulate statistics for trials ``start..stop-1`` at one sweep value."""
    try:
        curves, diffs, sf_err = _simulate_chunk(config, sweep_index, list(range(start, stop)))
    except Exception:
        # locate the first failing trial so it can be reported
        for t in range(start, stop):
            try:
                _simulate_chunk(config, sweep_index, [t])
            except Exception as exc:
                raise TrialError(t, config.sweep_values()[sweep_index], exc) from exc
        raise
    size = config.grid.size
    growth = {k: GrowthAccumulator(size).add(v) for k, v in curves.items()}
    difference = {k: GrowthAccumulator(size).add(v) for k, v in diffs.items()}
    return growth, difference, sf_err


def _run_unit(args):
    return run_chunk(*args)


def run_experiment(config: ExperimentConfig, workers: int = 1) -> ExperimentResult:
    """Run every (sweep value, trial chunk) unit and fold the statistics in index order."""
    from . import __version__

    units = [
        (config, j, start, stop)
        for j in range(len(config.sweep_values()))
        for start, stop in _chunks(config.trials)
    ]
    log.info("running %s: %d units over %d worker(s)", config.name, len(units), workers)
    if workers <= 1:
        outputs = [_run_unit(u) for u in units]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outputs = list(pool.map(_run_unit, units))

    size = config.grid.size
    n_sweep = len(config.sweep_values())
    growth = [{p.label: GrowthAccumulator(size) for p in config.portfolios} for _ in range(n_sweep)]
    differences = [{c: GrowthAccumulator(size) for c in config.comparisons} for _ in range(n_sweep)]
    sf_err = 0.0
    for (_, j, _, _), (g, d, err) in zip(units, outputs):
        for k, acc in g.items():
            growth[j][k].merge(acc)
        for k, acc in d.items():
            differences[j][k].merge(acc)
        sf_err = max(sf_err, err)

    return ExperimentResult(
        config=config,
        times=config.grid.times(),
        sweep_values=config.sweep_values(),
        growth=[{k: acc.stats() for k, acc in g.items()} for g in growth],
        differences=[{k: acc.stats() for k, acc in d.items()} for d in differences],
        self_financing_error=sf_err,
        provenance={"seed": config.seed, "version": __version__, "chunk_trials": CHUNK_TRIALS},
    )


def default_workers() -> int:
    return os.cpu_count() or 1
