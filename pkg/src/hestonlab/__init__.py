"""Monte Carlo portfolio-strategy laboratory on correlated Heston markets."""

__version__ = "0.1.0"

from .experiments import ExperimentConfig, ExperimentResult, MarketSpec, PortfolioSpec, SweepSpec, run_experiment
from .indicators import MacdSpec, RsiSpec
from .market import HestonParams, MarketScenario, NotPSDError, TimeGrid, simulate_paths, validate_correlations
from .presets import preset
from .strategies import StrategySpec, run_strategy

__all__ = [
    "ExperimentConfig",
    "ExperimentResult",
    "HestonParams",
    "MacdSpec",
    "MarketScenario",
    "MarketSpec",
    "NotPSDError",
    "PortfolioSpec",
    "RsiSpec",
    "StrategySpec",
    "SweepSpec",
    "TimeGrid",
    "preset",
    "run_experiment",
    "run_strategy",
    "simulate_paths",
    "validate_correlations",
]
