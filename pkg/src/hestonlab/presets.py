"""Ready-made campaigns, one per published figure.

Caption values (horizon, step, asset count, Heston parameters, trial
counts) are taken as given. Knobs the captions leave open use the package
defaults: independent assets, psi = phi = 0.5, MACD lags (12, 26, 9), RSI
lag 27 with thresholds 30/70, no initial cash for indicator portfolios and
an initial wealth of 1000.
"""

from __future__ import annotations

from dataclasses import replace

from .experiments import ExperimentConfig, MarketSpec, PortfolioSpec, SweepSpec
from .market import HestonParams, TimeGrid
from .strategies import StrategySpec

GRID = TimeGrid(horizon=2.0, dt=2.0**-8)
BASE = HestonParams(mu=0.1, kappa=1.2, theta=0.05, sigma=0.5, rho=-0.66, s0=100.0, v0=0.025)

CASH_SHARE = 0.28
CASH_SWEEP_SHARES = (0.1, 0.28, 0.5, 0.75)
CASH_SWEEP_MU = (0.001, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5)
INDICATOR_SWEEP_MU = (-0.1, 0.0, 0.1, 0.2, 0.3, 0.4, 0.5)

WELL_DIVERSIFIED_KAPPA_THETA = ((1.0, 0.04), (1.2, 0.05), (1.4, 0.06))
POORLY_DIVERSIFIED_CORRELATION = 0.8

PASSIVE = StrategySpec("passive")
MACD = StrategySpec("macd")
RSI = StrategySpec("rsi")


def _fig1() -> ExperimentConfig:
    asset = replace(BASE, v0=0.035)
    well = MarketSpec(
        tuple(replace(asset, kappa=k, theta=th) for k, th in WELL_DIVERSIFIED_KAPPA_THETA),
        ((1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0)),
    )
    return ExperimentConfig(
        name="fig1",
        family="diversification",
        markets={
            "well": well,
            "poorly": MarketSpec.uniform(asset, 3, POORLY_DIVERSIFIED_CORRELATION),
            "single": MarketSpec.uniform(asset, 1),
        },
        portfolios=(
            PortfolioSpec("well", "well", PASSIVE),
            PortfolioSpec("poorly", "poorly", PASSIVE),
            PortfolioSpec("single", "single", PASSIVE),
        ),
        comparisons=(("well", "single"), ("poorly", "single"), ("well", "poorly")),
        grid=GRID,
        trials=1000,
    )


def _cash(name: str, mu: float) -> ExperimentConfig:
    return ExperimentConfig(
        name=name,
        family="cash",
        markets={"main": MarketSpec.uniform(replace(BASE, mu=mu), 5)},
        portfolios=(
            PortfolioSpec("passive", "main", PASSIVE),
            PortfolioSpec("cash", "main", StrategySpec("cash-passive", cash_share=CASH_SHARE)),
        ),
        comparisons=(("cash", "passive"),),
        grid=GRID,
        trials=1000,
    )


def _fig4() -> ExperimentConfig:
    cash = tuple(
        PortfolioSpec(f"cash{round(100 * c)}", "main", StrategySpec("cash-passive", cash_share=c))
        for c in CASH_SWEEP_SHARES
    )
    return ExperimentConfig(
        name="fig4",
        family="cash-sweep",
        markets={"main": MarketSpec.uniform(BASE, 5)},
        portfolios=(PortfolioSpec("passive", "main", PASSIVE),) + cash,
        comparisons=tuple((p.label, "passive") for p in cash),
        sweep=SweepSpec("mu", CASH_SWEEP_MU),
        grid=GRID,
        trials=5000,
    )


def _indicator(name: str, strategy: StrategySpec, mu: float, n: int) -> ExperimentConfig:
    return ExperimentConfig(
        name=name,
        family="indicator",
        markets={"main": MarketSpec.uniform(replace(BASE, mu=mu), n)},
        portfolios=(
            PortfolioSpec("passive", "main", PASSIVE),
            PortfolioSpec(strategy.kind, "main", strategy),
        ),
        comparisons=((strategy.kind, "passive"),),
        grid=GRID,
        trials=1000,
    )


def _fig9() -> ExperimentConfig:
    return ExperimentConfig(
        name="fig9",
        family="indicator-sweep",
        markets={"main": MarketSpec.uniform(BASE, 5)},
        portfolios=(
            PortfolioSpec("passive", "main", PASSIVE),
            PortfolioSpec("macd", "main", MACD),
            PortfolioSpec("rsi", "main", RSI),
        ),
        comparisons=(("macd", "passive"), ("rsi", "passive")),
        sweep=SweepSpec("mu", INDICATOR_SWEEP_MU),
        grid=GRID,
        trials=5000,
    )


PRESETS = {
    "fig1": _fig1,
    "fig2": lambda: _cash("fig2", 0.1),
    "fig3": lambda: _cash("fig3", 0.001),
    "fig4": _fig4,
    "fig5": lambda: _indicator("fig5", MACD, 0.005, 10),
    "fig6": lambda: _indicator("fig6", MACD, 0.1, 10),
    "fig7": lambda: _indicator("fig7", RSI, 0.1, 5),
    "fig8": lambda: _indicator("fig8", RSI, 0.5, 5),
    "fig9": _fig9,
}


def preset(name: str) -> ExperimentConfig:
    try:
        return PRESETS[name]()
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}") from None
