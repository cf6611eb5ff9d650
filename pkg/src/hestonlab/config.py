"""Experiment configuration files.

Documents are YAML (JSON is accepted too, being a YAML subset). Physical
quantities carry their unit in the key name. Unknown keys are rejected and
every validation error names the offending field and, when known, its line.

Example::

    name: fig6
    family: indicator
    seed: 42
    trials: 1000
    initial_wealth_currency: 1000
    grid: {horizon_years: 2, dt_years: 0.00390625}
    markets:
      main:
        asset: {mu_per_year: 0.1, kappa_per_year: 1.2, theta_per_year: 0.05,
                sigma_per_year: 0.5, rho: -0.66, s0_currency: 100, v0_per_year: 0.025}
        count: 10
        correlation: identity
    portfolios:
      - {label: passive, market: main, strategy: {kind: passive}}
      - {label: macd, market: main, strategy: {kind: macd, psi: 0.5, phi: 0.5}}
    comparisons: [[macd, passive]]
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Optional

import numpy as np
import yaml

from .experiments import ExperimentConfig, MarketSpec, PortfolioSpec, SweepSpec
from .indicators import MacdSpec, RsiSpec
from .market import HestonParams, NotPSDError, TimeGrid
from .strategies import StrategySpec

ASSET_KEYS = {
    "mu_per_year": "mu",
    "kappa_per_year": "kappa",
    "theta_per_year": "theta",
    "sigma_per_year": "sigma",
    "rho": "rho",
    "s0_currency": "s0",
    "v0_per_year": "v0",
}
SWEEP_KEYS = {**ASSET_KEYS, "psi": "psi", "phi": "phi", "cash_share": "cash_share"}
MACD_KEYS = {"fast_lag_steps": "fast", "slow_lag_steps": "slow", "signal_lag_steps": "signal", "line": "line"}
RSI_KEYS = {"lag_steps": "lag", "buy_below": "buy_below", "sell_above": "sell_above"}


class ConfigError(ValueError):
    def __init__(self, field: str, message: str, line: Optional[int] = None):
        self.field = field
        self.line = line
        where = f"line {line}, " if line is not None else ""
        super().__init__(f"{where}field '{field}': {message}")


class _Reader:
    """Walks a parsed document, tracking the field path and source lines."""

    def __init__(self, lines: dict):
        self.lines = lines

    def fail(self, path: str, message: str):
        line = self.lines.get(path)
        if line is None:
            # fall back to the closest enclosing field with a known line
            parent = path
            while line is None and parent:
                parent = parent.rsplit(".", 1)[0] if "." in parent else ""
                line = self.lines.get(parent)
        raise ConfigError(path or "<root>", message, line)

    def mapping(self, node, path: str, allowed, required=()) -> dict:
        if not isinstance(node, dict):
            self.fail(path, f"expected a mapping, got {type(node).__name__}")
        for key in node:
            if key not in allowed:
                self.fail(_join(path, str(key)), "unknown key")
        for key in required:
            if key not in node:
                self.fail(_join(path, key), "missing required key")
        return node

    def number(self, node, path: str) -> float:
        if isinstance(node, bool) or not isinstance(node, (int, float)):
            self.fail(path, f"expected a number, got {node!r}")
        if not np.isfinite(node):
            self.fail(path, "must be finite")
        return float(node)

    def integer(self, node, path: str) -> int:
        if isinstance(node, bool) or not isinstance(node, int):
            self.fail(path, f"expected an integer, got {node!r}")
        return node

    def string(self, node, path: str) -> str:
        if not isinstance(node, str):
            self.fail(path, f"expected a string, got {node!r}")
        return node

    def build(self, path: str, factory, *args, **kwargs):
        try:
            return factory(*args, **kwargs)
        except (ValueError, TypeError) as exc:
            self.fail(path, str(exc))


def _join(path: str, key) -> str:
    return f"{path}.{key}" if path else str(key)


def _line_map(node, path: str = "", out: Optional[dict] = None) -> dict:
    out = {} if out is None else out
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            sub = _join(path, k.value)
            out[sub] = k.start_mark.line + 1
            _line_map(v, sub, out)
    elif isinstance(node, yaml.SequenceNode):
        for i, v in enumerate(node.value):
            sub = f"{path}[{i}]"
            out[sub] = v.start_mark.line + 1
            _line_map(v, sub, out)
    return out


def _asset(r: _Reader, node, path: str) -> HestonParams:
    r.mapping(node, path, ASSET_KEYS, required=ASSET_KEYS)
    kwargs = {ASSET_KEYS[k]: r.number(v, _join(path, k)) for k, v in node.items()}
    return r.build(path, HestonParams, **kwargs)


def _market(r: _Reader, node, path: str) -> MarketSpec:
    r.mapping(node, path, ("asset", "count", "assets", "correlation"))
    if ("asset" in node) == ("assets" in node):
        r.fail(path, "give exactly one of 'asset' (with 'count') or 'assets'")
    if "asset" in node:
        count = r.integer(node.get("count", 1), _join(path, "count"))
        if count < 1:
            r.fail(_join(path, "count"), "must be at least 1")
        assets = (_asset(r, node["asset"], _join(path, "asset")),) * count
    else:
        if "count" in node:
            r.fail(_join(path, "count"), "only allowed together with 'asset'")
        if not isinstance(node["assets"], list) or not node["assets"]:
            r.fail(_join(path, "assets"), "expected a non-empty list")
        assets = tuple(_asset(r, a, f"{path}.assets[{i}]") for i, a in enumerate(node["assets"]))
    n = len(assets)
    cpath = _join(path, "correlation")
    corr = node.get("correlation", "identity")
    if corr == "identity":
        matrix = np.eye(n)
    elif isinstance(corr, dict):
        r.mapping(corr, cpath, ("pairwise",), required=("pairwise",))
        matrix = np.full((n, n), r.number(corr["pairwise"], _join(cpath, "pairwise")))
        np.fill_diagonal(matrix, 1.0)
    elif isinstance(corr, list):
        rows = []
        for i, row in enumerate(corr):
            if not isinstance(row, list):
                r.fail(f"{cpath}[{i}]", "expected a list of numbers")
            rows.append([r.number(x, f"{cpath}[{i}][{j}]") for j, x in enumerate(row)])
        matrix = rows
    else:
        r.fail(cpath, "expected 'identity', {pairwise: x} or a matrix")
    try:
        return MarketSpec(assets, tuple(map(tuple, np.asarray(matrix, dtype=float))))
    except NotPSDError as exc:
        r.fail(cpath, str(exc))
    except ValueError as exc:
        r.fail(cpath, str(exc))


def _strategy(r: _Reader, node, path: str) -> StrategySpec:
    r.mapping(node, path, ("kind", "psi", "phi", "cash_share", "weights", "macd", "rsi"), required=("kind",))
    kind = r.string(node["kind"], _join(path, "kind"))
    kwargs: dict[str, Any] = {"kind": kind}
    for key in ("psi", "phi", "cash_share"):
        if key in node:
            kwargs[key] = r.number(node[key], _join(path, key))
    if "weights" in node:
        if not isinstance(node["weights"], list):
            r.fail(_join(path, "weights"), "expected a list of numbers")
        kwargs["weights"] = tuple(r.number(w, f"{path}.weights[{i}]") for i, w in enumerate(node["weights"]))
    for key, keys, spec in (("macd", MACD_KEYS, MacdSpec), ("rsi", RSI_KEYS, RsiSpec)):
        if key in node:
            ipath = _join(path, key)
            if kind != key:
                r.fail(ipath, f"only allowed for kind '{key}'")
            r.mapping(node[key], ipath, keys)
            ikw = {}
            for k, v in node[key].items():
                kp = _join(ipath, k)
                if k == "line":
                    ikw["line"] = r.string(v, kp)
                elif k.endswith("_steps"):
                    ikw[keys[k]] = r.integer(v, kp)
                else:
                    ikw[keys[k]] = r.number(v, kp)
            kwargs["indicator"] = r.build(ipath, spec, **ikw)
    return r.build(path, StrategySpec, **kwargs)


def config_from_dict(doc: dict, lines: Optional[dict] = None) -> ExperimentConfig:
    r = _Reader(lines or {})
    top = ("name", "family", "seed", "trials", "initial_wealth_currency", "grid", "markets",
           "portfolios", "comparisons", "sweep")
    r.mapping(doc, "", top, required=("name", "markets", "portfolios"))

    grid = TimeGrid()
    if "grid" in doc:
        r.mapping(doc["grid"], "grid", ("horizon_years", "dt_years"))
        g = doc["grid"]
        horizon = r.number(g.get("horizon_years", grid.horizon), "grid.horizon_years")
        dt = r.number(g.get("dt_years", grid.dt), "grid.dt_years")
        if not dt > 0:
            r.fail("grid.dt_years", f"must be positive, got {dt}")
        if not horizon > 0:
            r.fail("grid.horizon_years", f"must be positive, got {horizon}")
        grid = r.build("grid", TimeGrid, horizon=horizon, dt=dt)

    r.mapping(doc["markets"], "markets", doc["markets"] if isinstance(doc["markets"], dict) else ())
    markets = {str(k): _market(r, v, f"markets.{k}") for k, v in doc["markets"].items()}

    if not isinstance(doc["portfolios"], list) or not doc["portfolios"]:
        r.fail("portfolios", "expected a non-empty list")
    portfolios = []
    for i, p in enumerate(doc["portfolios"]):
        path = f"portfolios[{i}]"
        r.mapping(p, path, ("label", "market", "strategy"), required=("label", "market", "strategy"))
        label = r.string(p["label"], _join(path, "label"))
        market = r.string(p["market"], _join(path, "market"))
        if market not in markets:
            r.fail(_join(path, "market"), f"unknown market {market!r}")
        portfolios.append(PortfolioSpec(label, market, _strategy(r, p["strategy"], _join(path, "strategy"))))

    comparisons = []
    for i, c in enumerate(doc.get("comparisons") or []):
        if not (isinstance(c, list) and len(c) == 2 and all(isinstance(x, str) for x in c)):
            r.fail(f"comparisons[{i}]", "expected a pair of portfolio labels")
        comparisons.append(tuple(c))

    sweep = None
    if doc.get("sweep") is not None:
        r.mapping(doc["sweep"], "sweep", ("parameter", "values"), required=("parameter", "values"))
        param = r.string(doc["sweep"]["parameter"], "sweep.parameter")
        if param not in SWEEP_KEYS:
            r.fail("sweep.parameter", f"cannot sweep {param!r}; expected one of {sorted(SWEEP_KEYS)}")
        vals = doc["sweep"]["values"]
        if not isinstance(vals, list) or not vals:
            r.fail("sweep.values", "expected a non-empty list")
        sweep = SweepSpec(SWEEP_KEYS[param], tuple(r.number(v, f"sweep.values[{i}]") for i, v in enumerate(vals)))

    kwargs = {
        "name": r.string(doc["name"], "name"),
        "markets": markets,
        "portfolios": tuple(portfolios),
        "grid": grid,
        "comparisons": tuple(comparisons),
        "sweep": sweep,
    }
    if "family" in doc:
        kwargs["family"] = r.string(doc["family"], "family")
    if "seed" in doc:
        kwargs["seed"] = r.integer(doc["seed"], "seed")
        if not 0 <= kwargs["seed"] < 2**64:
            r.fail("seed", "must lie in [0, 2**64)")
    if "trials" in doc:
        kwargs["trials"] = r.integer(doc["trials"], "trials")
        if kwargs["trials"] < 1:
            r.fail("trials", "must be at least 1")
    if "initial_wealth_currency" in doc:
        kwargs["initial_wealth"] = r.number(doc["initial_wealth_currency"], "initial_wealth_currency")
        if not kwargs["initial_wealth"] > 0:
            r.fail("initial_wealth_currency", "must be positive")
    return r.build("", ExperimentConfig, **kwargs)


def _asset_dict(a: HestonParams) -> dict:
    return {key: getattr(a, attr) for key, attr in ASSET_KEYS.items()}


def _strategy_dict(s: StrategySpec) -> dict:
    out: dict[str, Any] = {"kind": s.kind, "cash_share": s.cash_share}
    if s.trades:
        out["psi"] = s.psi
        out["phi"] = s.phi
    if s.weights is not None:
        out["weights"] = list(s.weights)
    if isinstance(s.indicator, MacdSpec):
        out["macd"] = {key: getattr(s.indicator, attr) for key, attr in MACD_KEYS.items()}
    elif isinstance(s.indicator, RsiSpec):
        out["rsi"] = {key: getattr(s.indicator, attr) for key, attr in RSI_KEYS.items()}
    return out


def config_to_dict(config: ExperimentConfig) -> dict:
    """Fully resolved document; parsing it back gives an equal config."""
    reverse_sweep = {v: k for k, v in SWEEP_KEYS.items()}
    return {
        "name": config.name,
        "family": config.family,
        "seed": config.seed,
        "trials": config.trials,
        "initial_wealth_currency": config.initial_wealth,
        "grid": {"horizon_years": config.grid.horizon, "dt_years": config.grid.dt},
        "markets": {
            key: {
                "assets": [_asset_dict(a) for a in m.assets],
                "correlation": [list(row) for row in m.correlation],
            }
            for key, m in config.markets.items()
        },
        "portfolios": [
            {"label": p.label, "market": p.market, "strategy": _strategy_dict(p.strategy)}
            for p in config.portfolios
        ],
        "comparisons": [list(c) for c in config.comparisons],
        "sweep": None if config.sweep is None else {
            "parameter": reverse_sweep[config.sweep.parameter],
            "values": list(config.sweep.values),
        },
    }


def parse_config(text: str) -> ExperimentConfig:
    """Parse a config document, or a result metadata sidecar holding one under ``config``."""
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError("<document>", f"not valid YAML: {getattr(exc, 'problem', exc)}",
                          mark.line + 1 if mark else None) from None
    lines = _line_map(node) if node is not None else {}
    if isinstance(doc, dict) and "config" in doc and "name" not in doc:
        doc = doc["config"]
        lines = {k[len("config."):]: v for k, v in lines.items() if k.startswith("config.")}
    if doc is None:
        raise ConfigError("<document>", "empty document")
    return config_from_dict(doc, lines)


def load_config(path) -> ExperimentConfig:
    return parse_config(Path(path).read_text())


def dump_config(config: ExperimentConfig) -> str:
    return json.dumps(config_to_dict(config), indent=2, sort_keys=False) + "\n"
