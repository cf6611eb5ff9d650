"""CSV and metadata writers for simulations and experiment results.

Numbers are written with 17 significant digits, enough to read back the
exact double. Files use LF line endings and a header row.
"""

from __future__ import annotations

import csv
import json
import re
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .config import config_to_dict
from .experiments import ExperimentResult
from .market import MarketScenario

GROWTH_COLUMNS = ("time_years", "mean_growth_per_year", "stderr")


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(x) if isinstance(x, (float, np.floating)) else x for x in row])
    return path


def read_csv(path) -> tuple[list[str], np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array(rows[1:], dtype=float)


def _slug(text: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]+", "_", text)


def write_scenarios(out: Path, scenarios: Sequence[MarketScenario]) -> list[Path]:
    """One price and one variance file per asset; one column per trial."""
    out.mkdir(parents=True, exist_ok=True)
    times = scenarios[0].grid.times()
    header = ["time_years"] + [f"trial_{i}" for i in range(len(scenarios))]
    paths = []
    for i in range(scenarios[0].n_assets):
        for prefix, attr in (("S", "prices"), ("v", "variances")):
            cols = [getattr(s, attr)[i] for s in scenarios]
            rows = zip(times, *cols)
            paths.append(write_csv(out / f"{prefix}_{i + 1}.csv", header, rows))
    return paths


def _sweep_suffix(result: ExperimentResult, j: int) -> str:
    if result.config.sweep is None:
        return ""
    return f"__{result.config.sweep.parameter}={fmt(result.sweep_values[j])}"


def write_result(out: Path, result: ExperimentResult) -> list[Path]:
    """Growth curves per portfolio, difference curves per comparison, sweep summaries and metadata."""
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    times = result.times
    for j in range(len(result.sweep_values)):
        suffix = _sweep_suffix(result, j)
        for label, stats in result.growth[j].items():
            name = _slug(f"growth_{label}{suffix}") + ".csv"
            paths.append(write_csv(out / name, GROWTH_COLUMNS, zip(times, stats.mean, stats.stderr)))
        for (a, b), stats in result.differences[j].items():
            name = _slug(f"difference_{a}_minus_{b}{suffix}") + ".csv"
            paths.append(write_csv(out / name, GROWTH_COLUMNS, zip(times, stats.mean, stats.stderr)))
    if result.config.sweep is not None:
        param = result.config.sweep.parameter
        for a, b in result.config.comparisons:
            means, errs = result.comparison_curve(a, b)
            name = _slug(f"comparison_{a}_minus_{b}") + ".csv"
            header = (param, "mean_final_growth_difference_per_year", "stderr")
            paths.append(write_csv(out / name, header, zip(result.sweep_values, means, errs)))
    paths.append(write_metadata(out / "metadata.json", result))
    return paths


def write_metadata(path: Path, result: ExperimentResult) -> Path:
    doc = {
        "config": config_to_dict(result.config),
        "seed": result.config.seed,
        "provenance": result.provenance,
        "max_self_financing_error": result.self_financing_error,
    }
    path.write_text(json.dumps(doc, indent=2) + "\n")
    return path


def summary_line(result: ExperimentResult) -> str:
    cfg = result.config
    parts = [f"{cfg.name} seed={cfg.seed} trials={cfg.trials}"]
    for j, value in enumerate(result.sweep_values):
        prefix = "" if value is None else f"[{cfg.sweep.parameter}={value:g}] "
        finals = " ".join(
            f"{label}={s.mean[-1]:.6f}±{s.stderr[-1]:.6f}" for label, s in result.growth[j].items()
        )
        parts.append(prefix + finals)
    return "final mean growth: " + "; ".join(parts)
