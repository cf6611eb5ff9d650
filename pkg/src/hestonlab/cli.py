"""Command-line entry point: ``hestonlab simulate`` and ``hestonlab experiment``.

Exit codes: 0 success, 1 I/O failure, 2 invalid configuration, 3 a trial failed.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from .config import ConfigError, load_config
from .experiments import TrialError, run_experiment
from .market import simulate_paths
from .output import summary_line, write_result, write_scenarios
from .presets import PRESETS, preset

OUT_ENV = "HESTONLAB_OUT"

EXIT_IO = 1
EXIT_CONFIG = 2
EXIT_TRIAL = 3


def _add_common(p: argparse.ArgumentParser):
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--preset", choices=sorted(PRESETS), help="built-in campaign")
    src.add_argument("--config", type=Path, help="YAML/JSON config file or a metadata.json sidecar")
    p.add_argument("--seed", type=int, help="override the master seed")
    p.add_argument("--out", type=Path, help=f"output directory (default: ${OUT_ENV} or ./results)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hestonlab", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="write simulated price and variance paths")
    _add_common(sim)
    sim.add_argument("--market", help="market to simulate (default: the first one)")
    sim.add_argument("--trials", type=int, default=1, help="number of paths per file")

    exp = sub.add_parser("experiment", help="run a Monte Carlo campaign")
    _add_common(exp)
    exp.add_argument("--workers", type=int, default=1)
    exp.add_argument("--trials", type=int, help="override the trial count")
    return parser


def _load(args):
    cfg = preset(args.preset) if args.preset else load_config(args.config)
    if args.seed is not None and not 0 <= args.seed < 2**64:
        raise ConfigError("seed", "must lie in [0, 2**64)")
    trials = getattr(args, "trials", None) if args.command == "experiment" else None
    if trials is not None and trials < 1:
        raise ConfigError("trials", "must be at least 1")
    return cfg.with_overrides(seed=args.seed, trials=trials)


def _out_dir(args) -> Path:
    if args.out is not None:
        return args.out
    return Path(os.environ.get(OUT_ENV, "results"))


def cmd_simulate(args) -> int:
    cfg = _load(args)
    name = args.market or next(iter(cfg.markets))
    if name not in cfg.markets:
        raise ConfigError("market", f"unknown market {name!r}; choose from {', '.join(cfg.markets)}")
    if args.trials < 1:
        raise ConfigError("trials", "must be at least 1")
    m = cfg.markets[name]
    scenarios = [simulate_paths(m.assets, m.correlation, cfg.grid, cfg.seed, t) for t in range(args.trials)]
    paths = write_scenarios(_out_dir(args), scenarios)
    print(f"wrote {len(paths)} files for market '{name}' ({m.n_assets} assets, {cfg.grid.size} points) to {_out_dir(args)}")
    return 0


def cmd_experiment(args) -> int:
    cfg = _load(args)
    if args.workers < 1:
        raise ConfigError("workers", "must be at least 1")
    result = run_experiment(cfg, workers=args.workers)
    write_result(_out_dir(args), result)
    print(summary_line(result))
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "simulate":
            return cmd_simulate(args)
        return cmd_experiment(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except TrialError as exc:
        print(f"trial failure: {exc}", file=sys.stderr)
        return EXIT_TRIAL
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
