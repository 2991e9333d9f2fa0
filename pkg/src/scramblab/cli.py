"""Command-line interface: run experiments, sweep parameters, re-fit stored
curves, and check Monte Carlo convergence of the subsystem Haar average.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import configparser
import json
import os
import sys
from dataclasses import asdict, fields
from pathlib import Path

from . import analysis
from .experiments import (
    EXPERIMENTS,
    SWEEPABLE,
    ConfigError,
    ExperimentConfig,
    read_curve_csv,
    run_experiment,
    sweep,
)
from .linalg import LinalgError

OUT_DIR_ENV = "SCRAMBLAB_OUT_DIR"

_OVERRIDES = {
    "delta": ("--delta", float),
    "beta": ("--beta", float),
    "d_b": ("--d-b", int),
    "n_fermions": ("--n-fermions", int),
    "g": ("--g", float),
    "t_max": ("--t-max", float),
    "n_points": ("--n-points", int),
    "n_realizations": ("--realizations", int),
}


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("experiment", choices=EXPERIMENTS)
    parser.add_argument("--config", type=Path, help="INI config file (flags win)")
    parser.add_argument("--seed", type=int, help="base RNG seed (unsigned 64-bit)")
    parser.add_argument("--threads", type=int, help="worker threads for realizations")
    parser.add_argument(
        "--out",
        type=Path,
        help=f"output directory (default: ${OUT_DIR_ENV} or ./results)",
    )
    for name, (flag, typ) in _OVERRIDES.items():
        parser.add_argument(flag, type=typ, dest=name)


def _load_config_file(path: Path) -> dict:
    """Flatten every section of a key = value INI file into one dict."""
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ConfigError(f"config file not found: {path}")
    values: dict[str, str] = {}
    for section in parser.sections():
        values.update(parser[section])
    values.update(parser.defaults())
    return values

_FIELD_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}


def _coerce(name: str, raw: str):
    typ = _FIELD_TYPES.get(name)
    if typ is None:
        raise ConfigError(f"unknown config key {name!r}")
    if name == "probe_sites":
        return tuple(int(x) for x in raw.split(","))
    if typ == "int":
        return int(raw)
    if typ == "float":
        return float(raw)
    return raw


def _build_config(args: argparse.Namespace) -> ExperimentConfig:
    values: dict = {}
    if args.config is not None:
        for key, raw in _load_config_file(args.config).items():
            key = key.replace("-", "_")
            if key == "experiment":
                continue
            values[key] = _coerce(key, raw)
    for name in _OVERRIDES:
        flag_value = getattr(args, name)
        if flag_value is not None:
            values[name] = flag_value
    if args.seed is not None:
        values["seed"] = args.seed
    if args.threads is not None:
        values["threads"] = args.threads
    return ExperimentConfig(experiment=args.experiment, **values)


def _out_dir(args: argparse.Namespace) -> Path:
    if args.out is not None:
        return args.out
    return Path(os.environ.get(OUT_DIR_ENV, "results"))


def _parse_window(raw: str | None) -> tuple[float, float] | None:
    if raw is None:
        return None
    lo, hi = (float(x) for x in raw.split(","))
    return (lo, hi)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scramblab",
        description="Out-of-time-order correlator and Loschmidt echo experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one experiment and persist its curves")
    _add_common(p_run)

    p_sweep = sub.add_parser("sweep", help="run one experiment per parameter value")
    _add_common(p_sweep)
    p_sweep.add_argument("--parameter", required=True, choices=SWEEPABLE)
    p_sweep.add_argument(
        "--values", required=True, help="comma-separated parameter values"
    )

    p_fit = sub.add_parser("fit", help="re-fit a stored curve CSV")
    p_fit.add_argument("csv", type=Path)
    p_fit.add_argument(
        "--model", choices=("exponential", "gaussian", "auto"), default="auto"
    )
    p_fit.add_argument("--window", help="fit window as 'lo,hi' (fractional amplitude)")
    p_fit.add_argument(
        "--no-plateau", action="store_true", help="fit without plateau subtraction"
    )

    p_haar = sub.add_parser(
        "haar-check",
        help="Monte Carlo convergence of the exact subsystem Haar average",
    )
    for flag in ("--seed", "--threads"):
        p_haar.add_argument(flag, type=int)
    p_haar.add_argument("--out", type=Path)
    p_haar.add_argument("--config", type=Path)
    p_haar.add_argument("--n-points", type=int)
    p_haar.add_argument("--realizations", type=int)
    return parser


def _cmd_run(args: argparse.Namespace) -> int:
    config = _build_config(args)
    manifest = run_experiment(config, _out_dir(args))
    print(manifest.to_json())
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    config = _build_config(args)
    values = [v for v in args.values.split(",") if v]
    manifest = sweep(config, args.parameter, values, _out_dir(args))
    print(manifest.to_json())
    return 0


def _cmd_fit(args: argparse.Namespace) -> int:
    curve = read_curve_csv(args.csv)
    window = _parse_window(args.window)
    kwargs = {"window": window, "subtract_plateau": not args.no_plateau}
    if args.model == "exponential":
        fit = analysis.fit_exponential(curve, **kwargs)
    elif args.model == "gaussian":
        fit = analysis.fit_gaussian(curve, **kwargs)
    else:
        fit = analysis.model_select(curve, window=window)
    print(json.dumps(asdict(fit), indent=2, sort_keys=True))
    return 0


def _cmd_haar_check(args: argparse.Namespace) -> int:
    defaults = dict(t_max=1.0, n_points=12, n_realizations=4, seed=0)
    if args.n_points is not None:
        defaults["n_points"] = args.n_points
    if args.realizations is not None:
        defaults["n_realizations"] = args.realizations
    if args.seed is not None:
        defaults["seed"] = args.seed
    if args.threads is not None:
        defaults["threads"] = args.threads
    config = ExperimentConfig(experiment="haar_check", **defaults)
    manifest = run_experiment(config, _out_dir(args))
    slope = manifest.extras["convergence_slope"]
    print(manifest.to_json())
    print(f"error ~ N^{slope:.3f} (expected ~ N^-0.5)", file=sys.stderr)
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "run": _cmd_run,
        "sweep": _cmd_sweep,
        "fit": _cmd_fit,
        "haar-check": _cmd_haar_check,
    }
    try:
        return handlers[args.command](args)
    except (ConfigError, FileNotFoundError, ValueError) as exc:
        if isinstance(exc, (LinalgError, analysis.FitError)):
            print(f"numerical failure: {exc}", file=sys.stderr)
            return 3
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (LinalgError, analysis.FitError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
