"""Command-line interface.

Exit codes: 0 accept (or success), 3 reject, 1 usage error, 2 data error,
4 degenerate input.  Every subcommand that takes many options also accepts
``--config FILE.toml`` whose keys mirror the long flag names (dashes become
underscores); flags given on the command line override the file.
"""
from __future__ import annotations

import argparse
import json
import sys
import warnings
from pathlib import Path

import tomli

from .cusum import PARTIAL_SUMS, TestConfig, run_test
from .errors import DegenerateInputWarning, IllConditionedCovarianceError, SeriesTooShortError
from .harness import PRESETS, HarnessConfig, default_workers, parse_model, run_experiment
from .io import SeriesFormatError, read_series, write_json, write_series
from .limits import (METHODS, TABLE_ALPHAS, TABLE_CVM, TABLE_KSM, TABLE_VERSION, KSM_TABLE_SCALE,
                     LimitLaw, check_alpha, quantile)
from .procgen import BreakScenario, ProcessModel, concat_scenario, generate

EXIT_ACCEPT = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_REJECT = 3
EXIT_DEGENERATE = 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path, "rb") as fh:
            data = tomli.load(fh)
    except FileNotFoundError:
        raise UsageError(f"config file not found: {path}") from None
    except tomli.TOMLDecodeError as exc:
        raise UsageError(f"invalid config file {path}: {exc}") from None
    return {k.replace("-", "_"): v for k, v in data.items()}


def _merge(args: argparse.Namespace, defaults: dict) -> dict:
    """Config-file values, overridden by any flag actually given."""
    merged = _load_config(getattr(args, "config", None))
    for key, default in defaults.items():
        value = getattr(args, key, None)
        if value is not None:
            merged[key] = value
        else:
            merged.setdefault(key, default)
    return merged


def _split_list(value, cast=str) -> tuple:
    if value is None:
        return ()
    if isinstance(value, (list, tuple)):
        items = []
        for v in value:
            items.extend(_split_list(v, cast))
        return tuple(items)
    if isinstance(value, str):
        return tuple(cast(v.strip()) for v in value.split(",") if v.strip())
    return (cast(value),)


def _bandwidth(value):
    if isinstance(value, int):
        return value
    text = str(value)
    return int(text) if text.lstrip("-").isdigit() else text


# ---------------------------------------------------------------- test


def cmd_test(args) -> int:
    opts = _merge(args, {"input": None, "wavelet": "db2", "j1": 1, "j2": 3, "alpha": 0.05,
                         "stat": "cvm,ksm", "bandwidth": "auto", "out": None,
                         "threshold_method": None, "partial_sums": "scale_counts",
                         "include_path": False})
    if not opts["input"]:
        raise UsageError("--input is required")
    try:
        cfg = TestConfig(wavelet=opts["wavelet"], J1=int(opts["j1"]), J2=int(opts["j2"]),
                         alpha=float(opts["alpha"]), statistics=_split_list(opts["stat"]),
                         bandwidth=_bandwidth(opts["bandwidth"]),
                         threshold_method=opts["threshold_method"],
                         partial_sums=opts["partial_sums"], include_path=bool(opts["include_path"]))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    try:
        series = read_series(opts["input"])
    except FileNotFoundError:
        print(f"error: input file not found: {opts['input']}", file=sys.stderr)
        return EXIT_DATA
    except (SeriesFormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", DegenerateInputWarning)
            report = run_test(series, cfg)
    except SeriesTooShortError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except IllConditionedCovarianceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    if opts["out"]:
        write_json(opts["out"], report.to_dict())
    else:
        print(report.to_json(indent=2))
    if report.degenerate:
        print("degenerate input: wavelet coefficients vanish; no decision", file=sys.stderr)
        return EXIT_DEGENERATE
    for s in cfg.statistics:
        print(f"{s}: statistic={report.statistics[s]:.6g} threshold={report.thresholds[s]['value']:.6g} "
              f"({report.thresholds[s]['method']}) -> {report.decisions[s]}", file=sys.stderr)
    return EXIT_REJECT if report.rejected else EXIT_ACCEPT


# ---------------------------------------------------------------- quantile / tables


def cmd_quantile(args) -> int:
    try:
        law = LimitLaw(args.law, args.d)
        check_alpha(args.alpha)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    kw = {}
    if args.seed is not None:
        kw["seed"] = args.seed
    if args.reps is not None:
        kw["reps"] = args.reps
    if args.grid is not None:
        kw["grid"] = args.grid
    try:
        value = quantile(law, args.alpha, args.method, scale=args.scale, **kw)
    except KeyError as exc:
        raise UsageError(exc.args[0]) from None
    scale = args.scale or (KSM_TABLE_SCALE if args.law == "ksm" else "squared")
    print(f"{value:.6g} method={args.method} law={args.law} d={args.d} alpha={args.alpha} scale={scale}")
    return EXIT_ACCEPT


def cmd_tables(args) -> int:
    payload = {"version": TABLE_VERSION, "alphas": list(TABLE_ALPHAS),
               "cvm": {str(a): list(v) for a, v in TABLE_CVM.items()},
               "ksm": {str(a): list(v) for a, v in TABLE_KSM.items()},
               "ksm_scale": KSM_TABLE_SCALE}
    print(json.dumps(payload, indent=2))
    return EXIT_ACCEPT


# ---------------------------------------------------------------- simulate


def _model_from_flags(kind, phi, theta, d, sigma2) -> ProcessModel:
    return ProcessModel(kind, tuple(phi or ()), tuple(theta or ()), d or 0.0,
                        1.0 if sigma2 is None else sigma2)


def cmd_simulate(args) -> int:
    try:
        if args.scenario:
            first, _, second = args.scenario.partition("+")
            if not second:
                raise ValueError("--scenario needs the form MODEL1+MODEL2")
            m1, m2 = parse_model(first), parse_model(second)
        else:
            m1 = _model_from_flags(args.model, args.phi, args.theta, args.d, args.sigma2)
            m2 = None
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if args.n < 1:
        raise UsageError("-n must be positive")
    if m2 is None:
        ts = generate(m1, args.n, args.seed)
    else:
        ts = concat_scenario(BreakScenario(m1, m2, args.n, args.n2 or args.n), args.seed)
    try:
        write_series(args.out, ts.values, fmt=args.format)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    if "breakpoint" in ts.meta:
        print(f"breakpoint={ts.meta['breakpoint']} kappa={ts.meta['kappa']:.6g}")
    return EXIT_ACCEPT


# ---------------------------------------------------------------- experiments


def _experiment(kind: str):
    def run(args) -> int:
        opts = _merge(args, {"models": None, "n": None, "j2": None, "j1": 1, "reps": None,
                             "seed": 0, "alpha": 0.05, "stat": "cvm,ksm", "bandwidth": "auto",
                             "wavelet": "db2", "partial_sums": "scale_counts", "out": None,
                             "workers": None, "preset": "desk"})
        if not opts["models"] or not opts["n"]:
            raise UsageError("--models and --n are required (flags or config file)")
        if opts["preset"] not in PRESETS:
            raise UsageError(f"--preset must be one of {sorted(PRESETS)}")
        reps = opts["reps"] if opts["reps"] is not None else PRESETS[opts["preset"]][kind]
        models = opts["models"]
        models = tuple(models) if isinstance(models, (list, tuple)) else tuple(
            m.strip() for m in str(models).split(";") if m.strip())
        try:
            cfg = HarnessConfig(
                kind=kind, models=models, n_values=_split_list(opts["n"], int),
                J2_values=_split_list(opts["j2"] or 3, int), J1=int(opts["j1"]), reps=int(reps),
                seed=int(opts["seed"]), alpha=float(opts["alpha"]),
                statistics=_split_list(opts["stat"]), bandwidth=_bandwidth(opts["bandwidth"]),
                wavelet=opts["wavelet"], partial_sums=opts["partial_sums"], output=opts["out"],
                workers=int(opts["workers"]) if opts["workers"] else default_workers())
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        result = run_experiment(cfg)
        payload = result.to_dict()
        if cfg.output:
            write_json(cfg.output, payload)
            Path(cfg.output).with_suffix(".csv").write_text(result.to_csv())
        else:
            print(json.dumps(payload, indent=2))
        return EXIT_ACCEPT
    return run


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="w2cusum", description="Wavelet W2-CUSUM test for a change in spectral density.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("test", help="run the test on a series file")
    p.add_argument("--config")
    p.add_argument("--input")
    p.add_argument("--wavelet")
    p.add_argument("--j1", type=int)
    p.add_argument("--j2", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--stat", help="comma-separated subset of cvm,ksm")
    p.add_argument("--bandwidth", help="'auto' or a fixed integer lag")
    p.add_argument("--threshold-method", choices=METHODS)
    p.add_argument("--partial-sums", choices=PARTIAL_SUMS)
    p.add_argument("--include-path", action="store_true", default=None)
    p.add_argument("--out")
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("quantile", help="print a limit-law quantile")
    p.add_argument("--law", choices=("cvm", "ksm"), required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--alpha", type=float, required=True, help="upper tail probability, e.g. 0.05")
    p.add_argument("--method", choices=METHODS, default="table")
    p.add_argument("--scale", choices=("norm", "squared"))
    p.add_argument("--seed", type=int)
    p.add_argument("--reps", type=int)
    p.add_argument("--grid", type=int)
    p.set_defaults(func=cmd_quantile)

    p = sub.add_parser("tables", help="dump the stored quantile tables")
    p.set_defaults(func=cmd_tables)

    p = sub.add_parser("simulate", help="write a simulated series")
    p.add_argument("--model", choices=("white_noise", "ma1", "ar1", "arma", "arfima"), default="white_noise")
    p.add_argument("--phi", type=float, nargs="*")
    p.add_argument("--theta", type=float, nargs="*")
    p.add_argument("--d", type=float)
    p.add_argument("--sigma2", type=float)
    p.add_argument("--scenario", help="MODEL1+MODEL2, e.g. 'ar1:phi=0.9+ar1:phi=0.5'")
    p.add_argument("-n", type=int, required=True, help="length (first segment for scenarios)")
    p.add_argument("--n2", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=("csv", "bin"))
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    for name, kind in (("mc-level", "level"), ("mc-power", "power"), ("changepoint", "changepoint")):
        p = sub.add_parser(name, help=f"{kind} experiment")
        p.add_argument("--config")
        p.add_argument("--models", help="';'-separated model or MODEL1+MODEL2 specs")
        p.add_argument("--n", help="comma-separated sample (segment) sizes")
        p.add_argument("--j2", help="comma-separated coarsest scales")
        p.add_argument("--j1", type=int)
        p.add_argument("--reps", type=int)
        p.add_argument("--preset", choices=sorted(PRESETS))
        p.add_argument("--seed", type=int)
        p.add_argument("--alpha", type=float)
        p.add_argument("--stat")
        p.add_argument("--bandwidth")
        p.add_argument("--wavelet")
        p.add_argument("--partial-sums", choices=PARTIAL_SUMS)
        p.add_argument("--workers", type=int)
        p.add_argument("--out")
        p.set_defaults(func=_experiment(kind))
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
