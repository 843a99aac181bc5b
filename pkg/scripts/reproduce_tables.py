"""Run the level, power and change-point experiments and print compact tables.

    python scripts/reproduce_tables.py --preset desk --out results/
    python scripts/reproduce_tables.py --only power --reps 100 --workers 4

Each experiment reads ``scripts/configs/<kind>.toml``; command-line options
override the file.  JSON and CSV results land in ``--out``.
"""
from __future__ import annotations

import argparse
import json
from collections import defaultdict
from pathlib import Path

import tomli

from w2cusum.harness import PRESETS, HarnessConfig, default_workers, run_experiment

CONFIG_DIR = Path(__file__).resolve().parent / "configs"
KIND_FILES = {"level": "level.toml", "power": "power.toml", "changepoint": "changepoint.toml"}


def load(kind: str, args) -> HarnessConfig:
    with open(CONFIG_DIR / KIND_FILES[kind], "rb") as fh:
        raw = tomli.load(fh)
    preset = args.preset or raw.get("preset", "desk")
    reps = args.reps or PRESETS[preset][kind]
    return HarnessConfig(kind=kind, models=tuple(raw["models"]), n_values=tuple(raw["n"]),
                         J2_values=tuple(raw["j2"]), J1=raw.get("j1", 1), reps=reps,
                         seed=raw.get("seed", 0) if args.seed is None else args.seed,
                         alpha=raw.get("alpha", 0.05), statistics=tuple(raw["stat"].split(",")),
                         workers=args.workers or default_workers())


def print_rates(cells: list[dict]) -> None:
    table = defaultdict(dict)
    j2s = sorted({c["J2"] for c in cells})
    for c in cells:
        table[(c["model"], c["n"], c["statistic"])][c["J2"]] = c["rate"]
    print(f"{'model':<34}{'n':>6} {'stat':<5}" + "".join(f"{'J=' + str(j):>8}" for j in j2s))
    for (model, n, stat), row in table.items():
        print(f"{model:<34}{n:>6} {stat:<5}" + "".join(f"{row.get(j, float('nan')):>8.3f}" for j in j2s))


def print_changepoints(cells: list[dict]) -> None:
    print(f"{'model':<64}{'n':>6}{'J':>3}{'mean':>9}{'median':>9}{'2.5%':>8}{'97.5%':>8}")
    for c in cells:
        print(f"{c['model']:<64}{c['n']:>6}{c['J2']:>3}{c['mean']:>9.1f}{c['median']:>9.0f}"
              f"{c['ci_low']:>8.0f}{c['ci_high']:>8.0f}")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--only", choices=sorted(KIND_FILES), action="append")
    parser.add_argument("--preset", choices=sorted(PRESETS))
    parser.add_argument("--reps", type=int)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--workers", type=int)
    parser.add_argument("--out", type=Path, default=Path("results"))
    args = parser.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    for kind in args.only or list(KIND_FILES):
        cfg = load(kind, args)
        result = run_experiment(cfg)
        (args.out / f"{kind}.json").write_text(json.dumps(result.to_dict(), indent=2) + "\n")
        (args.out / f"{kind}.csv").write_text(result.to_csv())
        print(f"\n== {kind}: {cfg.reps} reps, seed {cfg.seed}, {result.runtime_seconds:.1f} s")
        (print_changepoints if kind == "changepoint" else print_rates)(result.cells)


if __name__ == "__main__":
    main()
