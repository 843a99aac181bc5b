"""Compare stored, series and Monte-Carlo quantiles of C(d) and D(d).

    python scripts/quantile_tables.py --reps 1000000 --grid 4096

The D-table is compared on both candidate scales (D and sqrt(D)) to show
which one it tabulates.
"""
from __future__ import annotations

import argparse
import math
import time

import numpy as np

from w2cusum.bridge import simulate_bridge_functionals
from w2cusum.limits import MC_DEFAULT_SEED, TABLE_ALPHAS, TABLE_CVM, TABLE_KSM, LimitLaw, quantile


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--reps", type=int, default=200_000)
    parser.add_argument("--grid", type=int, default=4096)
    parser.add_argument("--seed", type=int, default=MC_DEFAULT_SEED)
    parser.add_argument("--no-series", action="store_true", help="skip series inversion (slow)")
    args = parser.parse_args()

    start = time.perf_counter()
    cvm, ksm = simulate_bridge_functionals(6, args.grid, args.reps, args.seed)
    print(f"MC: {args.reps} reps, grid {args.grid}, seed {args.seed}, {time.perf_counter() - start:.1f} s")

    for alpha in TABLE_ALPHAS:
        print(f"\nalpha = {alpha}")
        print(f"{'d':>2} {'C table':>9} {'C series':>9} {'C mc':>9}   "
              f"{'D table':>9} {'sqrtD ser':>9} {'sqrtD mc':>9} {'D mc':>9}")
        for d in range(1, 7):
            c_mc = np.quantile(cvm[:, d - 1], 1 - alpha)
            d_mc = np.quantile(ksm[:, d - 1], 1 - alpha)
            if args.no_series:
                c_ser = k_ser = math.nan
            else:
                c_ser = quantile(LimitLaw("cvm", d), alpha, "series")
                k_ser = quantile(LimitLaw("ksm", d), alpha, "series", scale="norm")
            print(f"{d:>2} {TABLE_CVM[alpha][d - 1]:>9.4f} {c_ser:>9.4f} {c_mc:>9.4f}   "
                  f"{TABLE_KSM[alpha][d - 1]:>9.4f} {k_ser:>9.4f} {math.sqrt(d_mc):>9.4f} {d_mc:>9.4f}")


if __name__ == "__main__":
    main()
