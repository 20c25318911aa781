#!/usr/bin/env python3
"""Sanity experiment: noiseless calibration must reproduce the true parameters.

Usage:
    python scripts/run_exact_recovery.py [--seeds N]
"""

import argparse

from footcal.experiments import run_exact_recovery


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seeds", type=int, default=10)
    args = parser.parse_args()

    print(f"{'seed':>4}  {'max rel param err':>18}  {'post CoP MAE (mm)':>18}  {'time (ms)':>9}")
    worst = 0.0
    for seed in range(1, args.seeds + 1):
        out = run_exact_recovery(seed)
        worst = max(worst, out.max_rel_param_err)
        print(f"{seed:>4}  {out.max_rel_param_err:>18.3e}  {out.post_cop_mae_mm:>18.3e}  "
              f"{out.elapsed_s * 1e3:>9.1f}")
    print(f"\nworst relative parameter error over {args.seeds} seeds: {worst:.3e}")


if __name__ == "__main__":
    main()
