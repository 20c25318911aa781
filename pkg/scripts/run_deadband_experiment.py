#!/usr/bin/env python3
"""Resistive-foot experiment: miscalibrated sensors with a response deadband.

Both feet are calibrated on the reduced 36-trial plan and evaluated on
held-out double-support stances; relative CoP/GRF errors are reported
before and after calibration.

Usage:
    python scripts/run_deadband_experiment.py [--seeds N]
"""

import argparse

from footcal.experiments import run_deadband_experiment


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seeds", type=int, default=20)
    args = parser.parse_args()

    print(f"{'seed':>4}  {'e_cop pre':>10} {'-> post':>10}  {'e_grf pre':>10} {'-> post':>10}  verdict")
    improved = 0
    for seed in range(1, args.seeds + 1):
        o = run_deadband_experiment(seed)
        ok = o.post_mean_e_cop < o.pre_mean_e_cop and o.post_mean_e_grf < o.pre_mean_e_grf
        improved += ok
        print(
            f"{seed:>4}  {o.pre_mean_e_cop:>10.5f} {o.post_mean_e_cop:>10.5f}  "
            f"{o.pre_mean_e_grf:>10.5f} {o.post_mean_e_grf:>10.5f}  "
            f"{'improved' if ok else 'regressed'}"
        )
    print(f"\nimproved on {improved}/{args.seeds} seeds")


if __name__ == "__main__":
    main()
