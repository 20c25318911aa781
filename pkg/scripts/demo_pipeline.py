#!/usr/bin/env python3
"""Walk the whole CLI pipeline in a scratch directory.

Writes the fixture files (layout, apparatus, scenario, config), then runs
simulate -> calibrate -> evaluate -> estimate through the command-line
interface and prints where everything landed.

Usage:
    python scripts/demo_pipeline.py [--workdir DIR] [--noise SIGMA]
"""

import argparse
from pathlib import Path

import numpy as np

from footcal import fileio, presets
from footcal.cli import main as cli
from footcal.experiments import observable_offsets
from footcal.sensors import AffineParams
from footcal.simulate import SimScenario


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--workdir", default="demo_out")
    parser.add_argument("--noise", type=float, default=0.0, help="raw-count noise sigma")
    parser.add_argument("--seed", type=int, default=2024)
    args = parser.parse_args()

    work = Path(args.workdir)
    work.mkdir(parents=True, exist_ok=True)

    rng = np.random.default_rng(args.seed)
    offsets = observable_offsets(presets.SHOE_LAYOUT, rng)
    true = tuple(
        AffineParams(c=1.0 + rng.uniform(-0.2, 0.2), d=float(offsets[k])) for k in range(4)
    )
    scenario = SimScenario(
        layout=presets.SHOE_LAYOUT, true_params=true, noise_sigma=args.noise, rng_seed=args.seed
    )
    fileio.save_layout(presets.SHOE_LAYOUT, work / "layout.json")
    fileio.save_apparatus(presets.shoe_apparatus(), work / "apparatus.json")
    fileio.save_scenario(scenario, work / "scenario.json")
    fileio.save_calibration_config({"w_zeta": [1e-8] * 8}, work / "config.json")

    steps = [
        ["simulate", "--scenario", work / "scenario.json", "--layout", work / "layout.json",
         "--apparatus", work / "apparatus.json", "--masses", "1,2,4", "--samples", "20",
         "--out", work / "session.json", "--stream", work / "raw.log"],
        ["calibrate", "--session", work / "session.json", "--layout", work / "layout.json",
         "--apparatus", work / "apparatus.json", "--config", work / "config.json",
         "--mode", "fsr", "--out", work / "params.json", "--report", work / "calibration_report.json"],
        ["evaluate", "--session", work / "session.json", "--layout", work / "layout.json",
         "--apparatus", work / "apparatus.json", "--params", work / "params.json",
         "--mode", "fsr", "--out", work / "report.json", "--csv", work / "report.csv"],
        ["estimate", "--stream", work / "raw.log", "--layout", work / "layout.json",
         "--params", work / "params.json", "--out", work / "series.csv"],
    ]
    for step in steps:
        print(f"\n$ footcal {' '.join(str(s) for s in step)}")
        rc = cli([str(s) for s in step])
        if rc != 0:
            raise SystemExit(rc)
    print(f"\nall outputs in {work}/")


if __name__ == "__main__":
    main()
