"""Conditioning ratio versus mirror geometry.

Two scans, printed as CSV:

* ``pixel`` : eta of the pixelated 6x6 mirror against actuator pitch
  (no optimization, fast).
* ``dm``    : eta of the membrane mirror against influence width
  (sigma / pitch); runs 20 stroke optimizations per point.

    python scripts/scan_crosstalk.py pixel
    python scripts/scan_crosstalk.py dm --fractions 0.4 0.6 0.8 --max-evals 1500
"""

import argparse
import dataclasses
import sys

import numpy as np

from dmtomo.config import ExperimentConfig
from dmtomo.pipeline import scenario_projectors
from dmtomo.protocol import build_mub_d4
from dmtomo.tomo import eta


def scan_pixel(cfg, pitches):
    mubs = build_mub_d4()
    for p in pitches:
        c = dataclasses.replace(cfg, mirror=dataclasses.replace(cfg.mirror, pitch=p))
        yield p, eta(scenario_projectors("pixel", c, mubs))


def scan_dm(cfg, fractions):
    mubs = build_mub_d4()
    for f in fractions:
        c = dataclasses.replace(cfg, mirror=dataclasses.replace(cfg.mirror, sigma_fraction=f))
        yield f, eta(scenario_projectors("dm", c, mubs))


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("scan", choices=("pixel", "dm"))
    ap.add_argument("--pitches", type=float, nargs="+", help="pitches in micrometres")
    ap.add_argument("--fractions", type=float, nargs="+", default=[0.4, 0.5, 0.6, 0.8, 1.0])
    ap.add_argument("--max-evals", type=int, default=None)
    ap.add_argument("--n", type=int, default=None, help="grid samples per side")
    args = ap.parse_args()

    cfg = ExperimentConfig()
    if args.n:
        cfg = dataclasses.replace(cfg, grid=dataclasses.replace(cfg.grid, n=args.n))
    if args.max_evals:
        cfg = dataclasses.replace(cfg, mirror=dataclasses.replace(cfg.mirror, max_evals=args.max_evals))

    if args.scan == "pixel":
        pitches = np.array(args.pitches or np.arange(250, 465, 10)) * 1e-6
        print("pitch_um,eta")
        for p, e in scan_pixel(cfg, pitches):
            print(f"{p * 1e6:.1f},{e:.4f}", flush=True)
    else:
        print("sigma_fraction,eta")
        for f, e in scan_dm(cfg, args.fractions):
            print(f"{f:.3f},{e:.4f}", flush=True)
    return 0


if __name__ == "__main__":
    sys.exit(main())
