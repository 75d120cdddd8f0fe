"""Per-user gain across the band for the designed staircase and the phased-array baseline.

    python3 scripts/on_target_gain.py --k 5 --theta1 -30 --theta2 40
"""
import argparse
import csv
import math
import os

import numpy as np

from staircase_ttd.analysis import gain_db, on_target_gain
from staircase_ttd.codebook import DesignSpec, integer_design, two_stage_design
from staircase_ttd.linksim import LinkConfig, phased_single_beam
from staircase_ttd.wavefield import ArrayConfig, OfdmGrid


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results/on_target")
    ap.add_argument("--k", type=int, default=5)
    ap.add_argument("--theta1", type=float, default=-30.0, help="deg")
    ap.add_argument("--theta2", type=float, default=40.0, help="deg")
    args = ap.parse_args()
    os.makedirs(args.out, exist_ok=True)

    grid, cfg = OfdmGrid(60e9, 2e9, 4096), ArrayConfig(32)
    t1, t2 = math.radians(args.theta1), math.radians(args.theta2)
    spec = DesignSpec(args.k, t1, t2, grid, cfg)
    modulo, integer = two_stage_design(spec), integer_design(spec)
    if not modulo.feasible:
        raise SystemExit("; ".join(modulo.notes))
    phased = phased_single_beam(LinkConfig(grid, cfg, args.k, 10.0, (t1, t2)))
    sources = {"modulo": modulo.profile, "integer": integer.profile, "phased": phased}
    curves = {name: on_target_gain(p, cfg, grid, modulo.target_angles).values for name, p in sources.items()}

    freqs = grid.frequencies()
    path = os.path.join(args.out, "on_target_gain.csv")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["method", "user", "m", "f_hz", "gain_db"])
        for name, values in curves.items():
            for k, row in enumerate(gain_db(values)):
                w.writerows([name, k + 1, m + 1, freqs[m], g] for m, g in enumerate(row) if m % 8 == 0)
    for name, values in curves.items():
        peak_f = freqs[np.argmax(values, axis=1)]
        print(f"{name:>8}: peak gain per user " + " ".join(f"{10 * np.log10(v.max()):5.2f}" for v in values)
              + " dB at f-f_c [MHz] " + " ".join(f"{(f - grid.f_c) / 1e6:+6.0f}" for f in peak_f))
    print(f"-> {path}")


if __name__ == "__main__":
    main()
