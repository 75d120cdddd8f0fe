"""Spectral-efficiency sweeps over K, bandwidth, array size and SNR for all baselines.

    python3 scripts/link_sweeps.py --samples 64 --workers 4
"""
import argparse
import os
from concurrent.futures import ProcessPoolExecutor

from staircase_ttd.linksim import LinkConfig, SweepSpec, run_sweep
from staircase_ttd.wavefield import ArrayConfig, OfdmGrid

SWEEPS = {
    "K": (2, 3, 4, 5, 6, 7, 8),
    "BW": (0.5e9, 1e9, 2e9, 4e9),
    "N_T": (16, 32, 64, 128),
    "SNR": (-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results/sweeps")
    ap.add_argument("--samples", type=int, default=64, help="feasible sectors per swept value")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--only", choices=sorted(SWEEPS))
    args = ap.parse_args()
    os.makedirs(args.out, exist_ok=True)

    fixed = LinkConfig(OfdmGrid(60e9, 2e9, 4096), ArrayConfig(32), k_users=5, snr_linear=10.0)
    pool = ProcessPoolExecutor(args.workers) if args.workers > 1 else None
    try:
        for variable, values in SWEEPS.items():
            if args.only and variable != args.only:
                continue
            res = run_sweep(SweepSpec(variable, values, fixed, args.samples, args.seed), pool)
            path = os.path.join(args.out, f"sweep_{variable}.csv")
            res.write_csv(path)
            print(f"{variable}:")
            for method in res.methods:
                print(f"  {method:>17} " + " ".join(f"{x:6.3f}" for x in res.row(method)))
    finally:
        if pool is not None:
            pool.shutdown()


if __name__ == "__main__":
    main()
