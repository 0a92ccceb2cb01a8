"""Empirical augmented fraction against the requested add-noise rate.

Only the per-utterance selection draw is exercised, so large counts are cheap.

    python3 scripts/anr_sweep.py --n 10000 --seed 0
"""

import argparse
import math

import numpy as np

from scenenoise.augment import AugmentConfig, should_augment


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=10_000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--rates", default="0,0.1,0.2,0.3,0.5,0.8,1")
    args = ap.parse_args()

    print(f"{'anr':>5}  {'observed':>8}  {'3-sigma band':>17}  ok")
    for anr in (float(r) for r in args.rates.split(",")):
        cfg = AugmentConfig(anr=anr, seed=args.seed)
        frac = np.mean([should_augment(i, cfg) for i in range(args.n)])
        half = 3 * math.sqrt(anr * (1 - anr) / args.n)
        ok = anr - half <= frac <= anr + half
        print(f"{anr:>5.2f}  {frac:>8.4f}  [{anr - half:.4f}, {anr + half:.4f}]  {'yes' if ok else 'NO'}")


if __name__ == "__main__":
    main()
