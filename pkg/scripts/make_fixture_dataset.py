"""Write a small synthetic speech dataset plus manifest for offline runs.

    python3 scripts/make_fixture_dataset.py --out data/fixture --n 5
"""

import argparse

from scenenoise.fixtures import write_fixture_dataset


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", required=True)
    ap.add_argument("--n", type=int, default=5)
    ap.add_argument("--seconds", type=float, default=2.0)
    ap.add_argument("--sample-rate", type=int, default=16000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    manifest = write_fixture_dataset(args.out, args.n, args.seconds, args.sample_rate, args.seed)
    print(manifest)


if __name__ == "__main__":
    main()
