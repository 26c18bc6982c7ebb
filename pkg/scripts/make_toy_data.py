"""Regenerate the bundled 3-bus toy year (two weeks, one injected southern peak)."""

import argparse
from pathlib import Path

from rdtp.synthetic import synthetic_dataset, write_hourly_csv

TOY_DIR = Path(__file__).resolve().parent.parent / "src" / "rdtp" / "data" / "toy3bus"


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=TOY_DIR / "hourly.csv")
    ap.add_argument("--days", type=int, default=14)
    ap.add_argument("--seed", type=int, default=3)
    args = ap.parse_args()
    ds = synthetic_dataset(n_days=args.days, seed=args.seed, peak_days={"south": 6}, peak_boost=0.7)
    write_hourly_csv(ds, args.out, peak_mw={"north": 100.0, "south": 100.0})
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
