"""ATAE and worst per-day error of adaptive vs equal time-point allocation over a range of budgets."""

import argparse

from rdtp.data_ingest import slice_days
from rdtp.evaluate import atae
from rdtp.instance import toy_instance
from rdtp.rd_select import cluster_days, find_extreme_days
from rdtp.rtp_select import allocate_rtps
from rdtp.synthetic import synthetic_dataset


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--days", type=int, default=365)
    ap.add_argument("--n-rd", type=int, default=21)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--r-min", type=int, default=4)
    args = ap.parse_args()
    ds = synthetic_dataset(n_days=args.days, seed=args.seed, peak_days={"south": args.days // 2})
    rdset = cluster_days(slice_days(ds), args.n_rd, find_extreme_days(ds, toy_instance()))
    print("r_avg,atae_adaptive,atae_equal,max_adaptive,max_equal")
    for r_avg in range(args.r_min, 26):
        ad = allocate_rtps(rdset, r_avg, args.r_min)
        eq = allocate_rtps(rdset, r_avg, args.r_min, mode="equal")
        print(f"{r_avg},{atae(ad.selections):.4f},{atae(eq.selections):.4f},"
              f"{max(ad.objectives):.4f},{max(eq.objectives):.4f}")


if __name__ == "__main__":
    main()
