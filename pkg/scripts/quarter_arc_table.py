"""Weighted eigenvalue distance sums for the quarter-circle multiplication operator plus a smooth kernel."""
import argparse
import csv
import sys

from rconvex.spectra import quarter_arc_report


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, nargs="+", default=[50, 100, 200])
    ap.add_argument("--eps", type=float, default=0.5)
    args = ap.parse_args()
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["n", "sum_phi", "hs_norm_sq", "ratio", "max_distance"])
    for n in args.n:
        r = quarter_arc_report(n, args.eps)
        name = next(iter(r.sums))
        w.writerow([n, r.sums[name], r.schatten_pow[2.0], r.ratio(name, 2.0), r.distances.max(initial=0)])


if __name__ == "__main__":
    main()
