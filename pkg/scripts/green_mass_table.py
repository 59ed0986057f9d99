"""Green-weighted mass of the Riesz measure of d^-q for the unit segment, against t^-q."""
import argparse
import csv
import sys
import time

from rconvex.geometry import Segment
from rconvex.potential import green_collocation
from rconvex.riesz import exterior_log_moment, green_mass, nested_dpow_measures


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--q", type=float, default=2.0)
    ap.add_argument("--t", type=float, nargs="+", default=[0.5, 1.0, 2.0])
    ap.add_argument("--n", type=int, default=1024,
                    help="points per side of each nested grid; coarser than 1024 fails the coverage check")
    ap.add_argument("--moment-t", type=float, nargs="+", default=[2.0, 3.0])
    args = ap.parse_args()
    E = Segment(0, 1)
    mu = nested_dpow_measures(E, args.q, 0.5, 3.5, 256, args.n, args.n)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["kind", "t", "value", "lower", "upper", "relative_gap", "seconds"])
    for t in args.t:
        s = time.perf_counter()
        m = green_mass(E, t, mu, green_collocation(E, t)).value
        w.writerow(["green_mass", t, m, t ** -args.q, t ** -args.q, m * t ** args.q - 1,
                    round(time.perf_counter() - s, 2)])
    S = 1.0     # max |z| over the segment
    for t in args.moment_t:
        m = exterior_log_moment(mu, t)
        w.writerow(["log_moment", t, m, (t + S) ** -args.q, (t - S) ** -args.q, "", ""])


if __name__ == "__main__":
    main()
