"""Radius of convexity of random 3-point sets against their circumradius, as CSV on stdout."""
import argparse
import csv
import sys
import time

import numpy as np

from rconvex.geometry import FinitePoints, Triangle, circumradius, radius_of_convexity
from rconvex.grid import GridField


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--count", type=int, default=20)
    ap.add_argument("--n", type=int, default=512, help="grid points per side")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["seed", "circumradius", "r0", "bracket_lo", "bracket_hi", "h", "rel_error", "seconds"])
    seed, done = args.seed, 0
    while done < args.count:
        rng = np.random.default_rng(seed)
        z = rng.uniform(-1, 1, 3) + 1j * rng.uniform(-1, 1, 3)
        R = circumradius(Triangle(*z))
        if 0.2 <= R <= 3:
            E = FinitePoints(z)
            lo, hi = E.bbox()
            half = max((hi - lo).real, (hi - lo).imag) / 2 + 2 * 1.6 * R + 0.1
            g = GridField.square((lo + hi) / 2, half, args.n)
            t = time.perf_counter()
            r = radius_of_convexity(E, g, 0.1 * R, 1.6 * R)
            w.writerow([seed, R, r.value, r.lo, r.hi, g.h, abs(r.value - R) / R, round(time.perf_counter() - t, 2)])
            done += 1
        seed += 1


if __name__ == "__main__":
    main()
