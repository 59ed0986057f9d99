"""Distance sums of perturbed Hermitian spectra against ||B||^q_{S_q}, as CSV on stdout."""
import argparse
import csv
import sys

from rconvex.spectra import kato_pair, perturb_and_measure, weight_x_power


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--count", type=int, default=200)
    ap.add_argument("--n-max", type=int, default=50)
    ap.add_argument("--s2", type=float, default=0.1, help="Hilbert-Schmidt norm of B")
    ap.add_argument("--q", type=float, nargs="+", default=[1.0, 2.0, 3.0])
    args = ap.parse_args()
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["seed", "n", "q", "sum", "schatten_q", "ratio"])
    worst = {q: 0.0 for q in args.q}
    for s in range(args.count):
        n = 2 + s % (args.n_max - 1)
        r = perturb_and_measure(*kato_pair(s, n, args.s2), [weight_x_power(q) for q in args.q], args.q)
        for q in args.q:
            name = weight_x_power(q)[0]
            w.writerow([s, n, q, r.sums[name], r.schatten[q], r.ratio(name, q)])
            worst[q] = max(worst[q], r.ratio(name, q))
    for q, v in worst.items():
        w.writerow(["max", "", q, "", "", v])


if __name__ == "__main__":
    main()
