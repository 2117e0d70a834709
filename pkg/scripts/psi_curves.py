"""Psi_k on a grid, as CSV, with the location of each minimum."""
import argparse
import sys

import numpy as np

from igo.specfun import psi_capital, psi_lower_bound, psi_minimizer


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--orders", default="8,9,10,11,12", help="comma-separated k values")
    p.add_argument("--xmax", type=float, default=25.0)
    p.add_argument("--points", type=int, default=501)
    p.add_argument("--out", default=None, help="CSV path (default stdout)")
    args = p.parse_args()

    ks = [int(k) for k in args.orders.split(",")]
    xs = np.linspace(args.xmax / args.points, args.xmax, args.points)
    cols = np.column_stack([xs] + [psi_capital(k, xs) for k in ks])
    fh = open(args.out, "w") if args.out else sys.stdout
    np.savetxt(fh, cols, delimiter=",", header="x," + ",".join(f"Psi_{k}" for k in ks), comments="", fmt="%.12g")
    if args.out:
        fh.close()
    for k in ks:
        x, v = psi_minimizer(k)
        where = "interior" if x < k + 5.999 else "search edge"
        print(f"Psi_{k}: min {v:.6e} at x = {x:.6f} ({where}), lower bound {psi_lower_bound(k):.3e}", file=sys.stderr)


if __name__ == "__main__":
    main()
