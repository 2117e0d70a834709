"""Cycle count of the multistable family as the Gaussian width grows."""
import argparse

import numpy as np

from igo import construct_multistable, find_all_cycles, multistability_diagnostics
from igo.multistability import MultistableRecipe


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--m", type=int, default=11)
    p.add_argument("--v0", type=float, default=8.64)
    p.add_argument("--ystar", type=float, default=2.0)
    p.add_argument("--sigma-range", default="1e-4:1e-1", help="standard deviation lo:hi (log spaced)")
    p.add_argument("--steps", type=int, default=13)
    p.add_argument("--points", type=int, default=20_001)
    args = p.parse_args()

    lo, hi = (float(v) for v in args.sigma_range.split(":"))
    print("sigma,P1,slope,n_cycles,y_star")
    for sigma in np.geomspace(lo, hi, args.steps):
        recipe = MultistableRecipe(args.m, args.v0, args.ystar, float(sigma))
        model = construct_multistable(recipe)
        d = multistability_diagnostics(model, args.ystar)
        half = 20 * sigma * max(d.P1, 1.0)
        cycles = find_all_cycles(model, (max(args.ystar - half, 0.0), args.ystar + half), args.points)
        ys = ";".join(f"{c.y_star:.10g}" for c in cycles)
        print(f"{sigma:.6g},{d.P1:.6g},{d.slope:.6g},{len(cycles)},{ys}")
    # P1 is proportional to 1 / sigma, so the flanking pair disappears where sigma P1 / sigma_c = 1
    print(f"# P1 = 1 at sigma = {sigma * d.P1:.6g}")


if __name__ == "__main__":
    main()
