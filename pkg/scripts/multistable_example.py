"""Order-11 model with three coexisting 1-cycles: construct, locate, classify."""
import argparse
import json
import math

import numpy as np

from igo import construct_multistable, find_all_cycles, multistability_diagnostics
from igo.multistability import MultistableRecipe, suggested_window


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--m", type=int, default=11)
    p.add_argument("--v0", type=float, default=8.64)
    p.add_argument("--ystar", type=float, default=2.0)
    p.add_argument("--variance", type=float, default=2e-4, help="variance of the Gaussian CDF")
    p.add_argument("--points", type=int, default=40_001)
    p.add_argument("--json", default=None, help="write the cycle reports here")
    args = p.parse_args()

    recipe = MultistableRecipe(args.m, args.v0, args.ystar, math.sqrt(args.variance))
    model = construct_multistable(recipe)
    diag = multistability_diagnostics(model, args.ystar)
    window = suggested_window(recipe, diag)
    print(f"a = {model.a[0]:.6g}, g = {model.g[0]:.6g}, gbar = {model.gbar:.6e}")
    print(f"P1 = {diag.P1:.6f}, P2 = {diag.P2:.6g}, slope = {diag.slope:.6f}")
    print(f"scan window {window[0]:.6g} .. {window[1]:.6g}")

    cycles = find_all_cycles(model, window, args.points)
    np.set_printoptions(precision=5, suppress=True, linewidth=120)
    for c in cycles:
        print(f"\ny* = {c.y_star:.10f}  period = {c.period:.6g}  rho = {c.spectral_radius:.4f}  "
              f"{'stable' if c.stable else 'unstable'}")
        print("x* =", np.asarray(c.fixed_point))
    if args.json:
        with open(args.json, "w") as fh:
            json.dump([c.to_dict() for c in cycles], fh, indent=2)


if __name__ == "__main__":
    main()
