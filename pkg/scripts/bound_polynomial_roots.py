"""Real roots of the lower-bound polynomials p_k and q_k."""
import argparse

from igo.specfun import build_pk_polynomial, build_qk_polynomial, real_roots


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--kmin", type=int, default=1)
    p.add_argument("--kmax", type=int, default=12)
    p.add_argument("--xmax", type=float, default=60.0)
    args = p.parse_args()

    print("k,kind,degree,positive_real_roots")
    for k in range(args.kmin, args.kmax + 1):
        for kind, build in (("p", build_pk_polynomial), ("q", build_qk_polynomial)):
            poly = build(k)
            roots = [r for r in real_roots(poly, (0.0, args.xmax)) if r > 0]
            print(f"{k},{kind},{poly.degree},{';'.join(f'{r:.9f}' for r in roots)}")


if __name__ == "__main__":
    main()
