"""Monodromy of a random Fuchsian system on the punctured sphere."""

import argparse

import numpy as np

from logconn.fuchsian import assemble_global_datum, random_system


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--poles", type=int, default=3)
    ap.add_argument("--n", type=int, default=2)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    sys_ = random_system(np.random.default_rng(args.seed), args.poles, args.n)
    rep = assemble_global_datum(sys_)
    np.set_printoptions(precision=5, suppress=True)
    print(f"poles: {np.round(sys_.poles, 4)}")
    print(f"product relation residual: {rep.product_residual:.2e}")
    for k, p in enumerate(rep.poles):
        print(f"\npole {k + 1}: charpoly residual {p.charpoly_residual:.1e}, compatible: {p.compatible}")
        print(p.M)


if __name__ == "__main__":
    main()
