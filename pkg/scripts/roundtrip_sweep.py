"""Riemann-Hilbert round trip on random valid data.

datum -> Levelt normal form -> monodromy datum, compared by invariants.
"""

import argparse
import time

import numpy as np

from logconn.classification import datum_invariants, functor_R, random_valid_datum
from logconn.errors import LogConnError
from logconn.local import functor_L


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--count", type=int, default=40)
    ap.add_argument("--max-n", type=int, default=4)
    ap.add_argument("--max-weight", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    ok = refused = 0
    t0 = time.perf_counter()
    for k in range(args.count):
        n = int(rng.integers(1, args.max_n + 1))
        d = random_valid_datum(n, rng, max_weight=args.max_weight)
        try:
            back = functor_L(functor_R(d, tol=1e-7))
            same = datum_invariants(back, 1e-6).matches(datum_invariants(d, 1e-6), 1e-6)
        except LogConnError as err:
            refused += 1
            print(f"{k:3d} n={n} refused: {type(err).__name__}: {err}")
            continue
        ok += same
        if not same:
            print(f"{k:3d} n={n} invariants differ")
    dt = time.perf_counter() - t0
    print(f"{ok}/{args.count} round trips preserved invariants, {refused} refusals, {dt:.1f}s")


if __name__ == "__main__":
    main()
