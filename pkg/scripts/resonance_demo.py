"""Resonant family A(z) = diag(1, 0) + c z E12.

For c != 0 the monodromy is I + 2 pi i c E12, the connection is not
linearizable to its residue, and all such connections are equivalent.
"""

import argparse

import numpy as np

from logconn.classification import equivalent
from logconn.local import PolyConnection, functor_L, linearizability, monodromy

E12 = np.array([[0, 1], [0, 0]], dtype=complex)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--c", type=complex, nargs="+", default=[0, 1, -2, 1j])
    args = ap.parse_args()

    data = {}
    for c in args.c:
        conn = PolyConnection((np.diag([1.0, 0.0]), c * E12))
        M = monodromy(conn)
        err = np.linalg.norm(M - (np.eye(2) + 2j * np.pi * c * E12), 2)
        lin = linearizability(conn).linearizable
        data[c] = functor_L(conn)
        print(f"c = {c}: |M - closed form| = {err:.1e}, linearizable: {lin}")

    print("\nequivalence of the local data")
    cs = list(data)
    for i, a in enumerate(cs):
        for b in cs[i + 1:]:
            print(f"  {a} vs {b}: {equivalent(data[a], data[b]).verdict}")


if __name__ == "__main__":
    main()
