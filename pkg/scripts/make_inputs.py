"""Regenerate the sample input files in data/."""

from pathlib import Path

import numpy as np

from logconn.datum import MonodromyDatum
from logconn.fuchsian import FuchsianSystem
from logconn.local import PolyConnection
from logconn.matrix_core import mat_exp
from logconn.schema import connection_to_json, datum_to_json, dumps, system_to_json

OUT = Path(__file__).resolve().parent.parent / "data"

E12 = np.array([[0, 1], [0, 0]], dtype=complex)
I2 = np.eye(2, dtype=complex)
A_res = np.diag([1.0, 0.0]).astype(complex)


def write(name, obj):
    (OUT / name).write_text(dumps(obj), encoding="utf-8")
    print("wrote", OUT / name)


def main():
    OUT.mkdir(exist_ok=True)
    write("constant_third.json", connection_to_json(PolyConnection((np.diag([1 / 3, 0]),))))
    write("resonant.json", connection_to_json(PolyConnection((A_res, E12))))
    # eigenvalues 1.5 * tol apart at the default tol = 1e-9
    write("ambiguous.json", connection_to_json(PolyConnection((np.diag([1.0, 1.0 + 1.5e-9]),))))

    A3 = np.diag([1 / 3, 0]).astype(complex)
    write("trivial_datum.json", datum_to_json(MonodromyDatum(mat_exp(2j * np.pi * A3), I2, A3)))
    write("resonant_datum.json", datum_to_json(MonodromyDatum(I2 + 2j * np.pi * E12, I2, A_res)))
    write("resonant_datum_2.json", datum_to_json(MonodromyDatum(I2 + 4j * np.pi * E12, I2, A_res)))
    write("identity_datum.json", datum_to_json(MonodromyDatum(I2, I2, A_res)))
    write("invalid_datum.json", datum_to_json(MonodromyDatum(np.diag([2.0, 3.0]), I2, A_res)))

    nil = np.array([[1, -1], [1, -1]], dtype=complex)
    write("two_poles.json", system_to_json(FuchsianSystem((0, 1), (0.5 * nil, -0.25 * nil.T), 1j)))
    write("three_poles.json", system_to_json(FuchsianSystem(
        (0, 1, -1 + 1j),
        (np.array([[0.2, 0.1], [0, -0.1]]), np.array([[0.1, 0], [0.3, 0.25]]),
         np.array([[-0.15, 0.05j], [0.1, 0.1]])))))
    (OUT / "malformed.json").write_text('{"n": 2, "coefficients": [\n  {"power": 0, "matrix": [[1, 0]\n', encoding="utf-8")
    print("wrote", OUT / "malformed.json")


if __name__ == "__main__":
    main()
