"""JSON file formats for connections, Fuchsian systems and monodromy data.

Matrices are row-major nested lists of ``[re, im]`` pairs.  Python's ``json``
writes floats with ``repr``, so write-then-read is exact.
"""

from __future__ import annotations

import json
import re
from pathlib import Path
from typing import Any

import numpy as np

from .datum import MonodromyDatum
from .errors import ParseError
from .fuchsian import FuchsianSystem
from .local import PolyConnection


def complex_to_json(z: complex) -> list:
    z = complex(z)
    return [z.real, z.imag]


def matrix_to_json(M) -> list:
    M = np.asarray(M, dtype=complex)
    return [[[v.real, v.imag] for v in row] for row in M]


def _num(x: Any, where: str) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise ParseError(f"{where}: expected a number, got {type(x).__name__}")
    if not np.isfinite(x):
        raise ParseError(f"{where}: non-finite number")
    return float(x)


def complex_from_json(obj: Any, where: str) -> complex:
    if not isinstance(obj, list) or len(obj) != 2:
        raise ParseError(f"{where}: expected [re, im]")
    return complex(_num(obj[0], where + "[0]"), _num(obj[1], where + "[1]"))


def matrix_from_json(obj: Any, n: int, where: str) -> np.ndarray:
    if not isinstance(obj, list) or len(obj) != n:
        raise ParseError(f"{where}: expected {n} rows")
    out = np.empty((n, n), dtype=complex)
    for i, row in enumerate(obj):
        if not isinstance(row, list) or len(row) != n:
            raise ParseError(f"{where}[{i}]: expected {n} entries")
        for j, v in enumerate(row):
            out[i, j] = complex_from_json(v, f"{where}[{i}][{j}]")
    return out


def _load(text: str) -> dict:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as err:
        raise ParseError(f"invalid JSON: {err.msg}", err.lineno, err.colno) from None
    if not isinstance(obj, dict):
        raise ParseError("top level must be an object", 1, 1)
    return obj


def _dimension(obj: dict) -> int:
    n = obj.get("n")
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise ParseError("n: expected a positive integer")
    return n


# -- connections


def connection_to_json(conn: PolyConnection) -> dict:
    return {
        "n": conn.n,
        "coefficients": [{"power": k, "matrix": matrix_to_json(c)} for k, c in enumerate(conn.coeffs)],
    }


def connection_from_json(obj: dict) -> PolyConnection:
    n = _dimension(obj)
    items = obj.get("coefficients")
    if not isinstance(items, list) or not items:
        raise ParseError("coefficients: expected a non-empty list")
    by_power = {}
    for idx, item in enumerate(items):
        where = f"coefficients[{idx}]"
        if not isinstance(item, dict):
            raise ParseError(f"{where}: expected an object")
        k = item.get("power")
        if isinstance(k, bool) or not isinstance(k, int) or k < 0:
            raise ParseError(f"{where}.power: expected a non-negative integer")
        if k in by_power:
            raise ParseError(f"{where}.power: duplicate power {k}")
        by_power[k] = matrix_from_json(item.get("matrix"), n, f"{where}.matrix")
    top = max(by_power)
    zero = np.zeros((n, n), dtype=complex)
    return PolyConnection(tuple(by_power.get(k, zero) for k in range(top + 1)))


# -- systems


def system_to_json(sys: FuchsianSystem) -> dict:
    out = {
        "n": sys.n,
        "poles": [complex_to_json(p) for p in sys.poles],
        "residues": [matrix_to_json(A) for A in sys.residues],
    }
    if sys.basepoint is not None:
        out["basepoint"] = complex_to_json(sys.basepoint)
    return out


def system_from_json(obj: dict) -> FuchsianSystem:
    n = _dimension(obj)
    poles = obj.get("poles")
    residues = obj.get("residues")
    if not isinstance(poles, list) or not poles:
        raise ParseError("poles: expected a non-empty list")
    if not isinstance(residues, list) or len(residues) != len(poles):
        raise ParseError("residues: expected one matrix per pole")
    ps = [complex_from_json(p, f"poles[{i}]") for i, p in enumerate(poles)]
    rs = [matrix_from_json(A, n, f"residues[{i}]") for i, A in enumerate(residues)]
    x0 = obj.get("basepoint")
    x0 = complex_from_json(x0, "basepoint") if x0 is not None else None
    try:
        return FuchsianSystem(tuple(ps), tuple(rs), x0)
    except ValueError as err:
        raise ParseError(str(err)) from None


# -- data


def datum_to_json(d: MonodromyDatum) -> dict:
    return {"n": d.n, "M": matrix_to_json(d.M), "h": matrix_to_json(d.h), "A": matrix_to_json(d.A)}


def datum_from_json(obj: dict) -> MonodromyDatum:
    n = _dimension(obj)
    mats = {k: matrix_from_json(obj.get(k), n, k) for k in ("M", "h", "A")}
    return MonodromyDatum(**mats)


_READERS = {"connection": connection_from_json, "system": system_from_json, "datum": datum_from_json}


def read_text(text: str, kind: str):
    return _READERS[kind](_load(text))


def read_file(path, kind: str):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as err:
        raise ParseError(f"cannot read {path}: {err}") from None
    return read_text(text, kind)


_NUM = r"-?(?:\d+(?:\.\d*)?(?:[eE][-+]?\d+)?|Infinity|NaN)"
_PAIR = re.compile(r"\[\s*(" + _NUM + r"),\s*(" + _NUM + r")\s*\]")


_FLAT_PAIR = r"\[" + _NUM + ", " + _NUM + r"\]"
_ROW = re.compile(r"\[\s*(" + _FLAT_PAIR + r"(?:,\s*" + _FLAT_PAIR + r")*)\s*\]")


def dumps(obj: dict) -> str:
    """Indented JSON with each matrix row on one line."""
    text = _PAIR.sub(r"[\1, \2]", json.dumps(obj, indent=2))
    text = _ROW.sub(lambda m: "[" + re.sub(r",\s+\[", ", [", m.group(1)) + "]", text)
    return text + "\n"
