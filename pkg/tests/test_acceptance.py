"""Acceptance criteria 1-9, each at its stated tolerance.

Every criterion records one ``criterion k: PASS/FAIL`` line (printed in the
pytest terminal summary) before asserting.  Run this file directly with
``python3 tests/test_acceptance.py`` to get the same lines without pytest.
"""

import itertools
import os
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest
import scipy.linalg as sla

sys.path.insert(0, os.path.dirname(__file__))

import _report  # noqa: E402
from oracles import chi_limit, levelt_monodromy, unipotent_orbit_scale  # noqa: E402

from logconn.classification import (  # noqa: E402
    datum_invariants,
    equivalent,
    functor_R,
    random_valid_datum,
    validate_datum,
)
from logconn.datum import MonodromyDatum  # noqa: E402
from logconn.fuchsian import FuchsianSystem, assemble_global_datum, random_system  # noqa: E402
from logconn.grading import CU_N, P_A, chi, grade, membership  # noqa: E402
from logconn.jordan import additive_jc, multiplicative_jc  # noqa: E402
from logconn.local import (  # noqa: E402
    PolyConnection,
    functor_L,
    gauge_transform,
    linearizability,
    monodromy,
    poly_mul,
    unipotent_gauge,
    verify_cocycle,
)
from logconn.matrix_core import conjugacy_test, spectral_decompose  # noqa: E402

pytestmark = pytest.mark.acceptance

ROOT = Path(__file__).resolve().parents[1]
DATA = ROOT / "data"
RTOL = 1e-10
E12 = np.array([[0, 1], [0, 0]], dtype=complex)
I2 = np.eye(2, dtype=complex)


def record(k: int, ok: bool, detail: str):
    line = f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}"
    _report.LINES[k] = line
    print(line)
    assert ok, line


def nrm(X) -> float:
    return float(np.linalg.norm(X, 2))


def frame(rng, n, spread=0.5):
    return np.eye(n) + spread * (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(n)


def jordan_blocks_matrix(blocks):
    n = sum(s for _, s in blocks)
    J = np.zeros((n, n), complex)
    k = 0
    for lam, s in blocks:
        J[k:k + s, k:k + s] = lam * np.eye(s) + np.eye(s, k=1)
        k += s
    return J


def random_jordan_matrix(rng, n):
    """Conjugated Jordan matrix with eigenvalues on a lattice of spacing 0.7, |Im| <= 0.7."""
    lattice = [0.7 * complex(a, b) for a in range(-2, 3) for b in range(-1, 2)]
    k = int(rng.integers(1, n + 1))
    centers = [lattice[i] for i in rng.choice(len(lattice), size=k, replace=False)]
    blocks = []
    left = n
    for i, c in enumerate(centers):
        mult = left if i == k - 1 else int(rng.integers(1, left - (k - 1 - i) + 1))
        left -= mult
        while mult:
            s = int(rng.integers(1, mult + 1))
            blocks.append((c, s))
            mult -= s
    Q = frame(rng, n)
    X = Q @ jordan_blocks_matrix(blocks) @ np.linalg.inv(Q)
    target = rng.uniform(0.5, 5.0)
    return X * min(1.0, target / nrm(X))


def diagonalizable_residual(S, tol=1e-9):
    """Relative size of the minimal-polynomial product over clustered eigenvalues."""
    sd = spectral_decompose(S, tol)
    P = np.eye(S.shape[0], dtype=complex)
    denom = 1.0
    for lam in sd.eigenvalues:
        P = P @ (S - lam * np.eye(S.shape[0]))
        denom *= max(1.0, nrm(S - lam * np.eye(S.shape[0])))
    return nrm(P) / denom


# -------------------------------------------------------------------- 1


def test_criterion_1_jordan_chevalley():
    rng = np.random.default_rng(1001)
    worst = {"recompose": 0.0, "commute": 0.0, "nilpotent": 0.0, "diagonalizable": 0.0, "exp": 0.0}
    sizes = [2, 3, 4, 6]
    for case in range(200):
        n = sizes[case % 4]
        X = random_jordan_matrix(rng, n)
        jc = additive_jc(X)
        M = sla.expm(X)
        mjc = multiplicative_jc(M)
        sM = max(1.0, nrm(M))
        worst["recompose"] = max(worst["recompose"], nrm(jc.S + jc.N - X),
                                 nrm(mjc.Ms @ mjc.Mu - M) / sM)
        worst["commute"] = max(worst["commute"], nrm(jc.S @ jc.N - jc.N @ jc.S),
                               nrm(mjc.Ms @ mjc.Mu - mjc.Mu @ mjc.Ms) / sM)
        worst["nilpotent"] = max(worst["nilpotent"], nrm(np.linalg.matrix_power(jc.N, n)),
                                 nrm(np.linalg.matrix_power(mjc.Mu - np.eye(n), n)))
        worst["diagonalizable"] = max(worst["diagonalizable"], diagonalizable_residual(jc.S),
                                      diagonalizable_residual(mjc.Ms))
        eS, eN = sla.expm(jc.S), sla.expm(jc.N)
        worst["exp"] = max(worst["exp"], nrm(mjc.Ms - eS) / max(1.0, nrm(eS)), nrm(mjc.Mu - eN) / max(1.0, nrm(eN)))
    ok = all(v <= 1e-8 for k, v in worst.items() if k != "exp") and worst["exp"] <= 1e-7
    record(1, ok, "200 matrices; worst " + ", ".join(f"{k} {v:.1e}" for k, v in worst.items()))


# -------------------------------------------------------------------- 2


def _member_of_CU(rng, lam):
    n = len(lam)
    M = np.diag(1 + 0.3 * rng.standard_normal(n) + 0.3j * rng.standard_normal(n))
    for i, j in itertools.product(range(n), repeat=2):
        d = lam[i] - lam[j]
        if i != j and abs(d - round(d.real)) < 1e-12 and round(d.real) >= 0:
            M[i, j] = 0.5 * complex(rng.normal(), rng.normal())
    return M


def test_criterion_2_grading_and_chi():
    rng = np.random.default_rng(2002)
    worst = {"complete": 0.0, "weight": 0.0, "multiplicative": 0.0, "idempotent": 0.0, "limit": 0.0}
    for case in range(100):
        n = int(rng.integers(2, 5))
        coset = [complex(rng.uniform(-0.4, 0.4), rng.uniform(-0.4, 0.4)) for _ in range(2)]
        lam = sorted([coset[int(rng.integers(0, 2))] + int(rng.integers(0, 3)) for _ in range(n)],
                     key=lambda z: -z.real)
        Q = frame(rng, n, 0.3)
        Qi = np.linalg.inv(Q)
        S = Q @ np.diag(lam) @ Qi
        g = grade(S)

        X = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        X /= nrm(X)
        comps = g.components(X)
        worst["complete"] = max(worst["complete"], nrm(sum(comps.values()) - X))
        for w, Xw in comps.items():
            worst["weight"] = max(worst["weight"], nrm(S @ Xw - Xw @ S - w * Xw))

        M1 = Q @ _member_of_CU(rng, lam) @ Qi
        M2 = Q @ _member_of_CU(rng, lam) @ Qi
        assert membership(S, M1, CU_N, grading=g)[0] and membership(S, M2, CU_N, grading=g)[0]
        c1, c2 = chi(S, M1, grading=g), chi(S, M2, grading=g)
        prod = c1 @ c2
        worst["multiplicative"] = max(worst["multiplicative"],
                                      nrm(chi(S, M1 @ M2, grading=g) - prod) / max(1.0, nrm(prod)))
        worst["idempotent"] = max(worst["idempotent"], nrm(chi(S, c1, grading=g) - c1) / max(1.0, nrm(c1)))

        # limit formula: weights of a in {0, 1} in a frame, or {0,...,3} in the eigenbasis
        if case % 2:
            a_vals = np.sort(rng.integers(0, 2, n))[::-1].astype(float)
            Qa = frame(rng, n, 0.3)
        else:
            a_vals = np.sort(rng.integers(0, 4, n))[::-1].astype(float)
            Qa = np.eye(n)
        Qai = np.linalg.inv(Qa)
        a = Qa @ np.diag(a_vals) @ Qai
        P0 = np.diag(1 + 0.3 * rng.standard_normal(n)).astype(complex)
        for i, j in itertools.product(range(n), repeat=2):
            if a_vals[i] >= a_vals[j] and i != j:
                P0[i, j] = complex(rng.normal(), rng.normal())
        M = Qa @ P0 @ Qai
        lim = chi_limit(a, M, 1e-6)
        worst["limit"] = max(worst["limit"], nrm(chi(a, M, group=P_A) - lim) / nrm(M))
    ok = max(worst["complete"], worst["weight"], worst["multiplicative"], worst["idempotent"]) <= 1e-9 \
        and worst["limit"] <= 1e-5
    record(2, ok, "100 cases; worst " + ", ".join(f"{k} {v:.1e}" for k, v in worst.items()))


# -------------------------------------------------------------------- 3


def test_criterion_3_local_monodromy():
    rng = np.random.default_rng(3003)
    worst_const = 0.0
    for case in range(20):
        n = [2, 3, 4][case % 3]
        A0 = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        A0 *= rng.uniform(0.1, 1.0) / nrm(A0)
        M = monodromy(PolyConnection.constant(A0), RTOL)
        worst_const = max(worst_const, nrm(M - sla.expm(2j * np.pi * A0)))
    worst_res = 0.0
    for c in (1, -2, 1j):
        M = monodromy(PolyConnection((np.diag([1.0, 0.0]), c * E12)), RTOL)
        ref = levelt_monodromy([1.0, 0.0], c * E12)
        assert nrm(ref - (I2 + 2j * np.pi * c * E12)) < 1e-14
        worst_res = max(worst_res, nrm(M - ref))
    ok = worst_const <= 1e-8 and worst_res <= 1e-7
    record(3, ok, f"20 constant connections max err {worst_const:.1e}; resonant family c in {{1,-2,i}} "
                  f"max err {worst_res:.1e}")


# -------------------------------------------------------------------- 4


def _gauge_of_constant(rng, n, resonant):
    if resonant:
        lam = np.array([1.0, 0.0] + list(rng.uniform(-0.4, 0.4, n - 2) + 0.3j))[:n]
    else:
        lam = rng.uniform(-0.45, 0.45, n) + 1j * rng.uniform(-0.45, 0.45, n)
    Q = frame(rng, n, 0.4)
    A0 = Q @ np.diag(lam) @ np.linalg.inv(Q)
    P = frame(rng, n, 0.4)
    Pi = np.linalg.inv(P)
    X1 = P @ np.triu(0.5 * rng.standard_normal((n, n)), 1) @ Pi
    X2 = P @ np.triu(0.5 * rng.standard_normal((n, n)), 1) @ Pi
    g1, g1i = unipotent_gauge(X1, 1)
    g2, g2i = unipotent_gauge(X2, 2)
    g = poly_mul(g1, g2)
    gi = poly_mul(g2i, g1i)
    return gauge_transform(PolyConnection.constant(A0), g, gi)


def test_criterion_4_linearizability():
    rng = np.random.default_rng(4004)
    correct = total = 0
    wrong = []
    for case in range(50):
        n = [2, 3, 4][case % 3]
        conn = _gauge_of_constant(rng, n, resonant=case % 2 == 0)
        verdict = linearizability(conn, RTOL).linearizable
        total += 1
        correct += verdict
        if not verdict:
            wrong.append(case)
    for c in (1, -2, 1j, 0.5 + 0.5j):
        verdict = linearizability(PolyConnection((np.diag([1.0, 0.0]), c * E12)), RTOL).linearizable
        total += 1
        correct += not verdict
        if verdict:
            wrong.append(f"resonant c={c}")
    record(4, correct == total, f"{correct}/{total} verdicts correct (50 gauge transforms, 4 resonant)"
                                + (f"; wrong: {wrong}" if wrong else ""))


# -------------------------------------------------------------------- 5


def test_criterion_5_riemann_hilbert_round_trip():
    rng = np.random.default_rng(5005)
    failures = []
    start = time.perf_counter()
    for case in range(100):
        n = [2, 3, 4, 1][case % 4]
        d = random_valid_datum(n, rng, max_weight=3)
        conn = functor_R(d, tol=1e-7)
        if conn.coeffs[0] is not d.A:
            failures.append((case, "residue not bitwise"))
            continue
        anchors = np.exp(2j * np.pi * np.asarray(spectral_decompose(d.A).eigenvalues))
        if not conjugacy_test(monodromy(conn, RTOL), d.M, tol=1e-6, anchors=anchors).same_class:
            failures.append((case, "monodromy not conjugate"))
            continue
        back = functor_L(conn, RTOL)
        if not datum_invariants(back, 1e-6).matches(datum_invariants(d, 1e-6), 1e-6):
            failures.append((case, "invariants differ"))
    record(5, not failures, f"100 data (n<=4, weights<=3), {len(failures)} failures "
                            f"in {time.perf_counter() - start:.0f}s" + (f": {failures[:5]}" if failures else ""))


# -------------------------------------------------------------------- 6


def _cocycle_connections():
    rng = np.random.default_rng(6006)
    conns = [
        PolyConnection((np.diag([1.0, 0.0]), E12)),
        PolyConnection((np.diag([1.0, 0.0]), -2 * E12)),
        PolyConnection((np.diag([1.0, 0.0]), 1j * E12)),
        PolyConnection((np.diag([2.0, 1.0, 0.0]), np.eye(3, k=1), 0.5 * np.eye(3, k=2))),
        PolyConnection((np.diag([1.0, 0.0]), np.array([[0.2, 1.0], [0.3, -0.2]]))),
        PolyConnection.constant(np.diag([0.3, -0.1])),
        PolyConnection((np.diag([1 / 3, 0.0]), E12)),
    ]
    for _ in range(3):
        conns.append(PolyConnection(tuple(0.3 * (rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2)))
                                          for _ in range(3))))
    return conns


def test_criterion_6_cocycle():
    residuals = [verify_cocycle(c, sample_count=20, seed=k, rtol=RTOL) for k, c in enumerate(_cocycle_connections())]
    worst = max(residuals)
    record(6, worst <= 100 * RTOL, f"10 connections (5 resonant) x 20 triples; max residual {worst:.1e} "
                                   f"(bound {100 * RTOL:.0e})")


# -------------------------------------------------------------------- 7


def test_criterion_7_equivalence():
    cs = [0, 1, -2, 1j, 0.5 + 0.5j, 3]
    A = np.diag([1.0, 0.0])
    data = {c: MonodromyDatum(I2 + 2j * np.pi * c * E12, I2, A) for c in cs}
    mismatches, undecided, unstable = [], 0, 0
    for c1, c2 in itertools.product(cs, repeat=2):
        verdicts = {equivalent(data[c1], data[c2], seed=s).verdict for s in range(10)}
        undecided += "undecided" in verdicts
        unstable += len(verdicts) > 1
        expected = "equivalent" if unipotent_orbit_scale(c1, c2) else "inequivalent-certified"
        if verdicts != {expected}:
            mismatches.append((c1, c2, sorted(verdicts)))
    ok = not mismatches and undecided == 0 and unstable == 0
    record(7, ok, f"{len(cs) ** 2} pairs x 10 seeds; mismatches {len(mismatches)}, undecided {undecided}, "
                  f"seed-unstable {unstable}")


# -------------------------------------------------------------------- 8


def test_criterion_8_global():
    rng = np.random.default_rng(8008)
    worst_prod = worst_cp = worst_local = 0.0
    incompatible = 0
    start = time.perf_counter()
    for case in range(30):
        m = [1, 2, 3, 4][case % 4]
        n = [1, 2, 3][case % 3]
        sys_ = random_system(rng, m, n)
        rep = assemble_global_datum(sys_, RTOL)
        worst_prod = max(worst_prod, rep.product_residual)
        for p in rep.poles:
            worst_cp = max(worst_cp, p.charpoly_residual)
            incompatible += not p.compatible
        if m == 1:
            A = sys_.residues[0]
            (p,) = rep.poles
            local = functor_L(PolyConnection.constant(A), RTOL)
            # same monodromy up to conjugation by the tail transport
            glob = np.linalg.solve(p.datum.h, p.M @ p.datum.h)
            worst_local = max(worst_local, nrm(glob - local.local_monodromy) / max(1.0, nrm(glob)))
            if not datum_invariants(p.datum).matches(datum_invariants(local)):
                worst_local = np.inf
    ok = worst_prod < 1e-8 and worst_cp <= 1e-6 and worst_local <= 1e-6 and incompatible == 0
    record(8, ok, f"30 systems (m<=4, n<=3) in {time.perf_counter() - start:.0f}s; max product residual "
                  f"{worst_prod:.1e}, charpoly {worst_cp:.1e}, one-pole vs local {worst_local:.1e}, "
                  f"incompatible poles {incompatible}")


# -------------------------------------------------------------------- 9


def _cli(*args):
    env = dict(os.environ, PYTHONHASHSEED="0")
    src = str(ROOT / "src")
    env["PYTHONPATH"] = src + os.pathsep + env.get("PYTHONPATH", "")
    return subprocess.run([sys.executable, "-m", "logconn", *map(str, args)], capture_output=True, env=env,
                          cwd=ROOT)


def test_criterion_9_determinism_and_exit_codes():
    runs = [
        ("analyze", DATA / "resonant.json", "--json"),
        ("equiv", DATA / "resonant_datum.json", DATA / "resonant_datum_2.json", "--json", "--seed", "3"),
        ("global", DATA / "three_poles.json", "--json"),
    ]
    same = all(_cli(*r).stdout == _cli(*r).stdout for r in runs)
    golden = {
        "malformed": (_cli("analyze", DATA / "malformed.json").returncode, 1),
        "invalid datum": (_cli("normal-form", DATA / "invalid_datum.json").returncode, 2),
        "ambiguous": (_cli("analyze", DATA / "ambiguous.json").returncode, 3),
        "inequivalent": (_cli("equiv", DATA / "resonant_datum.json", DATA / "identity_datum.json").returncode, 4),
        "ok": (_cli("analyze", DATA / "constant_third.json").returncode, 0),
    }
    bad = {k: v for k, v in golden.items() if v[0] != v[1]}
    record(9, same and not bad, f"byte-identical JSON across reruns: {same}; exit codes "
                                + ", ".join(f"{k}={v[0]}" for k, v in golden.items()))


if __name__ == "__main__":
    tests = [v for k, v in sorted(globals().items()) if k.startswith("test_criterion_")]
    failed = 0
    for fn in tests:
        try:
            fn()
        except AssertionError:
            failed += 1
    sys.exit(1 if failed else 0)
