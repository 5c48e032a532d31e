"""Generalized monodromy data: validation, Levelt normal forms, invariants and
equivalence under ``C_G(A) x| U_N(S)``."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .datum import MonodromyDatum
from .errors import Singular, ValidationFailure, WeightLeak
from .grading import CU_N, TWO_PI_I, grade, intertwiner_algebra, membership, nearest_integer
from .jordan import additive_jc, multiplicative_jc
from .local import PolyConnection
from .matrix_core import (
    DEFAULT_TOL,
    NUMERIC_TOL,
    conjugacy_test,
    anchored_profile,
    mat_exp,
    nilpotent_log,
    norm2,
    scale_of,
    spectral_decompose,
    weyr_characteristic,
)

__all__ = [
    "MonodromyDatum",
    "ValidationReport",
    "validate_datum",
    "functor_R",
    "DatumInvariants",
    "datum_invariants",
    "EquivalenceVerdict",
    "equivalent",
    "random_valid_datum",
    "random_group_element",
    "act",
]


def _check_invertible(X: np.ndarray, name: str, tol: float):
    sv = np.linalg.svd(X, compute_uv=False)
    if sv[-1] <= tol * sv[0]:
        raise Singular(f"{name} is singular within tolerance (sigma_min/sigma_max = {sv[-1] / sv[0]:.2e})")


@dataclass(frozen=True)
class ValidationReport:
    passed: bool
    residuals: dict
    conditions: dict
    tol: float

    def __bool__(self):
        return self.passed

    def failed(self) -> list:
        return [k for k, ok in self.conditions.items() if not ok]


def validate_datum(d: MonodromyDatum, tol: float = DEFAULT_TOL) -> ValidationReport:
    """Check the three compatibility conditions of a datum.

    ``support``: ``h^-1 M h`` has weights in {0, 1, 2, ...} under ``ad S``.
    ``chi``: its weight-zero part equals ``exp(2 pi i A)``.
    ``semisimple``: its semisimple part equals ``exp(2 pi i S)``.

    Structural clustering of the exact residue ``A`` uses ``DEFAULT_TOL``;
    ``tol`` only bounds the residuals.
    """
    _check_invertible(d.M, "M", 1e-13)
    _check_invertible(d.h, "h", 1e-13)
    struct_tol = min(tol, DEFAULT_TOL)
    jcA = additive_jc(d.A, struct_tol)
    g = grade(jcA.S, struct_tol)
    Mp = d.local_monodromy

    _, support = membership(jcA.S, Mp, CU_N, struct_tol, grading=g)
    expA = mat_exp(TWO_PI_I * d.A)
    chi_res = norm2(g.weight_component(Mp, 0) - expA) / max(1.0, norm2(expA))
    Ms = multiplicative_jc(Mp, max(tol, struct_tol)).Ms
    expS = mat_exp(TWO_PI_I * jcA.S)
    ss_res = norm2(Ms - expS) / max(1.0, norm2(expS))

    residuals = {"support": float(support), "chi": float(chi_res), "semisimple": float(ss_res)}
    conditions = {k: v <= tol for k, v in residuals.items()}
    return ValidationReport(all(conditions.values()), residuals, conditions, tol)


def functor_R(d: MonodromyDatum, tol: float = DEFAULT_TOL) -> PolyConnection:
    """Levelt normal form ``A(z) = A + sum_{i >= 1} N_i z^i`` of a datum.

    ``N_i`` are the integer-weight components of ``log(M'_u) / 2 pi i`` with
    ``M' = h^-1 M h``.  The residue coefficient is ``d.A`` itself.

    Raises
    ------
    ValidationFailure
        If the datum is inconsistent or ``N_0`` differs from the nilpotent part of ``A``.
    WeightLeak
        If ``log M'_u`` has components at non-integer weights.
    """
    report = validate_datum(d, tol)
    if not report:
        raise ValidationFailure(f"datum fails {report.failed()}", report)
    struct_tol = min(tol, DEFAULT_TOL)
    jcA = additive_jc(d.A, struct_tol)
    g = grade(jcA.S, struct_tol)
    # validated, so spec M' = exp(2 pi i spec A)
    anchors = np.exp(TWO_PI_I * np.asarray(jcA.spectral.eigenvalues))
    Mu = multiplicative_jc(d.local_monodromy, max(tol, struct_tol), anchors).Mu
    Nprime = nilpotent_log(Mu, max(tol, struct_tol)) / TWO_PI_I
    scale = max(1.0, norm2(Nprime))
    parts = {}
    for k, (w, comp) in enumerate(g.components(Nprime).items()):
        size = norm2(comp)
        i = nearest_integer(w, struct_tol * scale_of(jcA.S))
        if i is None or i < 0:
            if size > tol * scale:
                raise WeightLeak(f"log of the unipotent part has weight {w:.6g} component of norm {size:.3e}")
            continue
        parts[i] = parts.get(i, 0) + comp
    N0 = parts.pop(0, np.zeros_like(Nprime))
    gap = norm2(N0 - jcA.N) / max(1.0, norm2(jcA.N))
    if gap > tol:
        raise ValidationFailure(f"weight-zero part of N' differs from the nilpotent part of A by {gap:.3e}")
    top = max(parts, default=0)
    coeffs = [d.A] + [parts.get(i, np.zeros_like(Nprime)) for i in range(1, top + 1)]
    conn = PolyConnection(tuple(coeffs))
    # as_matrix may copy; keep the residue bit-identical to the input
    object.__setattr__(conn, "coeffs", (d.A,) + conn.coeffs[1:])
    return conn


# --------------------------------------------------------------------------
# invariants


@dataclass(frozen=True)
class DatumInvariants:
    """Conjugation invariants of a datum under ``C_G(A) x| U_N(S)``.

    ``filtration_ranks`` maps ``(s, t)`` eigenvalue pairs of ``S`` with
    ``t - s`` a non-negative integer to the rank of ``N'`` as a map from
    ``F_{>=s}`` to ``V / F_{>t}``, where ``F_{>=s}`` sums the eigenspaces at
    ``s, s+1, s+2, ...``.  These ranks survive conjugation by the unipotent
    radical, unlike the ranks of the individual weight components.
    """

    spectrum: tuple
    weyr: tuple
    filtration_ranks: tuple

    def weight_dims(self) -> dict:
        out: dict = {}
        for (_, _, w), r in self.filtration_ranks:
            out[w] = max(out.get(w, 0), r)
        return out

    def matches(self, other: "DatumInvariants", tol: float = NUMERIC_TOL) -> bool:
        return _same_keyed(self.spectrum, other.spectrum, tol) and _same_keyed(
            self.weyr, other.weyr, tol) and _same_ranks(self.filtration_ranks, other.filtration_ranks, tol)


def _same_keyed(a: tuple, b: tuple, tol: float) -> bool:
    if len(a) != len(b):
        return False
    used = set()
    for lam, val in a:
        hit = None
        for k, (mu, other) in enumerate(b):
            if k not in used and abs(lam - mu) <= tol * max(1.0, abs(lam)) and val == other:
                hit = k
                break
        if hit is None:
            return False
        used.add(hit)
    return True


def _same_ranks(a: tuple, b: tuple, tol: float) -> bool:
    packed_a = tuple(((s, t), (w, r)) for (s, t, w), r in a)
    packed_b = tuple(((s, t), (w, r)) for (s, t, w), r in b)
    if len(packed_a) != len(packed_b):
        return False
    used = set()
    for (s, t), val in packed_a:
        hit = None
        for k, ((s2, t2), val2) in enumerate(packed_b):
            if k in used or val != val2:
                continue
            if abs(s - s2) <= tol * max(1.0, abs(s)) and abs(t - t2) <= tol * max(1.0, abs(t)):
                hit = k
                break
        if hit is None:
            return False
        used.add(hit)
    return True


def _rank(X: np.ndarray, tol: float, scale: float) -> int:
    if X.size == 0:
        return 0
    sv = np.linalg.svd(X, compute_uv=False)
    return int(np.sum(sv > tol * scale))


def _anchored_weyr(M: np.ndarray, lams, tol: float) -> tuple:
    # the spectrum of M is exp(2 pi i spec A) for a valid datum; anchoring at
    # those exact values avoids clustering eigenvalues of M, which split like
    # sqrt(eps) on defective blocks when M is badly conditioned
    prof = anchored_profile(M, [np.exp(TWO_PI_I * lam) for lam in lams], tol)
    return tuple((mu, weyr_characteristic(r, m)) for mu, m, r in prof)


def datum_invariants(d: MonodromyDatum, tol: float = NUMERIC_TOL) -> DatumInvariants:
    struct_tol = DEFAULT_TOL
    sdA = spectral_decompose(d.A, struct_tol)
    spectrum = tuple((complex(l), int(m)) for l, m in zip(sdA.eigenvalues, sdA.multiplicities))

    weyr = _anchored_weyr(d.M, sdA.eigenvalues, tol)

    S = sdA.semisimple_part()
    g = grade(S, struct_tol)
    lams = g.eigenvalues
    Mu = multiplicative_jc(d.local_monodromy, tol, np.exp(TWO_PI_I * np.asarray(sdA.eigenvalues))).Mu
    Nprime = nilpotent_log(Mu, tol) / TWO_PI_I
    scale = max(1.0, norm2(Nprime))
    itol = struct_tol * scale_of(S)

    def offset(i, j):
        # lams[j] - lams[i] as an integer, or None across cosets
        return nearest_integer(lams[j] - lams[i], itol)

    ranks = []
    K = len(lams)
    for s in range(K):
        for t in range(K):
            w = offset(s, t)
            if w is None or w < 0:
                continue
            up = [offset(s, j) for j in range(K)]
            down = [offset(t, k) for k in range(K)]
            cols = [g.spectral.bases[j][0] for j in range(K) if up[j] is not None and up[j] >= 0]
            rows = [g.spectral.bases[k][1] for k in range(K) if down[k] is not None and down[k] <= 0]
            block = np.vstack(rows) @ Nprime @ np.hstack(cols)
            ranks.append(((complex(lams[s]), complex(lams[t]), int(w)), _rank(block, tol, scale)))
    return DatumInvariants(spectrum, weyr, tuple(ranks))


# --------------------------------------------------------------------------
# equivalence


@dataclass(frozen=True)
class EquivalenceVerdict:
    verdict: str
    witness: Optional[np.ndarray] = None
    alignment: Optional[np.ndarray] = None
    residual: float = float("nan")
    solution_dim: int = 0
    reason: str = ""

    @property
    def equivalent(self) -> bool:
        return self.verdict == "equivalent"


def _conj_residual(X: np.ndarray, M1: np.ndarray, M2: np.ndarray) -> float:
    return norm2(X @ M1 @ np.linalg.inv(X) - M2) / max(1.0, norm2(M2))


def _well_conditioned(X: np.ndarray, floor: float = 1e-8) -> bool:
    sv = np.linalg.svd(X, compute_uv=False)
    return sv[0] > 0 and sv[-1] > floor * sv[0]


def equivalent(d1: MonodromyDatum, d2: MonodromyDatum, trials: int = 64, seed: int = 0,
               tol: float = NUMERIC_TOL) -> EquivalenceVerdict:
    """Decide whether two data are conjugate under ``C_G(A) x| U_N(S)``.

    Residues are aligned by a conjugation first.  The witness ``X`` satisfies
    ``X (g M'_1 g^-1) X^-1 = M'_2`` where ``g`` is the alignment.
    """
    align = conjugacy_test(d1.A, d2.A, tol=DEFAULT_TOL, seed=seed)
    if not align:
        return EquivalenceVerdict("inequivalent-certified", reason="residues are not conjugate")
    g0 = align.witness
    A = d2.A
    M1 = g0 @ d1.local_monodromy @ np.linalg.inv(g0)
    M2 = d2.local_monodromy
    scale = max(1.0, norm2(M2))

    if norm2(M1 - M2) <= tol * scale:
        return EquivalenceVerdict("equivalent", np.eye(d2.n, dtype=complex), g0,
                                  norm2(M1 - M2) / scale, reason="local monodromies coincide")

    V = intertwiner_algebra(A, DEFAULT_TOL).basis
    n = d2.n
    if V:
        K = np.stack([(B @ M1 - M2 @ B).ravel() for B in V], axis=1)
        _, sv, Vh = np.linalg.svd(K)
        sv_full = np.concatenate([sv, np.zeros(len(V) - len(sv))])
        null = np.flatnonzero(sv_full <= tol * scale * max(1.0, max(norm2(B) for B in V)))
        coeff_basis = [Vh[k].conj() for k in null]
    else:
        coeff_basis = []
    W = [sum(c * B for c, B in zip(cv, V)) for cv in coeff_basis]

    def attempt(weights):
        X = sum(a * Wr for a, Wr in zip(weights, W))
        if not _well_conditioned(X):
            return None
        res = _conj_residual(X, M1, M2)
        return (X, res) if res < tol else None

    if W:
        rng = np.random.default_rng(seed)
        for _ in range(trials):
            found = attempt(rng.standard_normal(len(W)) + 1j * rng.standard_normal(len(W)))
            if found:
                return EquivalenceVerdict("equivalent", found[0], g0, found[1], len(W), "random draw")
        # deterministic grid: the determinant polynomial has degree n, so a
        # grid with n + 1 values per coordinate detects a nonzero polynomial
        values = range(n + 1)
        for pt in itertools.islice(itertools.product(values, repeat=len(W)), 20000):
            found = attempt(np.array(pt, dtype=complex))
            if found:
                return EquivalenceVerdict("equivalent", found[0], g0, found[1], len(W), "grid point")

    inv1 = datum_invariants(d1, tol)
    inv2 = datum_invariants(d2, tol)
    if not inv1.matches(inv2, tol):
        return EquivalenceVerdict("inequivalent-certified", None, g0, solution_dim=len(W),
                                  reason="invariants differ")
    return EquivalenceVerdict("undecided", None, g0, solution_dim=len(W),
                              reason="no invertible intertwiner found but invariants agree")


# --------------------------------------------------------------------------
# generators


def _random_complex(rng, shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def random_valid_datum(n: int, rng: np.random.Generator, max_weight: int = 3, cosets: Optional[int] = None,
                       frame: bool = True) -> MonodromyDatum:
    """A random valid datum with integer eigenvalue offsets up to ``max_weight``.

    Built in a basis where ``S`` is diagonal and ``N'`` is strictly upper
    triangular with non-negative integer weights, then moved to a random frame
    and a random ``h``.
    """
    cosets = cosets if cosets is not None else int(rng.integers(1, n + 1))
    reps = [complex(rng.uniform(-0.45, 0.45), rng.uniform(-0.5, 0.5)) + 0.1 * c for c in range(cosets)]
    labels = sorted([(int(rng.integers(0, cosets)), int(rng.integers(0, max_weight + 1))) for _ in range(n)],
                    key=lambda p: (p[0], -p[1]))
    lam = np.array([reps[c] + o for c, o in labels])
    Np = np.zeros((n, n), complex)
    for i in range(n):
        for j in range(i + 1, n):
            if labels[i][0] == labels[j][0] and rng.uniform() < 0.7:
                Np[i, j] = complex(rng.normal(), rng.normal())
    S = np.diag(lam)
    w0 = np.array([[Np[i, j] if lam[i] == lam[j] else 0 for j in range(n)] for i in range(n)])
    A = S + w0
    Mp = mat_exp(TWO_PI_I * S) @ mat_exp(TWO_PI_I * Np)
    if frame:
        Q = _random_complex(rng, (n, n)) + 2 * np.eye(n)
        A = Q @ A @ np.linalg.inv(Q)
        Mp = Q @ Mp @ np.linalg.inv(Q)
        h = _random_complex(rng, (n, n)) + 2 * np.eye(n)
    else:
        h = np.eye(n, dtype=complex)
    return MonodromyDatum(M=h @ Mp @ np.linalg.inv(h), h=h, A=A)


def random_group_element(A, rng: np.random.Generator, size: float = 0.5) -> np.ndarray:
    """``exp`` of a random element of ``V(A)``; lands in ``C_G(A) x| U_N(S)``."""
    V = intertwiner_algebra(A, DEFAULT_TOL).basis
    X = sum(complex(rng.normal(), rng.normal()) * B for B in V)
    X = X * (size / max(norm2(X), 1e-300))
    return mat_exp(X)


def act(d: MonodromyDatum, g) -> MonodromyDatum:
    """Conjugate the local monodromy by ``g`` (``g`` in ``C_G(A) x| U_N(S)``), keeping ``M`` and ``A``."""
    g = np.asarray(g, dtype=complex)
    return MonodromyDatum(M=d.M, h=d.h @ np.linalg.inv(g), A=d.A)
