"""The ad(S)-weight decomposition of gl(n) and the subgroups it defines.

For semisimple ``S`` with spectral projectors ``P_i`` (eigenvalues ``l_i``)
every matrix splits as ``X = sum_{i,j} P_i X P_j`` and the ``(i, j)`` piece
has ad(S)-weight ``l_i - l_j``.  Resonance algebra, parabolic and unipotent
radical, the Levi projection ``chi`` and the group-membership tests are all
statements about which weights a matrix is supported on.

All bases are returned in the caller's coordinates; the eigenbasis is only
used internally.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ClusterAmbiguity, NotInParabolic, NotRealSemisimple, NotSemisimple, Singular
from .matrix_core import (
    DEFAULT_TOL,
    SpectralData,
    as_matrix,
    commutator,
    mat_exp,
    norm2,
    scale_of,
    spectral_decompose,
)

TWO_PI_I = 2j * np.pi

# group labels accepted by membership()
C_S = "C(S)"
C_EXP = "C(exp 2piiS)"
P_A = "P(a)"
U_A = "U(a)"
CU_N = "CU_N(S)"
GROUPS = (C_S, C_EXP, P_A, U_A, CU_N)


def nearest_integer(w: complex, tol: float) -> Optional[int]:
    """Return ``k`` if ``w`` is within ``tol`` of the integer ``k``, else ``None``.

    Raises ClusterAmbiguity if the distance to the nearest integer lies in
    ``(tol, 2 tol]``.
    """
    k = int(round(w.real))
    d = abs(w - k)
    if d <= tol:
        return k
    if d <= 2 * tol:
        raise ClusterAmbiguity(f"weight {w:.12g} is {d:.3e} from the integer {k}")
    return None


@dataclass(frozen=True)
class WeightGrading:
    """Weight decomposition of gl(n) under ad(S).

    ``pairs[k]`` lists the ``(i, j)`` eigenspace pairs whose difference
    ``l_i - l_j`` clusters at ``weights[k]``.
    """

    S: np.ndarray
    spectral: SpectralData
    weights: tuple
    pairs: tuple
    tol: float

    @property
    def eigenvalues(self) -> tuple:
        return self.spectral.eigenvalues

    @property
    def n(self) -> int:
        return self.S.shape[0]

    def block(self, X: np.ndarray, i: int, j: int) -> np.ndarray:
        return self.spectral.projectors[i] @ X @ self.spectral.projectors[j]

    def weight_component(self, X, w) -> np.ndarray:
        """Component of ``X`` at weight ``w`` (zero if ``w`` is not a weight)."""
        X = np.asarray(X, dtype=np.complex128)
        k = self.index_of(w)
        if k is None:
            return np.zeros_like(X)
        return sum(self.block(X, i, j) for i, j in self.pairs[k])

    def components(self, X) -> dict:
        X = np.asarray(X, dtype=np.complex128)
        return {w: sum(self.block(X, i, j) for i, j in prs) for w, prs in zip(self.weights, self.pairs)}

    def index_of(self, w) -> Optional[int]:
        s = self._scale
        for k, wk in enumerate(self.weights):
            if abs(wk - w) <= self.tol * s:
                return k
        return None

    def integer_weight(self, k: int) -> Optional[int]:
        return nearest_integer(self.weights[k], self.tol * self._scale)

    @property
    def _scale(self) -> float:
        return scale_of(self.S)

    def support_split(self, X, allowed) -> tuple:
        """Split ``X`` into (allowed part, forbidden part) by a predicate on weight index."""
        X = np.asarray(X, dtype=np.complex128)
        ok = np.zeros_like(X)
        bad = np.zeros_like(X)
        for k, prs in enumerate(self.pairs):
            part = sum(self.block(X, i, j) for i, j in prs)
            if allowed(k):
                ok += part
            else:
                bad += part
        return ok, bad

    def pair_basis(self, pair_filter) -> list:
        """Elementary matrices ``v_a w_b`` for eigenspace pairs accepted by ``pair_filter``."""
        out = []
        for k, prs in enumerate(self.pairs):
            for i, j in prs:
                if not pair_filter(k, i, j):
                    continue
                Vi = self.spectral.bases[i][0]
                Wj = self.spectral.bases[j][1]
                for a in range(Vi.shape[1]):
                    for b in range(Wj.shape[0]):
                        out.append(np.outer(Vi[:, a], Wj[b, :]))
        return out

    def is_zero_weight(self, k: int) -> bool:
        return abs(self.weights[k]) <= self.tol * self._scale

    def is_positive_integer(self, k: int) -> bool:
        m = self.integer_weight(k)
        return m is not None and m >= 1


def _cluster_weights(diffs: dict, tol: float) -> tuple:
    keys = list(diffs)
    vals = np.array([diffs[k] for k in keys])
    # single linkage on the complex differences
    order = np.argsort(vals.real + 1e-3 * vals.imag, kind="stable")
    labels = -np.ones(len(keys), dtype=int)
    clusters = []
    for idx in order:
        v = vals[idx]
        hit = None
        for c, members in enumerate(clusters):
            d = min(abs(v - vals[m]) for m in members)
            if d <= tol:
                hit = c if hit is None else hit
            elif d <= 2 * tol:
                raise ClusterAmbiguity(f"weights {v:.12g} and {vals[members[0]]:.12g} are {d:.3e} apart")
        if hit is None:
            clusters.append([idx])
            labels[idx] = len(clusters) - 1
        else:
            clusters[hit].append(idx)
            labels[idx] = hit
    weights, pairs = [], []
    for members in clusters:
        w = complex(np.mean(vals[members]))
        if abs(w) <= tol:
            w = 0j
        weights.append(w)
        pairs.append(tuple(sorted(keys[m] for m in members)))
    order = sorted(range(len(weights)), key=lambda k: (round(weights[k].real, 9), round(weights[k].imag, 9)))
    return tuple(weights[k] for k in order), tuple(pairs[k] for k in order)


def grade(S, tol: float = DEFAULT_TOL) -> WeightGrading:
    """Weight decomposition of gl(n) under ad(S) for a semisimple ``S``.

    Raises
    ------
    NotSemisimple
        If ``S`` has a nilpotent part above tolerance.
    ClusterAmbiguity
        If two eigenvalue differences are ambiguously close.
    """
    S = as_matrix(S, "S")
    sd = spectral_decompose(S, tol)
    scale = scale_of(S)
    resid = norm2(S - sd.semisimple_part())
    if resid > tol * scale:
        raise NotSemisimple(f"S has nilpotent part of norm {resid:.3e}")
    K = len(sd.eigenvalues)
    diffs = {(i, j): sd.eigenvalues[i] - sd.eigenvalues[j] for i in range(K) for j in range(K)}
    weights, pairs = _cluster_weights(diffs, tol * scale)
    return WeightGrading(S=S, spectral=sd, weights=weights, pairs=pairs, tol=tol)


@dataclass(frozen=True)
class SubalgebraBasis:
    basis: tuple
    label: str
    parts: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return len(self.basis)

    def matrix(self) -> np.ndarray:
        """``n^2 x dim`` matrix whose columns are the flattened basis elements."""
        if not self.basis:
            return np.zeros((0, 0), dtype=np.complex128)
        return np.stack([B.ravel() for B in self.basis], axis=1)

    def distance(self, X) -> float:
        """Frobenius distance from ``X`` to the span, relative to ``max(1, ||X||)``."""
        X = np.asarray(X, dtype=np.complex128)
        nx = max(1.0, float(np.linalg.norm(X)))
        if not self.basis:
            return float(np.linalg.norm(X)) / nx
        B = self.matrix()
        coef, *_ = np.linalg.lstsq(B, X.ravel(), rcond=None)
        return float(np.linalg.norm(B @ coef - X.ravel())) / nx

    def rank(self, tol: float = 1e-10) -> int:
        if not self.basis:
            return 0
        sv = np.linalg.svd(self.matrix(), compute_uv=False)
        return int(np.sum(sv > tol * sv[0]))


def resonance_basis(S, tol: float = DEFAULT_TOL, grading: Optional[WeightGrading] = None):
    """Basis of u_N(S), the span of weight spaces at positive integer weights.

    Returns ``(SubalgebraBasis, resonant)`` where ``resonant`` says whether the
    basis is non-empty.
    """
    g = grading if grading is not None else grade(S, tol)
    basis = g.pair_basis(lambda k, i, j: g.is_positive_integer(k))
    return SubalgebraBasis(tuple(basis), "u_N(S)"), bool(basis)


def parabolic_data(a, tol: float = DEFAULT_TOL, grading: Optional[WeightGrading] = None):
    """Bases of Lie P(a) (real weights >= 0) and Lie U(a) (real weights > 0)."""
    g = grading if grading is not None else grade(a, tol)
    s = scale_of(g.S)
    for lam in g.eigenvalues:
        if abs(lam.imag) > tol * s:
            raise NotRealSemisimple(f"eigenvalue {lam:.6g} is not real")
    P = g.pair_basis(lambda k, i, j: g.is_zero_weight(k) or g.weights[k].real > 0)
    U = g.pair_basis(lambda k, i, j: not g.is_zero_weight(k) and g.weights[k].real > 0)
    return SubalgebraBasis(tuple(P), "Lie P(a)"), SubalgebraBasis(tuple(U), "Lie U(a)")


def _allowed_predicate(g: WeightGrading, group: str):
    if group == CU_N:
        return lambda k: g.is_zero_weight(k) or g.is_positive_integer(k)
    if group in (P_A, U_A):
        return lambda k: g.is_zero_weight(k) or g.weights[k].real > g.tol * g._scale
    raise ValueError(f"no weight-support rule for group {group!r}")


def membership(S_or_a, M, group: str, tol: float = DEFAULT_TOL, grading: Optional[WeightGrading] = None):
    """Test whether ``M`` lies in one of the groups attached to ``S`` (or ``a``).

    Returns ``(is_member, residual)``; the residual is the quantity compared to
    ``tol``, normalized by ``max(1, ||M||)`` (and by ``||S||`` for commutators).
    """
    M = as_matrix(M, "M")
    X = as_matrix(S_or_a, "S")
    sM = scale_of(M)
    if group == C_S:
        res = norm2(commutator(M, X)) / (sM * scale_of(X))
        return res <= tol, res
    if group == C_EXP:
        E = mat_exp(TWO_PI_I * X)
        res = norm2(commutator(M, E)) / (sM * scale_of(E))
        return res <= tol, res
    if group not in GROUPS:
        raise ValueError(f"unknown group {group!r}; expected one of {GROUPS}")
    g = grading if grading is not None else grade(X, tol)
    if group in (P_A, U_A):
        s = scale_of(g.S)
        if any(abs(lam.imag) > tol * s for lam in g.eigenvalues):
            raise NotRealSemisimple("P(a) and U(a) need a real-semisimple a")
    ok, bad = g.support_split(M, _allowed_predicate(g, group))
    res = norm2(bad) / sM
    if group == U_A:
        zero = g.weight_component(M, 0)
        res = max(res, norm2(zero - np.eye(M.shape[0])) / sM)
    return res <= tol, res


def chi(S_or_a, M, tol: float = DEFAULT_TOL, group: str = CU_N, grading: Optional[WeightGrading] = None) -> np.ndarray:
    """Levi projection: the weight-zero component of ``M``.

    ``group`` selects the support rule checked first: ``CU_N(S)`` (weights in
    {0, 1, 2, ...}) or ``P(a)`` (weights with non-negative real part).

    Raises
    ------
    NotInParabolic
        If ``M`` has forbidden weight components above tolerance.
    """
    g = grading if grading is not None else grade(S_or_a, tol)
    ok, res = membership(g.S, M, group, tol, grading=g)
    if not ok:
        raise NotInParabolic(f"M has forbidden weight components (residual {res:.3e})")
    return g.weight_component(as_matrix(M), 0)


def centralizer_basis(A, tol: float = DEFAULT_TOL) -> list:
    """Orthonormal (Frobenius) basis of ``{X : XA = AX}``."""
    A = as_matrix(A, "A")
    n = A.shape[0]
    I = np.eye(n)
    K = np.kron(A.T, I) - np.kron(I, A)
    _, sv, Vh = np.linalg.svd(K)
    null = int(np.sum(sv <= tol * scale_of(A)))
    return [v.conj().reshape((n, n), order="F") for v in Vh[n * n - null:]]


def intertwiner_algebra(A, tol: float = DEFAULT_TOL) -> SubalgebraBasis:
    """The associative algebra V(A) = c(A) + u_N(S), with ``S`` the semisimple part of ``A``.

    Its invertible elements form the group ``C_G(A) x| U_N(S)``.
    """
    from .jordan import additive_jc

    A = as_matrix(A, "A")
    S = additive_jc(A, tol).S
    c = centralizer_basis(A, tol)
    u, _ = resonance_basis(S, tol)
    basis = tuple(c) + u.basis
    return SubalgebraBasis(basis, "V(A)", parts={"c(A)": tuple(c), "u_N(S)": u.basis})


def product_closure_residual(alg: SubalgebraBasis) -> float:
    """Largest relative distance from ``B_i B_j`` to the span, over all basis pairs."""
    worst = 0.0
    for Bi in alg.basis:
        for Bj in alg.basis:
            worst = max(worst, alg.distance(Bi @ Bj))
    return worst


def bracket_closure_residual(alg: SubalgebraBasis) -> float:
    worst = 0.0
    for Bi in alg.basis:
        for Bj in alg.basis:
            worst = max(worst, alg.distance(commutator(Bi, Bj)))
    return worst


def strict_reduction_predicate(h, Ms, S, tol: float = DEFAULT_TOL) -> bool:
    """Whether ``h^-1 Ms h = exp(2 pi i S)`` within ``tol * ||Ms||``."""
    return strict_reduction_residual(h, Ms, S, tol) <= tol


def strict_reduction_residual(h, Ms, S, tol: float = DEFAULT_TOL) -> float:
    h = as_matrix(h, "h")
    Ms = as_matrix(Ms, "Ms")
    sv = np.linalg.svd(h, compute_uv=False)
    if sv[-1] <= tol * sv[0]:
        raise Singular("h is singular within tolerance")
    lhs = np.linalg.solve(h, Ms @ h)
    return norm2(lhs - mat_exp(TWO_PI_I * as_matrix(S, "S"))) / max(norm2(Ms), np.finfo(float).tiny)
