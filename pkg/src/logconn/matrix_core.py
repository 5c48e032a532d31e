"""Dense complex matrix algebra with tolerance-aware spectral decomposition.

The central routine is :func:`spectral_decompose`, which clusters eigenvalues
and returns spectral projectors onto the generalized eigenspaces.  Everything
downstream (Jordan-Chevalley parts, weight gradings, conjugacy tests) is built
from its output.

Clustering works on the complex Schur form.  A group of computed eigenvalues
is accepted as a single eigenvalue when the perturbation needed to coalesce it
is below ``tol * max(1, ||M||)``.  The perturbation is estimated from the
restricted triangular block ``D = T_G - mu I`` as ``2 ||D^m|| / ||D||^(m-1)``:
for a roundoff-split Jordan block this is the size of the roundoff, for two
honest eigenvalues ``d`` apart it is ``d``.  Groups are split top-down along
the longest edge of their minimum spanning tree.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np
import scipy.linalg as sla
from scipy.linalg import lapack

from .errors import ClusterAmbiguity, NonFinite, NotUnipotent

DEFAULT_TOL = 1e-9

# Tolerance used when comparing matrices that came out of ODE integration.
NUMERIC_TOL = 1e-6


def as_matrix(M, name: str = "matrix") -> np.ndarray:
    """Return ``M`` as a square complex128 array, rejecting NaN/inf."""
    A = np.array(M, dtype=np.complex128)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] == 0:
        raise ValueError(f"{name} must be a non-empty square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise NonFinite(f"{name} has non-finite entries")
    return A


def norm2(A: np.ndarray) -> float:
    return float(np.linalg.norm(A, 2)) if A.size else 0.0


def scale_of(*mats: np.ndarray) -> float:
    return max([1.0] + [norm2(M) for M in mats])


def commutator(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    return X @ Y - Y @ X


@dataclass(frozen=True)
class SpectralData:
    """Clustered spectrum of a matrix with its spectral projectors.

    ``bases[k] = (V, W)`` spans the k-th generalized eigenspace: ``V`` is n x m,
    ``W`` is m x n, ``W V = I`` and ``projectors[k] = V W``.  The restricted
    operator ``W M V`` is ``blocks[k]``.
    """

    eigenvalues: tuple
    multiplicities: tuple
    projectors: tuple
    bases: tuple
    blocks: tuple
    tol: float

    @property
    def n(self) -> int:
        return self.projectors[0].shape[0]

    def __len__(self) -> int:
        return len(self.eigenvalues)

    def semisimple_part(self) -> np.ndarray:
        S = np.zeros((self.n, self.n), dtype=np.complex128)
        for lam, P in zip(self.eigenvalues, self.projectors):
            S += lam * P
        return S

    def apply(self, f) -> np.ndarray:
        """Return ``sum_k f(lambda_k) P_k``."""
        out = np.zeros((self.n, self.n), dtype=np.complex128)
        for lam, P in zip(self.eigenvalues, self.projectors):
            out += f(lam) * P
        return out

    def eigenframe(self) -> tuple:
        """Concatenated bases ``(V, W)`` with ``W = V^{-1}``."""
        V = np.hstack([b[0] for b in self.bases])
        W = np.vstack([b[1] for b in self.bases])
        return V, W


def _reorder_to_top(T: np.ndarray, Z: np.ndarray, select: np.ndarray):
    if select.all() or not select.any():
        return T, Z
    ts, qs, _w, _m, _s, _sep, info = lapack.ztrsen(
        select.astype(np.int32), T, Z, job="N"
    )
    if info != 0:
        raise ClusterAmbiguity(f"Schur reordering failed (ztrsen info={info})")
    return ts, qs


def _coalescence_gap(T: np.ndarray, Z: np.ndarray, group: Sequence[int]) -> float:
    """Perturbation size needed to merge ``group`` into one eigenvalue."""
    m = len(group)
    if m == 1:
        return 0.0
    select = np.zeros(T.shape[0], dtype=bool)
    select[list(group)] = True
    Ts, _ = _reorder_to_top(T, Z, select)
    B = Ts[:m, :m]
    mu = np.trace(B) / m
    D = B - mu * np.eye(m)
    nD = norm2(D)
    if nD == 0.0:
        return 0.0
    Dm = np.linalg.matrix_power(D / nD, m)
    return 2.0 * nD * norm2(Dm)


def _split_longest_edge(points: np.ndarray, group: list) -> tuple:
    """Split ``group`` in two by cutting the longest minimum-spanning-tree edge."""
    k = len(group)
    z = points[group]
    dist = np.abs(z[:, None] - z[None, :])
    in_tree = np.zeros(k, dtype=bool)
    in_tree[0] = True
    best = dist[0].copy()
    parent = np.zeros(k, dtype=int)
    edges = []
    for _ in range(k - 1):
        cand = np.where(in_tree, np.inf, best)
        j = int(np.argmin(cand))
        edges.append((float(cand[j]), int(parent[j]), j))
        in_tree[j] = True
        closer = dist[j] < best
        best = np.where(closer, dist[j], best)
        parent = np.where(closer, j, parent)
    edges.sort(key=lambda e: e[0])
    edges.pop()  # longest
    # union-find over the remaining edges
    root = list(range(k))

    def find(a):
        while root[a] != a:
            root[a] = root[root[a]]
            a = root[a]
        return a

    for _, a, b in edges:
        root[find(a)] = find(b)
    r0 = find(0)
    left = [group[i] for i in range(k) if find(i) == r0]
    right = [group[i] for i in range(k) if find(i) != r0]
    return left, right


def _cluster_schur(T: np.ndarray, Z: np.ndarray, tol: float, scale: float) -> list:
    raw = np.diag(T).copy()
    out = []
    stack = [list(range(T.shape[0]))]
    while stack:
        group = stack.pop()
        gap = _coalescence_gap(T, Z, group)
        if gap <= tol * scale:
            out.append(group)
            continue
        if gap <= 2.0 * tol * scale:
            vals = ", ".join(f"{v:.6g}" for v in raw[group])
            raise ClusterAmbiguity(
                f"eigenvalues {{{vals}}} are {gap:.3e} from coalescing, inside the "
                f"refusal band ({tol * scale:.1e}, {2 * tol * scale:.1e}]"
            )
        stack.extend(_split_longest_edge(raw, group))
    return out


def _block_diagonalize(T: np.ndarray, sizes: Sequence[int]):
    """Return ``Y, Yinv`` with ``Yinv T Y`` block diagonal (blocks of ``sizes``)."""
    n = T.shape[0]
    if len(sizes) == 1:
        return np.eye(n, dtype=T.dtype), np.eye(n, dtype=T.dtype)
    m = sizes[0]
    A, C, B = T[:m, :m], T[:m, m:], T[m:, m:]
    # A X - X B = -C
    X = sla.solve_sylvester(A, -B, -C)
    YB, YBinv = _block_diagonalize(B, sizes[1:])
    Y = np.eye(n, dtype=T.dtype)
    Y[:m, m:] = X @ YB
    Y[m:, m:] = YB
    Yinv = np.eye(n, dtype=T.dtype)
    Yinv[:m, m:] = -X
    Yinv[m:, m:] = YBinv
    return Y, Yinv


def spectral_decompose(M, tol: float = DEFAULT_TOL) -> SpectralData:
    """Cluster the spectrum of ``M`` and build spectral projectors.

    Parameters
    ----------
    M
        Square complex matrix.
    tol
        Clustering radius, relative to ``max(1, ||M||_2)``.

    Raises
    ------
    ClusterAmbiguity
        If a group of eigenvalues is between ``tol`` and ``2 tol`` away from
        coalescing, so neither merging nor separating it is trustworthy.
    NonFinite
        On NaN/inf input.
    """
    M = as_matrix(M)
    if tol <= 0:
        raise ValueError("tol must be positive")
    T, Z = sla.schur(M, output="complex")
    groups = _cluster_schur(T, Z, tol, scale_of(M))

    raw = np.diag(T)
    means = [complex(np.mean(raw[g])) for g in groups]
    order = sorted(range(len(groups)), key=lambda k: (round(means[k].real, 12), round(means[k].imag, 12)))
    return _spectral_from_groups(T, Z, [groups[k] for k in order], tol)


def spectral_decompose_at(M, anchors: Sequence[complex], tol: float = DEFAULT_TOL) -> SpectralData:
    """Spectral data of ``M`` when its eigenvalues are known to be ``anchors``.

    Each Schur eigenvalue goes to the nearest anchor, so no clustering
    decision is made; defective eigenvalues of an ill-conditioned matrix,
    which split by roughly ``eps^(1/k)``, still land in one block.  The
    reported eigenvalues are the anchors themselves.  Anchors that receive
    no eigenvalue are dropped.
    """
    M = as_matrix(M)
    mus: list = []
    for mu in anchors:
        mu = complex(mu)
        if all(abs(mu - v) > tol * max(1.0, abs(v)) for v in mus):
            mus.append(mu)
    if not mus:
        raise ValueError("need at least one anchor")
    T, Z = sla.schur(M, output="complex")
    raw = np.diag(T)
    nearest = np.argmin(np.abs(raw[:, None] - np.asarray(mus)[None, :]), axis=1)
    keep = [k for k in range(len(mus)) if np.any(nearest == k)]
    groups = [list(np.flatnonzero(nearest == k)) for k in keep]
    sd = _spectral_from_groups(T, Z, groups, tol)
    return replace(sd, eigenvalues=tuple(mus[k] for k in keep))


def _spectral_from_groups(T: np.ndarray, Z: np.ndarray, groups: list, tol: float) -> SpectralData:
    n = T.shape[0]
    labels = np.empty(n, dtype=int)
    for k, g in enumerate(groups):
        labels[g] = k
    for k in range(len(groups) - 1):
        select = labels <= k
        T, Z = _reorder_to_top(T, Z, select)
        labels = np.concatenate([labels[select], labels[~select]])

    sizes = [len(g) for g in groups]
    Y, Yinv = _block_diagonalize(T, sizes)
    F = Z @ Y
    Finv = Yinv @ Z.conj().T
    D = Yinv @ T @ Y

    eigenvalues, projectors, bases, blocks = [], [], [], []
    start = 0
    for m in sizes:
        sl = slice(start, start + m)
        V, W = F[:, sl], Finv[sl, :]
        B = D[sl, sl]
        eigenvalues.append(complex(np.trace(B) / m))
        projectors.append(V @ W)
        bases.append((V, W))
        blocks.append(B)
        start += m
    return SpectralData(
        eigenvalues=tuple(eigenvalues),
        multiplicities=tuple(sizes),
        projectors=tuple(projectors),
        bases=tuple(bases),
        blocks=tuple(blocks),
        tol=tol,
    )


def mat_exp(X) -> np.ndarray:
    """Matrix exponential (scaling and squaring via :func:`scipy.linalg.expm`)."""
    X = as_matrix(X)
    with np.errstate(over="ignore", invalid="ignore"):
        E = sla.expm(X)
    if not np.all(np.isfinite(E)):
        raise NonFinite("matrix exponential overflowed")
    return E


def nilpotent_log(U, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Logarithm of a unipotent matrix as the terminating Mercator series.

    ``log U = sum_{k=1}^{n-1} (-1)^{k+1} (U - I)^k / k``.
    """
    U = as_matrix(U)
    n = U.shape[0]
    D = U - np.eye(n)
    s = max(1.0, norm2(D))
    if norm2(np.linalg.matrix_power(D / s, n)) > tol:
        raise NotUnipotent("U - I is not nilpotent within tolerance")
    out = np.zeros_like(D)
    P = np.eye(n, dtype=np.complex128)
    for k in range(1, n):
        P = P @ D
        out += ((-1) ** (k + 1) / k) * P
    return out


def rank_sequence(N: np.ndarray, tol: float, scale: float) -> tuple:
    """Numerical ranks of ``N, N^2, ..., N^m`` (``m = N.shape[0]``)."""
    m = N.shape[0]
    ranks = []
    P = np.eye(m, dtype=np.complex128)
    for j in range(1, m + 1):
        P = P @ (N / scale)
        sv = np.linalg.svd(P, compute_uv=False)
        ranks.append(int(np.sum(sv > tol)))
    return tuple(ranks)


def weyr_characteristic(ranks: Sequence[int], m: int) -> tuple:
    """Weyr characteristic ``w_j = r_{j-1} - r_j`` from a rank sequence (``r_0 = m``)."""
    r = [m] + list(ranks)
    return tuple(r[j - 1] - r[j] for j in range(1, len(r)) if r[j - 1] - r[j] > 0)


def jordan_profile(M, tol: float = DEFAULT_TOL, spectral: Optional[SpectralData] = None) -> list:
    """Per-eigenvalue ``(eigenvalue, multiplicity, rank_sequence)`` records."""
    M = as_matrix(M)
    sd = spectral if spectral is not None else spectral_decompose(M, tol)
    scale = scale_of(M)
    out = []
    for lam, m, B in zip(sd.eigenvalues, sd.multiplicities, sd.blocks):
        N = B - lam * np.eye(m)
        out.append((lam, m, rank_sequence(N, tol, scale)))
    return out


def anchored_profile(M, anchors: Sequence[complex], tol: float = DEFAULT_TOL) -> list:
    """:func:`jordan_profile` with eigenvalues assigned to known ``anchors``."""
    return jordan_profile(M, tol, spectral=spectral_decompose_at(M, anchors, tol))


@dataclass(frozen=True)
class ConjugacyResult:
    same_class: bool
    witness: Optional[np.ndarray]
    residual: float
    reason: str = ""

    def __bool__(self) -> bool:
        return self.same_class


def _match_profiles(p1: list, p2: list, tol: float, scale: float):
    if len(p1) != len(p2):
        return None, "different number of distinct eigenvalues"
    used = set()
    pairs = []
    for lam, m, r in p1:
        best, bestd = None, np.inf
        for j, (mu, _, _) in enumerate(p2):
            if j not in used and abs(lam - mu) < bestd:
                best, bestd = j, abs(lam - mu)
        if best is None or bestd > tol * scale:
            return None, f"eigenvalue {lam:.6g} has no partner within tol"
        used.add(best)
        mu, m2, r2 = p2[best]
        if m != m2:
            return None, f"multiplicity of {lam:.6g} differs ({m} vs {m2})"
        if tuple(r) != tuple(r2):
            return None, f"Jordan structure at {lam:.6g} differs (ranks {r} vs {r2})"
        pairs.append(((lam, m, r), (mu, m2, r2)))
    return pairs, ""


def intertwiner_space(M1: np.ndarray, M2: np.ndarray, dim: Optional[int] = None, tol: float = DEFAULT_TOL):
    """Basis of ``{g : g M1 = M2 g}`` as a list of matrices.

    If ``dim`` is given, the ``dim`` right singular vectors with the smallest
    singular values are returned; otherwise a numerical null space at ``tol``.
    """
    n = M1.shape[0]
    I = np.eye(n)
    K = np.kron(M1.T, I) - np.kron(I, M2)
    _, sv, Vh = np.linalg.svd(K)
    if dim is None:
        dim = int(np.sum(sv <= tol * scale_of(M1, M2)))
    vecs = Vh[n * n - dim:].conj()
    return [v.reshape((n, n), order="F") for v in vecs]


def conjugacy_test(M1, M2, tol: float = DEFAULT_TOL, seed: int = 0, draws: int = 16,
                   anchors: Optional[Sequence[complex]] = None) -> ConjugacyResult:
    """Decide whether ``M1`` and ``M2`` are conjugate and find ``g`` with ``g M1 g^-1 = M2``.

    The verdict compares clustered spectra and, per eigenvalue, the rank
    sequences of ``(M - lambda I)^k`` restricted to the generalized eigenspace.
    When the common spectrum is known in advance, pass it as ``anchors`` to
    skip clustering (see :func:`spectral_decompose_at`).  The witness is a seeded random element of the (linear) intertwiner space.
    """
    M1 = as_matrix(M1, "M1")
    M2 = as_matrix(M2, "M2")
    if M1.shape != M2.shape:
        return ConjugacyResult(False, None, np.inf, "dimension mismatch")
    n = M1.shape[0]
    scale = scale_of(M1, M2)
    if norm2(M1 - M2) <= tol * scale:
        return ConjugacyResult(True, np.eye(n, dtype=np.complex128), norm2(M1 - M2) / scale)
    if anchors is not None:
        p1, p2 = [], []
        for Mk, prof in ((M1, p1), (M2, p2)):
            sd = spectral_decompose_at(Mk, anchors, tol)
            for mu, m, B in zip(sd.eigenvalues, sd.multiplicities, sd.blocks):
                # the block mean is accurate even when a defective eigenvalue splits
                if abs(np.trace(B) / m - mu) > tol * scale:
                    return ConjugacyResult(False, None, np.inf, f"spectrum is not on the anchors (near {mu:.6g})")
            prof.extend(jordan_profile(Mk, tol, spectral=sd))
    else:
        p1 = jordan_profile(M1, tol)
        p2 = jordan_profile(M2, tol)
    pairs, reason = _match_profiles(p1, p2, tol, scale)
    if pairs is None:
        return ConjugacyResult(False, None, np.inf, reason)

    dim = 0
    for (_, m, r), _ in pairs:
        dim += sum(w * w for w in weyr_characteristic(r, m))
    basis = intertwiner_space(M1, M2, dim=dim)
    rng = np.random.default_rng(seed)
    best_g, best_res = None, np.inf
    for _ in range(draws):
        c = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
        g = sum(ci * Bi for ci, Bi in zip(c, basis))
        sv = np.linalg.svd(g, compute_uv=False)
        if sv[-1] <= 1e-8 * sv[0]:
            continue
        g = g / sv[0]
        res = norm2(g @ M1 - M2 @ g) / max(norm2(M2 @ g), np.finfo(float).tiny)
        if res < best_res:
            best_g, best_res = g, res
        if res < tol:
            break
    if best_g is None or best_res >= tol:
        return ConjugacyResult(True, best_g, best_res, "class invariants agree; witness residual above tol")
    return ConjugacyResult(True, best_g, best_res)
