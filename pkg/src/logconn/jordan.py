"""Additive and multiplicative Jordan-Chevalley decompositions.

Parts are read off the spectral projectors: ``S = sum lambda_k P_k``.  A
near-defective input whose Jordan couplings fall below the clustering
tolerance comes back with ``N = 0``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import NotSemisimple, Singular
from .matrix_core import (
    DEFAULT_TOL,
    SpectralData,
    as_matrix,
    norm2,
    scale_of,
    spectral_decompose,
    spectral_decompose_at,
)


@dataclass(frozen=True)
class AdditiveJC:
    S: np.ndarray
    N: np.ndarray
    spectral: SpectralData


@dataclass(frozen=True)
class MultiplicativeJC:
    Ms: np.ndarray
    Mu: np.ndarray
    spectral: SpectralData


@dataclass(frozen=True)
class RealImagSplit:
    a: np.ndarray
    b: np.ndarray


def additive_jc(X, tol: float = DEFAULT_TOL) -> AdditiveJC:
    """Split ``X = S + N`` with ``S`` diagonalizable, ``N`` nilpotent, ``[S, N] = 0``."""
    X = as_matrix(X)
    sd = spectral_decompose(X, tol)
    S = sd.semisimple_part()
    return AdditiveJC(S=S, N=X - S, spectral=sd)


def multiplicative_jc(M, tol: float = DEFAULT_TOL, anchors: Optional[Sequence[complex]] = None) -> MultiplicativeJC:
    """Split an invertible ``M = Ms Mu`` into commuting semisimple and unipotent parts.

    ``Mu`` is assembled blockwise as ``sum_k P_k (M / lambda_k)``, which equals
    ``Ms^{-1} M`` without forming the inverse.  If the eigenvalues are known,
    pass them as ``anchors``; eigenvalues are then assigned to the nearest
    anchor instead of clustered.

    Raises
    ------
    Singular
        If a clustered eigenvalue is zero within tolerance.
    """
    M = as_matrix(M)
    sd = spectral_decompose(M, tol) if anchors is None else spectral_decompose_at(M, anchors, tol)
    scale = scale_of(M)
    for lam in sd.eigenvalues:
        if abs(lam) <= tol * scale:
            raise Singular(f"eigenvalue {lam:.3e} is zero within tolerance")
    Ms = sd.semisimple_part()
    Mu = np.zeros_like(M)
    for lam, P in zip(sd.eigenvalues, sd.projectors):
        Mu += (P @ M) / lam
    return MultiplicativeJC(Ms=Ms, Mu=Mu, spectral=sd)


def real_imag_split(S, tol: float = DEFAULT_TOL) -> RealImagSplit:
    """Write a semisimple ``S`` as ``a + i b`` with ``a``, ``b`` real-semisimple and commuting."""
    S = as_matrix(S)
    sd = spectral_decompose(S, tol)
    resid = norm2(S - sd.semisimple_part())
    if resid > tol * scale_of(S):
        raise NotSemisimple(f"nilpotent residual {resid:.3e} exceeds tolerance")
    a = sd.apply(lambda lam: lam.real)
    b = sd.apply(lambda lam: lam.imag)
    return RealImagSplit(a=a, b=b)


def is_semisimple(S, tol: float = DEFAULT_TOL) -> bool:
    S = as_matrix(S)
    jc = additive_jc(S, tol)
    return norm2(jc.N) <= tol * scale_of(S)
