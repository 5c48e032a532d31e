"""The trivialized generalized monodromy datum ``(M, h, A)``."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .matrix_core import as_matrix


@dataclass(frozen=True)
class MonodromyDatum:
    """Monodromy ``M``, regularized-transport representative ``h`` and residue ``A``.

    ``h`` stands for the coset ``h U_N(S)``; only ``h^-1 M h`` and ``A`` enter
    the isomorphism class.
    """

    M: np.ndarray
    h: np.ndarray
    A: np.ndarray

    def __post_init__(self):
        for name in ("M", "h", "A"):
            object.__setattr__(self, name, as_matrix(getattr(self, name), name))
        if not (self.M.shape == self.h.shape == self.A.shape):
            raise ValueError("M, h and A must have the same shape")

    @property
    def n(self) -> int:
        return self.M.shape[0]

    @cached_property
    def local_monodromy(self) -> np.ndarray:
        """``h^-1 M h``: the monodromy seen from the residue's frame."""
        return np.linalg.solve(self.h, self.M @ self.h)

    def transformed(self, k, g) -> "MonodromyDatum":
        """Act by the morphism ``(T1, T0) = (k g, g)``."""
        k = as_matrix(k, "k")
        g = as_matrix(g, "g")
        kg = k @ g
        ginv = np.linalg.inv(g)
        return MonodromyDatum(M=kg @ self.M @ np.linalg.inv(kg), h=kg @ self.h @ ginv, A=g @ self.A @ ginv)
