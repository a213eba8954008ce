"""Second-order multivariate Taylor arithmetic for matrix-valued functions.

``Taylor2(v, d1, d2)`` stores the value ``v`` (any shape), the gradient
``d1[..., k]`` and the Hessian ``d2[..., k, l]`` with respect to ``m`` real
variables.  Only the operations needed for the affine-coordinate chain rule
are implemented.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Taylor2:
    v: np.ndarray
    d1: np.ndarray
    d2: np.ndarray

    def __add__(self, other: "Taylor2") -> "Taylor2":
        return Taylor2(self.v + other.v, self.d1 + other.d1, self.d2 + other.d2)

    def __sub__(self, other: "Taylor2") -> "Taylor2":
        return Taylor2(self.v - other.v, self.d1 - other.d1, self.d2 - other.d2)

    def __neg__(self) -> "Taylor2":
        return Taylor2(-self.v, -self.d1, -self.d2)

    def scale(self, s: float) -> "Taylor2":
        return Taylor2(s * self.v, s * self.d1, s * self.d2)

    def __matmul__(self, other: "Taylor2") -> "Taylor2":
        A, B = self, other
        v = A.v @ B.v
        d1 = np.einsum("ijk,jl->ilk", A.d1, B.v) + np.einsum("ij,jlk->ilk", A.v, B.d1)
        cross = np.einsum("ijk,jml->imkl", A.d1, B.d1)
        d2 = (np.einsum("ijkl,jm->imkl", A.d2, B.v) + cross + cross.transpose(0, 1, 3, 2)
              + np.einsum("ij,jmkl->imkl", A.v, B.d2))
        return Taylor2(v, d1, d2)

    def inv(self) -> "Taylor2":
        X = np.linalg.inv(self.v)
        XA1 = np.einsum("ij,jlk->ilk", X, self.d1)          # X A_k
        d1 = -np.einsum("ilk,lm->imk", XA1, X)               # -X A_k X
        XA1X = -d1
        both = np.einsum("ijk,jml->imkl", XA1, XA1X)         # X A_k X A_l X
        d2 = (-np.einsum("ij,jlkm,ln->inkm", X, self.d2, X)
              + both + both.transpose(0, 1, 3, 2))
        return Taylor2(X, d1, d2)

    @property
    def T(self) -> "Taylor2":
        return Taylor2(self.v.T, self.d1.transpose(1, 0, 2), self.d2.transpose(1, 0, 2, 3))


def block(rows: list) -> Taylor2:
    """Assemble a block matrix from a nested list of ``Taylor2`` blocks."""
    v = np.block([[b.v for b in row] for row in rows])
    d1 = np.concatenate([np.concatenate([b.d1 for b in row], axis=1) for row in rows], axis=0)
    d2 = np.concatenate([np.concatenate([b.d2 for b in row], axis=1) for row in rows], axis=0)
    return Taylor2(v, d1, d2)
