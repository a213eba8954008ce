"""Rigid c-map hyper-Kähler structure on N = T*M and its HK/QK data.

Tangent vectors of N are written in the coordinate basis ``(∂_q, ∂_p)``:
the first ``m = 2n+2`` components are horizontal, the last ``m`` vertical
(covector components).  Two-forms are stored as matrices
``ω[a, b] = ω(e_a, e_b)`` and ``ω_k = g_N(I_k ., .)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .cask import CaskChart, build_chart
from .errors import OneLoopDomainError


@dataclass(frozen=True)
class CmapPoint:
    chart: CaskChart
    p: np.ndarray
    gN: np.ndarray
    gN_inv: np.ndarray
    I1: np.ndarray
    I2: np.ndarray
    I3: np.ndarray
    Z: np.ndarray
    omega1: np.ndarray
    omegaH: np.ndarray
    fZ: float
    fH: float
    Xi: np.ndarray

    @property
    def dim(self) -> int:
        return self.gN.shape[0]

    @property
    def complex_structures(self) -> tuple:
        return (self.I1, self.I2, self.I3)

    def kahler_form(self, k: int) -> np.ndarray:
        """ω_k = g_N(I_k ., .) for k = 1, 2, 3."""
        return self.complex_structures[k - 1].T @ self.gN

    def hz_tuple(self) -> tuple:
        """The ordered quaternionic span (Z, I1 Z, I2 Z, I3 Z)."""
        return (self.Z, self.I1 @ self.Z, self.I2 @ self.Z, self.I3 @ self.Z)

    def to_dict(self) -> dict:
        return {
            "chart": self.chart.to_dict(),
            "p": self.p.tolist(),
            "gN": self.gN.tolist(),
            "I1": self.I1.tolist(),
            "I2": self.I2.tolist(),
            "I3": self.I3.tolist(),
            "Z": self.Z.tolist(),
            "omega1": self.omega1.tolist(),
            "omegaH": self.omegaH.tolist(),
            "fZ": self.fZ,
            "fH": self.fH,
            "Xi": self.Xi.tolist(),
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict())


def _d_iota_Z_gN(chart: CaskChart) -> np.ndarray:
    """Horizontal block of d(ι_Z g_N); vertical components of ι_Z g_N vanish."""
    g, dg, J, dJ, q = chart.g, chart.dg, chart.J, chart.dJ, chart.q
    Zh = -J @ q
    # ∂_a Z^c = -(∂_a J)^c_d q^d - J^c_a
    dZ = -np.einsum("acd,d->ac", dJ, q) - J.T
    # β_b = g_bc Z^c;  ∂_a β_b
    dbeta = np.einsum("abc,c->ab", dg, Zh) + np.einsum("bc,ac->ab", g, dZ)
    return dbeta - dbeta.T


def build_cmap_point(chart: CaskChart, p) -> CmapPoint:
    p = np.asarray(p, dtype=float)
    m = chart.dim
    if p.shape != (m,):
        raise ValueError(f"fiber coordinate must have {m} components")
    zero = np.zeros((m, m))
    g, g_inv, J = chart.g, chart.g_inv, chart.J
    gN = np.block([[g, zero], [zero, g_inv]])
    gN_inv = np.block([[g_inv, zero], [zero, g]])
    I1 = np.block([[J, zero], [zero, J.T]])
    W = chart.omega.T  # X -> ω(X, .)
    I2 = np.block([[zero, -np.linalg.inv(W)], [W, zero]])
    I3 = I1 @ I2
    Z = np.concatenate([-J @ chart.q, np.zeros(m)])
    fZ = float(-0.5 * Z @ gN @ Z)
    omega1 = I1.T @ gN
    d_beta = np.zeros((2 * m, 2 * m))
    d_beta[:m, :m] = _d_iota_Z_gN(chart)
    omegaH = omega1 + d_beta
    Xi = np.concatenate([chart.q, p])
    return CmapPoint(chart, p, gN, gN_inv, I1, I2, I3, Z, omega1, omegaH, fZ, -fZ, Xi)


def cmap_point(spec, z, p) -> CmapPoint:
    return build_cmap_point(build_chart(spec, z), p)


def rotating_data(pt: CmapPoint) -> tuple:
    return pt.omega1, pt.omegaH, pt.fZ, pt.fH


@dataclass(frozen=True)
class HkqkScalars:
    c: float
    fZc: float
    fHc: float

    @property
    def admissible(self) -> bool:
        return self.fZc > 0 and self.fHc < 0


def hamiltonians_c(pt: CmapPoint, c: float) -> HkqkScalars:
    """One-loop shifted Hamiltonians f_Z - c/2 and f_H - c/2."""
    c = float(c)
    if c < 0:
        raise ValueError("deformation parameter c must be non-negative")
    fZc = pt.fZ - 0.5 * c
    if not fZc > 0:
        raise OneLoopDomainError(f"f_Z - c/2 = {fZc:.6g} <= 0 (f_Z = {pt.fZ:.6g}, c = {c:.6g})")
    return HkqkScalars(c, fZc, pt.fH - 0.5 * c)
