"""Flows of Ξ and Z on N and Lie derivatives by flow transport.

The Ξ-flow is the exact scaling ``(q, p) -> (e^t q, e^t p)``, realized in
special coordinates as ``z -> e^t z`` (q is homogeneous of degree one).
The Z-flow only moves the base point; it is integrated with RK4 in affine
coordinates together with its variational equation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cask import affine_coordinates, chart_at_q
from .cmap import CmapPoint, build_cmap_point, cmap_point
from .jets import PrepotentialSpec

RK4_STEP = 1e-3


def xi_flow_point(spec: PrepotentialSpec, z, p, t: float) -> CmapPoint:
    s = np.exp(t)
    return cmap_point(spec, s * np.asarray(z, dtype=complex), s * np.asarray(p, dtype=float))


def _z_field(spec: PrepotentialSpec, q: np.ndarray, guess: np.ndarray):
    chart = chart_at_q(spec, q, guess)
    Z = -chart.J @ q
    # DZ^c_a = -(∂_a J)^c_d q^d - J^c_a
    DZ = -np.einsum("acd,d->ca", chart.dJ, q) - chart.J
    return Z, DZ, chart.z


def z_flow(spec: PrepotentialSpec, z, t: float, step: float = RK4_STEP):
    """Integrate the horizontal part of Z from the base point of ``z``.

    Returns ``(z_t, Phi)`` with ``Phi = dq(t)/dq(0)`` the flow derivative.
    """
    z = np.asarray(z, dtype=complex)
    q = affine_coordinates(spec, z)
    m = q.size
    Phi = np.eye(m)
    n_steps = max(1, int(np.ceil(abs(t) / step)))
    h = t / n_steps
    guess = z
    for _ in range(n_steps):
        k1, D1, guess = _z_field(spec, q, guess)
        k2, D2, guess = _z_field(spec, q + 0.5 * h * k1, guess)
        k3, D3, guess = _z_field(spec, q + 0.5 * h * k2, guess)
        k4, D4, guess = _z_field(spec, q + h * k3, guess)
        P1 = D1 @ Phi
        P2 = D2 @ (Phi + 0.5 * h * P1)
        P3 = D3 @ (Phi + 0.5 * h * P2)
        P4 = D4 @ (Phi + h * P3)
        q = q + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        Phi = Phi + h / 6 * (P1 + 2 * P2 + 2 * P3 + P4)
    return chart_at_q(spec, q, guess).z, Phi


def _pullback(T: np.ndarray, D: np.ndarray) -> np.ndarray:
    return D.T @ T @ D


def lie_derivative_z(spec: PrepotentialSpec, z, p, field, t: float = 1e-4) -> np.ndarray:
    """L_Z of a (0,2) tensor field ``field(pt)`` by central differences in flow
    time with one Richardson level. The fiber coordinate is fixed by the flow."""
    p = np.asarray(p, dtype=float)
    m = p.size

    def pulled(s: float) -> np.ndarray:
        zs, Phi = z_flow(spec, z, s)
        D = np.block([[Phi, np.zeros((m, m))], [np.zeros((m, m)), np.eye(m)]])
        return _pullback(field(cmap_point(spec, zs, p)), D)

    d_h = (pulled(t) - pulled(-t)) / (2 * t)
    d_h2 = (pulled(t / 2) - pulled(-t / 2)) / t
    return (4 * d_h2 - d_h) / 3


def lie_derivative_xi(spec: PrepotentialSpec, z, p, field, t: float = 1e-4) -> np.ndarray:
    """L_Ξ of a (0,2) tensor field via the exact scaling flow (Dφ_t = e^t Id)."""

    def pulled(s: float) -> np.ndarray:
        return np.exp(2 * s) * field(xi_flow_point(spec, z, p, s))

    d_h = (pulled(t) - pulled(-t)) / (2 * t)
    d_h2 = (pulled(t / 2) - pulled(-t / 2)) / t
    return (4 * d_h2 - d_h) / 3


def xi_derivative_scalar(fn, spec: PrepotentialSpec, z, p, t: float = 1e-3) -> float:
    """Ξ(fn) for a scalar function of a CmapPoint: central difference, one
    Richardson level."""
    f = lambda s: fn(xi_flow_point(spec, z, p, s))
    d_h = (f(t) - f(-t)) / (2 * t)
    d_h2 = (f(t / 2) - f(-t / 2)) / t
    return (4 * d_h2 - d_h) / 3


def fd_gradient(fn, spec: PrepotentialSpec, pt: CmapPoint, h: float = 1e-5) -> np.ndarray:
    """Gradient of a scalar function of a CmapPoint in (q, p) coordinates."""
    q0, p0 = pt.chart.q, pt.p
    m = q0.size
    x0 = np.concatenate([q0, p0])

    def at(x):
        return fn(build_cmap_point(chart_at_q(spec, x[:m], pt.chart.z), x[m:]))

    grad = np.zeros(2 * m)
    for i in range(2 * m):
        e = np.zeros(2 * m)
        e[i] = h
        d1 = (at(x0 + e) - at(x0 - e)) / (2 * h)
        d2 = (at(x0 + e / 2) - at(x0 - e / 2)) / h
        grad[i] = (4 * d2 - d1) / 3
    return grad


@dataclass(frozen=True)
class RotatingReport:
    residuals: dict

    def passed(self, tol: float = 1e-6) -> bool:
        return all(v <= tol for v in self.residuals.values())


def _rel(a: np.ndarray, b: np.ndarray) -> float:
    scale = max(float(np.max(np.abs(a))), float(np.max(np.abs(b))), 1.0)
    return float(np.max(np.abs(a - b))) / scale


def verify_rotating_data(spec: PrepotentialSpec, pt: CmapPoint, with_flows: bool = True) -> RotatingReport:
    """ι_Zω₁ = -df_Z, ι_Zω_H = -df_H, L_Z g_N = 0, L_Z ω₂ = ω₃, L_Ξ g_N = 2g_N."""
    z, p = pt.chart.z, pt.p
    dfZ = fd_gradient(lambda x: x.fZ, spec, pt)
    res = {
        "iota_Z_omega1": _rel(pt.Z @ pt.omega1, -dfZ),
        "iota_Z_omegaH": _rel(pt.Z @ pt.omegaH, dfZ),
        "quaternion": float(np.max(np.abs(pt.I1 @ pt.I2 - pt.I3))),
    }
    if with_flows:
        res["L_Z_gN"] = _rel(lie_derivative_z(spec, z, p, lambda x: x.gN), np.zeros_like(pt.gN))
        res["L_Z_omega2"] = _rel(lie_derivative_z(spec, z, p, lambda x: x.kahler_form(2)),
                                 pt.kahler_form(3))
        res["L_Xi_gN"] = _rel(lie_derivative_xi(spec, z, p, lambda x: x.gN), 2 * pt.gN)
        res["L_Xi_omegaH"] = _rel(lie_derivative_xi(spec, z, p, lambda x: x.omegaH), 2 * pt.omegaH)
    return RotatingReport(res)
