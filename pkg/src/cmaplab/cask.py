"""Conical affine special Kähler geometry at a point.

Conventions
-----------
Special coordinates ``z`` give real coordinates ``s = (a, b) = (Re z, Im z)``.
The flat affine coordinates are ``q = (x, y)`` with ``x = Re z`` and
``y_I = Re F_I(z)``.  The metric is ``g = N_IJ (da^I da^J + db^I db^J)``
with ``N = 2 Im F_IJ``, J is multiplication by ``i`` and ``ω = g(J., .)``.
In affine coordinates ``ω = -2 Σ dx^I ∧ dy_I`` is constant and the Euler
field is the position vector ``ξ = q``.

Index conventions for derivative arrays: ``dg[k, i, j] = ∂_k g_ij`` and
``ddg[k, l, i, j] = ∂_k ∂_l g_ij`` in affine coordinates.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from ._taylor import Taylor2, block
from .errors import DegenerateError, SignatureError
from .jets import Jet4, PrepotentialSpec, gradient_hessian, jet_eval

COND_LIMIT = 1e12
CONVENTION = ("q=(Re z, Re F_I); g=2Im(F_IJ) dz dzbar; omega=g(J.,.)"
              "=-2 sum dx^I^dy_I; F unnormalized")


def omega_affine(dim: int) -> np.ndarray:
    """Constant matrix ω_ij = ω(∂_i, ∂_j) in affine coordinates (dim = n+1)."""
    eye = np.eye(dim)
    zero = np.zeros((dim, dim))
    return np.block([[zero, -2 * eye], [2 * eye, zero]])


def complex_structure_s(dim: int) -> np.ndarray:
    eye = np.eye(dim)
    zero = np.zeros((dim, dim))
    return np.block([[zero, -eye], [eye, zero]])


@dataclass(frozen=True)
class CaskChart:
    spec: PrepotentialSpec
    z: np.ndarray
    q: np.ndarray
    jac: np.ndarray
    jac_inv: np.ndarray
    g: np.ndarray
    g_inv: np.ndarray
    J: np.ndarray
    omega: np.ndarray
    xi: np.ndarray
    dg: np.ndarray
    ddg: np.ndarray
    dJ: np.ndarray
    jet: Jet4 = field(repr=False)

    @property
    def dim(self) -> int:
        return self.q.shape[0]

    @property
    def Jxi(self) -> np.ndarray:
        return self.J @ self.xi

    def to_dict(self) -> dict:
        return {
            "z": [[float(c.real), float(c.imag)] for c in self.z],
            "q": self.q.tolist(),
            "g": self.g.tolist(),
            "J": self.J.tolist(),
            "omega": self.omega.tolist(),
            "xi": self.xi.tolist(),
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict())


def affine_coordinates(spec: PrepotentialSpec, z) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    jet = jet_eval(spec, z)
    return np.concatenate([z.real, jet.d1.real])


def _metric_blocks(tau: np.ndarray) -> np.ndarray:
    """Affine-coordinate metric from the period matrix τ = F_IJ."""
    R, T = tau.real, tau.imag
    Ti = np.linalg.inv(T)
    return 2 * np.block([[T + R @ Ti @ R, -R @ Ti], [-Ti @ R, Ti]])


def _jacobian(tau: np.ndarray) -> np.ndarray:
    dim = tau.shape[0]
    return np.block([[np.eye(dim), np.zeros((dim, dim))], [tau.real, -tau.imag]])


def solve_special_coordinates(spec: PrepotentialSpec, q, z_guess, tol: float = 1e-14,
                              max_iter: int = 50) -> np.ndarray:
    """Invert ``q(z)`` by Newton iteration on ``Im z`` (``Re z`` is fixed by q)."""
    q = np.asarray(q, dtype=float)
    dim = spec.dim
    x, y = q[:dim], q[dim:]
    b = np.asarray(z_guess, dtype=complex).imag.copy()
    scale = max(1.0, float(np.max(np.abs(y))))
    for _ in range(max_iter):
        d1, d2 = gradient_hessian(spec, x + 1j * b)
        r = d1.real - y
        step = np.linalg.solve(d2.imag, r)
        b = b + step
        if np.max(np.abs(r)) <= tol * scale and np.max(np.abs(step)) <= 1e-13 * max(1.0, np.max(np.abs(b))):
            break
    return x + 1j * b


def structure_at_q(spec: PrepotentialSpec, q, z_guess) -> tuple:
    """Metric and complex structure at affine point ``q`` from closed forms.

    Used by finite-difference oracles; shares no derivative code with
    :func:`build_chart`.
    """
    z = solve_special_coordinates(spec, q, z_guess)
    tau = gradient_hessian(spec, z)[1]
    jac = _jacobian(tau)
    J = jac @ complex_structure_s(spec.dim) @ np.linalg.inv(jac)
    return _metric_blocks(tau), J, z


def metric_at_q(spec: PrepotentialSpec, q, z_guess) -> np.ndarray:
    return structure_at_q(spec, q, z_guess)[0]


def kahler_potential(spec: PrepotentialSpec, z) -> float:
    """Kähler potential 2 Im(z̄^I F_I) whose complex Hessian is N = 2 Im F_IJ."""
    z = np.asarray(z, dtype=complex)
    return float(2 * np.imag(np.conj(z) @ jet_eval(spec, z).d1))


def _metric_taylor(jet: Jet4, jac_inv: np.ndarray) -> Taylor2:
    """Second-order expansion of the affine metric in δq via the chain rule."""
    dim = jet.dim
    m = 2 * dim
    F3, F4 = jet.d3, jet.d4
    # second derivatives of q with respect to s = (a, b)
    q2 = np.zeros((m, m, m))
    q2[dim:, :dim, :dim] = F3.real
    q2[dim:, :dim, dim:] = -F3.imag
    q2[dim:, dim:, :dim] = -F3.imag
    q2[dim:, dim:, dim:] = -F3.real
    s1 = jac_inv
    s2 = -np.einsum("ab,bcd,ck,dl->akl", jac_inv, q2, jac_inv, jac_inv)
    z1 = s1[:dim] + 1j * s1[dim:]
    z2 = s2[:dim] + 1j * s2[dim:]
    tau1 = np.einsum("ijK,Kk->ijk", F3, z1)
    tau2 = np.einsum("ijKL,Kk,Ll->ijkl", F4, z1, z1) + np.einsum("ijK,Kkl->ijkl", F3, z2)
    R = Taylor2(jet.d2.real, tau1.real, tau2.real)
    T = Taylor2(jet.d2.imag, tau1.imag, tau2.imag)
    Ti = T.inv()
    RTi = R @ Ti
    return block([[T + RTi @ R, -RTi], [-(Ti @ R), Ti]]).scale(2.0)


def build_chart(spec: PrepotentialSpec, z) -> CaskChart:
    """CASK data at special coordinates ``z`` expressed in affine coordinates."""
    z = np.asarray(z, dtype=complex)
    jet = jet_eval(spec, z)
    dim = spec.dim
    tau = jet.d2
    N = 2 * tau.imag
    cone = float(np.real(z @ N @ np.conj(z)))
    if not cone < 0:
        raise SignatureError(f"cone condition violated: N(z, z̄) = {cone:.3e} >= 0")
    jac = _jacobian(tau)
    if np.linalg.cond(jac) > COND_LIMIT:
        raise DegenerateError("affine-coordinate Jacobian is singular")
    jac_inv = np.linalg.inv(jac)
    q = np.concatenate([z.real, jet.d1.real])

    G = _metric_taylor(jet, jac_inv)
    g = 0.5 * (G.v + G.v.T)
    g_inv = np.linalg.inv(g)
    dg = np.ascontiguousarray(G.d1.transpose(2, 0, 1))
    ddg = np.ascontiguousarray(G.d2.transpose(2, 3, 0, 1))
    J = jac @ complex_structure_s(dim) @ jac_inv
    omega = J.T @ g
    Om = omega_affine(dim)
    # J = -g^{-1} Ω with Ω constant, so ∂J = g^{-1} (∂g) g^{-1} Ω
    dJ = np.einsum("ab,kbc,cd,de->kae", g_inv, dg, g_inv, Om)
    xi = q.copy()

    evals = np.linalg.eigvalsh(g)
    n_neg = int(np.sum(evals < 0))
    if n_neg != 2:
        raise SignatureError(f"metric has {n_neg} negative directions, expected 2")
    Jxi = J @ xi
    if not (xi @ g @ xi < 0 and Jxi @ g @ Jxi < 0):
        raise SignatureError("g is not negative on span(ξ, Jξ)")
    return CaskChart(spec, z, q, jac, jac_inv, g, g_inv, J, omega, xi, dg, ddg, dJ, jet)


def chart_at_q(spec: PrepotentialSpec, q, z_guess) -> CaskChart:
    return build_chart(spec, solve_special_coordinates(spec, q, z_guess))


def s_tensor(chart: CaskChart) -> np.ndarray:
    """Mixed tensor S^k_ij = g^{km} (∇g)_ijm, returned as ``S[k, i, j]``."""
    return np.einsum("km,ijm->kij", chart.g_inv, chart.dg)


# ---------------------------------------------------------------------------
# verification


@dataclass
class AxiomReport:
    residuals: dict
    tolerances: dict
    failures: list

    @property
    def passed(self) -> bool:
        return not self.failures


def _fd_derivative(fn, x: np.ndarray, h: float) -> np.ndarray:
    """Central differences with one Richardson level; derivative axis first."""
    out = []
    for k in range(x.shape[0]):
        e = np.zeros_like(x)
        e[k] = 1.0

        def central(step):
            return (fn(x + step * e) - fn(x - step * e)) / (2 * step)

        out.append((4 * central(h / 2) - central(h)) / 3)
    return np.array(out)


def fd_christoffel(metric_field, x, h: float) -> np.ndarray:
    """Levi-Civita symbols Γ^l_bc (``[l, b, c]``) of a metric field by central FD."""
    x = np.asarray(x, dtype=float)
    dg = _fd_derivative(metric_field, x, h)
    g_inv = np.linalg.inv(metric_field(x))
    # Γ^l_bc = ½ g^{ld} (∂_b g_dc + ∂_c g_db − ∂_d g_bc)
    return 0.5 * np.einsum("ld,bdc->lbc", g_inv,
                           dg + dg.transpose(2, 1, 0) - dg.transpose(1, 0, 2))


def _max_abs(a) -> float:
    return float(np.max(np.abs(a), initial=0.0))


def verify_cask_axioms(chart: CaskChart, tol: float = 1e-6, exact_tol: float = 1e-10,
                       h: float = 1e-4) -> AxiomReport:
    """Check the ASK/CASK identities at a chart.

    Exact checks (symmetry of ∇g, constancy of ω, ∇ξ = id, S vanishing on ξ
    and Jξ) use ``exact_tol``; checks against the finite-difference oracle
    (Levi-Civita = ∇ + S/2, d^∇J = 0) use ``tol``.
    """
    spec = chart.spec
    q = chart.q
    dg = chart.dg
    S = s_tensor(chart)
    g_scale = _max_abs(chart.g)
    res, tols = {}, {}

    dg_scale = max(_max_abs(dg), 1e-300)
    sym_err = max(_max_abs(dg - dg.transpose(p)) for p in ((1, 0, 2), (0, 2, 1), (2, 1, 0)))
    res["dg_total_symmetry"] = sym_err / dg_scale if _max_abs(dg) > 0 else sym_err
    tols["dg_total_symmetry"] = exact_tol

    h_eff = h * max(1.0, float(np.max(np.abs(q))))
    guess = chart.z

    def metric(x):
        return metric_at_q(spec, x, guess)

    def cplx(x):
        return structure_at_q(spec, x, guess)[1]

    gamma_fd = fd_christoffel(metric, q, h_eff)
    gamma_scale = max(0.5 * _max_abs(S), 1.0 / float(np.linalg.norm(q)))
    res["levi_civita_half_S"] = _max_abs(gamma_fd - 0.5 * S) / gamma_scale
    tols["levi_civita_half_S"] = tol

    Om = omega_affine(spec.dim)
    res["omega_constant"] = _max_abs(chart.omega - Om) / _max_abs(Om)
    tols["omega_constant"] = exact_tol

    dJ_fd = _fd_derivative(cplx, q, h_eff)  # dJ_fd[i, k, j] = ∂_i J^k_j
    dJ_scale = max(_max_abs(dJ_fd), gamma_scale * _max_abs(chart.J))
    res["dnabla_J"] = _max_abs(dJ_fd - dJ_fd.transpose(2, 1, 0)) / dJ_scale
    tols["dnabla_J"] = tol
    res["dJ_exact_vs_fd"] = _max_abs(dJ_fd - chart.dJ) / dJ_scale
    tols["dJ_exact_vs_fd"] = tol

    s = np.concatenate([chart.z.real, chart.z.imag])
    res["nabla_xi_id"] = _max_abs(chart.jac @ s - chart.xi) / _max_abs(q)
    tols["nabla_xi_id"] = exact_tol

    S_scale = max(_max_abs(S), gamma_scale)
    vanish = 0.0
    for v in (chart.xi, chart.Jxi):
        vanish = max(vanish, _max_abs(np.einsum("kij,i->kj", S, v)),
                     _max_abs(np.einsum("kij,j->ki", S, v)))
    res["S_xi_vanish"] = vanish / (S_scale * _max_abs(q))
    tols["S_xi_vanish"] = exact_tol

    gxx = chart.xi @ chart.g @ chart.xi
    res["xi_Jxi_orthogonal"] = abs(chart.xi @ chart.g @ chart.Jxi) / max(abs(gxx), g_scale)
    tols["xi_Jxi_orthogonal"] = exact_tol

    failures = [(k, v) for k, v in res.items() if not v <= tols[k]]
    return AxiomReport(res, tols, failures)
