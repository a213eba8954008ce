"""Curvature tensors of the rigid c-map and of the HK/QK twist.

Sign convention: ``R(X, Y) = [D_X, D_Y] - D_[X,Y]`` and the lowered tensor
is ``Rm(A, B, C, X) = g(R(A, B) C, X)``.  With this convention the unit
sphere has ``Rm = -½ g∧g``.  Dense (0,4) arrays use slot-1-major order
``Rm[a, b, c, d]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .cask import CaskChart, fd_christoffel, s_tensor
from .cmap import CmapPoint, HkqkScalars
from .errors import DimensionMismatch, SingularMetricError


@dataclass(frozen=True)
class CurvatureTensor:
    entries: np.ndarray
    name: str = ""
    raw_asymmetry: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def symmetry_residuals(self) -> dict:
        """Max violations of the curvature symmetries, relative to max |Rm|."""
        T = self.entries
        scale = float(np.max(np.abs(T), initial=0.0)) or 1.0
        bianchi = T + T.transpose(1, 2, 0, 3) + T.transpose(2, 0, 1, 3)
        return {
            "antisym_12": float(np.max(np.abs(T + T.transpose(1, 0, 2, 3)))) / scale,
            "antisym_34": float(np.max(np.abs(T + T.transpose(0, 1, 3, 2)))) / scale,
            "pair_symmetry": float(np.max(np.abs(T - T.transpose(2, 3, 0, 1)))) / scale,
            "first_bianchi": float(np.max(np.abs(bianchi))) / scale,
        }

    def flat(self) -> list:
        return self.entries.reshape(-1).tolist()

    def __add__(self, other):
        return CurvatureTensor(self.entries + other.entries)

    def scaled(self, s: float) -> "CurvatureTensor":
        return CurvatureTensor(s * self.entries, self.name)


# ---------------------------------------------------------------------------
# affine special Kähler base


def _commutators(S: np.ndarray) -> np.ndarray:
    """comm[a, b, l, c] = ([S_a, S_b])^l_c with (S_a)^l_c = S^l_{ac}."""
    prod = np.einsum("lam,mbc->ablc", S, S)
    return prod - prod.transpose(1, 0, 2, 3)


def riemann_ask(chart: CaskChart) -> np.ndarray:
    """Curvature endomorphism of the base as ``R[l, k, i, j]``.

    ``R[l, k, i, j]`` is the l-th component of R(∂_i, ∂_j) ∂_k
    = -¼ [S_i, S_j] ∂_k.
    """
    comm = _commutators(s_tensor(chart))
    return -0.25 * comm.transpose(2, 3, 0, 1)


def lower_endomorphism(R: np.ndarray, g: np.ndarray) -> np.ndarray:
    """``Rm[i, j, k, l] = g(R(∂_i, ∂_j) ∂_k, ∂_l)`` from ``R[l, k, i, j]``."""
    return np.einsum("mkij,ml->ijkl", R, g)


# ---------------------------------------------------------------------------
# rigid c-map


def riemann_rigid(pt: CmapPoint) -> CurvatureTensor:
    """Levi-Civita curvature of g_N assembled from the six component families.

    Index patterns not listed among the families are filled by the
    antisymmetries and the pair symmetry.
    """
    chart = pt.chart
    m = chart.dim
    g, gi = chart.g, chart.g_inv
    S = s_tensor(chart)          # S^k_ij
    Sl = chart.dg                # S_ijk, totally symmetric
    comm = _commutators(S)       # [S_a, S_b]^l_c

    hhhh = -0.25 * np.einsum("ablc,ld->abcd", comm, g)
    # g([S_a, S_b] c♯, d♯) = ([S_a, S_b] g^{-1})_{dc}
    commG = np.einsum("abls,sc->ablc", comm, gi)
    hhvv = -0.25 * commG.transpose(0, 1, 3, 2)

    # S_a S_c g^{-1}, with (S_a S_c)^l_s = S^l_{am} S^m_{cs}
    SS = np.einsum("lam,mcs,sd->acld", S, S, gi)   # [a, c, l, d] = (S_a S_c g^-1)[l, d]
    w = np.einsum("kij,ib,jd->kbd", S, gi, gi)     # (S_{b♯} d♯)^k
    t1 = 0.5 * SS.transpose(0, 2, 1, 3)            # [a, b, c, d] <- (S_a S_c g^-1)[b, d]
    t2 = 0.25 * SS.transpose(1, 2, 0, 3)           # (S_c S_a g^-1)[b, d]
    t3 = 0.25 * np.einsum("ack,kbd->abcd", Sl, w)
    t4 = -0.5 * np.einsum("aicj,ib,jd->abcd", chart.ddg, gi, gi)
    hvhv = t1 + t2 + t3 + t4

    Sv = np.einsum("ia,lis->als", gi, S)           # S_{a♯}
    prod = np.einsum("alm,bms->abls", Sv, Sv)
    commv = prod - prod.transpose(1, 0, 2, 3)
    commvG = np.einsum("abls,sc->ablc", commv, gi)
    vvvv = -0.25 * commvG.transpose(0, 1, 3, 2)

    H, V = slice(0, m), slice(m, 2 * m)
    Rm = np.zeros((2 * m,) * 4)
    Rm[H, H, H, H] = hhhh
    Rm[H, H, V, V] = hhvv
    Rm[V, V, H, H] = hhvv.transpose(2, 3, 0, 1)
    Rm[H, V, H, V] = hvhv
    Rm[H, V, V, H] = -hvhv.transpose(0, 1, 3, 2)
    Rm[V, H, H, V] = -hvhv.transpose(1, 0, 2, 3)
    Rm[V, H, V, H] = hvhv.transpose(1, 0, 3, 2)
    Rm[V, V, V, V] = vvvv
    return CurvatureTensor(Rm, "Rm_N")


# ---------------------------------------------------------------------------
# finite-difference oracle


def fd_curvature_oracle(metric_field, basepoint, h: float = 1e-3,
                        cond_limit: float = 1e12) -> CurvatureTensor:
    """Lowered Riemann tensor of ``metric_field`` by nested central differences.

    Christoffel symbols are differenced once (Richardson-extrapolated) from
    the metric, then again to obtain their derivatives.  The returned entries
    are the raw values; their symmetry violations are recorded in
    ``raw_asymmetry``.
    """
    x0 = np.asarray(basepoint, dtype=float)
    h_eff = h * max(1.0, float(np.max(np.abs(x0))))

    def metric(x):
        g = np.asarray(metric_field(x), dtype=float)
        if np.linalg.cond(g) > cond_limit:
            raise SingularMetricError(f"metric not invertible near {x}")
        return g

    def gamma(x):
        return fd_christoffel(metric, x, h_eff)

    G0 = gamma(x0)
    dG = []
    for k in range(x0.shape[0]):
        e = np.zeros_like(x0)
        e[k] = 1.0

        def central(step):
            return (gamma(x0 + step * e) - gamma(x0 - step * e)) / (2 * step)

        dG.append((4 * central(h_eff / 2) - central(h_eff)) / 3)
    dG = np.array(dG)  # dG[a, l, b, c] = ∂_a Γ^l_bc
    # R^l_{c a b}: R(∂_a, ∂_b) ∂_c
    R = (np.einsum("albc->lcab", dG) - np.einsum("blac->lcab", dG)
         + np.einsum("lam,mbc->lcab", G0, G0) - np.einsum("lbm,mac->lcab", G0, G0))
    Rm = lower_endomorphism(R, metric(x0))
    tensor = CurvatureTensor(Rm, "fd_oracle")
    return CurvatureTensor(Rm, "fd_oracle", tensor.symmetry_residuals())


def cmap_metric_field(pt: CmapPoint):
    """Callable ``(q, p) -> g_N`` built from closed-form metrics (oracle input)."""
    from .cask import metric_at_q

    spec = pt.chart.spec
    m = pt.chart.dim
    guess = pt.chart.z

    def field_fn(x):
        g = metric_at_q(spec, x[:m], guess)
        zero = np.zeros((m, m))
        return np.block([[g, zero], [zero, np.linalg.inv(g)]])

    return field_fn


# ---------------------------------------------------------------------------
# Kulkarni-Nomizu maps


def _check4(Phi: np.ndarray) -> None:
    if Phi.ndim != 4 or len(set(Phi.shape)) != 1:
        raise DimensionMismatch(f"expected a square (0,4) tensor, got shape {Phi.shape}")


def kn_owedge(Phi: np.ndarray) -> np.ndarray:
    """Φ^∧(A,B,C,X) = Φ(A,C,B,X) - Φ(A,X,B,C) + Φ(B,X,A,C) - Φ(B,C,A,X)."""
    Phi = np.asarray(Phi)
    _check4(Phi)
    return (np.einsum("acbx->abcx", Phi) - np.einsum("axbc->abcx", Phi)
            + np.einsum("bxac->abcx", Phi) - np.einsum("bcax->abcx", Phi))


def kn_obar(Phi: np.ndarray) -> np.ndarray:
    """Φ^⊘ = Φ^∧ + 2Φ(A,B,C,X) + 2Φ(C,X,A,B)."""
    Phi = np.asarray(Phi)
    return kn_owedge(Phi) + 2 * Phi + 2 * Phi.transpose(2, 3, 0, 1)


def _outer(alpha: np.ndarray, beta: np.ndarray) -> np.ndarray:
    alpha, beta = np.asarray(alpha), np.asarray(beta)
    if alpha.ndim != 2 or alpha.shape != beta.shape or alpha.shape[0] != alpha.shape[1]:
        raise DimensionMismatch(f"incompatible (0,2) tensors {alpha.shape}, {beta.shape}")
    return np.einsum("ij,kl->ijkl", alpha, beta)


def alpha_owedge_beta(alpha, beta) -> np.ndarray:
    return kn_owedge(_outer(alpha, beta))


def alpha_obar_beta(alpha, beta) -> np.ndarray:
    return kn_obar(_outer(alpha, beta))


# ---------------------------------------------------------------------------
# HK/QK twist


def hz_projector_form(pt: CmapPoint) -> np.ndarray:
    """The restriction g_N|_{HZ} as a (0,2) tensor on T_pN."""
    E = np.array(pt.hz_tuple()).T
    low = pt.gN @ E                       # columns: g_N(e_a, .)
    G4 = E.T @ pt.gN @ E                  # Gram matrix of (Z, I1Z, I2Z, I3Z)
    return low @ np.linalg.inv(G4) @ low.T


def twisted_metric(pt: CmapPoint, scalars: HkqkScalars) -> np.ndarray:
    """g^c_H = (1/f^c_Z) g_N|(HZ)⊥ + (f^c_H/(f^c_Z)²) g_N|HZ with K = 1."""
    hz = hz_projector_form(pt)
    perp = pt.gN - hz
    return perp / scalars.fZc + hz * (scalars.fHc / scalars.fZc**2)


def rm_hk(pt: CmapPoint) -> CurvatureTensor:
    wH = pt.omegaH
    total = alpha_obar_beta(wH, wH)
    for Ik in pt.complex_structures:
        a = Ik.T @ wH                     # ω_H(I_k ., .)
        total = total + alpha_owedge_beta(a, a)
    return CurvatureTensor(total / 8.0, "Rm_HK")


def rm_hp(pt: CmapPoint, scalars: HkqkScalars) -> CurvatureTensor:
    gH = twisted_metric(pt, scalars)
    total = -alpha_owedge_beta(gH, gH)
    for Ik in pt.complex_structures:
        a = Ik.T @ gH                     # g^c_H(I_k ., .)
        total = total - alpha_obar_beta(a, a)
    return CurvatureTensor(total, "Rm_HP")


@dataclass(frozen=True)
class TwistCurvature:
    rm_n: CurvatureTensor
    rm_hk: CurvatureTensor
    rm_hp: CurvatureTensor
    tilde: CurvatureTensor
    scalars: HkqkScalars
    gH: np.ndarray


def rm_tilde(pt: CmapPoint, scalars: HkqkScalars, rm_n: CurvatureTensor | None = None,
             hk: CurvatureTensor | None = None) -> TwistCurvature:
    """(1/f^c_Z) Rm_N - 1/(f^c_Z f^c_H) Rm_HK - ⅛ Rm_HP, with its parts."""
    rm_n = riemann_rigid(pt) if rm_n is None else rm_n
    hk = rm_hk(pt) if hk is None else hk
    hp = rm_hp(pt, scalars)
    a, b = scalars.fZc, scalars.fHc
    tilde = rm_n.entries / a - hk.entries / (a * b) - hp.entries / 8.0
    return TwistCurvature(rm_n, hk, hp, CurvatureTensor(tilde, "Rm_tilde"), scalars,
                          twisted_metric(pt, scalars))


def inner_product(A: np.ndarray, B: np.ndarray, metric: np.ndarray) -> float:
    """ĝ(A, B) for (0,4) tensors, contracting with four copies of metric⁻¹."""
    gi = np.linalg.inv(metric)
    T = np.tensordot(A, gi, axes=([0], [0]))      # (b, c, d, a')
    T = np.tensordot(T, gi, axes=([0], [0]))      # (c, d, a', b')
    T = np.tensordot(T, gi, axes=([0], [0]))      # (d, a', b', c')
    T = np.tensordot(T, gi, axes=([0], [0]))      # (a', b', c', d')
    return float(np.sum(T * B))
