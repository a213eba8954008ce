"""Per-point verification routines shared by the CLI and the test suite.

Each routine returns a :class:`Check` holding the worst normalized residual
(residual divided by its tolerance, so ``<= 1`` means pass) and the raw
residuals, or raises a :class:`~cmaplab.errors.CmapLabError` for points
outside the relevant domain.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .cask import verify_cask_axioms
from .cmap import CmapPoint
from .curvature import cmap_metric_field, fd_curvature_oracle, riemann_rigid
from .flows import verify_rotating_data
from .invariants import adapted_frame, curvature_norm, frame_components, lie_derivative_check, point_invariants
from .jets import check_homogeneity


@dataclass(frozen=True)
class Tolerances:
    oracle_rel: float = 1e-5
    identity_rel: float = 1e-6
    zero_abs: float = 1e-8
    exact_rel: float = 1e-10
    scale: float = 1.0  # applied to the fixed limits below

    def scaled(self, factor: float) -> "Tolerances":
        return Tolerances(self.oracle_rel * factor, self.identity_rel * factor,
                          self.zero_abs * factor, self.exact_rel * factor, self.scale * factor)


@dataclass
class Check:
    ratio: float
    residuals: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.ratio <= 1.0


def check_homogeneity_suite(spec, pt: CmapPoint, tol: Tolerances) -> Check:
    rep = check_homogeneity(spec, pt.chart.z, tol=tol.exact_rel)
    ratio = max(rep.residuals.values()) / tol.exact_rel
    return Check(ratio, dict(rep.residuals))


def check_cask_axioms(spec, pt: CmapPoint, tol: Tolerances) -> Check:
    rep = verify_cask_axioms(pt.chart, tol=tol.identity_rel, exact_tol=tol.exact_rel)
    ratio = max(rep.residuals[k] / rep.tolerances[k] for k in rep.residuals)
    return Check(ratio, dict(rep.residuals))


def check_rotating(spec, pt: CmapPoint, tol: Tolerances) -> Check:
    rep = verify_rotating_data(spec, pt)
    limits = {"iota_Z_omega1": 1e-8 * tol.scale, "iota_Z_omegaH": 1e-8 * tol.scale,
              "quaternion": 1e-12 * tol.scale}
    ratio = max(v / limits.get(k, tol.identity_rel) for k, v in rep.residuals.items())
    return Check(ratio, dict(rep.residuals))


def curvature_oracle_error(pt: CmapPoint, h: float = 1e-3) -> float:
    """Relative Frobenius distance between Rm_N and the FD oracle of g_N."""
    exact = riemann_rigid(pt).entries
    x0 = np.concatenate([pt.chart.q, pt.p])
    fd = fd_curvature_oracle(cmap_metric_field(pt), x0, h).entries
    scale = max(np.linalg.norm(fd), np.linalg.norm(exact))
    if scale == 0.0:
        return 0.0
    return float(np.linalg.norm(fd - exact) / scale)


def check_curvature_oracle(spec, pt: CmapPoint, tol: Tolerances) -> Check:
    exact = riemann_rigid(pt).entries
    if spec.kind == "quadratic":
        err = float(np.max(np.abs(exact)))
        return Check(err / (1e-9 * tol.scale), {"flat_max": err})
    err = curvature_oracle_error(pt)
    return Check(err / tol.oracle_rel, {"frobenius_rel": err})


def hz_vanishing_residual(pt: CmapPoint, rm_n: np.ndarray | None = None) -> float:
    """Largest Rm_N frame component with two or more HZ slots, relative to
    the largest Rm_N frame component (or 1 when Rm_N vanishes)."""
    rm_n = riemann_rigid(pt).entries if rm_n is None else rm_n
    frame = adapted_frame(pt)
    Tf = frame_components(rm_n, frame)
    dim = Tf.shape[0]
    hz = np.arange(dim) < 4
    count = (hz[:, None, None, None].astype(int) + hz[None, :, None, None]
             + hz[None, None, :, None] + hz[None, None, None, :])
    scale = max(float(np.max(np.abs(Tf))), 1.0)
    return float(np.max(np.abs(Tf[count >= 2]))) / scale


def check_hz_vanishing(spec, pt: CmapPoint, tol: Tolerances) -> Check:
    pi = point_invariants(pt)
    comp = hz_vanishing_residual(pt, pi.rm_n.entries)
    rs = pi.rsums
    scale_n = max(rs.RN["4"], rs.RN["3"], 1.0)
    scale_c = max(abs(rs.RC["4"]), abs(rs.RC["3"]), 1.0)
    sums = max(max(abs(rs.RN[k]) for k in ("0", "1", "2a", "2b")) / scale_n,
               max(abs(rs.RC[k]) for k in ("0", "1", "2a", "2b")) / scale_c)
    return Check(max(comp, sums) / tol.exact_rel, {"components": comp, "sums": sums})


def check_norm_consistency(spec, pt: CmapPoint, c: float, tol: Tolerances) -> Check:
    pi = point_invariants(pt)
    blocks = curvature_norm(pi, c, "blocks")
    direct = curvature_norm(pi, c, "direct")
    rel = abs(blocks - direct) / max(abs(direct), abs(blocks), 1e-300)
    return Check(rel / tol.exact_rel, {"blocks": blocks, "direct": direct, "rel": rel})


def check_lie_identity(spec, pt: CmapPoint, c: float, tol: Tolerances, table: str = "printed") -> Check:
    chk = lie_derivative_check(spec, pt, c, table, zero_abs=tol.zero_abs)
    limit = tol.zero_abs if max(abs(chk.analytic), abs(chk.numeric)) <= tol.zero_abs else tol.identity_rel
    return Check(chk.residual / limit, {"analytic": chk.analytic, "numeric": chk.numeric,
                                        "residual": chk.residual})
