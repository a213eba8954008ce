"""Curvature of rigid and deformed c-map spaces from a holomorphic prepotential."""

__version__ = "0.1.0"

from .jets import PrepotentialSpec, jet_eval, check_homogeneity
from .cask import CaskChart, build_chart, chart_at_q, verify_cask_axioms
from .cmap import CmapPoint, HkqkScalars, build_cmap_point, cmap_point, hamiltonians_c
from .curvature import (CurvatureTensor, fd_curvature_oracle, riemann_ask, riemann_rigid,
                        rm_hk, rm_hp, rm_tilde)
from .invariants import (adapted_frame, inhomogeneity_certificate, lie_derivative_check,
                         norm_direct, norm_via_blocks, omega_coeffs, r_sums)

__all__ = [
    "PrepotentialSpec", "jet_eval", "check_homogeneity",
    "CaskChart", "build_chart", "chart_at_q", "verify_cask_axioms",
    "CmapPoint", "HkqkScalars", "build_cmap_point", "cmap_point", "hamiltonians_c",
    "CurvatureTensor", "fd_curvature_oracle", "riemann_ask", "riemann_rigid", "rm_hk", "rm_hp", "rm_tilde",
    "adapted_frame", "inhomogeneity_certificate", "lie_derivative_check", "norm_direct",
    "norm_via_blocks", "omega_coeffs", "r_sums",
]
