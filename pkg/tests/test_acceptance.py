"""Acceptance gate: one test per criterion, each recording a PASS/FAIL line."""

import json
from pathlib import Path

import numpy as np

from cmaplab import cli
from cmaplab.cask import verify_cask_axioms
from cmaplab.curvature import riemann_rigid, rm_hk
from cmaplab.cmap import hamiltonians_c
from cmaplab.invariants import (c_grid, curvature_norm, lie_derivative_check,
                                lie_from_omegas, numeric_xi_derivative, omega_coeffs,
                                point_invariants, relative_residual, xi_point)
from cmaplab.suites import curvature_oracle_error, hz_vanishing_residual

from conftest import FAMILIES, record, sample_points

CONFIGS = Path(cli.__file__).parent / "configs"


def test_criterion_1_cask_axioms():
    worst = {}
    failures = []
    for name in ("quadratic1", "quadratic2", "cubic1", "cubic2"):
        ratios = []
        for i, pt in enumerate(sample_points(name, 100, seed=1)):
            rep = verify_cask_axioms(pt.chart, tol=1e-6, exact_tol=1e-10)
            ratios.append(max(rep.residuals[k] / rep.tolerances[k] for k in rep.residuals))
            if not rep.passed:
                failures.append((name, i, rep.failures))
        worst[name] = max(ratios)
    detail = "worst residual/tol " + ", ".join(f"{k}={v:.2g}" for k, v in worst.items())
    record(1, not failures, detail)
    assert not failures, failures[:3]


def test_criterion_2_curvature_formula_vs_oracle():
    errs = [curvature_oracle_error(pt) for pt in sample_points("cubic2", 20, seed=2)]
    flat = max(float(np.max(np.abs(riemann_rigid(pt).entries)))
               for name in ("quadratic1", "quadratic2") for pt in sample_points(name, 10, seed=2))
    ok = max(errs) <= 1e-5 and flat <= 1e-9
    record(2, ok, f"cubic n=2 max rel Frobenius {max(errs):.2e} (tol 1e-5); flat max |Rm_N| {flat:.1e}")
    assert max(errs) <= 1e-5
    assert flat <= 1e-9


def test_criterion_3_hz_vanishing():
    worst_comp, worst_sum = 0.0, 0.0
    for name in FAMILIES:
        for pt in sample_points(name, 20, seed=3):
            pi = point_invariants(pt)
            worst_comp = max(worst_comp, hz_vanishing_residual(pt, pi.rm_n.entries))
            rs = pi.rsums
            scale = max(rs.RN["3"], rs.RN["4"], abs(rs.RC["3"]), abs(rs.RC["4"]), 1.0)
            low = max(abs(d[k]) for d in (rs.RN, rs.RC) for k in ("0", "1", "2a", "2b"))
            worst_sum = max(worst_sum, low / scale)
    ok = worst_comp <= 1e-10 and worst_sum <= 1e-10
    record(3, ok, f"components {worst_comp:.1e}, sums {worst_sum:.1e} (tol 1e-10)")
    assert ok


def test_criterion_4_rm_hk_pinned_value():
    worst = 0.0
    pts = [pt for name in FAMILIES for pt in sample_points(name, 13, seed=4)][:50]
    assert len(pts) == 50
    for pt in pts:
        Z, I1Z = pt.Z, pt.I1 @ pt.Z
        val = np.einsum("abcd,a,b,c,d->", rm_hk(pt).entries, Z, I1Z, Z, I1Z)
        target = float(Z @ pt.gN @ Z) ** 2
        worst = max(worst, abs(val - target) / target)
    record(4, worst <= 1e-10, f"max rel residual {worst:.1e} (tol 1e-10)")
    assert worst <= 1e-10


def test_criterion_5_norm_consistency():
    worst = 0.0
    for family in (("quadratic1", "quadratic2"), ("cubic1", "cubic2")):
        pts = sample_points(family[0], 25, seed=5, min_fz=0.5) + sample_points(family[1], 25, seed=5, min_fz=0.5)
        for pt in pts:
            pi = point_invariants(pt)
            for c in (0.0, 0.3, 1.0):
                b = curvature_norm(pi, c, "blocks")
                d = curvature_norm(pi, c, "direct")
                worst = max(worst, abs(b - d) / max(abs(b), abs(d)))
    record(5, worst <= 1e-10, f"max rel blocks-vs-direct {worst:.1e} over 100 points x 3 c (tol 1e-10)")
    assert worst <= 1e-10


def _lie_family(names, seed, table="printed"):
    worst, worst_zero, grid_worst = 0.0, 0.0, 0.0
    pts = sample_points(names[0], 10, seed=seed, min_fz=0.5) + sample_points(names[1], 10, seed=seed, min_fz=0.5)
    for pt in pts:
        spec = pt.chart.spec
        pi = point_invariants(pt)
        for c in (0.0, 0.1, 1.0):
            chk = lie_derivative_check(spec, pt, c, table, pi)
            if c == 0.0:
                worst_zero = max(worst_zero, abs(chk.numeric), abs(chk.analytic))
            else:
                worst = max(worst, chk.residual)
    for pt in pts[:: max(1, len(pts) // 4)]:
        spec = pt.chart.spec
        pi = point_invariants(pt)
        om = omega_coeffs(pt, pi.rsums, table)
        for c in c_grid(pt.fZ):
            fHc = hamiltonians_c(pt, c).fHc
            num = numeric_xi_derivative(spec, pt.chart.z, pt.p, c)
            grid_worst = max(grid_worst, relative_residual(lie_from_omegas(om, c, fHc), num))
    return worst, worst_zero, grid_worst


def test_criterion_6_lie_derivative_identity():
    results = {"quadratic": _lie_family(("quadratic1", "quadratic2"), 6),
               "cubic": _lie_family(("cubic1", "cubic2"), 6)}
    ok = all(w <= 1e-6 and z <= 1e-8 and g <= 1e-6 for w, z, g in results.values())
    detail = "; ".join(f"{k}: c>0 {w:.1e}, c=0 |d| {z:.1e}, 12-c grid {g:.1e}"
                       for k, (w, z, g) in results.items())
    record(6, ok, detail + " (tol 1e-6 / 1e-8 abs; printed Omega table)")
    assert ok, detail


def _scan_norms(pt, c, ts):
    out = []
    for t in ts:
        q = xi_point(pt.chart.spec, pt.chart.z, pt.p, t)
        out.append(curvature_norm(point_invariants(q), c, "blocks"))
    return np.array(out)


def test_criterion_7_main_theorem_certificate():
    ts = np.linspace(-0.2, 0.2, 9)
    var_min, zero_max, flat_max = np.inf, 0.0, 0.0
    for family in (("quadratic1", "quadratic2"), ("cubic1", "cubic2")):
        for name in family:
            for pt in sample_points(name, 3, seed=7, min_fz=0.8):
                F1 = _scan_norms(pt, 1.0, ts)
                var_min = min(var_min, (F1.max() - F1.min()) / np.abs(F1).max())
                zero_max = max(zero_max, abs(numeric_xi_derivative(pt.chart.spec, pt.chart.z, pt.p, 0.0)))
                if name.startswith("quadratic"):
                    F0 = _scan_norms(pt, 0.0, ts)
                    flat_max = max(flat_max, (F0.max() - F0.min()) / np.abs(F0).max())
    ok = var_min >= 1e-4 and zero_max <= 1e-8 and flat_max <= 1e-8
    record(7, ok, f"c=1 min rel variation {var_min:.2e} (>=1e-4); c=0 max |Xi F| {zero_max:.1e} (<=1e-8);"
                  f" quadratic c=0 scan spread {flat_max:.1e} (<=1e-8)")
    assert ok


def test_criterion_8_determinism(tmp_path):
    identical = True
    for name in ("quadratic", "cubic"):
        raw = json.loads((CONFIGS / f"{name}.json").read_text())
        cfg_path = tmp_path / f"{name}.json"
        cfg_path.write_text(json.dumps(raw))
        blobs = []
        for run, threads in ((0, "1"), (1, "2")):
            prefix = tmp_path / f"run{run}" / name
            for cmd in ("verify", "scan", "certify"):
                cli.main([cmd, str(cfg_path), "--out", str(prefix), "--threads", threads])
            blobs.append([Path(f"{prefix}{suffix}").read_bytes()
                          for suffix in ("_report.json", "_scan.csv", "_cert.json")])
        identical &= blobs[0] == blobs[1]
    record(8, identical, "verify/scan/certify outputs byte-identical across runs (1 and 2 threads)")
    assert identical
