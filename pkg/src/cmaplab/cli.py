"""Batch driver: ``cmaplab verify|scan|certify|curvature <config.json>``."""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import __version__
from .cask import CONVENTION, build_chart
from .cmap import build_cmap_point, hamiltonians_c
from .config import RunConfig, load_config
from .curvature import rm_tilde
from .errors import CmapLabError, ConfigError, NoAdmissibleSampleError, OneLoopDomainError
from .invariants import (CSV_COLUMNS, curvature_norm, inhomogeneity_certificate, invariant_report,
                         lie_from_omegas, numeric_xi_derivative, omega_coeffs, point_invariants)
from .serialize import csv_text, dumps
from . import suites

EXIT_PASS, EXIT_FAIL, EXIT_DOMAIN, EXIT_NO_SAMPLES, EXIT_CONFIG = 0, 1, 2, 3, 4

POINT_SUITES = (
    ("homogeneity", suites.check_homogeneity_suite),
    ("cask_axioms", suites.check_cask_axioms),
    ("rotating_data", suites.check_rotating),
    ("curvature_oracle", suites.check_curvature_oracle),
    ("hz_vanishing", suites.check_hz_vanishing),
)
SUITE_ORDER = [name for name, _ in POINT_SUITES] + ["lie_identity", "norm_consistency"]
SCAN_COLUMNS = ["c", "t", "norm", "omega9", "lie_analytic", "lie_numeric", "admissible"]


@dataclass
class SuiteResult:
    name: str
    passed: bool = True
    worst: float = 0.0
    offending: str | None = None
    evaluated: int = 0
    skipped: int = 0

    def add(self, point_id: str, check: suites.Check) -> None:
        self.evaluated += 1
        if self.offending is None or not check.ratio <= self.worst:
            self.worst, self.offending = check.ratio, point_id
        self.passed = self.passed and check.passed

    def to_dict(self) -> dict:
        return {"suite": self.name, "pass": self.passed, "worst_ratio": self.worst,
                "offending_point": self.offending, "evaluated": self.evaluated,
                "skipped": self.skipped}


def header(cfg: RunConfig, command: str) -> dict:
    return {"tool": "cmaplab", "version": __version__, "command": command, "seed": cfg.seed,
            "convention": CONVENTION, "omega_table": cfg.omega_table,
            "prepotential": cfg.prepotential.to_dict()}


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def _point_outcome(cfg: RunConfig, point) -> dict:
    """All suite checks and invariant rows for one point, in a fixed order."""
    spec, tol = cfg.prepotential, cfg.tolerances
    out = {"id": point.id, "checks": {}, "skips": {}, "rows": [], "error": None}
    try:
        pt = build_cmap_point(build_chart(spec, point.z), point.p)
    except CmapLabError as exc:
        out["error"] = f"{type(exc).__name__}: {exc}"
        return out
    for name, fn in POINT_SUITES:
        try:
            out["checks"][name] = [fn(spec, pt, tol)]
        except CmapLabError as exc:
            out["skips"][name] = str(exc)
    lie, norm = [], []
    for c in cfg.c_values:
        rep = invariant_report(spec, pt, c, point.id, cfg.omega_table, zero_abs=tol.zero_abs)
        out["rows"].append(rep.row())
        if not np.isfinite(rep.norm_direct):
            continue
        rel = abs(rep.norm_blocks - rep.norm_direct) / max(abs(rep.norm_direct), abs(rep.norm_blocks), 1e-300)
        norm.append(suites.Check(rel / tol.exact_rel, {"rel": rel}))
        if rep.admissible:
            small = max(abs(rep.lie_analytic), abs(rep.lie_numeric)) <= tol.zero_abs
            limit = tol.zero_abs if small else tol.identity_rel
            lie.append(suites.Check(rep.residual / limit, {"residual": rep.residual}))
    for name, checks in (("lie_identity", lie), ("norm_consistency", norm)):
        if checks:
            out["checks"][name] = checks
        else:
            out["skips"][name] = "OneLoopDomainError: no admissible c value"
    return out


def _map_points(cfg: RunConfig, fn, threads: int):
    points = cfg.all_points()
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, points))
    return [fn(p) for p in points]


def cmd_verify(cfg: RunConfig, threads: int = 1) -> tuple:
    outcomes = _map_points(cfg, lambda p: _point_outcome(cfg, p), threads)
    results = {name: SuiteResult(name) for name in SUITE_ORDER}
    for oc in outcomes:
        for name in SUITE_ORDER:
            if name in oc["checks"]:
                for chk in oc["checks"][name]:
                    results[name].add(oc["id"], chk)
            else:
                results[name].skipped += 1
    ordered = [results[name] for name in SUITE_ORDER]
    report = {
        "header": header(cfg, "verify"),
        "suites": [r.to_dict() for r in ordered],
        "points": [{"id": oc["id"], "error": oc["error"], "skips": oc["skips"],
                    "residuals": {k: [c.residuals for c in v] for k, v in oc["checks"].items()}}
                   for oc in outcomes],
        "invariants": [row for oc in outcomes for row in oc["rows"]],
    }
    _write(Path(f"{cfg.output}_report.json"), dumps(report))
    if any(not r.passed for r in ordered):
        code = EXIT_FAIL
    elif any(r.evaluated == 0 and r.skipped > 0 for r in ordered):
        code = EXIT_DOMAIN
    else:
        code = EXIT_PASS
    return ordered, code


def _scan_row(cfg: RunConfig, z, p, c: float, t: float) -> dict:
    spec = cfg.prepotential
    nan = float("nan")
    row = {"c": c, "t": t, "norm": nan, "omega9": nan, "lie_analytic": nan, "lie_numeric": nan,
           "admissible": False}
    try:
        pt = build_cmap_point(build_chart(spec, z), p)
        scalars = hamiltonians_c(pt, c)
        pi = point_invariants(pt)
        om = omega_coeffs(pt, pi.rsums, cfg.omega_table)
        row["norm"] = curvature_norm(pi, c, "blocks")
        row["omega9"] = float(om[8])
        row["lie_analytic"] = lie_from_omegas(om, c, scalars.fHc)
        row["lie_numeric"] = numeric_xi_derivative(spec, z, p, c)
        row["admissible"] = True
    except CmapLabError:
        pass
    return row


def scan_rows(cfg: RunConfig) -> list:
    if cfg.scan is None:
        raise ConfigError("scan section required", field="scan")
    points = cfg.all_points()
    if not 0 <= cfg.scan.point < len(points):
        raise ConfigError(f"point index out of range (have {len(points)})", field="scan.point")
    base = points[cfg.scan.point]
    ts = np.linspace(cfg.scan.range[0], cfg.scan.range[1], cfg.scan.steps)
    dim = cfg.prepotential.dim
    rows = []
    for c in cfg.c_values:
        for t in ts:
            t = float(t)
            if cfg.scan.curve == "xi_flow":
                z, p = np.exp(t) * base.z, np.exp(t) * base.p
            else:
                s = np.concatenate([base.z.real, base.z.imag, base.p])
                s[cfg.scan.index] += t
                z, p = s[:dim] + 1j * s[dim:2 * dim], s[2 * dim:]
            rows.append(_scan_row(cfg, z, p, c, t))
    return rows


def cmd_scan(cfg: RunConfig) -> int:
    rows = scan_rows(cfg)
    comment = f"cmaplab {__version__} scan curve={cfg.scan.curve} seed={cfg.seed} omega_table={cfg.omega_table}"
    _write(Path(f"{cfg.output}_scan.csv"), csv_text(SCAN_COLUMNS, rows, comment))
    return EXIT_PASS


def cmd_certify(cfg: RunConfig) -> int:
    cs = [c for c in cfg.c_values if c > 0]
    if not cs:
        raise ConfigError("certificate requires at least one c > 0", field="c_values")
    region = cfg.sample if cfg.sample else [(p.z, p.p) for p in cfg.points]
    out = {"header": header(cfg, "certify"), "certificates": []}
    try:
        for c in cs:
            cert = inhomogeneity_certificate(cfg.prepotential, region, c, cfg.cert_samples,
                                             cfg.seed, cfg.cert_theta)
            out["certificates"].append(cert.to_dict())
    except NoAdmissibleSampleError as exc:
        out["error"] = str(exc)
        _write(Path(f"{cfg.output}_cert.json"), dumps(out))
        return EXIT_NO_SAMPLES
    out["pass"] = all(c["pass"] for c in out["certificates"])
    _write(Path(f"{cfg.output}_cert.json"), dumps(out))
    return EXIT_PASS if out["pass"] else EXIT_FAIL


def cmd_curvature(cfg: RunConfig, point_id: str) -> int:
    matches = [p for p in cfg.all_points() if p.id == point_id]
    if not matches:
        raise ConfigError(f"no point with id {point_id!r}", field="points")
    point = matches[0]
    pt = build_cmap_point(build_chart(cfg.prepotential, point.z), point.p)
    pi = point_invariants(pt)
    out = {"header": header(cfg, "curvature"), "point": point_id, "index_order": "slot1-major",
           "dim": pt.dim, "z": point.z, "p": point.p, "gN": pt.gN,
           "Rm_N": pi.rm_n.entries.ravel(), "Rm_HK": pi.hk.entries.ravel(), "deformed": []}
    for c in cfg.c_values:
        try:
            tc = rm_tilde(pt, hamiltonians_c(pt, c), pi.rm_n, pi.hk)
        except OneLoopDomainError:
            out["deformed"].append({"c": c, "admissible": False})
            continue
        out["deformed"].append({"c": c, "admissible": True, "gH": tc.gH,
                                "Rm_HP": tc.rm_hp.entries.ravel(),
                                "Rm_tilde": tc.tilde.entries.ravel()})
    _write(Path(f"{cfg.output}_curvature_{point_id}.json"), dumps(out))
    return EXIT_PASS


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="override the config seed")
    common.add_argument("--out", default=argparse.SUPPRESS, help="override the output prefix")
    common.add_argument("--threads", type=int, default=argparse.SUPPRESS, help="worker threads for point evaluation")
    common.add_argument("--tol-scale", type=float, default=argparse.SUPPRESS, help="multiply every tolerance")
    parser = argparse.ArgumentParser(prog="cmaplab", parents=[common],
                                     description="Curvature checks for rigid and deformed c-map spaces.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (("verify", "run all verification suites"), ("scan", "scan the invariant along a curve"),
                       ("certify", "search for a non-constancy witness"), ("curvature", "dump curvature tensors")):
        p = sub.add_parser(name, parents=[common], help=text)
        p.add_argument("config", help="run configuration (JSON)")
        if name == "curvature":
            p.add_argument("--point", required=True, help="point id to dump")
    return parser


def apply_overrides(cfg: RunConfig, args: argparse.Namespace) -> RunConfig:
    if hasattr(args, "seed"):
        cfg = replace(cfg, seed=args.seed)
    if hasattr(args, "out"):
        cfg = replace(cfg, output=args.out)
    if hasattr(args, "tol_scale"):
        if not args.tol_scale > 0:
            raise ConfigError("must be positive", field="--tol-scale")
        cfg = replace(cfg, tolerances=cfg.tolerances.scaled(args.tol_scale))
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = apply_overrides(load_config(args.config), args)
        threads = max(1, getattr(args, "threads", 1))
        if args.command == "verify":
            results, code = cmd_verify(cfg, threads)
            for r in results:
                status = "PASS" if r.passed else "FAIL"
                if r.evaluated == 0:
                    status = "SKIP"
                print(f"{r.name:18s} {status}  worst={r.worst:.3g}  evaluated={r.evaluated}"
                      f" skipped={r.skipped}" + (f"  point={r.offending}" if not r.passed else ""))
            return code
        if args.command == "scan":
            return cmd_scan(cfg)
        if args.command == "certify":
            return cmd_certify(cfg)
        return cmd_curvature(cfg, args.point)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
