"""Run configuration: JSON schema, validation and point expansion."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, DomainError
from .jets import PrepotentialSpec
from .suites import Tolerances

CURVES = ("xi_flow", "coordinate_line")
TOP_LEVEL = {"prepotential", "points", "sample", "c_values", "scan", "tolerances", "seed",
             "output", "omega_table", "certificate"}


@dataclass(frozen=True)
class ScanConfig:
    curve: str
    range: tuple
    steps: int
    index: int = 0
    point: int = 0


@dataclass(frozen=True)
class PointConfig:
    id: str
    z: np.ndarray
    p: np.ndarray


@dataclass
class RunConfig:
    prepotential: PrepotentialSpec
    points: list
    c_values: list
    tolerances: Tolerances = field(default_factory=Tolerances)
    seed: int = 0
    output: str = "cmaplab"
    scan: ScanConfig | None = None
    sample: dict | None = None
    omega_table: str = "printed"
    cert_samples: int = 16
    cert_theta: float = 1e-4

    def all_points(self) -> list:
        """Configured points followed by seeded samples from the ``sample`` box."""
        pts = list(self.points)
        if self.sample:
            rng = np.random.default_rng(self.seed)
            box = self.sample
            dim = self.prepotential.dim
            re = np.asarray(box["re_z"], dtype=float).reshape(dim, 2)
            im = np.asarray(box["im_z"], dtype=float).reshape(dim, 2)
            plo, phi = box.get("p", [0.0, 0.0])
            for k in range(int(box.get("count", 0))):
                z = rng.uniform(re[:, 0], re[:, 1]) + 1j * rng.uniform(im[:, 0], im[:, 1])
                pts.append(PointConfig(f"s{k}", z, rng.uniform(plo, phi, 2 * dim)))
        return pts


def _complex_array(raw, name: str) -> np.ndarray:
    out = []
    for i, v in enumerate(raw):
        if isinstance(v, (int, float)) and not isinstance(v, bool):
            out.append(complex(v))
        elif isinstance(v, list) and len(v) == 2 and all(isinstance(x, (int, float)) for x in v):
            out.append(complex(v[0], v[1]))
        else:
            raise ConfigError(f"entry {i} must be a number or a [re, im] pair", field=name)
    return np.array(out, dtype=complex)


def _positive(value, name: str) -> float:
    try:
        v = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"expected a number, got {value!r}", field=name) from None
    if not v > 0:
        raise ConfigError(f"must be positive, got {v}", field=name)
    return v


def _box(raw: dict, dim: int, name: str) -> dict:
    for key in ("re_z", "im_z"):
        arr = np.asarray(raw.get(key, []), dtype=float)
        if arr.shape != (dim, 2):
            raise ConfigError(f"{key} must be {dim} [lo, hi] pairs", field=name)
    if "p" in raw and len(raw["p"]) != 2:
        raise ConfigError("p must be a [lo, hi] pair", field=name)
    return raw


def parse_config(raw: dict) -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError("top level must be a JSON object")
    unknown = sorted(set(raw) - TOP_LEVEL)
    if unknown:
        raise ConfigError(f"unknown keys {unknown}")
    if "prepotential" not in raw:
        raise ConfigError("missing", field="prepotential")
    try:
        spec = PrepotentialSpec.from_dict(raw["prepotential"])
    except (DomainError, ValueError, TypeError, KeyError) as exc:
        raise ConfigError(str(exc), field="prepotential") from None
    dim = spec.dim

    points = []
    for i, entry in enumerate(raw.get("points", [])):
        where = f"points[{i}]"
        if not isinstance(entry, dict) or "z" not in entry:
            raise ConfigError("each point needs a 'z' list", field=where)
        z = _complex_array(entry["z"], f"{where}.z")
        if z.shape != (dim,):
            raise ConfigError(f"z must have {dim} components", field=f"{where}.z")
        p = np.asarray(entry.get("p", [0.0] * (2 * dim)), dtype=float)
        if p.shape != (2 * dim,):
            raise ConfigError(f"p must have {2 * dim} components", field=f"{where}.p")
        points.append(PointConfig(str(entry.get("id", i)), z, p))

    c_values = []
    for i, c in enumerate(raw.get("c_values", [0.0])):
        if isinstance(c, bool) or not isinstance(c, (int, float)) or c < 0:
            raise ConfigError("c values must be non-negative numbers", field=f"c_values[{i}]")
        c_values.append(float(c))

    tol_raw = raw.get("tolerances", {})
    base = Tolerances()
    tol = Tolerances(
        oracle_rel=_positive(tol_raw.get("oracle_rel", base.oracle_rel), "tolerances.oracle_rel"),
        identity_rel=_positive(tol_raw.get("identity_rel", base.identity_rel), "tolerances.identity_rel"),
        zero_abs=_positive(tol_raw.get("zero_abs", base.zero_abs), "tolerances.zero_abs"),
    )

    scan = None
    if raw.get("scan") is not None:
        s = raw["scan"]
        curve = s.get("curve")
        if curve not in CURVES:
            raise ConfigError(f"curve must be one of {CURVES}", field="scan.curve")
        rng = s.get("range", [-0.2, 0.2])
        if len(rng) != 2 or not rng[0] < rng[1]:
            raise ConfigError("range must be [lo, hi] with lo < hi", field="scan.range")
        steps = s.get("steps", 11)
        if not isinstance(steps, int) or steps < 2:
            raise ConfigError("steps must be an integer >= 2", field="scan.steps")
        index = int(s.get("index", 0))
        if curve == "coordinate_line" and not 0 <= index < 4 * dim:
            raise ConfigError(f"index must lie in [0, {4 * dim})", field="scan.index")
        scan = ScanConfig(curve, (float(rng[0]), float(rng[1])), steps, index, int(s.get("point", 0)))

    sample = _box(raw["sample"], dim, "sample") if raw.get("sample") else None
    if not points and not sample:
        raise ConfigError("at least one point or a sample box is required", field="points")

    table = raw.get("omega_table", "printed")
    if table not in ("printed", "derived"):
        raise ConfigError("must be 'printed' or 'derived'", field="omega_table")
    cert = raw.get("certificate", {})
    seed = raw.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise ConfigError("must be an integer", field="seed")
    return RunConfig(spec, points, c_values, tol, seed, str(raw.get("output", "cmaplab")), scan,
                     sample, table, int(cert.get("samples", 16)),
                     _positive(cert.get("theta", 1e-4), "certificate.theta"))


def load_config(path) -> RunConfig:
    text = Path(path).read_text()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return parse_config(raw)
