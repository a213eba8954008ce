"""Adapted frames, R-sums, the curvature-norm invariant and its Ξ-derivative."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .cmap import CmapPoint, HkqkScalars, build_cmap_point, hamiltonians_c
from .cask import build_chart
from .curvature import (CurvatureTensor, TwistCurvature, inner_product, rm_hk,
                        riemann_rigid, rm_tilde)
from .errors import CmapLabError, FrameDegeneracyError, NoAdmissibleSampleError, OneLoopDomainError

PATTERNS = ("0", "1", "2a", "2b", "3", "4")
# slot pattern: True = HZ frame vector e_i, False = perp vector ε_μ
_SLOTS = {
    "0": (True, True, True, True),
    "1": (False, True, True, True),
    "2a": (False, False, True, True),
    "2b": (False, True, False, True),
    "3": (False, False, False, True),
    "4": (False, False, False, False),
}


@dataclass(frozen=True)
class AdaptedFrame:
    e: np.ndarray      # (4, dim): Z, I1Z, I2Z, I3Z normalized, g_N = -1
    eps: np.ndarray    # (dim - 4, dim): g_N-orthonormal basis of (HZ)⊥

    @property
    def matrix(self) -> np.ndarray:
        """Frame vectors as columns, HZ part first."""
        return np.concatenate([self.e, self.eps]).T


def adapted_frame(pt: CmapPoint, pivot: float = 1e-10) -> AdaptedFrame:
    """Deterministic pseudo-orthonormal frame adapted to TN = HZ ⊕ (HZ)⊥.

    The perp part is modified Gram-Schmidt on the coordinate basis projected
    off HZ, in index order; candidates whose residual norm falls below
    ``pivot`` times their projected norm are discarded.
    """
    g = pt.gN
    dim = pt.dim
    norm2 = float(pt.Z @ g @ pt.Z)
    if not norm2 < 0:
        raise FrameDegeneracyError("g_N(Z, Z) must be negative")
    e = np.array(pt.hz_tuple()) / np.sqrt(-norm2)
    eps = []
    for j in range(dim):
        v = np.zeros(dim)
        v[j] = 1.0
        v = v + sum((v @ g @ ea) * ea for ea in e)
        ref = abs(float(v @ g @ v))
        if ref == 0.0:
            continue
        for u in eps:
            v = v - (v @ g @ u) * u
        for ea in e:
            v = v + (v @ g @ ea) * ea
        n2 = float(v @ g @ v)
        if n2 <= pivot * max(ref, 1.0):
            continue
        eps.append(v / np.sqrt(n2))
        if len(eps) == dim - 4:
            break
    if len(eps) < dim - 4:
        raise FrameDegeneracyError(f"only {len(eps)} of {dim - 4} perp vectors survived")
    return AdaptedFrame(e, np.array(eps))


def frame_components(T: np.ndarray, frame: AdaptedFrame) -> np.ndarray:
    E = frame.matrix
    out = np.tensordot(T, E, axes=([0], [0]))
    out = np.tensordot(out, E, axes=([0], [0]))
    out = np.tensordot(out, E, axes=([0], [0]))
    return np.tensordot(out, E, axes=([0], [0]))


def _block(Tf: np.ndarray, pattern: str) -> np.ndarray:
    sl = tuple(slice(0, 4) if hz else slice(4, None) for hz in _SLOTS[pattern])
    return Tf[sl]


@dataclass(frozen=True)
class RSums:
    RN: dict
    RHK: dict
    RC: dict

    def as_row(self) -> dict:
        out = {}
        for name, d in (("RN", self.RN), ("RHK", self.RHK), ("RC", self.RC)):
            for k in PATTERNS:
                out[f"{name}{k}"] = d[k]
        return out


def r_sums(pt: CmapPoint, frame: AdaptedFrame, rm_n: CurvatureTensor | None = None,
           hk: CurvatureTensor | None = None) -> RSums:
    """All eighteen R-sums, summed literally over every index tuple."""
    rm_n = riemann_rigid(pt) if rm_n is None else rm_n
    hk = rm_hk(pt) if hk is None else hk
    Nf = frame_components(rm_n.entries, frame)
    Hf = frame_components(hk.entries, frame)
    RN, RHK, RC = {}, {}, {}
    for k in PATTERNS:
        bn, bh = _block(Nf, k), _block(Hf, k)
        RN[k] = float(np.sum(bn * bn))
        RHK[k] = float(np.sum(bh * bh))
        RC[k] = float(np.sum(bn * bh))
    return RSums(RN, RHK, RC)


# weights of each pattern in ĝ^c_H for an abstract curvature tensor:
# (multiplicity, number of HZ slots)
_BLOCK_WEIGHTS = {"0": (1, 4), "1": (4, 3), "2a": (2, 2), "2b": (4, 2), "3": (4, 1), "4": (1, 0)}

_HP_NORM_CACHE: dict = {}


def hp_norm_constant(pt: CmapPoint, tc: TwistCurvature) -> float:
    """‖Rm_HP‖² in g^c_H; depends only on the dimension and is cached per dim."""
    key = pt.dim
    if key not in _HP_NORM_CACHE:
        _HP_NORM_CACHE[key] = inner_product(tc.rm_hp.entries, tc.rm_hp.entries, tc.gH)
    return _HP_NORM_CACHE[key]


def block_sum(sums: dict, a: float, b: float) -> float:
    """Σ over patterns of mult · (-1)^k a^(4+k) / b^k · R_pattern, k = number of
    HZ slots: each HZ slot of (g^c_H)⁻¹ contributes -a²/b, each perp slot a."""
    total = 0.0
    for k, (mult, n_hz) in _BLOCK_WEIGHTS.items():
        total += mult * (-1) ** n_hz * a ** (4 + n_hz) / b ** n_hz * sums[k]
    return total


@dataclass
class NormBlocks:
    rm_n: float
    rm_hk: float
    cross: float
    hp: float


def norm_blocks(scalars: HkqkScalars, rsums: RSums, hp_norm: float) -> NormBlocks:
    """The four pieces of ‖Rm~‖²: (1/a²)‖Rm_N‖², (1/a²b²)‖Rm_HK‖², the
    (1/a²b) ĝ(Rm_N, Rm_HK) cross term and ‖Rm_HP‖², with a = f^c_Z,
    b = f^c_H."""
    a, b = scalars.fZc, scalars.fHc
    return NormBlocks(
        rm_n=block_sum(rsums.RN, a, b) / a**2,
        rm_hk=block_sum(rsums.RHK, a, b) / (a**2 * b**2),
        cross=block_sum(rsums.RC, a, b) / (a**2 * b),
        hp=hp_norm,
    )


def norm_via_blocks(pt: CmapPoint, scalars: HkqkScalars, frame: AdaptedFrame,
                    rsums: RSums, hp_norm: float, cross_sign: float = -1.0) -> float:
    """‖Rm~‖²_{g^c_H} from the frame block expansion.

    ``cross_sign`` multiplies ``2/(a²b) ĝ(Rm_N, Rm_HK)``; expanding
    ‖Rm_N/a - Rm_HK/(ab)‖² gives -1.
    """
    if not scalars.admissible:
        raise OneLoopDomainError("scalars are not admissible")
    nb = norm_blocks(scalars, rsums, hp_norm)
    return nb.rm_n + nb.rm_hk + cross_sign * 2 * nb.cross + hp_norm / 64.0


def norm_direct(tensor: np.ndarray, gH: np.ndarray) -> float:
    return inner_product(tensor, tensor, gH)


# ---------------------------------------------------------------------------
# Ξ-derivative coefficients


def omega_coeffs_printed(fZ: float, rs: RSums) -> np.ndarray:
    """Ω̃_1..Ω̃_9 from the reference table, as an array indexed 0..8."""
    N3, N4 = rs.RN["3"], rs.RN["4"]
    C3, C4 = rs.RC["3"], rs.RC["4"]
    H = rs.RHK
    H0, H1, H2a, H2b, H3, H4 = (H[k] for k in PATTERNS)
    f = fZ
    om = np.zeros(9)
    om[8] = (36 * N3 + N4) / 128
    om[7] = -(f * (260 * N3 - 6 * N4) - 4 * C3 + C4) / 64
    om[6] = (f**2 * (572 * N3 + 14 * N4) + f * (28 * C3 - 7 * C4)) / 32
    om[5] = -(f**3 * (788 * N3 - 14 * N4) + f**2 * (-36 * C3 + 17 * C4)
              + f * (-6 * H0 + 20 * H1 - 8 * H2a - 16 * H2b + 12 * H3 - 2 * H4)) / 16
    om[4] = (f**4 * (660 * N3) + f**3 * (-36 * C3 - 15 * C4)
             + f**2 * (-30 * H0 + 60 * H1 - 8 * H2a - 16 * H2b - 12 * H3 + 6 * H4)) / 8
    om[3] = -(f**5 * (204 * N3 + 14 * N4) + f**4 * (84 * C3 - 5 * C4)
              + f**3 * (-60 * H0 + 40 * H1 + 16 * H2a + 32 * H2b - 24 * H3 - 4 * H4)) / 4
    om[2] = (f**6 * (20 * N3 - 14 * N4) + f**5 * (-12 * C3 + 19 * C4)
             + f**4 * (-60 * H0 - 40 * H1 + 16 * H2a + 32 * H2b + 24 * H3 - 4 * H4)) / 2
    om[1] = -(f**7 * (28 * N3 + 6 * N4) + f**6 * (-44 * C3 - 13 * C4)
              + f**5 * (-30 * H0 - 60 * H1 - 8 * H2a - 16 * H2b + 12 * H3 + 6 * H4))
    om[0] = -2 * (f**8 * (8 * N3 + N4) + f**7 * (-20 * C3 - 3 * C4)
                  + f**6 * (6 * H0 + 20 * H1 + 8 * H2a + 16 * H2b + 12 * H3 + 2 * H4))
    return om


def omega_coeffs_derived(fZ: float, rs: RSums) -> np.ndarray:
    """Ω̃_1..Ω̃_9 re-derived from the block expansion with the cross term
    -2/(a²b) ĝ(Rm_N, Rm_HK) implied by Rm~ and the Ξ-weights
    (f_Z: 2, R^N: -4, R^C: -2, R^HK: 0)."""
    N3, N4 = rs.RN["3"], rs.RN["4"]
    C3, C4 = rs.RC["3"], rs.RC["4"]
    H0, H1, H2a, H2b, H3, H4 = (rs.RHK[k] for k in PATTERNS)
    f = fZ
    om = np.zeros(9)
    om[8] = -(4 * N3 - N4) / 128
    om[7] = -(f * (20 * N3 - 6 * N4) + 4 * C3 - C4) / 64
    om[6] = -7 * f * (f * (4 * N3 - 2 * N4) + 4 * C3 - C4) / 32
    om[5] = f * (f**2 * (12 * N3 + 14 * N4) + f * (-36 * C3 + 17 * C4)
                 + (6 * H0 - 20 * H1 + 8 * H2a + 16 * H2b - 12 * H3 + 2 * H4)) / 16
    om[4] = f**2 * (f**2 * (60 * N3) + f * (36 * C3 + 15 * C4)
                    + (-30 * H0 + 60 * H1 - 8 * H2a - 16 * H2b - 12 * H3 + 6 * H4)) / 8
    om[3] = f**3 * (f**2 * (36 * N3 - 14 * N4) + f * (84 * C3 - 5 * C4)
                    + (60 * H0 - 40 * H1 - 16 * H2a - 32 * H2b + 24 * H3 + 4 * H4)) / 4
    om[2] = -f**4 * (f**2 * (20 * N3 + 14 * N4) + f * (-12 * C3 + 19 * C4)
                     + (60 * H0 + 40 * H1 - 16 * H2a - 32 * H2b - 24 * H3 + 4 * H4)) / 2
    om[1] = -f**5 * (f**2 * (28 * N3 + 6 * N4) + f * (44 * C3 + 13 * C4)
                     + (-30 * H0 - 60 * H1 - 8 * H2a - 16 * H2b + 12 * H3 + 6 * H4))
    om[0] = -2 * f**6 * (f**2 * (8 * N3 + N4) + f * (20 * C3 + 3 * C4)
                         + (6 * H0 + 20 * H1 + 8 * H2a + 16 * H2b + 12 * H3 + 2 * H4))
    return om


OMEGA_TABLES = {"printed": omega_coeffs_printed, "derived": omega_coeffs_derived}


def omega_coeffs(pt: CmapPoint, rsums: RSums, table: str = "printed") -> np.ndarray:
    """Ω̃_1..Ω̃_9 at a point, evaluated with the undeformed f_Z."""
    try:
        fn = OMEGA_TABLES[table]
    except KeyError:
        raise ValueError(f"unknown Omega table {table!r}; choose from {sorted(OMEGA_TABLES)}") from None
    return fn(pt.fZ, rsums)


def lie_from_omegas(omegas: np.ndarray, c: float, fHc: float) -> float:
    return float(sum(omegas[k - 1] * c**k for k in range(1, 10)) / fHc**7)


# ---------------------------------------------------------------------------
# point evaluation


@dataclass
class PointInvariants:
    pt: CmapPoint
    frame: AdaptedFrame
    rsums: RSums
    rm_n: CurvatureTensor
    hk: CurvatureTensor


def point_invariants(pt: CmapPoint) -> PointInvariants:
    rm_n = riemann_rigid(pt)
    hk = rm_hk(pt)
    frame = adapted_frame(pt)
    return PointInvariants(pt, frame, r_sums(pt, frame, rm_n, hk), rm_n, hk)


def curvature_norm(pi: PointInvariants, c: float, method: str = "blocks") -> float:
    """‖Rm~‖²_{g^c_H} at the point, by ``"blocks"`` or ``"direct"``."""
    scalars = hamiltonians_c(pi.pt, c)
    tc = rm_tilde(pi.pt, scalars, pi.rm_n, pi.hk)
    if method == "direct":
        return norm_direct(tc.tilde.entries, tc.gH)
    if method == "blocks":
        return norm_via_blocks(pi.pt, scalars, pi.frame, pi.rsums, hp_norm_constant(pi.pt, tc))
    raise ValueError(f"unknown norm method {method!r}")


def xi_point(spec, z, p, t: float) -> CmapPoint:
    s = np.exp(t)
    return build_cmap_point(build_chart(spec, s * np.asarray(z, dtype=complex)),
                            s * np.asarray(p, dtype=float))


XI_STEP = 1e-3


def numeric_xi_derivative(spec, z, p, c: float, t: float = XI_STEP, method: str = "blocks") -> float:
    """Ξ(‖Rm~‖²) by central differences along the exact scaling flow,
    ``t`` and ``t/2`` combined by one Richardson step."""
    def F(s):
        pt = xi_point(spec, z, p, s)
        scalars = hamiltonians_c(pt, c)
        if not scalars.admissible:
            raise OneLoopDomainError("Xi-flow left the admissible region")
        return curvature_norm(point_invariants(pt), c, method)

    d_h = (F(t) - F(-t)) / (2 * t)
    d_h2 = (F(t / 2) - F(-t / 2)) / t
    return (4 * d_h2 - d_h) / 3


def relative_residual(analytic: float, numeric: float, zero_abs: float = 1e-8) -> float:
    """|a - n| / max(|a|, |n|); absolute when both are below ``zero_abs``."""
    scale = max(abs(analytic), abs(numeric))
    diff = abs(analytic - numeric)
    return diff if scale <= zero_abs else diff / scale


@dataclass(frozen=True)
class LieCheck:
    analytic: float
    numeric: float
    residual: float


def lie_derivative_check(spec, pt: CmapPoint, c: float, table: str = "printed",
                         pi: PointInvariants | None = None, t: float = XI_STEP,
                         zero_abs: float = 1e-8) -> LieCheck:
    pi = point_invariants(pt) if pi is None else pi
    scalars = hamiltonians_c(pt, c)
    analytic = lie_from_omegas(omega_coeffs(pt, pi.rsums, table), c, scalars.fHc)
    numeric = numeric_xi_derivative(spec, pt.chart.z, pt.p, c, t)
    return LieCheck(analytic, numeric, relative_residual(analytic, numeric, zero_abs))


def fit_omegas(spec, pt: CmapPoint, cs, t: float = XI_STEP) -> tuple:
    """Least-squares Ω̃_1..Ω̃_9 from numeric Ξ-derivatives at the given c values.

    Columns are scaled by fZ^k so the Vandermonde system stays well conditioned.
    """
    cs = np.asarray(cs, dtype=float)
    ys = []
    for c in cs:
        fHc = hamiltonians_c(pt, c).fHc
        ys.append(numeric_xi_derivative(spec, pt.chart.z, pt.p, c, t) * fHc**7)
    u = cs / pt.fZ
    V = np.vander(u, 10, increasing=True)
    sol = np.linalg.lstsq(V, np.array(ys), rcond=None)[0]
    return sol[1:] / pt.fZ ** np.arange(1, 10), sol[0]


def c_grid(fZ: float, count: int = 12) -> np.ndarray:
    """``count`` log-spaced c values inside (0, 1.8 fZ), all admissible."""
    return np.geomspace(1e-2 * fZ, 1.8 * fZ, count)


# ---------------------------------------------------------------------------
# reports


CSV_COLUMNS = (["point_id", "c", "fZ", "fZc", "fHc", "RN3", "RN4"]
               + [f"RHK{k}" for k in PATTERNS] + ["RC3", "RC4"]
               + [f"omega{k}" for k in range(1, 10)]
               + ["norm_blocks", "norm_direct", "lie_analytic", "lie_numeric", "residual", "admissible"])


@dataclass
class InvariantReport:
    point_id: str
    c: float
    fZ: float
    fZc: float
    fHc: float
    rsums: RSums | None
    omega: list = field(default_factory=list)
    norm_blocks: float = float("nan")
    norm_direct: float = float("nan")
    lie_analytic: float = float("nan")
    lie_numeric: float = float("nan")
    residual: float = float("nan")
    admissible: bool = False

    def row(self) -> dict:
        rs = self.rsums
        vals = {"point_id": self.point_id, "c": self.c, "fZ": self.fZ, "fZc": self.fZc, "fHc": self.fHc}
        nan = float("nan")
        vals["RN3"] = rs.RN["3"] if rs else nan
        vals["RN4"] = rs.RN["4"] if rs else nan
        for k in PATTERNS:
            vals[f"RHK{k}"] = rs.RHK[k] if rs else nan
        vals["RC3"] = rs.RC["3"] if rs else nan
        vals["RC4"] = rs.RC["4"] if rs else nan
        for k in range(1, 10):
            vals[f"omega{k}"] = self.omega[k - 1] if self.omega else nan
        vals.update(norm_blocks=self.norm_blocks, norm_direct=self.norm_direct,
                    lie_analytic=self.lie_analytic, lie_numeric=self.lie_numeric,
                    residual=self.residual, admissible=self.admissible)
        return {k: vals[k] for k in CSV_COLUMNS}


def invariant_report(spec, pt: CmapPoint, c: float, point_id: str = "0", table: str = "printed",
                     pi: PointInvariants | None = None, zero_abs: float = 1e-8) -> InvariantReport:
    fZc = pt.fZ - 0.5 * c
    rep = InvariantReport(point_id, float(c), pt.fZ, fZc, pt.fH - 0.5 * c, None)
    try:
        hamiltonians_c(pt, c)
    except OneLoopDomainError:
        return rep
    pi = point_invariants(pt) if pi is None else pi
    rep.rsums = pi.rsums
    rep.omega = [float(x) for x in omega_coeffs(pt, pi.rsums, table)]
    rep.norm_blocks = curvature_norm(pi, c, "blocks")
    rep.norm_direct = curvature_norm(pi, c, "direct")
    try:
        chk = lie_derivative_check(spec, pt, c, table, pi, zero_abs=zero_abs)
    except OneLoopDomainError:
        return rep
    rep.lie_analytic, rep.lie_numeric, rep.residual = chk.analytic, chk.numeric, chk.residual
    rep.admissible = True
    return rep


# ---------------------------------------------------------------------------
# certificate


@dataclass
class Certificate:
    c: float
    witness_point: dict | None
    lie_value: float
    omega9: float
    norm: float
    relative: float
    threshold: float
    samples: int
    admissible_samples: int
    note: str = ""
    lie_value_c0: float = 0.0

    @property
    def passed(self) -> bool:
        return self.relative > self.threshold

    def to_dict(self) -> dict:
        return {"c": self.c, "witness_point": self.witness_point, "lie_value": self.lie_value,
                "omega9": self.omega9, "norm": self.norm, "relative": self.relative,
                "threshold": self.threshold, "samples": self.samples,
                "admissible_samples": self.admissible_samples, "note": self.note,
                "lie_value_c0": self.lie_value_c0,
                "pass": self.passed}


def sample_box(spec, box: dict, count: int, rng: np.random.Generator):
    """Uniform samples of (z, p) in a box; yields only cone-admissible charts.

    ``box`` holds ``re_z``, ``im_z`` (lists of [lo, hi] per component of z)
    and ``p`` ([lo, hi] for every fiber component).
    """
    dim = spec.dim
    re = np.asarray(box["re_z"], dtype=float).reshape(dim, 2)
    im = np.asarray(box["im_z"], dtype=float).reshape(dim, 2)
    plo, phi = box.get("p", [0.0, 0.0])
    for _ in range(count):
        z = rng.uniform(re[:, 0], re[:, 1]) + 1j * rng.uniform(im[:, 0], im[:, 1])
        p = rng.uniform(plo, phi, 2 * dim)
        try:
            yield z, p, build_cmap_point(build_chart(spec, z), p)
        except CmapLabError:
            yield z, p, None


def _explicit_points(spec, points):
    for z, p in points:
        z = np.asarray(z, dtype=complex)
        p = np.asarray(p, dtype=float)
        try:
            yield z, p, build_cmap_point(build_chart(spec, z), p)
        except CmapLabError:
            yield z, p, None


def inhomogeneity_certificate(spec, region, c: float, samples: int = 16, seed: int = 0,
                              theta: float = 1e-4) -> Certificate:
    """Search a region for the sample maximizing |Ξ‖Rm~‖²| / |‖Rm~‖²|.

    ``region`` is a sampling box (see :func:`sample_box`) or an explicit list
    of ``(z, p)`` pairs. The derivative is the numeric one along the exact
    scaling flow, so the certificate does not depend on the Ω̃ tables. Ties
    go to the lowest sample index.
    """
    if c < 0:
        raise ValueError("deformation parameter c must be non-negative")
    if isinstance(region, dict):
        candidates = sample_box(spec, region, samples, np.random.default_rng(seed))
    else:
        region = list(region)
        samples = len(region)
        candidates = _explicit_points(spec, region)
    best = None
    n_ok = 0
    for idx, (z, p, pt) in enumerate(candidates):
        if pt is None or not pt.fZ - 0.5 * c > 0:
            continue
        try:
            lie = numeric_xi_derivative(spec, z, p, c)
        except OneLoopDomainError:
            continue
        n_ok += 1
        pi = point_invariants(pt)
        norm = curvature_norm(pi, c, "blocks")
        rel = abs(lie) / max(abs(norm), 1e-300)
        if best is None or rel > best[0]:
            om9 = float(omega_coeffs(pt, pi.rsums)[8])
            best = (rel, idx, z, p, lie, norm, om9)
    if best is None:
        raise NoAdmissibleSampleError(f"none of {samples} samples is admissible for c = {c}")
    rel, idx, z, p, lie, norm, om9 = best
    witness = {"index": idx, "z": [[float(v.real), float(v.imag)] for v in z],
               "p": [float(v) for v in p]}
    lie_c0 = float(numeric_xi_derivative(spec, z, p, 0.0))
    note = ""
    if spec.kind == "quadratic":
        note = "Rm_N = 0; the Xi-derivative is driven by the Rm_HK terms"
    return Certificate(float(c), witness, float(lie), om9, float(norm), float(rel), theta,
                       samples, n_ok, note, lie_c0)
