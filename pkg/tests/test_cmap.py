import numpy as np
import pytest

from cmaplab.cmap import build_cmap_point, cmap_point, hamiltonians_c
from cmaplab.errors import OneLoopDomainError
from cmaplab.flows import verify_rotating_data, xi_flow_point, z_flow

from conftest import FAMILIES, sample_points

POINTS = [pt for name in FAMILIES for pt in sample_points(name, 3, seed=21)]


@pytest.mark.parametrize("pt", POINTS)
def test_quaternionic_hermitian_structure(pt):
    I1, I2, I3 = pt.complex_structures
    eye = np.eye(pt.dim)
    for I in (I1, I2, I3):
        assert np.allclose(I @ I, -eye, atol=1e-10)
        # hermitian: g_N(I., I.) = g_N
        assert np.allclose(I.T @ pt.gN @ I, pt.gN, atol=1e-10)
    assert np.allclose(I1 @ I2, I3, atol=1e-12)
    assert np.allclose(I2 @ I3, I1, atol=1e-10)
    assert np.allclose(I3 @ I1, I2, atol=1e-10)
    for k in (1, 2, 3):
        w = pt.kahler_form(k)
        assert np.allclose(w, -w.T, atol=1e-10)


@pytest.mark.parametrize("pt", POINTS)
def test_signature_and_hz_span(pt):
    ev = np.linalg.eigvalsh(pt.gN)
    assert (ev < 0).sum() == 4
    E = np.array(pt.hz_tuple()).T
    G = E.T @ pt.gN @ E
    assert np.allclose(G, -2 * pt.fZ * np.eye(4), atol=1e-10 * pt.fZ)
    m = pt.chart.dim
    Z, I1Z, I2Z, I3Z = pt.hz_tuple()
    # Z and I1 Z are horizontal, I2 Z and I3 Z vertical
    assert np.allclose(Z[m:], 0) and np.allclose(I1Z[m:], 0)
    assert np.allclose(I2Z[:m], 0) and np.allclose(I3Z[:m], 0)


def test_fz_positive_and_independent_of_fiber():
    spec = FAMILIES["cubic1"]
    z = np.array([1.0, 0.3 - 1.0j])
    a = cmap_point(spec, z, np.zeros(4))
    b = cmap_point(spec, z, np.array([0.5, -0.2, 0.9, 0.1]))
    assert a.fZ > 0
    assert a.fZ == b.fZ and a.fH == -a.fZ


def test_xi_scaling_of_scalars():
    spec = FAMILIES["cubic2"]
    pt = sample_points("cubic2", 1, seed=22)[0]
    t = 0.17
    moved = xi_flow_point(spec, pt.chart.z, pt.p, t)
    assert np.allclose(moved.Xi, np.exp(t) * pt.Xi, atol=1e-12)
    assert moved.fZ == pytest.approx(np.exp(2 * t) * pt.fZ, rel=1e-12)
    assert np.allclose(moved.gN, pt.gN, atol=1e-10)


def test_hamiltonians_c_edges():
    pt = POINTS[0]
    s = hamiltonians_c(pt, 0.0)
    assert (s.fZc, s.fHc) == (pt.fZ, pt.fH)
    s = hamiltonians_c(pt, 0.5 * pt.fZ)
    assert s.fHc == pytest.approx(-s.fZc - s.c)
    assert s.admissible
    with pytest.raises(OneLoopDomainError):
        hamiltonians_c(pt, 2 * pt.fZ)
    with pytest.raises(OneLoopDomainError):
        hamiltonians_c(pt, 3 * pt.fZ)
    with pytest.raises(ValueError):
        hamiltonians_c(pt, -0.1)


@pytest.mark.parametrize("name", list(FAMILIES))
def test_rotating_identities(name):
    pt = sample_points(name, 1, seed=23)[0]
    rep = verify_rotating_data(pt.chart.spec, pt)
    assert rep.passed(1e-7), rep.residuals


def test_z_flow_is_phase_rotation():
    spec = FAMILIES["cubic1"]
    z = np.array([1.0 + 0.05j, 0.2 - 1.1j])
    zt, _ = z_flow(spec, z, 0.3)
    assert np.allclose(zt, np.exp(-0.3j) * z, atol=1e-9)


def test_fiber_shape_validation():
    pt = POINTS[0]
    with pytest.raises(ValueError):
        build_cmap_point(pt.chart, np.zeros(3))


def test_point_serialization_is_deterministic():
    pt = POINTS[1]
    again = build_cmap_point(pt.chart, pt.p)
    assert pt.dumps() == again.dumps()
    assert set(pt.to_dict()) >= {"gN", "I1", "I2", "I3", "Z", "fZ", "fH", "omegaH"}
