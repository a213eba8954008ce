import numpy as np
import pytest

from cmaplab.cask import (affine_coordinates, build_chart, chart_at_q, fd_christoffel, metric_at_q,
                          omega_affine, s_tensor, solve_special_coordinates, verify_cask_axioms)
from cmaplab.errors import SignatureError
from cmaplab.jets import PrepotentialSpec

from conftest import FAMILIES, sample_points


def test_quadratic_chart_is_flat_and_constant():
    spec = FAMILIES["quadratic2"]
    a = build_chart(spec, np.array([2.0, 0.3 + 0.1j, -0.2j]))
    b = build_chart(spec, np.array([1.9 + 0.1j, -0.4 + 0.2j, 0.1]))
    assert np.allclose(a.g, b.g, atol=1e-14)
    assert np.allclose(a.J, b.J, atol=1e-14)
    assert np.max(np.abs(s_tensor(a))) == 0.0
    assert np.array_equal(a.omega, omega_affine(a.spec.dim))


def test_outside_cone_is_rejected():
    with pytest.raises(SignatureError):
        build_chart(FAMILIES["quadratic1"], np.array([0.2, 1.0]))
    with pytest.raises(SignatureError):
        build_chart(FAMILIES["cubic1"], np.array([1.0, 0.3 + 1.0j]))


def test_euler_field_and_signature():
    for name in FAMILIES:
        for pt in sample_points(name, 5, seed=11):
            ch = pt.chart
            assert np.array_equal(ch.xi, ch.q)
            ev = np.linalg.eigvalsh(ch.g)
            assert (ev < 0).sum() == 2
            assert ch.xi @ ch.g @ ch.xi < 0 and ch.Jxi @ ch.g @ ch.Jxi < 0
            assert np.allclose(ch.J @ ch.J, -np.eye(ch.dim), atol=1e-10)


def test_coordinate_inversion_round_trip():
    spec = FAMILIES["cubic2"]
    z = np.array([1.05 + 0.02j, 0.3 - 1.1j, -0.2 - 0.8j])
    q = affine_coordinates(spec, z)
    back = solve_special_coordinates(spec, q, z + 0.05j)
    assert np.allclose(back, z, atol=1e-12)
    assert np.allclose(chart_at_q(spec, q, z).q, q, atol=1e-12)


def test_metric_derivatives_match_finite_differences():
    spec = FAMILIES["cubic2"]
    ch = build_chart(spec, np.array([1.0, 0.2 - 0.9j, -0.3 - 1.2j]))
    h = 1e-5
    for k in range(ch.dim):
        e = np.zeros(ch.dim)
        e[k] = h
        dg = (metric_at_q(spec, ch.q + e, ch.z) - metric_at_q(spec, ch.q - e, ch.z)) / (2 * h)
        assert np.allclose(dg, ch.dg[k], atol=1e-6)
        cp, cm = chart_at_q(spec, ch.q + e, ch.z), chart_at_q(spec, ch.q - e, ch.z)
        assert np.allclose((cp.dg - cm.dg) / (2 * h), ch.ddg[k], atol=1e-5)


def test_axiom_suite_on_expression_kind():
    spec = PrepotentialSpec.expression(1, "z1**3/z0 - 0.2*z1**2")
    ch = build_chart(spec, np.array([1.0, 0.3 - 1.0j]))
    rep = verify_cask_axioms(ch)
    assert rep.passed, rep.failures


def test_christoffel_oracle_on_sphere():
    # round sphere in stereographic coordinates: Γ^1_11 = -2x/(1+r²)
    def metric(x):
        return 4 / (1 + x @ x) ** 2 * np.eye(2)

    x = np.array([0.3, -0.2])
    G = fd_christoffel(metric, x, 1e-4)
    r2 = x @ x
    assert G[0, 0, 0] == pytest.approx(-2 * x[0] / (1 + r2), rel=1e-8)
    assert G[0, 1, 1] == pytest.approx(2 * x[0] / (1 + r2), rel=1e-8)


def test_chart_serialization():
    ch = build_chart(FAMILIES["cubic1"], np.array([1.0, 0.3 - 1.0j]))
    d = ch.to_dict()
    assert set(d) >= {"z", "q", "g", "J", "omega", "xi"}
    assert ch.dumps() == build_chart(FAMILIES["cubic1"], np.array([1.0, 0.3 - 1.0j])).dumps()
