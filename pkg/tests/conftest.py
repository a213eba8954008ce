import numpy as np
import pytest

from cmaplab import PrepotentialSpec, build_cmap_point, build_chart
from cmaplab.errors import CmapLabError

FAMILIES = {
    "quadratic1": PrepotentialSpec.quadratic(np.diag([-1.0, 1.0])),
    "quadratic2": PrepotentialSpec.quadratic(np.diag([-1.0, 1.0, 1.0])),
    "cubic1": PrepotentialSpec.cubic(1, {(1, 1, 1): 1.0}),
    "cubic2": PrepotentialSpec.cubic(2, {(1, 1, 2): 1.0}),
}


def _draw(name, rng):
    n = FAMILIES[name].n
    if name.startswith("quadratic"):
        z0 = rng.uniform(1.8, 2.2) + 1j * rng.uniform(-0.2, 0.2)
        w = rng.uniform(-0.5, 0.5, n) + 1j * rng.uniform(-0.4, 0.4, n)
    else:
        z0 = rng.uniform(0.9, 1.1) + 1j * rng.uniform(-0.1, 0.1)
        w = rng.uniform(-0.5, 0.5, n) + 1j * rng.uniform(-1.5, -0.7, n)
    return np.concatenate([[z0], w])


def sample_points(name, count, seed=0, min_fz=0.0):
    """Seeded admissible c-map points for a named family."""
    spec = FAMILIES[name]
    rng = np.random.default_rng(seed)
    out = []
    tries = 0
    while len(out) < count:
        tries += 1
        assert tries < 50 * count, f"sampling box for {name} is too sparse"
        z = _draw(name, rng)
        p = rng.uniform(-1, 1, 2 * spec.dim)
        try:
            pt = build_cmap_point(build_chart(spec, z), p)
        except CmapLabError:
            continue
        if pt.fZ > min_fz:
            out.append(pt)
    return out


@pytest.fixture(scope="session")
def families():
    return FAMILIES


ACCEPTANCE = {}


def record(criterion, passed, detail):
    ACCEPTANCE[criterion] = (bool(passed), detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {key}: {'PASS' if passed else 'FAIL'}  {detail}")
