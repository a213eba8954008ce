import csv
import json
from pathlib import Path

import numpy as np
import pytest

from cmaplab import cli
from cmaplab.config import parse_config
from cmaplab.errors import ConfigError
from cmaplab.serialize import csv_text, dumps, format_float

CONFIGS = Path(cli.__file__).parent / "configs"


def bundled(name, **changes):
    raw = json.loads((CONFIGS / f"{name}.json").read_text())
    raw.update(changes)
    return raw


def run(tmp_path, raw, *args):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(raw))
    prefix = tmp_path / "out" / "run"
    code = cli.main([*args, str(path), "--out", str(prefix)])
    return code, prefix


def read_scan(prefix):
    lines = Path(f"{prefix}_scan.csv").read_text().splitlines()
    assert lines[0].startswith("# cmaplab")
    return list(csv.DictReader(lines[1:]))


def test_verify_quadratic_passes(tmp_path):
    code, prefix = run(tmp_path, bundled("quadratic"), "verify")
    assert code == 0
    report = json.loads(Path(f"{prefix}_report.json").read_text())
    assert [s["suite"] for s in report["suites"]] == cli.SUITE_ORDER
    assert report["header"]["seed"] == 7
    assert len(report["invariants"]) == 4 * 3


def test_verify_cubic_passes(tmp_path):
    # fails under the default reference table for the cubic family
    code, prefix = run(tmp_path, bundled("cubic"), "verify")
    report = json.loads(Path(f"{prefix}_report.json").read_text())
    failing = [s["suite"] for s in report["suites"] if not s["pass"]]
    assert code == 0, failing


def test_verify_cubic_with_derived_table(tmp_path):
    code, _ = run(tmp_path, bundled("cubic", omega_table="derived"), "verify")
    assert code == 0


def test_verify_reports_domain_skip(tmp_path):
    raw = bundled("quadratic", c_values=[50.0], sample=None)
    code, prefix = run(tmp_path, raw, "verify")
    assert code == 2
    report = json.loads(Path(f"{prefix}_report.json").read_text())
    lie = next(s for s in report["suites"] if s["suite"] == "lie_identity")
    assert lie["evaluated"] == 0 and lie["skipped"] == 1
    assert all(s["pass"] for s in report["suites"])


def test_verify_tol_scale_can_fail(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(bundled("quadratic", sample=None)))
    assert cli.main(["verify", str(path), "--out", str(tmp_path / "r"), "--tol-scale", "1e-12"]) == 1
    assert cli.main(["verify", str(path), "--out", str(tmp_path / "r"), "--tol-scale", "0"]) == 4


def test_scan_xi_flow(tmp_path):
    code, prefix = run(tmp_path, bundled("quadratic"), "scan")
    assert code == 0
    rows = read_scan(prefix)
    assert list(rows[0]) == cli.SCAN_COLUMNS
    assert len(rows) == 3 * 9
    norms = {c: np.array([float(r["norm"]) for r in rows if float(r["c"]) == c]) for c in (0.0, 1.0)}
    assert np.ptp(norms[0.0]) <= 1e-8 * np.abs(norms[0.0]).max()
    assert np.ptp(norms[1.0]) >= 1e-4 * np.abs(norms[1.0]).max()


def test_scan_coordinate_line(tmp_path):
    raw = bundled("cubic", c_values=[0.5], scan={"curve": "coordinate_line", "range": [0.0, 0.01],
                                                 "steps": 2, "index": 3})
    code, prefix = run(tmp_path, raw, "scan")
    rows = read_scan(prefix)
    assert code == 0 and len(rows) == 2
    assert [float(r["t"]) for r in rows] == [0.0, 0.01]
    assert rows[0]["admissible"] == "true"


def test_scan_marks_inadmissible_rows(tmp_path):
    raw = bundled("cubic", c_values=[50.0])
    code, prefix = run(tmp_path, raw, "scan")
    rows = read_scan(prefix)
    assert code == 0
    assert all(r["admissible"] == "false" and r["norm"] == "nan" for r in rows)


def test_certify(tmp_path):
    for name in ("quadratic", "cubic"):
        code, prefix = run(tmp_path, bundled(name), "certify")
        assert code == 0
        out = json.loads(Path(f"{prefix}_cert.json").read_text())
        assert [c["c"] for c in out["certificates"]] == [0.1, 1.0]
        assert out["pass"]


def test_certify_needs_positive_c(tmp_path):
    code, _ = run(tmp_path, bundled("cubic", c_values=[0.0]), "certify")
    assert code == 4


def test_certify_without_admissible_samples(tmp_path):
    raw = bundled("cubic", c_values=[100.0])
    code, prefix = run(tmp_path, raw, "certify")
    assert code == 3
    assert "error" in json.loads(Path(f"{prefix}_cert.json").read_text())


def test_curvature_dump(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(bundled("cubic")))
    prefix = tmp_path / "c"
    assert cli.main(["curvature", str(path), "--point", "a", "--out", str(prefix)]) == 0
    out = json.loads(Path(f"{prefix}_curvature_a.json").read_text())
    assert out["dim"] == 8 and len(out["Rm_N"]) == 8**4
    assert [d["admissible"] for d in out["deformed"]] == [True, True, True]
    assert cli.main(["curvature", str(path), "--point", "zz", "--out", str(prefix)]) == 4


def test_bad_json_reports_position(tmp_path, capsys):
    path = tmp_path / "cfg.json"
    path.write_text('{\n  "seed": 1,\n  oops\n}')
    assert cli.main(["verify", str(path)]) == 4
    assert "line 3" in capsys.readouterr().err
    assert cli.main(["verify", str(tmp_path / "missing.json")]) == 4


@pytest.mark.parametrize("change, field", [
    ({"c_values": [-1]}, "c_values[0]"),
    ({"seed": "x"}, "seed"),
    ({"omega_table": "other"}, "omega_table"),
    ({"scan": {"curve": "spiral"}}, "scan.curve"),
    ({"scan": {"curve": "xi_flow", "steps": 1}}, "scan.steps"),
    ({"points": [{"z": [1.0]}]}, "points[0].z"),
    ({"bogus": 1}, None),
])
def test_config_validation(change, field):
    with pytest.raises(ConfigError) as info:
        parse_config(bundled("cubic", **change))
    if field:
        assert field in str(info.value)


def test_seeded_samples_are_reproducible():
    a = parse_config(bundled("cubic")).all_points()
    b = parse_config(bundled("cubic")).all_points()
    assert [p.id for p in a] == ["a", "s0", "s1", "s2"]
    assert all(np.array_equal(x.z, y.z) and np.array_equal(x.p, y.p) for x, y in zip(a, b))
    c = parse_config(bundled("cubic", seed=8)).all_points()
    assert not np.array_equal(a[1].z, c[1].z)


def test_float_formatting():
    assert format_float(0.1) == "0.10000000000000001"
    assert float(format_float(np.pi)) == np.pi
    assert dumps({"x": float("nan"), "y": [1, 2.5]}) == '{\n  "x": null,\n  "y": [1, 2.5]\n}\n'
    text = csv_text(["a", "b"], [{"a": 1 / 3, "b": True}], "hdr")
    assert text == "# hdr\na,b\n0.33333333333333331,true\n"
