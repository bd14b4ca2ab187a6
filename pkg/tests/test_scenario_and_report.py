import json
import math

import numpy as np
import pytest

from ambientgeom.errors import ExpressionError, ScenarioError
from ambientgeom.report import CheckRecord, VerificationReport, canonical, emit_report, from_json
from ambientgeom.scenario import SUITES, bundled_scenarios, load_bundled, load_scenario, parse_scenario

MINIMAL = """
name = "mini"
[manifold]
coordinates = ["x", "y"]
bounds = [[-2, 2], [-2, 2]]
metric = [["1", "0"], ["0", "1"]]
[alpha]
components = [["1", "0"], ["0", "1"]]
epsilon = 1.0
[scale]
u = ["0"]
"""


def with_line(old, new):
    assert old in MINIMAL
    return MINIMAL.replace(old, new)


# -- scenarios --------------------------------------------------------------------------

def test_bundled_catalogue():
    names = bundled_scenarios()
    for name in ("flat_plane", "sphere_example", "sphere_k1", "hyperbolic_disc", "flat_torus",
                 "sphere3", "moebius_nonflat"):
        assert name in names


def test_sphere_example_loads():
    spec = load_bundled("sphere_example")
    assert spec.dim == 2 and spec.alpha.epsilon == 2.0
    assert spec.gauss_bonnet["euler_characteristic"] == 2
    assert spec.chart.bounds[0] == (0.0, math.pi)
    assert len(spec.scale) == 5


def test_minimal_scenario_defaults():
    spec = parse_scenario(MINIMAL)
    assert spec.suites == SUITES and spec.points == 200 and spec.immersion_points == 100
    assert spec.embedding is None and spec.gauss_bonnet is None


def test_zero_epsilon_is_rejected_with_key_path():
    with pytest.raises(ScenarioError) as err:
        parse_scenario(with_line("epsilon = 1.0", "epsilon = 0"))
    assert err.value.key_path == "alpha.epsilon"


def test_metric_parse_error_carries_location():
    with pytest.raises(ExpressionError) as err:
        parse_scenario(with_line('metric = [["1", "0"], ["0", "1"]]', 'metric = [["x +", "0"], ["0", "1"]]'))
    assert err.value.key_path == "manifold.metric[0][0]"
    assert err.value.column == 4


@pytest.mark.parametrize("old, new, path", [
    ('coordinates = ["x", "y"]', 'coordinates = ["x"]', "manifold.bounds"),
    ('u = ["0"]', "u = []", "scale.u"),
    ('[scale]', '[suites]\nrun = ["nope"]\n[scale]', "suites.run"),
    ('[scale]', '[sampling]\npoints = 0\n[scale]', "sampling.points"),
    ('[scale]', '[sampling]\nbox = [[-3, 1], [0, 1]]\n[scale]', "sampling.box[0]"),
    ('[scale]', '[cotton]\nexpect = "maybe"\n[scale]', "cotton.expect"),
])
def test_schema_errors_name_the_key(old, new, path):
    with pytest.raises(ScenarioError) as err:
        parse_scenario(with_line(old, new))
    assert err.value.key_path == path


def test_missing_table_and_bad_toml():
    with pytest.raises(ScenarioError) as err:
        parse_scenario(MINIMAL.split("[alpha]")[0])
    assert err.value.key_path == "alpha"
    with pytest.raises(ScenarioError):
        parse_scenario("name = ")


def test_constants_and_symbolic_bounds(tmp_path):
    text = with_line('bounds = [[-2, 2], [-2, 2]]', 'bounds = [[0, "2*pi"], ["-inf", "inf"]]')
    text = text.replace('u = ["0"]', 'u = ["k*x"]') + "[constants]\nk = 2.0\n"
    path = tmp_path / "c.scn"
    path.write_text(text)
    spec = load_scenario(path)
    assert spec.chart.bounds == ((0.0, 2 * math.pi), (-math.inf, math.inf))
    assert spec.scale[0][1](np.array([[1.0, 0.0]]))[0] == 2.0


def test_unreadable_file():
    with pytest.raises(ScenarioError):
        load_scenario("/nonexistent/file.scn")


# -- reports ------------------------------------------------------------------------------

def record(check, defects, tol=1e-6):
    d = np.asarray(defects, float)
    return CheckRecord.from_samples(check, "anchor", d, np.arange(2 * len(d), dtype=float).reshape(-1, 2), tol)


def test_record_invariants():
    ok = record("a.ok", [1e-9, 2e-9])
    bad = record("a.bad", [1e-9, 3.0, 1e-3])
    assert ok.passed and ok.witness is None
    assert not bad.passed and bad.witness == (2.0, 3.0) and bad.max_defect == 3.0
    with pytest.raises(ValueError):
        CheckRecord("x", "a", 1, 1.0, 0.5, True, None)
    with pytest.raises(ValueError):
        CheckRecord("x", "a", 1, 1.0, 0.5, False, None)


def test_nan_defect_fails():
    r = record("a.nan", [0.0, float("nan")])
    assert not r.passed and r.witness == (2.0, 3.0)


def test_empty_report_is_valid_json():
    d = json.loads(emit_report(VerificationReport(()), "json"))
    assert d["checks"] == [] and d["passed"] is True


def test_report_is_sorted_and_rejects_duplicates():
    rep = VerificationReport((record("b.x", [0]), record("a.y", [0])))
    assert [r.check for r in rep.records] == ["a.y", "b.x"]
    with pytest.raises(ValueError):
        VerificationReport((record("a.y", [0]), record("a.y", [0])))


def test_text_contains_witness():
    rep = VerificationReport((record("gauss.sectional", [0.0, 0.5]),))
    text = emit_report(rep, "text").decode()
    assert "FAIL" in text and "witness: (2, 3)" in text


def test_csv_has_one_row_per_sample():
    rep = VerificationReport((record("gauss.sectional", [0.0] * 7), record("gauss.identity", [0.0] * 3)))
    rows = emit_report(rep, "csv").decode().strip().splitlines()
    assert rows[0] == "check,point,defect" and len(rows) == 1 + 10


def test_json_round_trip_and_canonical_form():
    rep = VerificationReport((record("a.ok", [1e-9]), record("a.bad", [1.0])),
                             {"seed": 1, "wall_time_seconds": 3.2})
    again = from_json(emit_report(rep, "json"))
    assert again.records == rep.records
    other = VerificationReport(rep.records, {"seed": 1, "wall_time_seconds": 9.9})
    assert canonical(rep) == canonical(other)
    assert b"wall_time_seconds" not in canonical(rep)


def test_unknown_format():
    with pytest.raises(ValueError):
        emit_report(VerificationReport(()), "xml")
