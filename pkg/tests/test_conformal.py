import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ambientgeom import conformal as conf
from ambientgeom.ambient import AlphaFamily
from ambientgeom.chart import TensorField, parse_expression
from ambientgeom.errors import DimensionError, HypothesisViolation
from ambientgeom.scenario import load_bundled

import oracles

S3 = load_bundled("sphere3")
SPHERE = load_bundled("sphere_example")
NONFLAT = load_bundled("moebius_nonflat")
VIOLATION = load_bundled("sphere_violation")


def stereo3(x):
    return 4 / (1 + x @ x) ** 2 * np.eye(3)


def pts(spec, count=8, seed=5):
    return spec.chart.sample(np.random.default_rng(seed), count, spec.sampling_box)


def test_schouten_of_round_three_sphere_is_half_the_metric():
    p = pts(S3, 20)
    np.testing.assert_allclose(conf.schouten(S3.metric, p), 0.5 * S3.metric.matrix(p), atol=1e-13)


def test_schouten_is_undefined_for_surfaces():
    with pytest.raises(DimensionError):
        conf.schouten(SPHERE.metric, pts(SPHERE, 1))


@pytest.mark.parametrize("k", range(1, 5))
def test_transformation_law_reproduces_schouten_of_rescaled_metric(k):
    src, u = S3.scale[k]
    canon = conf.MoebiusStructure.canonical(S3.metric)
    p = pts(S3, 10)
    law = conf.moebius_transform(canon, u, p)
    direct = conf.schouten(conf.rescale_metric(conf.ConformalRep(S3.metric, u)), p)
    np.testing.assert_allclose(law, direct, atol=1e-12)


def test_rescaled_schouten_against_difference_oracle():
    _, u = S3.scale[1]

    def ufun(x):
        return 0.3 * x[0] * x[1] + 0.2 * np.sin(x[2])
    g1 = conf.rescale_metric(conf.ConformalRep(S3.metric, u))
    for p in pts(S3, 3):
        np.testing.assert_allclose(conf.schouten(g1, p), oracles.schouten(oracles.conformal(stereo3, ufun), p),
                                   atol=1e-7)


def test_rescaled_metric_components():
    _, u = SPHERE.scale[1]
    g1 = conf.rescale_metric(conf.ConformalRep(SPHERE.metric, u))
    p = pts(SPHERE, 5)
    expected = np.exp(2 * 0.3 * np.cos(p[:, 0]))[:, None, None] * SPHERE.metric.matrix(p)
    np.testing.assert_allclose(g1.matrix(p), expected, rtol=1e-15)


def test_alpha_tensor_of_sphere_is_half_the_metric():
    m = conf.moebius_from_alpha(SPHERE.metric, SPHERE.alpha)
    p = pts(SPHERE, 10)
    np.testing.assert_allclose(m.tensor(p), 0.5 * SPHERE.metric.matrix(p), atol=1e-15)
    assert np.max(m.trace_defect(p)) < 1e-13


def test_alpha_identity_violates_trace_condition_on_sphere():
    with pytest.raises(HypothesisViolation) as err:
        conf.moebius_from_alpha(VIOLATION.metric, VIOLATION.alpha)
    assert err.value.defect == pytest.approx(2.0, abs=1e-12)
    assert err.value.witness is not None


def test_moebius_structure_rejects_bad_trace():
    P = TensorField.from_strings(SPHERE.chart, 0, 2, [["2", "0"], ["0", "0"]])
    with pytest.raises(HypothesisViolation):
        conf.MoebiusStructure(SPHERE.metric, P)


@settings(max_examples=10, deadline=None)
@given(st.sampled_from(range(5)), st.sampled_from(range(5)))
def test_cocycle(i, j):
    m = conf.moebius_from_alpha(SPHERE.metric, SPHERE.alpha)
    assert np.max(conf.cocycle_check(m, SPHERE.scale[i][1], SPHERE.scale[j][1], pts(SPHERE))) < 1e-12


def test_transformed_structure_still_satisfies_trace_condition():
    m = conf.moebius_from_alpha(NONFLAT.metric, NONFLAT.alpha)
    for _, u in NONFLAT.scale:
        assert np.max(conf.transformed_structure(m, u).trace_defect(pts(NONFLAT))) < 1e-12


def test_cotton_york_of_nonflat_structure_closed_form():
    # P = [[xy/4, 1/8], [1/8, -xy/4]] on the flat plane, so C[x, y, x] = -x/4 and C[x, y, y] = -y/4
    m = conf.moebius_from_alpha(NONFLAT.metric, NONFLAT.alpha)
    p = pts(NONFLAT, 10)
    C = conf.cotton_york_array(m, p)
    np.testing.assert_allclose(C[:, 0, 1, 0], -p[:, 0] / 4, atol=1e-15)
    np.testing.assert_allclose(C[:, 0, 1, 1], -p[:, 1] / 4, atol=1e-15)
    np.testing.assert_allclose(C, -np.swapaxes(C, 1, 2), atol=1e-15)


def test_cotton_york_vanishes_for_parallel_tensor():
    m = conf.moebius_from_alpha(SPHERE.metric, SPHERE.alpha)
    assert np.max(np.abs(conf.cotton_york_array(m, pts(SPHERE)))) < 1e-14


@pytest.mark.parametrize("k", range(5))
def test_cotton_york_is_conformally_invariant_on_surfaces(k):
    m = conf.moebius_from_alpha(NONFLAT.metric, NONFLAT.alpha)
    p = pts(NONFLAT)
    mu = conf.transformed_structure(m, NONFLAT.scale[k][1])
    np.testing.assert_allclose(conf.cotton_york_array(mu, p), conf.cotton_york_array(m, p), atol=1e-12)


def test_cotton_york_contraction():
    m = conf.moebius_from_alpha(NONFLAT.metric, NONFLAT.alpha)
    p = np.array([[0.5, -1.0]])
    assert conf.cotton_york(m, p, [1, 0], [0, 1], [1, 0])[0] == pytest.approx(-0.125)


def test_three_dimensional_hypothesis_uses_schouten():
    bad = AlphaFamily.identity(S3.chart, 1.0)
    assert np.max(conf.alpha_hypothesis_defect(S3.metric, S3.alpha, pts(S3))) < 1e-12
    assert np.min(conf.alpha_hypothesis_defect(S3.metric, bad, pts(S3))) > 0.1


def test_sum_fields():
    u = conf.sum_fields(parse_expression("x", NONFLAT.chart), parse_expression("y^2", NONFLAT.chart))
    assert u(np.array([[1.0, 2.0]]))[0] == 5.0
