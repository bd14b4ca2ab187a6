import numpy as np
import pytest

from ambientgeom import ambient as amb
from ambientgeom.ambient import AlphaFamily, build_ambient
from ambientgeom.errors import DomainError, HypothesisViolation, PositivityBandError
from ambientgeom.scenario import load_bundled

import oracles

SPHERE = load_bundled("sphere_example")
VIOLATION = load_bundled("sphere_violation")
NONFLAT = load_bundled("moebius_nonflat")
S3 = load_bundled("sphere3")


def nonflat_alpha(rho, x):
    return np.array([[1 + 0.5 * rho * x[0] * x[1], 0.25 * rho], [0.25 * rho, 1 - 0.5 * rho * x[0] * x[1]]])


def flat(x):
    return np.eye(2)


def stereo3(x):
    return 4 / (1 + x @ x) ** 2 * np.eye(3)


def s3_alpha(rho, x):
    return (1 + rho / 2) ** 2 * np.eye(3)


CASES = {
    "sphere": (SPHERE, oracles.sphere, oracles.sphere_alpha),
    "violation": (VIOLATION, oracles.sphere, oracles.identity_alpha),
    "nonflat": (NONFLAT, flat, nonflat_alpha),
    "s3": (S3, stereo3, s3_alpha),
}


def space(name):
    spec = CASES[name][0]
    return build_ambient(spec.metric, spec.alpha)


def band(a, spec, count=5, on_slice=False, seed=11):
    return a.sample(np.random.default_rng(seed), count, on_slice=on_slice, box=spec.sampling_box)


@pytest.mark.parametrize("name", CASES)
def test_metric_matches_direct_construction(name):
    spec, g, al = CASES[name]
    a = space(name)
    p = band(a, spec, 20)
    direct = np.stack([oracles.ambient_metric(g, al)(q) for q in p])
    np.testing.assert_allclose(a.metric.matrix(p), direct, atol=1e-14)


@pytest.mark.parametrize("name", CASES)
def test_christoffel_matches_difference_oracle(name):
    spec, g, al = CASES[name]
    a = space(name)
    for q in band(a, spec, 3):
        gam = a.geometry(q[None], 1).christoffel.value[0]
        np.testing.assert_allclose(gam, oracles.christoffel(oracles.ambient_metric(g, al), q), atol=1e-8)


@pytest.mark.parametrize("name", ["sphere", "violation", "nonflat"])
def test_ricci_along_slice_matches_difference_oracle(name):
    spec, g, al = CASES[name]
    a = space(name)
    for q in band(a, spec, 2, on_slice=True):
        ric = amb.numeric_ambient_ricci(a, q[None])[0]
        np.testing.assert_allclose(ric, oracles.ricci(oracles.ambient_metric(g, al), q), atol=1e-6)


def test_ricci_closed_form_and_vanishing():
    for name in ("sphere", "s3", "nonflat"):
        spec = CASES[name][0]
        a = space(name)
        q = band(a, spec, 50, on_slice=True)
        block, trow = amb.ricci_Q_defects(a, q)
        assert block.max() < 1e-12 and trow.max() < 1e-12
        assert amb.ricci_Q_vanishing(a, q).max() < 1e-12


def test_violation_produces_large_ricci():
    a = space("violation")
    q = band(a, VIOLATION, 50, on_slice=True)
    assert amb.ricci_Q_defects(a, q)[0].max() < 1e-12
    assert amb.ricci_Q_vanishing(a, q).max() >= 0.5


def test_ricci_closed_form_value_for_identity_family():
    # alpha = Id: Ric~ restricted to the base equals Ric^g = g on the unit sphere
    a = space("violation")
    x = np.array([[1.0, 2.0]])
    np.testing.assert_allclose(amb.ricci_along_Q_matrix(a, x), SPHERE.metric.matrix(x), atol=1e-14)


@pytest.mark.parametrize("name", CASES)
def test_axioms(name):
    spec = CASES[name][0]
    a = space(name)
    p = band(a, spec, 100)
    q = band(a, spec, 100, on_slice=True)
    t, x = q[:, 0], q[:, 2:]
    assert amb.homothety_defect(a, p).max() < 1e-9
    assert amb.pullback_defect(a, t, x).max() < 1e-10
    assert amb.degeneracy_defect(a, t, x).max() < 1e-10
    rank, mis = amb.radical_check(a, t, x)
    assert np.all(rank == a.n) and mis.max() < 1e-12
    om, dom = amb.omega_and_exterior_derivative(a, p)
    np.testing.assert_allclose(om[:, 1], p[:, 0] ** 2, rtol=1e-15)
    assert np.abs(dom).max() < 1e-13


def test_timelike_and_spacelike_fields():
    a = space("nonflat")
    p = band(a, NONFLAT, 30)
    g = a.metric.matrix(p)
    T = amb.timelike_field(a).jet(p, 0).value
    E = amb.spacelike_field(a).jet(p, 0).value
    np.testing.assert_allclose(amb.pair(g, T, T), -2, atol=1e-13)
    np.testing.assert_allclose(amb.pair(g, E, E), 2, atol=1e-13)
    np.testing.assert_allclose(amb.pair(g, T, E), 0, atol=1e-13)


@pytest.mark.parametrize("which", amb.CONNECTION_SELECTORS)
def test_connection_formulas(which):
    a = space("nonflat")
    rng = np.random.default_rng(2)
    p = band(a, NONFLAT, 50, on_slice=which == "V_W")
    V, W = rng.normal(size=(2, 50, 2))
    assert amb.connection_defect(a, p, which, V, W).max() < 1e-12


def test_slice_formula_refuses_off_slice_points():
    a = space("sphere")
    p = band(a, SPHERE, 5)
    with pytest.raises(DomainError):
        amb.closed_form_connection(a, p, "V_W", [1, 0], [0, 1])


def test_mixed_curvature_identity():
    a = space("nonflat")
    q = band(a, NONFLAT, 40, on_slice=True)
    V, W = np.random.default_rng(4).normal(size=(2, 40, 2))
    assert np.abs(amb.mixed_curvature_defect(a, q, V, W)).max() < 1e-12


def test_fiber_second_fundamental_form_against_oracle():
    spec, g, al = CASES["nonflat"]
    a = space("nonflat")
    gt = oracles.ambient_metric(g, al)
    V, W = np.array([0.3, -1.1]), np.array([0.7, 0.4])
    for q in band(a, NONFLAT, 4):
        gam = oracles.christoffel(gt, q)
        Vl, Wl = np.r_[0, 0, V], np.r_[0, 0, W]
        expected = np.einsum("kij,i,j->k", gam, Vl, Wl)
        expected[2:] = 0
        np.testing.assert_allclose(amb.fiber_second_fundamental_form(a, q[None], V, W)[0], expected, atol=1e-8)


def test_fibers_umbilical_exactly_for_scalar_families():
    a = space("sphere")
    assert amb.fiber_umbilical_defect(a, band(a, SPHERE, 30)).max() < 1e-13
    b = space("nonflat")
    assert amb.fiber_umbilical_defect(b, band(b, NONFLAT, 30)).min() > 1e-4


def test_minkowski_model_of_the_sphere():
    a = space("sphere")
    p = band(a, SPHERE, 100)
    q = band(a, SPHERE, 100, on_slice=True)
    assert amb.minkowski_cross_check(a, p, SPHERE.embedding).max() < 1e-9
    assert amb.lightcone_defect(a, q, SPHERE.embedding).max() < 1e-10


def test_alpha_must_start_at_identity():
    with pytest.raises(HypothesisViolation):
        AlphaFamily.from_strings(SPHERE.chart, [["1 + th", "0"], ["0", "1"]], 1.0)


def test_positivity_band():
    al = AlphaFamily.from_strings(SPHERE.chart, [["1 - rho", "0"], ["0", "1 - rho"]], 2.0)
    with pytest.raises(PositivityBandError):
        build_ambient(SPHERE.metric, al)


def test_alpha_must_be_self_adjoint():
    al = AlphaFamily.from_strings(SPHERE.chart, [["1", "rho"], ["0", "1"]], 0.5)
    with pytest.raises(HypothesisViolation):
        build_ambient(SPHERE.metric, al)


def test_sampling_respects_band_and_time_range():
    a = space("sphere")
    p = a.sample(np.random.default_rng(0), 1000)
    assert p[:, 0].min() >= amb.T_RANGE[0] and p[:, 0].max() <= amb.T_RANGE[1]
    assert np.abs(p[:, 1]).max() < a.epsilon * (1 - 1e-2) + 1e-15


def test_slice_embedding():
    a = space("sphere")
    np.testing.assert_array_equal(amb.ScaleSlice(a).embed(np.array([2.0]), np.array([[1.0, 1.0]])),
                                  [[2.0, 0.0, 1.0, 1.0]])
