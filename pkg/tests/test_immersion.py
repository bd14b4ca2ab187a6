import math

import numpy as np
import pytest

from ambientgeom import immersion as imm
from ambientgeom.ambient import build_ambient
from ambientgeom.chart import parse_expression
from ambientgeom.errors import ChartError, DimensionError, HypothesisViolation
from ambientgeom.scenario import load_bundled

import oracles

SPHERE = load_bundled("sphere_example")
NONFLAT = load_bundled("moebius_nonflat")
S3 = load_bundled("sphere3")
HYPERBOLIC = load_bundled("hyperbolic_disc")
VIOLATION = load_bundled("sphere_violation")

# callables mirroring the bundled scale functions
SPHERE_U = [lambda x: 0.0 * x[0], lambda x: 0.3 * np.cos(x[0]),
            lambda x: 0.2 * np.sin(x[0]) * np.cos(x[1]),
            lambda x: 0.25 * np.sin(x[0]) * np.sin(x[1]) + 0.1 * np.cos(x[0]),
            lambda x: 0.15 * np.cos(x[0]) ** 2]


def nonflat_alpha(rho, x):
    return np.array([[1 + 0.5 * rho * x[0] * x[1], 0.25 * rho], [0.25 * rho, 1 - 0.5 * rho * x[0] * x[1]]])


def immersions(spec):
    a = build_ambient(spec.metric, spec.alpha)
    return [imm.SpacelikeImmersion(a, u) for _, u in spec.scale]


def pts(spec, count=20, seed=7):
    return spec.chart.sample(np.random.default_rng(seed), count, spec.sampling_box)


@pytest.mark.parametrize("k", range(5))
def test_second_fundamental_form_against_oracle(k):
    im = immersions(SPHERE)[k]
    V = np.eye(2)
    for x in pts(SPHERE, 3):
        ref = oracles.second_fundamental_form(oracles.sphere, oracles.sphere_alpha, SPHERE_U[k], x)
        for i in range(2):
            for j in range(2):
                got = imm.second_fundamental_form(im, x[None], V[i], V[j])[0]
                np.testing.assert_allclose(got, ref[:, i, j], atol=1e-7)


def test_second_fundamental_form_for_non_scalar_family():
    spec = NONFLAT
    a = build_ambient(spec.metric, spec.alpha)
    src, u = spec.scale[1]
    im = imm.SpacelikeImmersion(a, u)

    def ufun(x):
        return 0.3 * x[0] - 0.2 * x[1] ** 2
    for x in pts(spec, 3):
        ref = oracles.second_fundamental_form(lambda y: np.eye(2), nonflat_alpha, ufun, x)
        got = np.stack([np.stack([imm.second_fundamental_form(im, x[None], e, f)[0] for f in np.eye(2)], -1)
                        for e in np.eye(2)], -2)
        np.testing.assert_allclose(got, ref, atol=1e-7)


@pytest.mark.parametrize("k", range(5))
def test_mean_curvature_norm_against_oracle(k):
    im = immersions(SPHERE)[k]
    for x in pts(SPHERE, 2):
        ref = oracles.mean_curvature_norm_sq(oracles.sphere, oracles.sphere_alpha, SPHERE_U[k], x)
        assert imm.mean_curvature_norm_sq(im, x[None])[0] == pytest.approx(ref, abs=1e-7)


@pytest.mark.parametrize("spec", [SPHERE, NONFLAT, S3, HYPERBOLIC], ids=lambda s: s.name)
def test_frame_and_weingarten(spec):
    x = pts(spec, 50)
    for im in immersions(spec):
        assert imm.induced_metric_defect(im, x).max() < 1e-10
        assert imm.frame_defects(im, x).max() < 1e-10
        assert imm.projector_defect(im, x).max() < 1e-10
        d_xi, d_eta, sa = imm.weingarten_defects(im, x)
        assert d_xi.max() < 1e-9 and d_eta.max() < 1e-8 and sa.max() < 1e-9
        d_num, d_sym, d_w = imm.second_fundamental_form_defects(im, x)
        assert d_num.max() < 1e-8 and d_sym.max() < 1e-9 and d_w.max() < 1e-9


def test_a_xi_is_minus_identity():
    im = immersions(SPHERE)[3]
    np.testing.assert_allclose(imm.weingarten(im, pts(SPHERE, 5), "xi"), -np.eye(2)[None].repeat(5, 0), atol=1e-12)
    np.testing.assert_allclose(imm.weingarten(im, pts(SPHERE, 5), "eta"), imm.weingarten_closed(im, pts(SPHERE, 5), "eta"),
                               atol=1e-12)


def test_frame_is_lightlike():
    im = immersions(SPHERE)[2]
    x = pts(SPHERE, 5)
    fr = imm.normal_frame(im, x)
    gt = im.ambient.metric.matrix(im.map(x))
    np.testing.assert_allclose(np.einsum("...ab,...a,...b->...", gt, fr.xi, fr.eta), -1, atol=1e-13)


@pytest.mark.parametrize("spec", [SPHERE, NONFLAT, S3], ids=lambda s: s.name)
def test_mean_curvature_and_normal_bundle(spec):
    x = pts(spec, 40)
    V = np.random.default_rng(1).normal(size=x.shape)
    for im in immersions(spec):
        d_tr, d_scal = imm.mean_curvature_defects(im, x)
        assert d_tr.max() < 1e-8 and d_scal.max() < 1e-6
        nx, ne = imm.normal_connection_defect(im, x, V)
        assert nx.max() < 1e-9 and ne.max() < 1e-9
        assert imm.normal_curvature_defect(im, x).max() < 1e-8


def test_round_sphere_mean_curvature_is_one():
    im = immersions(SPHERE)[0]
    H, norm = imm.mean_curvature(im, pts(SPHERE, 10))
    np.testing.assert_allclose(norm, 1.0, atol=1e-13)


def test_recovery_theorems():
    for im in immersions(S3):
        assert imm.schouten_recovery_defect(im, pts(S3)).max() < 1e-6
    for im in immersions(NONFLAT):
        assert imm.moebius_recovery_defect(im, pts(NONFLAT)).max() < 1e-6


def test_recovery_checks_the_hypothesis():
    a = build_ambient(VIOLATION.metric, VIOLATION.alpha)
    im = imm.SpacelikeImmersion(a, VIOLATION.scale[1][1])
    with pytest.raises(HypothesisViolation):
        imm.moebius_recovery_defect(im, pts(VIOLATION))
    with pytest.raises(DimensionError):
        imm.schouten_recovery_defect(im, pts(VIOLATION))


def test_codazzi_cotton_on_nonflat_structure():
    rng = np.random.default_rng(3)
    x = pts(NONFLAT, 40)
    U, V, W = rng.normal(size=(3,) + x.shape)
    largest = 0.0
    for im in immersions(NONFLAT):
        d, C = imm.codazzi_cotton_defect(im, x, U, V, W)
        assert d.max() < 1e-6
        assert imm.codazzi_lhs_defect(im, x, U, V, W).max() < 1e-6
        largest = max(largest, np.abs(C).max())
    assert largest > 1e-2


def test_codazzi_expression_is_tensorial():
    im = immersions(NONFLAT)[2]
    x = pts(NONFLAT, 10)
    rng = np.random.default_rng(8)
    U, V, W = rng.normal(size=(3,) + x.shape)
    ext = {k: rng.normal(size=(2, 2)) for k in "UVW"}
    np.testing.assert_allclose(imm.codazzi_lhs(im, x, U, V, W, ext), imm.codazzi_lhs(im, x, U, V, W), atol=1e-12)


def test_flat_moebius_structure_preserves_tangent_triples():
    rng = np.random.default_rng(3)
    x = pts(SPHERE, 40)
    U, V, W = rng.normal(size=(3,) + x.shape)
    for im in immersions(SPHERE):
        assert imm.curvature_invariance_defect(im, x, U, V, W).max() < 1e-7


@pytest.mark.parametrize("spec", [SPHERE, NONFLAT, HYPERBOLIC], ids=lambda s: s.name)
def test_gauss_identities(spec):
    x = pts(spec, 40)
    for im in immersions(spec):
        assert imm.gauss_sectional_defect(im, x).max() < 1e-6
        assert imm.gauss_identity_defect(im, x).max() < 1e-6


def test_gauss_bonnet_gives_four_pi():
    im = immersions(SPHERE)[2]
    total = imm.gauss_bonnet_quadrature(im, nodes=400, box=SPHERE.gauss_bonnet["box"])
    assert abs(total / (4 * math.pi) - 1) < 1e-3


def test_scale_function_must_live_on_the_base_chart():
    a = build_ambient(SPHERE.metric, SPHERE.alpha)
    with pytest.raises(ChartError):
        imm.SpacelikeImmersion(a, parse_expression("x", NONFLAT.chart))


def test_map_places_points_on_the_slice():
    im = immersions(SPHERE)[1]
    x = pts(SPHERE, 5)
    p = im.map(x)
    np.testing.assert_allclose(p[:, 0], np.exp(0.3 * np.cos(x[:, 0])), rtol=1e-15)
    assert np.all(p[:, 1] == 0) and np.array_equal(p[:, 2:], x)
