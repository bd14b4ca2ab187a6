"""Codimension-two spacelike immersions ``x -> (e^{u(x)}, 0, x)`` into the ambient space.

Normal-bundle quantities are reported in the lightlike frame ``(xi, eta)``
with ``gt(xi, eta) = -1``.  A normal vector ``a xi + b eta`` is represented by
its coefficient pair ``(a, b)``; for an ambient vector ``X`` these are
``a = -gt(X, eta)`` and ``b = -gt(X, xi)``.  Defect norms of normal vectors
are Euclidean norms of the coefficient pair.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import jets
from .chart import ScalarField, coords_of
from .conformal import (ConformalRep, cotton_york_array, moebius_from_alpha,
                        moebius_transform, rescale_metric, schouten)
from .errors import ChartError, DimensionError, HypothesisViolation
from .jets import Jet, substitute
from .riemann import LocalGeometry, curvature_vector, sectional_from

INDUCED_METRIC_TOLERANCE = 1e-10
GAUSS_BONNET_DELTA = 1e-3
GAUSS_BONNET_NODES = 400


@dataclass(frozen=True)
class SpacelikeImmersion:
    ambient: object
    log_factor: ScalarField
    validate: bool = True

    def __post_init__(self):
        if self.log_factor.chart != self.ambient.base_chart:
            raise ChartError("scale function and ambient base live on different charts")
        if self.validate:
            pts = self.ambient.base_chart.sample(np.random.default_rng(0), 50)
            defect = induced_metric_defect(self, pts)
            if np.max(defect) > INDUCED_METRIC_TOLERANCE:
                i = int(np.argmax(defect))
                raise HypothesisViolation("induced metric differs from e^{2u} g", defect[i], pts[i])

    @property
    def n(self):
        return self.ambient.n

    def map(self, x):
        x = coords_of(self.ambient.base_chart, x)
        u = self.log_factor(x)
        return np.concatenate([np.exp(u)[..., None], np.zeros(u.shape + (1,)), x], axis=-1)

    def at(self, x):
        return ImmersionSample(self, coords_of(self.ambient.base_chart, x))

    @cached_property
    def induced_metric(self):
        return rescale_metric(ConformalRep(self.ambient.g, self.log_factor))


@dataclass(frozen=True)
class LightlikeNormalFrame:
    xi: np.ndarray
    eta: np.ndarray


def immerse(a, u):
    return SpacelikeImmersion(a, u)


def _pair(gmat, v, w):
    return np.einsum("...ab,...a,...b->...", gmat, v, w)


class ImmersionSample:
    """Jets of every quantity along the immersion at a batch of base points.

    Jet orders: ``u`` and ``g`` to 3, the map ``Psi`` to 3, its differential
    and the frame to 2, ambient Christoffel symbols pulled back along
    ``Psi`` to 2.
    """

    def __init__(self, im, x):
        self.im = im
        self.x = x
        self.n = im.n
        self.m = im.n + 2

    # -- base quantities ----------------------------------------------------------
    @cached_property
    def u(self):
        return self.im.log_factor.jet(self.x, 3)

    @cached_property
    def base(self):
        return LocalGeometry(self.im.ambient.g.jet(self.x, 3))

    @cached_property
    def du(self):
        return self.u.d()

    @cached_property
    def grad(self):
        return jets.einsum("...ij,...j->...i", self.base.ginv.truncate(2), self.du)

    @cached_property
    def grad_sq(self):
        return jets.einsum("...i,...i->...", self.grad, self.du)

    @cached_property
    def hess(self):
        return self.base.hessian(self.u)

    @cached_property
    def alpha_dot(self):
        return self.im.ambient.alpha.derivative_at_zero_jet(self.x, 2)

    # -- the map and ambient data ------------------------------------------------------
    @cached_property
    def psi(self):
        eu = self.u.exp()
        zero = eu * 0.0
        coords = Jet.seeds(self.x, 3)
        return jets.stack([eu, zero] + coords, axis=-1)

    @cached_property
    def tpsi(self):
        """``[A, j]``: ambient components of ``T Psi e_j``."""
        return self.psi.d()

    @cached_property
    def ambient_geometry(self):
        return LocalGeometry(self.im.ambient.metric.jet(self.psi.value, 3))

    @cached_property
    def gt(self):
        return substitute(self.ambient_geometry.g, self.psi)

    @cached_property
    def gamma(self):
        return substitute(self.ambient_geometry.christoffel, self.psi)

    @cached_property
    def riemann_t(self):
        return self.ambient_geometry.riemann.value

    # -- normal frame -----------------------------------------------------------------------
    @cached_property
    def xi(self):
        eu = self.u.truncate(2).exp()
        zero = eu * 0.0
        return jets.stack([eu, zero] + [zero] * self.n, axis=-1)

    @cached_property
    def eta(self):
        u = self.u.truncate(2)
        em = (-u).exp()
        em2 = em * em
        comps = [em * self.grad_sq * 0.5, -em2] + [em2 * self.grad[..., i] for i in range(self.n)]
        return jets.stack(comps, axis=-1)

    def frame(self):
        return LightlikeNormalFrame(self.xi.value, self.eta.value)

    def normal_coefficients(self, X, axis=-1):
        """``(a, b)`` with ``X^perp = a xi + b eta``; vector axis at ``axis``, result axis last."""
        X = np.moveaxis(np.asarray(X), axis, -1)
        g = self.gt.value
        extra = X.ndim - g.ndim + 1
        gshape = g.shape[:-2] + (1,) * extra + g.shape[-2:]
        g = g.reshape(gshape)
        xi = self.xi.value.reshape(gshape[:-1])
        eta = self.eta.value.reshape(gshape[:-1])
        a = -np.einsum("...ab,...a,...b->...", g, X, eta)
        b = -np.einsum("...ab,...a,...b->...", g, X, xi)
        return np.stack([a, b], axis=-1)

    def tangent_part(self, X, axis=-1):
        X = np.moveaxis(np.asarray(X), axis, -1)
        return X - self.normal_vector(self.normal_coefficients(X))

    def normal_vector(self, ab):
        ab = np.asarray(ab)
        lead = ab.ndim - 1 - (self.x.ndim - 1)
        shape = self.x.shape[:-1] + (1,) * lead + (self.m,)
        return ab[..., 0:1] * self.xi.value.reshape(shape) + ab[..., 1:2] * self.eta.value.reshape(shape)

    # -- derivatives along the immersion -----------------------------------------
    def covariant_along(self, nu):
        """``[A, j] = (nabla~_{T Psi e_j} nu)^A`` for a vector field ``nu`` along Psi."""
        gam_t = jets.einsum("...abc,...bj->...ajc", self.gamma, self.tpsi)
        return nu.d() + jets.einsum("...ajc,...c->...aj", gam_t, nu)

    @cached_property
    def second_derivative(self):
        """``[A, i, j] = d_i d_j Psi^A + Gt^A(T Psi e_i, T Psi e_j)`` (values)."""
        t = self.tpsi.value
        ddpsi = self.tpsi.d().value
        return ddpsi + np.einsum("...abc,...bi,...cj->...aij", self.gamma.value, t, t)

    # -- Weingarten and second fundamental form -----------------------------------------
    def weingarten_numeric(self, which):
        nu = self.xi if which == "xi" else self.eta
        D = self.covariant_along(nu).value  # [A, j]
        tang = self.tangent_part(D, axis=-2)  # [j, A]
        return -np.swapaxes(tang[..., 2:], -1, -2)

    @cached_property
    def weingarten_eta_closed(self):
        n = self.n
        gsq = self.grad_sq.value[..., None, None]
        grad, du = self.grad.value, self.du.value
        hess_sharp = np.einsum("...ik,...kj->...ij", self.base.ginv.value, self.hess.value)
        em2 = np.exp(-2 * self.u.value)[..., None, None]
        inner = 0.5 * (self.alpha_dot.value - gsq * np.eye(n)) \
            + np.einsum("...i,...j->...ij", grad, du) - hess_sharp
        return em2 * inner

    def second_fundamental_form_numeric(self):
        """``[i, j, (a, b)]``."""
        return self.normal_coefficients(self.second_derivative, axis=-3)

    def second_fundamental_form_jet(self, order):
        """Closed-form coefficient jets ``(a_ij, b_ij)`` stacked on a trailing axis."""
        k = order
        g = self.base.g.truncate(k)
        u = self.u.truncate(k)
        du = self.du.truncate(k)
        gsq = self.grad_sq.truncate(k).map_linear(lambda a: a[..., None, None])
        g_ad = jets.einsum("...ik,...kj->...ij", g, self.alpha_dot.truncate(k))
        g_ad = (g_ad + g_ad.swapaxes(-1, -2)) * 0.5
        a = -(g_ad * 0.5 - g * gsq * 0.5 + jets.einsum("...i,...j->...ij", du, du) - self.hess.truncate(k))
        b = g * (u * 2.0).exp().map_linear(lambda x: x[..., None, None])
        return jets.stack([a, b], axis=-1)

    # -- mean curvature --------------------------------------------------------------------------
    @cached_property
    def mean_curvature_coefficient(self):
        """``c`` with ``H = c xi + eta``."""
        n = self.n
        lap = np.einsum("...ij,...ij->...", self.base.ginv.value, self.hess.value)
        tr = np.trace(self.alpha_dot.value, axis1=-2, axis2=-1)
        return np.exp(-2 * self.u.value) / n * (lap - 0.5 * (tr - (n - 2) * self.grad_sq.value))

    def mean_curvature_numeric(self):
        ii = self.second_fundamental_form_numeric()
        ginv = self.base.ginv.value * np.exp(-2 * self.u.value)[..., None, None]
        return np.einsum("...ij,...ijc->...c", ginv, ii) / self.n

    # -- normal connection ------------------------------------------------------------------------
    def normal_derivatives(self):
        """Coefficients of ``(nabla~_{e_j} nu)^perp``: ``[nu, j, (a, b)]``."""
        out = []
        for nu in (self.xi, self.eta):
            D = self.covariant_along(nu).value
            out.append(self.normal_coefficients(D, axis=-2))
        return np.stack(out, axis=-3)

    @cached_property
    def normal_connection_jet(self):
        """``Omega[a, b, j]``: component on ``nu_a`` of ``nabla^perp_{e_j} nu_b`` (order 1)."""
        g = self.gt.truncate(1)
        frame = (self.xi.truncate(1), self.eta.truncate(1))
        cols = []
        for nu in (self.xi, self.eta):
            lowered = -jets.einsum("...ab,...aj->...bj", g, self.covariant_along(nu))
            on_xi = jets.einsum("...bj,...b->...j", lowered, frame[1])
            on_eta = jets.einsum("...bj,...b->...j", lowered, frame[0])
            cols.append(jets.stack([on_xi, on_eta], axis=-2))  # [a, j]
        return jets.stack(cols, axis=-2)  # [a, b, j]

    @cached_property
    def normal_curvature(self):
        """``R^perp[a, b, i, j]``."""
        om = self.normal_connection_jet
        d_om = om.d().value  # [a, b, j, i] = d_i Omega[a, b, j]
        o = om.value
        comm = np.einsum("...aci,...cbj->...abij", o, o)
        return np.swapaxes(d_om, -1, -2) - d_om + comm - np.swapaxes(comm, -1, -2)

    # -- induced connection and Codazzi ------------------------------------------------------------
    @cached_property
    def induced_christoffel(self):
        e2u = (self.u.truncate(2) * 2.0).exp().map_linear(lambda a: a[..., None, None])
        return LocalGeometry(self.base.g.truncate(2) * e2u).christoffel.value

    def codazzi_lhs(self, U, V, W, extension=None):
        """``(nabla_U II)(V, W) - (nabla_V II)(U, W)`` as frame coefficients.

        ``extension`` optionally maps ``'U'``, ``'V'``, ``'W'`` to matrices ``L``
        so that the field is ``X0 + L (x - x0)``; the result is tensorial and
        must not depend on it.
        """
        ext = extension or {}
        n = self.n
        z = np.zeros((n, n))
        L = {k: np.asarray(ext.get(k, z), float) for k in "UVW"}
        iij = self.second_fundamental_form_jet(1)
        ii = iij.value  # [i, j, c]
        dii = iij.d().value  # [i, j, c, k]
        gam = self.induced_christoffel
        om = self.normal_connection_jet.value  # [a, b, k]
        U, V, W = (np.asarray(v, float) for v in (U, V, W))

        def II(a, b):
            return np.einsum("...ijc,...i,...j->...c", ii, a, b)

        def nabla(X, Y, LY):
            return np.einsum("ij,...j->...i", LY, X) + np.einsum("...kij,...i,...j->...k", gam, X, Y)

        def cov(X, Y, Z, LY, LZ):
            # X(II(Y, Z)) with Y, Z extended linearly, then connection corrections
            dir_ = np.einsum("...ijck,...i,...j,...k->...c", dii, Y, Z, X)
            dir_ = dir_ + II(np.einsum("ij,...j->...i", LY, X), Z) + II(Y, np.einsum("ij,...j->...i", LZ, X))
            dir_ = dir_ + np.einsum("...abk,...b,...k->...a", om, II(Y, Z), X)
            return dir_ - II(nabla(X, Y, LY), Z) - II(Y, nabla(X, Z, LZ))

        return cov(U, V, W, L["V"], L["W"]) - cov(V, U, W, L["U"], L["W"])

    def ambient_curvature_on_tangents(self, U, V, W):
        t = self.tpsi.value
        tu, tv, tw = (np.einsum("...aj,...j->...a", t, np.asarray(v, float)) for v in (U, V, W))
        return curvature_vector(self.riemann_t, tu, tv, tw)


# -- module-level API ----------------------------------------------------------------

def induced_metric_defect(im, x):
    s = ImmersionSample(im, coords_of(im.ambient.base_chart, x))
    t = s.tpsi.value
    pulled = np.einsum("...ab,...ai,...bj->...ij", s.gt.value, t, t)
    expected = np.exp(2 * s.u.value)[..., None, None] * s.base.g.value
    return np.max(np.abs(pulled - expected), axis=(-2, -1))


def normal_frame(im, x):
    return im.at(x).frame()


def frame_defects(im, x):
    """max of |gt(xi, xi)|, |gt(eta, eta)|, |gt(xi, eta) + 1|, |gt(nu, T Psi e_j)|."""
    s = im.at(x)
    g = s.gt.value
    xi, eta, t = s.xi.value, s.eta.value, s.tpsi.value
    parts = [np.abs(_pair(g, xi, xi)), np.abs(_pair(g, eta, eta)), np.abs(_pair(g, xi, eta) + 1)]
    parts.append(np.max(np.abs(np.einsum("...ab,...a,...bj->...j", g, xi, t)), axis=-1))
    parts.append(np.max(np.abs(np.einsum("...ab,...a,...bj->...j", g, eta, t)), axis=-1))
    return np.max(np.stack(parts, -1), axis=-1)


def projector_defect(im, x):
    """``|(V lifted)^T - T Psi V|`` over coordinate directions."""
    s = im.at(x)
    lifted = np.zeros(s.x.shape[:-1] + (s.n, s.m))
    lifted[..., 2:] = np.eye(s.n)
    tang = s.tangent_part(lifted)
    return np.max(np.abs(tang - np.swapaxes(s.tpsi.value, -1, -2)), axis=(-2, -1))


def weingarten(im, x, which):
    if which not in ("xi", "eta"):
        raise ValueError("which must be 'xi' or 'eta'")
    return im.at(x).weingarten_numeric(which)


def weingarten_closed(im, x, which):
    s = im.at(x)
    if which == "xi":
        return -np.broadcast_to(np.eye(s.n), s.x.shape[:-1] + (s.n, s.n)).copy()
    return s.weingarten_eta_closed


def weingarten_defects(im, x):
    """``(|A_xi + Id|, |A_eta - closed form|, self-adjointness for e^{2u}g)`` per point."""
    s = im.at(x)
    a_xi = s.weingarten_numeric("xi")
    a_eta = s.weingarten_numeric("eta")
    d_xi = np.max(np.abs(a_xi + np.eye(s.n)), axis=(-2, -1))
    d_eta = np.max(np.abs(a_eta - s.weingarten_eta_closed), axis=(-2, -1))
    h = np.exp(2 * s.u.value)[..., None, None] * s.base.g.value
    sa = 0.0
    for A in (a_xi, a_eta):
        hA = np.einsum("...ik,...kj->...ij", h, A)
        sa = np.maximum(sa, np.max(np.abs(hA - np.swapaxes(hA, -1, -2)), axis=(-2, -1)))
    return d_xi, d_eta, sa


def second_fundamental_form(im, x, V, W):
    """Closed form as an ambient vector."""
    s = im.at(x)
    ab = np.einsum("...ijc,...i,...j->...c", s.second_fundamental_form_jet(0).value,
                   np.asarray(V, float), np.asarray(W, float))
    return s.normal_vector(ab)


def second_fundamental_form_defects(im, x):
    """``(closed vs numeric, symmetry, Weingarten pairing)`` per point, over coordinate pairs."""
    s = im.at(x)
    closed = s.second_fundamental_form_jet(0).value
    numeric = s.second_fundamental_form_numeric()
    d_num = np.max(np.abs(closed - numeric), axis=(-3, -2, -1))
    d_sym = np.max(np.abs(numeric - np.swapaxes(numeric, -2, -3)), axis=(-3, -2, -1))
    h = np.exp(2 * s.u.value)[..., None, None] * s.base.g.value
    # gt(II, xi) = -b, gt(II, eta) = -a
    pair_xi = np.einsum("...ik,...kj->...ij", h, s.weingarten_numeric("xi")).swapaxes(-1, -2)
    pair_eta = np.einsum("...ik,...kj->...ij", h, s.weingarten_numeric("eta")).swapaxes(-1, -2)
    d_w = np.maximum(np.max(np.abs(pair_xi + numeric[..., 1]), axis=(-2, -1)),
                     np.max(np.abs(pair_eta + numeric[..., 0]), axis=(-2, -1)))
    return d_num, d_sym, d_w


def mean_curvature(im, x):
    """``(H as ambient vector, |H|^2)``."""
    s = im.at(x)
    c = s.mean_curvature_coefficient
    H = s.normal_vector(np.stack([c, np.ones_like(c)], -1))
    return H, -2 * c


def mean_curvature_defects(im, x):
    """``(closed vs trace of numeric II, |H|^2 vs scal/(n(n-1)))`` per point."""
    s = im.at(x)
    c = s.mean_curvature_coefficient
    num = s.mean_curvature_numeric()
    d_trace = np.maximum(np.abs(num[..., 0] - c), np.abs(num[..., 1] - 1))
    n = s.n
    scal = LocalGeometry(im.induced_metric.jet(s.x, 2)).scalar.value
    d_scal = np.abs(-2 * c - scal / (n * (n - 1)))
    return d_trace, d_scal


def normal_connection_defect(im, x, V):
    """``(|(nabla~_V xi)^perp|, |(nabla~_V eta)^perp|)`` in frame coefficients."""
    s = im.at(x)
    nd = s.normal_derivatives()  # [nu, j, c]
    v = np.einsum("...njc,...j->...nc", nd, np.asarray(V, float))
    norms = np.linalg.norm(v, axis=-1)
    return norms[..., 0], norms[..., 1]


def normal_curvature_defect(im, x):
    return np.max(np.abs(im.at(x).normal_curvature), axis=(-4, -3, -2, -1))


def _require_hypothesis(im):
    a = im.ambient
    return moebius_from_alpha(a.g, a.alpha)


def schouten_recovery_defect(im, x, moebius=None):
    if im.n < 3:
        raise DimensionError("Schouten recovery applies to dimension >= 3")
    if moebius is None:
        _require_hypothesis(im)
    s = im.at(x)
    lhs = schouten(im.induced_metric, s.x)
    rhs = _weingarten_tensor(s)
    return np.max(np.abs(lhs - rhs), axis=(-2, -1))


def _weingarten_tensor(s):
    h = np.exp(2 * s.u.value)[..., None, None] * s.base.g.value
    P = np.einsum("...ik,...kj->...ij", h, s.weingarten_numeric("eta"))
    return 0.5 * (P + np.swapaxes(P, -1, -2))


def moebius_recovery_defect(im, x, moebius=None):
    if im.n != 2:
        raise DimensionError("Moebius recovery is checked for surfaces")
    m = moebius or _require_hypothesis(im)
    s = im.at(x)
    lhs = moebius_transform(m, im.log_factor, s.x)
    return np.max(np.abs(lhs - _weingarten_tensor(s)), axis=(-2, -1))


def curvature_invariance_defect(im, x, U, V, W):
    """Norm of the normal part of ``R~(T Psi U, T Psi V) T Psi W``."""
    s = im.at(x)
    ab = s.normal_coefficients(s.ambient_curvature_on_tangents(U, V, W))
    return np.linalg.norm(ab, axis=-1)


def codazzi_cotton_defect(im, x, U, V, W, moebius=None):
    """``|(R~(T Psi U, T Psi V) T Psi W)^perp - C(g)(V, U, W) xi|`` in frame coefficients."""
    if im.n != 2:
        raise DimensionError("the Codazzi-Cotton identity is checked for surfaces")
    m = moebius or _require_hypothesis(im)
    s = im.at(x)
    ab = s.normal_coefficients(s.ambient_curvature_on_tangents(U, V, W))
    C = np.einsum("...uvw,...u,...v,...w->...", cotton_york_array(m, s.x), np.asarray(V, float),
                  np.asarray(U, float), np.asarray(W, float))
    return np.hypot(ab[..., 0] - C, ab[..., 1]), C


def codazzi_lhs(im, x, U, V, W, extension=None):
    return im.at(x).codazzi_lhs(U, V, W, extension)


def codazzi_lhs_defect(im, x, U, V, W, moebius=None):
    """``|(nabla_U II)(V, W) - (nabla_V II)(U, W) - C(g)(V, U, W) xi|``."""
    m = moebius or _require_hypothesis(im)
    s = im.at(x)
    lhs = s.codazzi_lhs(U, V, W)
    C = np.einsum("...uvw,...u,...v,...w->...", cotton_york_array(m, s.x), np.asarray(V, float),
                  np.asarray(U, float), np.asarray(W, float))
    return np.hypot(lhs[..., 0] - C, lhs[..., 1])


def gauss_sectional_defect(im, x):
    """``|K~|`` of the tangent plane spanned by ``T Psi e_1, T Psi e_2``."""
    if im.n != 2:
        raise DimensionError("the tangent-plane check is for surfaces")
    s = im.at(x)
    t = s.tpsi.value
    return np.abs(sectional_from(s.gt.value, s.riemann_t, t[..., 0], t[..., 1]))


def gauss_identity_defect(im, x, moebius=None):
    """``|(K^g - lap u) e^{-2u} - trace_{e^{2u}g} P(e^{2u}g)|``."""
    m = moebius or _require_hypothesis(im)
    s = im.at(x)
    K = s.base.scalar.value / 2
    lap = np.einsum("...ij,...ij->...", s.base.ginv.value, s.hess.value)
    P = moebius_transform(m, im.log_factor, s.x)
    ginv = np.exp(-2 * s.u.value)[..., None, None] * s.base.ginv.value
    return np.abs((K - lap) * np.exp(-2 * s.u.value) - np.einsum("...ij,...ij->...", ginv, P))


def mean_curvature_norm_sq(im, x):
    return -2 * im.at(x).mean_curvature_coefficient


def gauss_bonnet_quadrature(im, nodes=GAUSS_BONNET_NODES, delta=GAUSS_BONNET_DELTA,
                            box=None, chunk=20000):
    """Midpoint rule for ``int |H|^2 dmu`` with the ``e^{2u} g`` area element.

    The default box ``(delta, pi - delta) x (0, 2 pi)`` suits a polar chart
    ``(theta, phi)`` on the sphere.
    """
    if im.n != 2:
        raise DimensionError("the quadrature is for surfaces")
    if box is None:
        box = ((delta, np.pi - delta), (0.0, 2 * np.pi))
    (a0, a1), (b0, b1) = box
    ha, hb = (a1 - a0) / nodes, (b1 - b0) / nodes
    ta = a0 + ha * (np.arange(nodes) + 0.5)
    tb = b0 + hb * (np.arange(nodes) + 0.5)
    grid = np.stack(np.meshgrid(ta, tb, indexing="ij"), -1).reshape(-1, 2)
    total = 0.0
    u_field = im.log_factor
    g = im.ambient.g
    for start in range(0, len(grid), chunk):
        pts = grid[start:start + chunk]
        h2 = mean_curvature_norm_sq(im, pts)
        area = np.exp(2 * u_field(pts)) * np.sqrt(np.linalg.det(g.matrix(pts)))
        total += float(np.sum(h2 * area))
    return total * ha * hb
