"""Metric-level operators on a single chart.

Index conventions for returned arrays (leading batch axes omitted):

* ``christoffel[k, i, j]`` is the symbol of ``nabla_{d_i} d_j`` along ``d_k``.
* ``riemann[l, k, i, j]`` is the ``d_l`` component of ``R(d_i, d_j) d_k`` with
  ``R(X, Y) = [nabla_X, nabla_Y] - nabla_[X, Y]``.  In coordinates::

      R^l_{kij} = d_i G^l_{jk} - d_j G^l_{ik} + G^l_{im} G^m_{jk} - G^l_{jm} G^m_{ik}

  With this sign the unit round sphere has sectional curvature +1.
* ``ricci[a, b] = sum_l riemann[l, b, l, a]``, i.e. ``Ric(V, W)`` is the trace
  of ``X -> R(X, V) W``.
* Covariant derivatives put the differentiating index last.

Every public function accepts a :class:`~ambientgeom.chart.Point` or an
array of coordinates of shape ``B + (n,)`` and then returns batched arrays.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import jets
from .chart import TensorField, coords_of
from .errors import (ChartError, DegeneratePlaneError, DimensionError, SignatureError,
                     SingularMatrixError, SingularMetricError)
from .jets import Jet

RIEMANNIAN = "riemannian"
LORENTZIAN = "lorentzian"
DEGENERATE_PLANE_THRESHOLD = 1e-12


@dataclass(frozen=True)
class MetricField:
    chart: object
    components: TensorField
    declared_signature: str = RIEMANNIAN

    def __post_init__(self):
        comps = self.components
        if comps.contravariant_rank != 0 or comps.covariant_rank != 2:
            raise ChartError("metric components must form a (0,2) tensor field")
        if comps.chart != self.chart:
            raise ChartError("metric components live on another chart")
        if self.declared_signature not in (RIEMANNIAN, LORENTZIAN):
            raise ValueError(f"unknown signature {self.declared_signature!r}")
        n = self.chart.dim
        pts = None
        for i in range(n):
            for j in range(i):
                a, b = comps.component(i, j), comps.component(j, i)
                if a.body == b.body:
                    continue
                if pts is None:
                    pts = self.chart.sample(np.random.default_rng(0), 20)
                va, vb = a(pts), b(pts)
                if not np.allclose(va, vb, rtol=1e-12, atol=1e-12):
                    raise ChartError(f"metric component ({i},{j}) differs from ({j},{i})")

    @property
    def dim(self):
        return self.chart.dim

    @classmethod
    def from_strings(cls, chart, entries, signature=RIEMANNIAN, constants=None):
        return cls(chart, TensorField.from_strings(chart, 0, 2, entries, constants), signature)

    def jet(self, coords, order):
        """Metric jet, symmetric bit-for-bit (upper triangle mirrored)."""
        coords = np.asarray(coords, dtype=float)
        n = self.dim
        seeds = Jet.seeds(coords, order)
        env = dict(zip(self.chart.coordinate_names, seeds))
        batch = coords.shape[:-1]
        upper = {}
        for i in range(n):
            for j in range(i, n):
                upper[i, j] = self.components.component(i, j).jet_env(env, n, batch, order)
        rows = [jets.stack([upper[min(i, j), max(i, j)] for j in range(n)], axis=-1) for i in range(n)]
        return jets.stack(rows, axis=-2)

    def matrix(self, p):
        return self.jet(coords_of(self.chart, p), 0).value

    def check_signature(self, coords):
        """Raise unless the metric is invertible with the declared signature."""
        g = self.matrix(coords)
        try:
            jets.lu_inverse(g)
        except SingularMatrixError as exc:
            raise SingularMetricError(str(exc), where=exc.where) from None
        eig = np.linalg.eigvalsh(g)
        negatives = np.sum(eig < 0, axis=-1)
        want = 0 if self.declared_signature == RIEMANNIAN else 1
        bad = negatives != want
        if np.any(bad):
            idx = np.argwhere(np.atleast_1d(bad))[0]
            raise SignatureError(
                f"metric is not {self.declared_signature} at sample {tuple(int(i) for i in idx)}")


@dataclass(frozen=True)
class FrameVector:
    point: object
    components: tuple

    def __post_init__(self):
        comps = np.asarray(self.components, dtype=float)
        if not np.all(np.isfinite(comps)):
            raise ValueError("frame vector components must be finite")
        object.__setattr__(self, "components", tuple(float(c) for c in comps))

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.components, dtype=dtype or float)


@dataclass(frozen=True)
class CurvatureSlice:
    point: object
    riemann: np.ndarray
    ricci: np.ndarray
    scalar: np.ndarray


# -- jet-level machinery ---------------------------------------------------------

def metric_inverse(gj):
    try:
        return jets.inv(gj)
    except SingularMatrixError as exc:
        raise SingularMetricError(str(exc), where=exc.where) from None


class LocalGeometry:
    """Levi-Civita data derived from a metric jet; quantities computed lazily.

    A metric jet of order k yields Christoffel symbols of order k-1 and
    curvature of order k-2.
    """

    def __init__(self, gj):
        self.g = gj
        self.n = gj.shape[-1]

    @cached_property
    def ginv(self):
        return metric_inverse(self.g)

    @cached_property
    def christoffel(self):
        dg = self.g.d()  # [a, b, m] = d_m g_ab
        # C[l, i, j] = d_i g_lj + d_j g_li - d_l g_ij
        c = dg.map_linear(lambda a: np.einsum("...lji->...lij", a)) \
            + dg.map_linear(lambda a: np.einsum("...lij->...lij", a)) \
            - dg.map_linear(lambda a: np.einsum("...ijl->...lij", a))
        gam = jets.einsum("...kl,...lij->...kij", self.ginv.truncate(dg.order), c) * 0.5
        return (gam + gam.swapaxes(-1, -2)) * 0.5

    @cached_property
    def riemann(self):
        gam = self.christoffel
        dgam = gam.d()  # [l, j, k, i] = d_i G^l_jk
        a = dgam.map_linear(lambda x: np.einsum("...ljki->...lkij", x)) \
            + jets.einsum("...lim,...mjk->...lkij", gam.truncate(dgam.order), gam.truncate(dgam.order))
        return a - a.swapaxes(-1, -2)

    @cached_property
    def ricci(self):
        ric = self.riemann.map_linear(lambda x: np.einsum("...lbla->...ab", x))
        return (ric + ric.swapaxes(-1, -2)) * 0.5

    @cached_property
    def scalar(self):
        ric = self.ricci
        return jets.einsum("...ab,...ab->...", self.ginv.truncate(ric.order), ric)

    @cached_property
    def schouten(self):
        n = self.n
        if n < 3:
            raise DimensionError("the Schouten tensor needs dimension >= 3")
        ric = self.ricci
        g = self.g.truncate(ric.order)
        scal = self.scalar
        return (ric - g * _expand(scal, 2) * (1.0 / (2 * (n - 1)))) * (1.0 / (n - 2))

    def covariant_derivative(self, tj, kind):
        """Covariant derivative of a (1,1) or (0,2) tensor jet; new index last."""
        dt = tj.d()
        gam = self.christoffel.truncate(dt.order)
        t = tj.truncate(dt.order)
        if kind == (1, 1):
            # (nabla_k T)^i_j = d_k T^i_j + G^i_km T^m_j - G^m_kj T^i_m
            return dt + jets.einsum("...ikm,...mj->...ijk", gam, t) \
                - jets.einsum("...mkj,...im->...ijk", gam, t)
        if kind == (0, 2):
            return dt - jets.einsum("...mki,...mj->...ijk", gam, t) \
                - jets.einsum("...mkj,...im->...ijk", gam, t)
        raise ValueError(f"unsupported tensor type {kind}")

    def hessian(self, uj):
        """Hessian jet of a scalar jet ``uj``."""
        du = uj.d()
        ddu = du.d()
        gam = self.christoffel.truncate(ddu.order)
        hess = ddu - jets.einsum("...kij,...k->...ij", gam, du.truncate(ddu.order))
        return (hess + hess.swapaxes(-1, -2)) * 0.5

    def gradient(self, uj):
        du = uj.d()
        return jets.einsum("...ij,...j->...i", self.ginv.truncate(du.order), du)


def _expand(jet, ndim):
    """Append ``ndim`` unit axes to a jet's value shape."""
    return jet.map_linear(lambda a: a.reshape(a.shape + (1,) * ndim))


def local_geometry(g, p, order):
    coords = coords_of(g.chart, p)
    return LocalGeometry(g.jet(coords, order)), coords


def _vec(v):
    return np.asarray(v, dtype=float)


# -- public operations --------------------------------------------------------------

def christoffel(g, p):
    geo, _ = local_geometry(g, p, 1)
    return geo.christoffel.value


def riemann(g, p):
    geo, coords = local_geometry(g, p, 2)
    return CurvatureSlice(p, geo.riemann.value, geo.ricci.value, geo.scalar.value)


def ricci(g, p):
    return riemann(g, p).ricci


def scalar_curvature(g, p):
    return riemann(g, p).scalar


def curvature_vector(rm, x, y, z):
    """``R(x, y) z`` from a riemann array."""
    return np.einsum("...lkij,...i,...j,...k->...l", rm, x, y, z)


def sectional_curvature(g, p, v, w):
    geo, _ = local_geometry(g, p, 2)
    return sectional_from(geo.g.value, geo.riemann.value, _vec(v), _vec(w))


def sectional_from(gmat, rm, v, w):
    gvv = np.einsum("...ij,...i,...j->...", gmat, v, v)
    gww = np.einsum("...ij,...i,...j->...", gmat, w, w)
    gvw = np.einsum("...ij,...i,...j->...", gmat, v, w)
    gram = gvv * gww - gvw ** 2
    if np.any(np.abs(gram) < DEGENERATE_PLANE_THRESHOLD):
        raise DegeneratePlaneError(f"plane Gram determinant {np.min(np.abs(gram)):.3e} is degenerate")
    rvw = curvature_vector(rm, v, w, w)
    return np.einsum("...ij,...i,...j->...", gmat, rvw, v) / gram


def gradient(g, u, p):
    geo, coords = local_geometry(g, p, 1)
    return geo.gradient(u.jet(coords, 1)).value


def hessian(g, u, p):
    geo, coords = local_geometry(g, p, 1)
    return geo.hessian(u.jet(coords, 2)).value


def laplacian(g, u, p):
    geo, coords = local_geometry(g, p, 1)
    hess = geo.hessian(u.jet(coords, 2)).value
    return np.einsum("...ij,...ij->...", geo.ginv.value, hess)


def grad_norm_sq(g, u, p):
    coords = coords_of(g.chart, p)
    gj = g.jet(coords, 0)
    du = u.jet(coords, 1).d().value
    return np.einsum("...ij,...i,...j->...", jets.lu_inverse(gj.value), du, du)


def lie_derivative_metric(g, X, p):
    """``(L_X g)_ij = X^k d_k g_ij + g_kj d_i X^k + g_ik d_j X^k``."""
    coords = coords_of(g.chart, p)
    gj = g.jet(coords, 1)
    xj = X.jet(coords, 1)
    return lie_derivative_from(gj, xj)


def lie_derivative_from(gj, xj):
    g, dg = gj.value, gj.d().value
    x, dx = xj.value, xj.d().value  # dx[k, i] = d_i X^k
    out = np.einsum("...k,...ijk->...ij", x, dg) \
        + np.einsum("...kj,...ki->...ij", g, dx) \
        + np.einsum("...ik,...kj->...ij", g, dx)
    return (out + np.swapaxes(out, -1, -2)) * 0.5


def covariant_derivative_tensor(g, T, p):
    """Covariant derivative of a (1,1) or (0,2) tensor field; new index last."""
    coords = coords_of(g.chart, p)
    geo = LocalGeometry(g.jet(coords, 1))
    kind = (T.contravariant_rank, T.covariant_rank)
    return geo.covariant_derivative(T.jet(coords, 1), kind).value


def metric_compatibility_defect(g, p):
    """max |nabla g| (zero for the Levi-Civita connection)."""
    coords = coords_of(g.chart, p)
    geo = LocalGeometry(g.jet(coords, 1))
    return np.max(np.abs(geo.covariant_derivative(geo.g, (0, 2)).value), axis=(-3, -2, -1))


def contracted_bianchi_defect(g, p):
    """max |2 div Ric - d scal| at each point."""
    coords = coords_of(g.chart, p)
    geo = LocalGeometry(g.jet(coords, 3))
    nric = geo.covariant_derivative(geo.ricci, (0, 2)).value  # [a, b, c] = nabla_c Ric_ab
    div = np.einsum("...ca,...abc->...b", geo.ginv.value, nric)
    dscal = geo.scalar.d().value
    return np.max(np.abs(2 * div - dscal), axis=-1)


def flat(g, p, v):
    """Lower an index: ``v^i -> g_ij v^j``."""
    return np.einsum("...ij,...j->...i", g.matrix(p), _vec(v))


def sharp(g, p, covector):
    """Raise an index: ``w_i -> g^ij w_j`` (LU inverse of the metric)."""
    try:
        ginv = jets.lu_inverse(g.matrix(p))
    except SingularMatrixError as exc:
        raise SingularMetricError(str(exc), where=exc.where) from None
    return np.einsum("...ij,...j->...i", ginv, _vec(covector))
