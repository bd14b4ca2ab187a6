"""Conformal rescaling, the Schouten tensor, Moebius structures and the Cotton-York tensor."""

from dataclasses import dataclass, field

import numpy as np

from . import expr as ex
from . import jets
from .chart import ScalarField, TensorField, coords_of
from .errors import ChartError, DimensionError, HypothesisViolation
from .riemann import LocalGeometry, MetricField

TRACE_TOLERANCE = 1e-6
HYPOTHESIS_TOLERANCE = 1e-6
CHECK_POINTS = 100


@dataclass(frozen=True)
class ConformalRep:
    """The metric ``e^{2u} g``."""

    base_metric: MetricField
    log_factor: ScalarField

    def __post_init__(self):
        if self.log_factor.chart != self.base_metric.chart:
            raise ChartError("log factor and metric live on different charts")


@dataclass(frozen=True)
class DerivedTensor:
    """A tensor known only through its jets, e.g. a Schouten tensor or ``g alpha'(0)/2``."""

    chart: object
    jet_fn: object = field(repr=False)
    label: str = ""
    max_order: int = 1

    def jet(self, coords, order):
        if order > self.max_order:
            raise ValueError(f"{self.label or 'tensor'} supports jets up to order {self.max_order}")
        return self.jet_fn(np.asarray(coords, dtype=float), order)


def _exp2u(u):
    if isinstance(u.body, ex.Num):
        return ex.num(np.exp(2 * u.body.value))
    return ex.Call("exp", ex.mul(ex.num(2), u.body))


def rescale_metric(rep):
    g, u = rep.base_metric, rep.log_factor
    factor = _exp2u(u)
    chart = g.chart
    n = chart.dim
    comps = tuple(ScalarField(chart, ex.mul(factor, g.components.component(i, j).body))
                  for i in range(n) for j in range(n))
    return MetricField(chart, TensorField(chart, 0, 2, comps), g.declared_signature)


def sum_fields(u1, u2):
    return ScalarField(u1.chart, ex.add(u1.body, u2.body))


def schouten(g, p):
    if g.dim < 3:
        raise DimensionError("the Schouten tensor is defined here for dimension >= 3")
    return LocalGeometry(g.jet(coords_of(g.chart, p), 2)).schouten.value


def schouten_tensor(g):
    """The Schouten tensor of ``g`` as a jet-backed tensor (jets up to order 1)."""
    if g.dim < 3:
        raise DimensionError("the Schouten tensor is defined here for dimension >= 3")
    return DerivedTensor(g.chart, lambda c, k: LocalGeometry(g.jet(c, k + 2)).schouten,
                         "Schouten tensor", max_order=1)


class MoebiusStructure:
    """A base pair ``(g, P(g))``; every other representative follows from the transformation law.

    The trace condition ``trace_g P = scal / (2(n-1))`` is certified on
    seeded sample points when ``validate`` is set.
    """

    def __init__(self, base_metric, base_tensor, *, validate=True, seed=0):
        if base_tensor.chart != base_metric.chart:
            raise ChartError("Moebius tensor and metric live on different charts")
        self.base_metric = base_metric
        self.base_tensor = base_tensor
        if isinstance(base_tensor, TensorField):
            if (base_tensor.contravariant_rank, base_tensor.covariant_rank) != (0, 2):
                raise ChartError("the Moebius base tensor must be of type (0,2)")
        if validate:
            self.check(CHECK_POINTS, seed)

    @property
    def dim(self):
        return self.base_metric.dim

    @classmethod
    def canonical(cls, g, **kw):
        """The Schouten tensor for ``n >= 3``."""
        return cls(g, schouten_tensor(g), **kw)

    def tensor(self, p):
        return self.base_tensor.jet(coords_of(self.base_metric.chart, p), 0).value

    def trace_defect(self, coords):
        coords = coords_of(self.base_metric.chart, coords)
        geo = LocalGeometry(self.base_metric.jet(coords, 2))
        P = self.base_tensor.jet(coords, 0).value
        tr = np.einsum("...ij,...ij->...", geo.ginv.value, P)
        return np.abs(tr - geo.scalar.value / (2 * (self.dim - 1)))

    def check(self, count=CHECK_POINTS, seed=0):
        pts = self.base_metric.chart.sample(np.random.default_rng(seed), count)
        P = self.base_tensor.jet(pts, 0).value
        asym = np.max(np.abs(P - np.swapaxes(P, -1, -2)), axis=(-2, -1))
        defect = np.maximum(self.trace_defect(pts), asym)
        if np.max(defect) > TRACE_TOLERANCE:
            i = int(np.argmax(defect))
            raise HypothesisViolation("tensor fails the Moebius trace/symmetry condition",
                                      defect[i], pts[i])


def transform_jet(geo, P0, du, hess):
    """``P(e^{2u}g) = P - |du|^2/2 g - Hess u + du (x) du`` at jet level."""
    k = min(P0.order, du.order, hess.order, geo.g.order)
    P0, du, hess = P0.truncate(k), du.truncate(k), hess.truncate(k)
    g, ginv = geo.g.truncate(k), geo.ginv.truncate(k)
    norm = jets.einsum("...ij,...i->...j", ginv, du)
    norm = jets.einsum("...j,...j->...", norm, du)
    dudu = jets.einsum("...i,...j->...ij", du, du)
    return P0 - g * norm.map_linear(lambda a: a[..., None, None]) * 0.5 - hess + dudu


def _transform_parts(m, u, coords, order):
    geo = LocalGeometry(m.base_metric.jet(coords, order + 1))
    uj = u.jet(coords, order + 2)
    return geo, m.base_tensor.jet(coords, order), uj.d().truncate(order), geo.hessian(uj).truncate(order)


def moebius_transform(m, u, p):
    coords = coords_of(m.base_metric.chart, p)
    geo, P0, du, hess = _transform_parts(m, u, coords, 0)
    return transform_jet(geo, P0, du, hess).value


def transformed_structure(m, u):
    """The same Moebius structure based at ``e^{2u} g`` (jets up to order 1)."""
    g1 = rescale_metric(ConformalRep(m.base_metric, u))

    def jet_fn(coords, order):
        geo, P0, du, hess = _transform_parts(m, u, coords, order)
        return transform_jet(geo, P0, du, hess)

    return MoebiusStructure(g1, DerivedTensor(m.base_metric.chart, jet_fn, "transformed tensor", 1),
                            validate=False)


def cocycle_check(m, u1, u2, p):
    """``|transform by u1 then u2  -  transform by u1 + u2|`` (max entry)."""
    m1 = transformed_structure(m, u1)
    two_step = moebius_transform(m1, u2, p)
    one_step = moebius_transform(m, sum_fields(u1, u2), p)
    return np.max(np.abs(two_step - one_step), axis=(-2, -1))


def cotton_york_array(m, p):
    """``C[u, v, w] = g((nabla_u Phat)(v) - (nabla_v Phat)(u), w)`` on coordinate vectors."""
    coords = coords_of(m.base_metric.chart, p)
    geo = LocalGeometry(m.base_metric.jet(coords, 1))
    P = m.base_tensor.jet(coords, 1)
    phat = jets.einsum("...ik,...kj->...ij", geo.ginv, P)
    nab = geo.covariant_derivative(phat, (1, 1)).value  # [i, j, k] = (nabla_k Phat)^i_j
    gmat = geo.g.value
    lowered = np.einsum("...wi,...ivu->...uvw", gmat, nab)  # g((nabla_u Phat) e_v, e_w)
    return lowered - np.swapaxes(lowered, -3, -2)


def cotton_york(m, p, U, V, W):
    C = cotton_york_array(m, p)
    return np.einsum("...uvw,...u,...v,...w->...", C, np.asarray(U, float),
                     np.asarray(V, float), np.asarray(W, float))


def alpha_tensor(g, alpha):
    """``(1/2) g(alpha'(0) ., .)`` as a jet-backed (0,2) tensor (jets up to order 2)."""
    def jet_fn(coords, order):
        ad = alpha.derivative_at_zero_jet(coords, order)
        gj = g.jet(coords, order)
        P = jets.einsum("...ik,...kj->...ij", gj, ad) * 0.5
        return (P + P.swapaxes(-1, -2)) * 0.5
    return DerivedTensor(g.chart, jet_fn, "g alpha'(0) / 2", max_order=2)


def alpha_hypothesis_defect(g, alpha, coords):
    """Defect of ``trace alpha'(0) = 2K`` (n = 2) or ``g alpha'(0) = 2 P^g`` (n >= 3)."""
    coords = coords_of(g.chart, coords)
    n = g.dim
    ad = alpha.derivative_at_zero_jet(coords, 0).value
    geo = LocalGeometry(g.jet(coords, 2))
    if n == 2:
        return np.abs(np.trace(ad, axis1=-2, axis2=-1) - geo.scalar.value)
    g_ad = np.einsum("...ik,...kj->...ij", geo.g.value, ad)
    return np.max(np.abs(g_ad - 2 * geo.schouten.value), axis=(-2, -1))


def moebius_from_alpha(g, alpha, *, count=CHECK_POINTS, seed=0):
    pts = g.chart.sample(np.random.default_rng(seed), count)
    defect = alpha_hypothesis_defect(g, alpha, pts)
    if np.max(defect) > HYPOTHESIS_TOLERANCE:
        i = int(np.argmax(defect))
        which = "trace alpha'(0) = 2K" if g.dim == 2 else "g alpha'(0) = 2 P^g"
        raise HypothesisViolation(f"alpha violates {which}", defect[i], pts[i])
    return MoebiusStructure(g, alpha_tensor(g, alpha), validate=False)
