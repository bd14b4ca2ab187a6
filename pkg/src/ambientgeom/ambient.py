"""The Lorentzian ambient space ``B x M`` built from a metric ``g`` and a family ``alpha``.

Coordinates on the product chart are ``(t, rho, x^1, ..., x^n)`` with ``t > 0``
and ``|rho| < epsilon``.  The ambient metric is

    d(rho t) (x) dt + dt (x) d(rho t) + t^2 g(alpha(rho) ., .)

so that ``gt(d_t, d_t) = 2 rho``, ``gt(d_t, d_rho) = t``, ``gt(d_rho, d_rho) = 0``
and the fiber block is ``t^2 g alpha(rho)``.  Ambient index 0 is ``t``,
index 1 is ``rho`` and indices ``2..n+1`` are the base coordinates.
"""

from dataclasses import dataclass
from itertools import product

import numpy as np

from . import expr as ex
from . import jets
from .chart import (SAMPLE_MARGIN, Chart, ScalarField, TensorField, coords_of,
                    parse_expression)
from .errors import (ChartError, DomainError, HypothesisViolation,
                     PositivityBandError)
from .jets import Jet
from .riemann import (LORENTZIAN, LocalGeometry, MetricField, curvature_vector,
                      lie_derivative_from)

T_RANGE = (0.2, 5.0)
SLICE_TOLERANCE = 1e-12
ALPHA_IDENTITY_TOL = 1e-12
SELF_ADJOINT_TOL = 1e-10
POSITIVITY_FLOOR = 1e-8
RANK_THRESHOLD = 1e-9


def _worst(defect, points):
    defect = np.asarray(defect)
    i = int(np.argmax(defect))
    return float(defect.flat[i]), np.asarray(points).reshape(-1, np.asarray(points).shape[-1])[i]


class AlphaFamily:
    """A one-parameter family ``alpha(rho)`` of endomorphism fields on ``chart``.

    ``components[i][j]`` is the ``(i, j)`` entry of the matrix acting on
    column vectors, an expression in ``rho`` and the chart coordinates.
    """

    PARAM = "rho"

    def __init__(self, chart, components, epsilon, *, check_points=50, seed=0):
        if not epsilon > 0:
            raise ValueError("epsilon must be positive")
        n = chart.dim
        if self.PARAM in chart.coordinate_names:
            raise ChartError("the base chart may not use 'rho' as a coordinate name")
        arr = np.empty((n, n), dtype=object)
        for i, j in product(range(n), repeat=2):
            comp = components[i][j]
            if not isinstance(comp, ScalarField) or comp.chart != chart:
                raise ChartError("alpha components must be scalar fields on the base chart")
            arr[i, j] = comp
        self.chart = chart
        self.components = arr
        self.epsilon = float(epsilon)
        self._check_identity(check_points, seed)

    @classmethod
    def from_strings(cls, chart, entries, epsilon, constants=None, **kw):
        comps = [[parse_expression(str(e), chart, constants, params=(cls.PARAM,)) for e in row]
                 for row in entries]
        return cls(chart, comps, epsilon, **kw)

    @classmethod
    def identity(cls, chart, epsilon=1.0):
        n = chart.dim
        return cls.from_strings(chart, [["1" if i == j else "0" for j in range(n)] for i in range(n)], epsilon)

    @property
    def dim(self):
        return self.chart.dim

    def _check_identity(self, count, seed):
        pts = self.chart.sample(np.random.default_rng(seed), count)
        val = self.value(np.zeros(count), pts)
        defect = np.max(np.abs(val - np.eye(self.dim)), axis=(-2, -1))
        if np.max(defect) > ALPHA_IDENTITY_TOL:
            d, w = _worst(defect, pts)
            raise HypothesisViolation("alpha(0) is not the identity", d, w)

    def jet_env(self, env, nvar, batch, order):
        """Matrix jet of ``alpha`` with ``env`` binding rho and the coordinates."""
        rows = [jets.stack([self.components[i, j].jet_env(env, nvar, batch, order)
                            for j in range(self.dim)], axis=-1) for i in range(self.dim)]
        return jets.stack(rows, axis=-2)

    def jet_aux(self, rho, coords, order):
        """Jet over the auxiliary variables ``(rho, x^1..x^n)``."""
        coords = np.asarray(coords, dtype=float)
        rho = np.broadcast_to(np.asarray(rho, dtype=float), coords.shape[:-1])
        aux = np.concatenate([rho[..., None], coords], axis=-1)
        seeds = Jet.seeds(aux, order)
        env = dict(zip((self.PARAM,) + self.chart.coordinate_names, seeds))
        return self.jet_env(env, self.dim + 1, coords.shape[:-1], order)

    def value(self, rho, coords):
        return self.jet_aux(rho, coords, 0).value

    def rho_derivative(self, rho, coords):
        return self.jet_aux(rho, coords, 1).first[0]

    def derivative_at_zero_jet(self, coords, order):
        """Jet over the base chart of ``alpha'(0)``."""
        j = self.jet_aux(0.0, coords, order + 1)
        return j.partial(0).restrict(range(1, self.dim + 1))


@dataclass(frozen=True)
class AmbientSpace:
    base_chart: Chart
    product_chart: Chart
    metric: MetricField
    g: MetricField
    alpha: AlphaFamily

    @property
    def n(self):
        return self.base_chart.dim

    @property
    def epsilon(self):
        return self.alpha.epsilon

    def sample(self, rng, count, on_slice=False, box=None):
        """Band points with ``t`` in :data:`T_RANGE` and ``rho`` clear of the band edge.

        ``box`` optionally narrows the base-coordinate sampling box.
        """
        t = T_RANGE[0] + (T_RANGE[1] - T_RANGE[0]) * rng.random(count)
        if on_slice:
            rho = np.zeros(count)
        else:
            r = self.epsilon * (1 - SAMPLE_MARGIN)
            rho = -r + 2 * r * rng.random(count)
        x = self.base_chart.sample(rng, count, box)
        return np.concatenate([t[:, None], rho[:, None], x], axis=-1)

    def metric_jet(self, p, order):
        return self.metric.jet(coords_of(self.product_chart, p), order)

    def geometry(self, p, order=2):
        return LocalGeometry(self.metric_jet(p, order))


@dataclass(frozen=True)
class ScaleSlice:
    """The hypersurface ``rho = 0``: the point ``t^2 g_x`` sits at ``(t, 0, x)``."""

    ambient: AmbientSpace

    def embed(self, t, x):
        t = np.asarray(t, dtype=float)
        x = np.asarray(x, dtype=float)
        return np.concatenate([t[..., None], np.zeros_like(t)[..., None], x], axis=-1)


def _split(p):
    p = np.asarray(p, dtype=float)
    return p[..., 0], p[..., 1], p[..., 2:]


def _sample_alpha_band(alpha, rng, count):
    r = alpha.epsilon * (1 - SAMPLE_MARGIN)
    rho = -r + 2 * r * rng.random(count)
    return rho, alpha.chart.sample(rng, count)


def check_alpha_against(g, alpha, count=200, seed=0):
    """Self-adjointness and positivity of ``g(alpha(rho) ., .)`` on the band."""
    rho, x = _sample_alpha_band(alpha, np.random.default_rng(seed), count)
    ga = np.einsum("...ik,...kj->...ij", g.matrix(x), alpha.value(rho, x))
    asym = np.max(np.abs(ga - np.swapaxes(ga, -1, -2)), axis=(-2, -1))
    scale = 1 + np.max(np.abs(ga), axis=(-2, -1))
    if np.any(asym > SELF_ADJOINT_TOL * scale):
        d, w = _worst(asym / scale, np.concatenate([rho[:, None], x], axis=-1))
        raise HypothesisViolation("alpha is not self-adjoint for g", d, w)
    low = np.linalg.eigvalsh(0.5 * (ga + np.swapaxes(ga, -1, -2)))[..., 0]
    if np.any(low <= POSITIVITY_FLOOR):
        d, w = _worst(-low, np.concatenate([rho[:, None], x], axis=-1))
        raise PositivityBandError("g(alpha(rho) ., .) not positive on the band", -d, w)


def build_ambient(g, alpha, *, check_points=200, seed=0):
    """Assemble the ambient space; component expressions stay symbolic."""
    base = g.chart
    if alpha.chart != base:
        raise ChartError("alpha and g live on different charts")
    if {"t", "rho"} & set(base.coordinate_names):
        raise ChartError("base coordinates may not be named 't' or 'rho'")
    check_alpha_against(g, alpha, check_points, seed)

    n = base.dim
    names = ("t", "rho") + base.coordinate_names
    eps = alpha.epsilon
    pchart = Chart(f"{base.name}~ambient", names,
                   ((0.0, np.inf), (-eps, eps)) + base.bounds)
    t, rho = ex.Var("t"), ex.Var("rho")

    # d(rho t) = rho dt + t drho; symmetrised product with dt
    drt = [rho, t] + [ex.num(0)] * n
    dt = [ex.num(1), ex.num(0)] + [ex.num(0)] * n
    nodes = np.empty((n + 2, n + 2), dtype=object)
    for i in range(n + 2):
        for j in range(n + 2):
            nodes[i, j] = ex.add(ex.mul(drt[i], dt[j]), ex.mul(dt[i], drt[j]))
    t2 = ex.Pow(t, 2)
    for i in range(n):
        for j in range(i, n):
            block = ex.total(ex.mul(g.components.component(i, k).body, alpha.components[k, j].body)
                             for k in range(n))
            nodes[i + 2, j + 2] = ex.mul(t2, block)
            nodes[j + 2, i + 2] = nodes[i + 2, j + 2]
    comps = TensorField(pchart, 0, 2, tuple(ScalarField(pchart, nodes[i, j])
                                            for i in range(n + 2) for j in range(n + 2)))
    metric = MetricField(pchart, comps, LORENTZIAN)
    space = AmbientSpace(base, pchart, metric, g, alpha)

    pts = space.sample(np.random.default_rng(seed), check_points)
    gt = metric.matrix(pts)
    tt, rr = pts[:, 0], pts[:, 1]
    expected_b = np.stack([np.stack([2 * rr, tt], -1), np.stack([tt, 0 * tt], -1)], -2)
    if np.max(np.abs(gt[:, :2, :2] - expected_b)) > 1e-12 * (1 + T_RANGE[1]):
        raise ChartError("ambient (t, rho) block does not match d(rho t) expansion")
    metric.check_signature(pts)
    return space


# -- distinguished fields -------------------------------------------------------

def _field(chart, entries):
    return TensorField.from_strings(chart, 1, 0, entries)


def fundamental_field(a):
    """``Z = t d_t``."""
    return _field(a.product_chart, ["t", "0"] + ["0"] * a.n)


def timelike_field(a):
    """``T = (1/t) d_t - (1 + rho/t^2) d_rho``, with ``gt(T, T) = -2``."""
    return _field(a.product_chart, ["1/t", "-(1 + rho/t^2)"] + ["0"] * a.n)


def spacelike_field(a):
    """``E = (1/t) d_t + (1 - rho/t^2) d_rho``, with ``gt(E, E) = 2``."""
    return _field(a.product_chart, ["1/t", "1 - rho/t^2"] + ["0"] * a.n)


def pair(gmat, v, w):
    return np.einsum("...ij,...i,...j->...", gmat, v, w)


def lift(v, n):
    """Base vector(s) of shape ``B + (n,)`` as ambient vectors with zero (t, rho) part."""
    v = np.asarray(v, dtype=float)
    return np.concatenate([np.zeros(v.shape[:-1] + (2,)), v], axis=-1)


def omega_and_exterior_derivative(a, p):
    """``omega = gt(Z, .)`` and ``d omega`` (``[A, B] = d_A omega_B - d_B omega_A``)."""
    coords = coords_of(a.product_chart, p)
    gj = a.metric.jet(coords, 1)
    zj = fundamental_field(a).jet(coords, 1)
    om = jets.einsum("...ab,...b->...a", gj, zj)
    dom = om.d().value  # [b, a] = d_a omega_b
    return om.value, np.swapaxes(dom, -1, -2) - dom


def homothety_defect(a, p):
    """max |L_Z gt - 2 gt| per point."""
    coords = coords_of(a.product_chart, p)
    gj = a.metric.jet(coords, 1)
    lz = lie_derivative_from(gj, fundamental_field(a).jet(coords, 1))
    return np.max(np.abs(lz - 2 * gj.value), axis=(-2, -1))


def induced_slice_metric(a, t, x):
    """Pullback of ``gt`` to the slice, in coordinates ``(t, x)``."""
    p = ScaleSlice(a).embed(t, x)
    gt = a.metric.matrix(p)
    keep = [0] + list(range(2, a.n + 2))
    return gt[..., keep, :][..., :, keep]


def pullback_defect(a, t, x):
    """|iota* gt - t^2 g (+) 0| per point; the slice metric is ``t^2 g`` on base directions."""
    ind = induced_slice_metric(a, t, x)
    t = np.asarray(t, dtype=float)
    expected = np.zeros_like(ind)
    expected[..., 1:, 1:] = (t ** 2)[..., None, None] * a.g.matrix(x)
    return np.max(np.abs(ind - expected), axis=(-2, -1))


def degeneracy_defect(a, t, x):
    """|iota* gt (Z_Q, .)| per point, with ``Z_Q = t d_t``."""
    ind = induced_slice_metric(a, t, x)
    return np.max(np.abs(np.asarray(t)[..., None] * ind[..., 0, :]), axis=-1)


def radical_check(a, t, x):
    """Rank and kernel alignment of the induced slice tensor.

    Returns ``(rank, kernel_misalignment)``; a lightlike slice has rank ``n``
    and a kernel along ``d_t``.
    """
    ind = induced_slice_metric(a, t, x)
    scale = np.max(np.abs(ind), axis=(-2, -1), keepdims=True)
    _, s, vt = np.linalg.svd(ind / scale)
    rank = np.sum(s > RANK_THRESHOLD, axis=-1)
    kernel = vt[..., -1, :]
    misalign = 1 - np.abs(kernel[..., 0])
    return rank, misalign


# -- connection ------------------------------------------------------------------

CONNECTION_SELECTORS = ("t_t", "rho_rho", "t_rho", "t_V", "rho_V", "V_W")


def _on_slice(p):
    if np.any(np.abs(np.asarray(p)[..., 1]) > SLICE_TOLERANCE):
        raise DomainError("the (V, W) connection formula holds only on the rho = 0 slice")


def closed_form_connection(a, p, which, V=None, W=None):
    """Closed-form covariant derivative of coordinate/lifted fields, as an ambient vector."""
    coords = coords_of(a.product_chart, p)
    t, rho, x = _split(coords)
    out = np.zeros(coords.shape)
    if which in ("t_t", "rho_rho"):
        return out
    if which == "t_rho":
        out[..., 1] = 1 / t
        return out
    V = np.broadcast_to(np.asarray(V, dtype=float), x.shape)
    if which == "t_V":
        out[..., 2:] = V / t[..., None]
        return out
    if which == "rho_V":
        al = a.alpha.value(rho, x)
        ad = a.alpha.rho_derivative(rho, x)
        out[..., 2:] = 0.5 * np.linalg.solve(al, np.einsum("...ij,...j->...i", ad, V)[..., None])[..., 0]
        return out
    if which == "V_W":
        _on_slice(coords)
        W = np.broadcast_to(np.asarray(W, dtype=float), x.shape)
        gmat = a.g.matrix(x)
        ad = a.alpha.rho_derivative(0.0, x)
        out[..., 0] = -(t / 2) * pair(gmat, np.einsum("...ij,...j->...i", ad, V), W)
        out[..., 1] = -pair(gmat, V, W)
        gam = LocalGeometry(a.g.jet(x, 1)).christoffel.value
        out[..., 2:] = np.einsum("...kij,...i,...j->...k", gam, V, W)
        return out
    raise ValueError(f"unknown selector {which!r}; expected one of {CONNECTION_SELECTORS}")


def numeric_connection(a, p, X, Y):
    """``Gt(X, Y)`` from the ambient Christoffel symbols (constant-coefficient fields)."""
    coords = coords_of(a.product_chart, p)
    gam = LocalGeometry(a.metric.jet(coords, 1)).christoffel.value
    return np.einsum("...kij,...i,...j->...k", gam, np.asarray(X, float), np.asarray(Y, float))


def selector_fields(a, which, V=None, W=None, shape=()):
    """Ambient direction pair ``(X, Y)`` matching a closed-form selector."""
    m = a.n + 2
    e = np.eye(m)
    if which == "t_t":
        return e[0], e[0]
    if which == "rho_rho":
        return e[1], e[1]
    if which == "t_rho":
        return e[0], e[1]
    if which == "t_V":
        return e[0], lift(V, a.n)
    if which == "rho_V":
        return e[1], lift(V, a.n)
    if which == "V_W":
        return lift(V, a.n), lift(W, a.n)
    raise ValueError(f"unknown selector {which!r}")


def connection_defect(a, p, which, V=None, W=None):
    X, Y = selector_fields(a, which, V, W)
    closed = closed_form_connection(a, p, which, V, W)
    return np.max(np.abs(closed - numeric_connection(a, p, X, Y)), axis=-1)


# -- Ricci along the slice ---------------------------------------------------------

def ricci_along_Q_matrix(a, x):
    """Closed-form ``Ric~`` on base directions along ``rho = 0`` (independent of t)."""
    x = coords_of(a.base_chart, x)
    n = a.n
    geo = LocalGeometry(a.g.jet(x, 2))
    gmat = geo.g.value
    ad = a.alpha.rho_derivative(0.0, x)
    tr = np.trace(ad, axis1=-2, axis2=-1)
    g_ad = np.einsum("...ik,...kj->...ij", gmat, ad)
    return geo.ricci.value - 0.5 * tr[..., None, None] * gmat - 0.5 * (n - 2) * g_ad


def ricci_along_Q(a, p, V, W):
    coords = coords_of(a.product_chart, p)
    _on_slice(coords)
    mat = ricci_along_Q_matrix(a, coords[..., 2:])
    return pair(mat, np.asarray(V, float), np.asarray(W, float))


def numeric_ambient_ricci(a, p):
    return a.geometry(p, 2).ricci.value


def ricci_Q_defects(a, p):
    """``(closed vs numeric on base block, max |Ric~(d_t, .)|)`` at slice points."""
    coords = coords_of(a.product_chart, p)
    _on_slice(coords)
    ric = numeric_ambient_ricci(a, coords)
    closed = ricci_along_Q_matrix(a, coords[..., 2:])
    block = np.max(np.abs(ric[..., 2:, 2:] - closed), axis=(-2, -1))
    t_row = np.max(np.abs(ric[..., 0, [0] + list(range(2, a.n + 2))]), axis=-1)
    return block, t_row


def ricci_Q_vanishing(a, p):
    """max |Ric~| over base directions at slice points; zero under the ambient hypothesis."""
    coords = coords_of(a.product_chart, p)
    _on_slice(coords)
    return np.max(np.abs(numeric_ambient_ricci(a, coords)[..., 2:, 2:]), axis=(-2, -1))


def mixed_curvature_defect(a, p, V, W):
    """``gt(R~(d_t, V)W, d_rho) + gt(R~(d_rho, V)W, d_t)`` along the slice."""
    coords = coords_of(a.product_chart, p)
    _on_slice(coords)
    geo = a.geometry(coords, 2)
    rm, gmat = geo.riemann.value, geo.g.value
    m = a.n + 2
    e = np.eye(m)
    Vl, Wl = lift(V, a.n), lift(W, a.n)
    r1 = curvature_vector(rm, np.broadcast_to(e[0], coords.shape), Vl, Wl)
    r2 = curvature_vector(rm, np.broadcast_to(e[1], coords.shape), Vl, Wl)
    return pair(gmat, r1, np.broadcast_to(e[1], coords.shape)) + pair(gmat, r2, np.broadcast_to(e[0], coords.shape))


# -- fibers {(t, rho)} x M -----------------------------------------------------------

def fiber_second_fundamental_form(a, p, V, W):
    """Closed form of the fiber second fundamental form, as an ambient vector."""
    coords = coords_of(a.product_chart, p)
    t, rho, x = _split(coords)
    V = np.asarray(V, float)
    W = np.asarray(W, float)
    gt = a.metric.matrix(coords)[..., 2:, 2:]
    al = a.alpha.value(rho, x)
    ad = a.alpha.rho_derivative(rho, x)
    sv = np.linalg.solve(al, np.einsum("...ij,...j->...i", ad, V)[..., None])[..., 0]
    gsw = pair(gt, sv, W)
    out = np.zeros(coords.shape)
    out[..., 0] = -gsw / (2 * t)
    out[..., 1] = -(pair(gt, V, W) - rho * gsw) / t ** 2
    return out


def fiber_second_fundamental_form_numeric(a, p, V, W):
    """Normal part of ``Gt(V, W)``; the fiber normal space is spanned by d_t, d_rho."""
    full = numeric_connection(a, p, lift(V, a.n), lift(W, a.n))
    out = np.zeros(full.shape)
    out[..., :2] = full[..., :2]
    return out


def fiber_umbilical_defect(a, p):
    """max |II_F(e_i, e_j) - gt(e_i, e_j) H_F| over coordinate pairs (0 iff umbilical)."""
    coords = coords_of(a.product_chart, p)
    n = a.n
    e = np.eye(n)
    ii = np.stack([np.stack([fiber_second_fundamental_form(a, coords, e[i], e[j])[..., :2]
                             for j in range(n)], -2) for i in range(n)], -3)
    gt = a.metric.matrix(coords)[..., 2:, 2:]
    ginv = np.linalg.inv(gt)
    h = np.einsum("...ij,...ijc->...c", ginv, ii) / n
    return np.max(np.abs(ii - gt[..., None] * h[..., None, None, :]), axis=(-3, -2, -1))


# -- flat model check ------------------------------------------------------------------

def _minkowski_map_jet(a, embedding, coords, order):
    seeds = Jet.seeds(coords, order)
    env = dict(zip(a.product_chart.coordinate_names, seeds))
    t, rho = seeds[0], seeds[1]
    m = a.n + 2
    batch = coords.shape[:-1]
    X = [f.jet_env(env, m, batch, order) for f in embedding]
    comps = [t * (1 - 0.5 * rho)] + [(t * (1 + 0.5 * rho)) * xi for xi in X]
    return jets.stack(comps, axis=-1)


def minkowski_cross_check(a, p, embedding):
    """``|F* g_L - gt|`` for ``F(t, rho, x) = ((1 - rho/2) t, (1 + rho/2) t X(x))``.

    ``embedding`` lists scalar fields ``X^0..X^n`` on the base chart describing
    the unit sphere in Euclidean space.
    """
    coords = coords_of(a.product_chart, p)
    Fj = _minkowski_map_jet(a, embedding, coords, 1)
    dF = np.moveaxis(Fj.first, 0, -1)  # [..., component, variable]
    eta = np.diag([-1.0] + [1.0] * (dF.shape[-2] - 1))
    pull = np.einsum("...ai,ab,...bj->...ij", dF, eta, dF)
    return np.max(np.abs(pull - a.metric.matrix(coords)), axis=(-2, -1))


def lightcone_defect(a, p, embedding):
    """``|g_L(F, F)|`` at slice points (zero on the future light cone)."""
    coords = coords_of(a.product_chart, p)
    _on_slice(coords)
    F = _minkowski_map_jet(a, embedding, coords, 0).value
    return np.abs(-F[..., 0] ** 2 + np.sum(F[..., 1:] ** 2, axis=-1))


def minkowski_map(a, p, embedding):
    coords = coords_of(a.product_chart, p)
    return _minkowski_map_jet(a, embedding, coords, 0).value
