"""Coordinate charts, points and expression-backed fields."""

import math
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from . import expr as ex
from .errors import ChartError
from .jets import Jet, broadcast_to, stack

SAMPLE_MARGIN = 1e-2
# replaces infinite endpoints when a finite sampling box is needed
UNBOUNDED_SAMPLE_EXTENT = 1.0


@dataclass(frozen=True)
class Chart:
    """An open coordinate box ``prod (lo_i, hi_i)``; endpoints may be infinite."""

    name: str
    coordinate_names: tuple
    bounds: tuple

    def __post_init__(self):
        names = tuple(self.coordinate_names)
        bounds = tuple((float(lo), float(hi)) for lo, hi in self.bounds)
        object.__setattr__(self, "coordinate_names", names)
        object.__setattr__(self, "bounds", bounds)
        if not names:
            raise ChartError("a chart needs at least one coordinate")
        if len(set(names)) != len(names):
            raise ChartError(f"duplicate coordinate names in {names}")
        if len(bounds) != len(names):
            raise ChartError("one bound pair per coordinate required")
        for name, (lo, hi) in zip(names, bounds):
            if not lo < hi:
                raise ChartError(f"empty interval for {name}: ({lo}, {hi})")

    @property
    def dim(self):
        return len(self.coordinate_names)

    def contains(self, coords):
        c = np.asarray(coords, dtype=float)
        lo = np.array([b[0] for b in self.bounds])
        hi = np.array([b[1] for b in self.bounds])
        return np.all((c > lo) & (c < hi), axis=-1)

    def check(self, coords):
        c = np.asarray(coords, dtype=float)
        if c.shape[-1:] != (self.dim,):
            raise ChartError(f"chart {self.name!r} expects {self.dim} coordinates, got shape {c.shape}")
        inside = self.contains(c)
        if not np.all(inside):
            bad = c[~inside][0] if c.ndim > 1 else c
            raise ChartError(f"point {tuple(bad)} outside chart {self.name!r}")
        return c

    def sampling_box(self, margin=SAMPLE_MARGIN):
        box = []
        for lo, hi in self.bounds:
            lo = -UNBOUNDED_SAMPLE_EXTENT if math.isinf(lo) else lo + margin
            hi = UNBOUNDED_SAMPLE_EXTENT if math.isinf(hi) else hi - margin
            if not lo < hi:
                raise ChartError(f"chart {self.name!r} too narrow for sampling margin {margin}")
            box.append((lo, hi))
        return tuple(box)

    def sample(self, rng, count, box=None):
        box = self.sampling_box() if box is None else box
        lo = np.array([b[0] for b in box])
        hi = np.array([b[1] for b in box])
        return lo + (hi - lo) * rng.random((count, self.dim))


@dataclass(frozen=True)
class Point:
    chart: Chart
    coords: tuple

    def __post_init__(self):
        c = self.chart.check(np.asarray(self.coords, dtype=float))
        if c.ndim != 1:
            raise ChartError("a Point holds a single coordinate tuple")
        object.__setattr__(self, "coords", tuple(float(x) for x in c))

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.coords, dtype=dtype or float)


def coords_of(chart, p):
    """Coordinates of a Point, or a validated coordinate array of shape B + (n,)."""
    if isinstance(p, Point):
        if p.chart != chart:
            raise ChartError(f"point lives on chart {p.chart.name!r}, expected {chart.name!r}")
        return np.asarray(p.coords)
    return chart.check(p)


@dataclass(frozen=True)
class ScalarField:
    """A scalar field on ``chart`` given by an expression AST.

    ``params`` lists extra admissible names (e.g. ``rho`` for an endomorphism
    family) which must be bound by the caller in :meth:`jet_env`.
    """

    chart: Chart
    body: ex.Node
    params: tuple = ()

    def __str__(self):
        return ex.unparse(self.body)

    def jet_env(self, env, nvar, batch_shape, order):
        """Evaluate with an explicit name -> Jet environment."""
        val = ex.evaluate(self.body, env, nvar, order)
        if not isinstance(val, Jet):
            val = Jet.constant(val, nvar, order)
        if val.shape != tuple(batch_shape):
            val = broadcast_to(val, batch_shape)
        return val

    def jet(self, coords, order):
        """Jet of the field at coordinates of shape B + (n,)."""
        coords = np.asarray(coords, dtype=float)
        seeds = Jet.seeds(coords, order)
        env = dict(zip(self.chart.coordinate_names, seeds))
        return self.jet_env(env, self.chart.dim, coords.shape[:-1], order)

    def __call__(self, coords):
        return self.jet(coords, 0).value


def parse_expression(src, chart, constants=None, params=()):
    """Parse ``src`` as a scalar field on ``chart``."""
    names = tuple(chart.coordinate_names) + tuple(params)
    return ScalarField(chart, ex.parse(src, names, constants), tuple(params))


def constant_field(chart, value):
    return ScalarField(chart, ex.num(value))


@dataclass(frozen=True)
class TensorField:
    """Component fields indexed by a multi-index of length r + s."""

    chart: Chart
    contravariant_rank: int
    covariant_rank: int
    components: tuple = field(repr=False)

    def __post_init__(self):
        rank = self.contravariant_rank + self.covariant_rank
        n = self.chart.dim
        arr = np.empty((n,) * rank, dtype=object)
        flat = _flatten(self.components, rank)
        if len(flat) != n ** rank:
            raise ChartError(f"expected {n ** rank} components, got {len(flat)}")
        for idx, comp in zip(product(range(n), repeat=rank), flat):
            arr[idx] = comp
        for comp in arr.flat:
            if not isinstance(comp, ScalarField) or comp.chart != self.chart:
                raise ChartError("tensor components must be scalar fields on the tensor's chart")
        object.__setattr__(self, "components", arr)

    @property
    def rank(self):
        return self.contravariant_rank + self.covariant_rank

    def component(self, *idx):
        return self.components[idx]

    def jet(self, coords, order):
        """Jet of shape B + (n,)*rank."""
        coords = np.asarray(coords, dtype=float)
        seeds = Jet.seeds(coords, order)
        env = dict(zip(self.chart.coordinate_names, seeds))
        batch = coords.shape[:-1]
        cache = {}

        def comp_jet(f):
            key = id(f.body)
            if key not in cache:
                cache[key] = f.jet_env(env, self.chart.dim, batch, order)
            return cache[key]

        return _stack_nested(self.components, comp_jet)

    @classmethod
    def from_strings(cls, chart, r, s, entries, constants=None):
        rank = r + s
        flat = _flatten(entries, rank)
        fields = [parse_expression(str(e), chart, constants) for e in flat]
        return cls(chart, r, s, tuple(fields))

    @classmethod
    def from_nodes(cls, chart, r, s, nodes):
        rank = r + s
        flat = _flatten(nodes, rank)
        return cls(chart, r, s, tuple(ScalarField(chart, node) for node in flat))


def _flatten(nested, rank):
    if rank == 0:
        return [nested[0] if isinstance(nested, (list, tuple)) else nested]
    out = []
    for item in nested:
        if rank > 1 and isinstance(item, (list, tuple, np.ndarray)):
            out.extend(_flatten(item, rank - 1))
        else:
            out.append(item)
    return out


def _stack_nested(arr, fn):
    if not isinstance(arr, np.ndarray):
        return fn(arr)
    if arr.ndim == 0:
        return fn(arr[()])
    return stack([_stack_nested(arr[i], fn) for i in range(arr.shape[0])], axis=-arr.ndim)


# -- derivative engine ------------------------------------------------------------

def eval_jet(f, p, order):
    """Exact jet (value and partials up to ``order``) of ``f`` at ``p``."""
    if order not in (1, 2, 3):
        raise ValueError("order must be 1, 2 or 3")
    return f.jet(coords_of(f.chart, p), order)


def finite_difference_jet(f, p, order, h):
    """Central-difference jet of order 1 or 2; a test oracle only."""
    if order not in (1, 2):
        raise ValueError("finite differences support order 1 or 2")
    x = np.asarray(coords_of(f.chart, p), dtype=float)
    if x.ndim != 1:
        raise ChartError("finite_difference_jet works on a single point")
    n = f.chart.dim
    radius = order * h
    for (lo, hi), xi in zip(f.chart.bounds, x):
        if xi - radius <= lo or xi + radius >= hi:
            raise ChartError(f"ball of radius {radius} around {tuple(x)} leaves the chart")
    ev = lambda y: float(f(np.asarray(y)))
    e = np.eye(n) * h
    v = ev(x)
    first = np.array([(ev(x + e[i]) - ev(x - e[i])) / (2 * h) for i in range(n)])
    second = None
    if order == 2:
        second = np.empty((n, n))
        for i in range(n):
            second[i, i] = (ev(x + e[i]) - 2 * v + ev(x - e[i])) / (h * h)
            for j in range(i):
                s = (ev(x + e[i] + e[j]) - ev(x + e[i] - e[j])
                     - ev(x - e[i] + e[j]) + ev(x - e[i] - e[j])) / (4 * h * h)
                second[i, j] = second[j, i] = s
    return Jet(np.asarray(v), first, second, nvar=n, order=order)
