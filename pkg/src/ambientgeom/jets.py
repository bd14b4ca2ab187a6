"""Truncated Taylor jets (value plus partials up to order 3).

A :class:`Jet` carries an array-valued quantity together with its partial
derivatives with respect to ``nvar`` independent variables.  Derivative axes
are *leading*::

    value   shape S
    first   shape (n,) + S
    second  shape (n, n) + S
    third   shape (n, n, n) + S

so every bilinear numpy operation that broadcasts over leading axes (``*``,
``np.matmul``, ``np.einsum`` with ``...``) lifts directly to jets through the
Leibniz rule.  ``S`` usually starts with the batch of sample points and ends
with tensor axes; jets never need to know which is which as long as tensor
operations address trailing axes (negative axes or ``...`` einsum specs).

Arithmetic is exact truncated-polynomial algebra: no step sizes, so the only
error is floating-point roundoff.
"""

from functools import lru_cache
from itertools import product

import numpy as np

from .errors import DomainError, SingularMatrixError

MAX_ORDER = 3


@lru_cache(maxsize=None)
def _canonical_third(n):
    """Flat gather index mapping (i, j, k) to sorted(i, j, k)."""
    idx = np.empty(n ** 3, dtype=np.intp)
    for i, j, k in product(range(n), repeat=3):
        a, b, c = sorted((i, j, k))
        idx[(i * n + j) * n + k] = (a * n + b) * n + c
    return idx


def _symmetrize_third(t):
    n = t.shape[0]
    rest = t.shape[3:]
    return t.reshape((n ** 3,) + rest)[_canonical_third(n)].reshape(t.shape)


def _symmetrize_second(s):
    # lower triangle copied from upper: bit-exact symmetry
    n = s.shape[0]
    out = s.copy()
    for i in range(n):
        for j in range(i):
            out[i, j] = s[j, i]
    return out


class Jet:
    """Array-valued truncated Taylor jet of order 0..3."""

    __slots__ = ("value", "first", "second", "third", "order", "nvar")

    def __init__(self, value, first=None, second=None, third=None, *, nvar=None, order=None):
        self.value = np.asarray(value, dtype=float)
        self.first = first
        self.second = second
        self.third = third
        if order is None:
            order = 0 if first is None else 1 if second is None else 2 if third is None else 3
        self.order = order
        if nvar is None:
            if first is None:
                raise ValueError("nvar required for order-0 jets")
            nvar = first.shape[0]
        self.nvar = nvar

    # -- construction ---------------------------------------------------------
    @classmethod
    def constant(cls, value, nvar, order):
        value = np.asarray(value, dtype=float)
        derivs = [np.zeros((nvar,) * k + value.shape) for k in range(1, order + 1)]
        derivs += [None] * (MAX_ORDER - order)
        return cls(value, *derivs, nvar=nvar, order=order)

    @classmethod
    def variable(cls, value, index, nvar, order):
        """Seed jet of the coordinate function ``x_index``."""
        value = np.asarray(value, dtype=float)
        jet = cls.constant(value, nvar, order)
        if order >= 1:
            jet.first[index] = 1.0
        return jet

    @classmethod
    def seeds(cls, coords, order):
        """Seed jets for every coordinate of points ``coords`` (shape B + (n,))."""
        coords = np.asarray(coords, dtype=float)
        n = coords.shape[-1]
        return [cls.variable(coords[..., i], i, n, order) for i in range(n)]

    def _derivs(self):
        return (self.first, self.second, self.third)[: self.order]

    def arrays(self):
        return (self.value,) + self._derivs()

    @property
    def shape(self):
        return self.value.shape

    def __repr__(self):
        return f"Jet(order={self.order}, nvar={self.nvar}, shape={self.value.shape})"

    # -- structural operations ------------------------------------------------
    def truncate(self, order):
        if order > self.order:
            raise ValueError(f"cannot raise jet order {self.order} to {order}")
        derivs = list(self._derivs()[:order]) + [None] * (MAX_ORDER - order)
        return Jet(self.value, *derivs, nvar=self.nvar, order=order)

    def map_linear(self, fn):
        """Apply a linear map acting on trailing (non-derivative) axes."""
        arrays = [fn(a) for a in self.arrays()]
        arrays += [None] * (MAX_ORDER + 1 - len(arrays))
        return Jet(*arrays, nvar=self.nvar, order=self.order)

    def __getitem__(self, key):
        if not isinstance(key, tuple):
            key = (key,)
        if not key or key[0] is not Ellipsis:
            key = (Ellipsis,) + key
        return self.map_linear(lambda a: a[key])

    def swapaxes(self, a1, a2):
        if a1 >= 0 or a2 >= 0:
            raise ValueError("use negative (trailing) axes for jet tensors")
        return self.map_linear(lambda a: np.swapaxes(a, a1, a2))

    def moveaxis(self, src, dst):
        if src >= 0 or dst >= 0:
            raise ValueError("use negative (trailing) axes for jet tensors")
        return self.map_linear(lambda a: np.moveaxis(a, src, dst))

    def reshape_tail(self, old_ndim, new_tail):
        """Reshape the last ``old_ndim`` axes into ``new_tail``."""
        def fn(a):
            head = a.shape[: a.ndim - old_ndim]
            return a.reshape(head + tuple(new_tail))
        return self.map_linear(fn)

    def partial(self, i):
        """Partial derivative along variable ``i`` as a jet of one order less."""
        if self.order < 1:
            raise ValueError("order-0 jet has no derivatives")
        arrays = [self.first[i]]
        if self.order >= 2:
            arrays.append(self.second[i])
        if self.order >= 3:
            arrays.append(self.third[i])
        arrays += [None] * (MAX_ORDER + 1 - len(arrays))
        return Jet(*arrays, nvar=self.nvar, order=self.order - 1)

    def d(self):
        """All first partials, appended as a trailing axis of length ``nvar``."""
        if self.order < 1:
            raise ValueError("order-0 jet has no derivatives")
        arrays = [np.moveaxis(self.first, 0, -1)]
        if self.order >= 2:
            arrays.append(np.moveaxis(self.second, 1, -1))
        if self.order >= 3:
            arrays.append(np.moveaxis(self.third, 2, -1))
        arrays += [None] * (MAX_ORDER + 1 - len(arrays))
        return Jet(*arrays, nvar=self.nvar, order=self.order - 1)

    def restrict(self, indices):
        """Keep only derivatives with respect to the listed variables."""
        ix = np.asarray(indices, dtype=np.intp)
        arrays = [self.value]
        if self.order >= 1:
            arrays.append(self.first[ix])
        if self.order >= 2:
            arrays.append(self.second[np.ix_(ix, ix)])
        if self.order >= 3:
            arrays.append(self.third[np.ix_(ix, ix, ix)])
        arrays += [None] * (MAX_ORDER + 1 - len(arrays))
        return Jet(*arrays, nvar=len(ix), order=self.order)

    # -- arithmetic -----------------------------------------------------------
    def _coerce(self, other):
        if isinstance(other, Jet):
            if other.nvar != self.nvar:
                raise ValueError("jets over different variable sets")
            return other
        return None

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            derivs = list(self._derivs()) + [None] * (MAX_ORDER - self.order)
            return Jet(self.value + other, *derivs, nvar=self.nvar, order=self.order)
        k = min(self.order, o.order)
        arrays = [a + b for a, b in zip(self.arrays()[: k + 1], o.arrays()[: k + 1])]
        arrays += [None] * (MAX_ORDER + 1 - len(arrays))
        return Jet(*arrays, nvar=self.nvar, order=k)

    __radd__ = __add__

    def __neg__(self):
        return self.map_linear(np.negative)

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return self + (-np.asarray(other, dtype=float))
        return self + (-o)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            c = np.asarray(other, dtype=float)
            return self.map_linear(lambda a: a * c)
        return bilinear(np.multiply, self, o)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is None:
            c = np.asarray(other, dtype=float)
            if np.any(c == 0):
                raise DomainError("division by zero")
            return self.map_linear(lambda a: a / c)
        return self * o.reciprocal()

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, m):
        if not isinstance(m, (int, np.integer)):
            raise TypeError("jets support integer powers only")
        m = int(m)
        if m < 0:
            return (self ** (-m)).reciprocal()
        result = None
        base = self
        while m:
            if m & 1:
                result = base if result is None else result * base
            m >>= 1
            if m:
                base = base * base
        if result is None:
            return Jet.constant(np.ones_like(self.value), self.nvar, self.order)
        return result

    def __matmul__(self, other):
        if isinstance(other, Jet):
            return bilinear(np.matmul, self, other)
        c = np.asarray(other, dtype=float)
        return self.map_linear(lambda a: np.matmul(a, c))

    def __rmatmul__(self, other):
        c = np.asarray(other, dtype=float)
        return self.map_linear(lambda a: np.matmul(c, a))

    # -- elementary functions -------------------------------------------------
    def compose(self, f0, f1, f2, f3):
        """Chain rule for an elementwise function with derivative arrays f1..f3."""
        k = self.order
        x1, x2, x3 = self.first, self.second, self.third
        first = second = third = None
        if k >= 1:
            first = f1 * x1
        if k >= 2:
            outer = x1[:, None] * x1[None, :]
            second = _symmetrize_second(f2 * outer + f1 * x2)
        if k >= 3:
            t = f3 * (outer[:, :, None] * x1[None, None, :])
            t = t + f2 * (
                x2[:, :, None] * x1[None, None, :]
                + x2[:, None, :] * x1[None, :, None]
                + x2[None, :, :] * x1[:, None, None]
            )
            t = t + f1 * x3
            third = _symmetrize_third(t)
        return Jet(f0, first, second, third, nvar=self.nvar, order=k)

    def reciprocal(self):
        v = self.value
        if np.any(v == 0):
            raise DomainError("division by zero", where=_first_bad(v == 0))
        r = 1.0 / v
        return self.compose(r, -r * r, 2 * r ** 3, -6 * r ** 4)

    def exp(self):
        e = np.exp(self.value)
        return self.compose(e, e, e, e)

    def log(self):
        v = self.value
        if np.any(v <= 0):
            raise DomainError("log of non-positive value", where=_first_bad(v <= 0))
        r = 1.0 / v
        return self.compose(np.log(v), r, -r * r, 2 * r ** 3)

    def sqrt(self):
        v = self.value
        bad = v < 0 if self.order == 0 else v <= 0
        if np.any(bad):
            raise DomainError("sqrt of non-positive value", where=_first_bad(bad))
        s = np.sqrt(v)
        r = 1.0 / v
        return self.compose(s, 0.5 / s, -0.25 * s * r * r, 0.375 * s * r ** 3)

    def sin(self):
        s, c = np.sin(self.value), np.cos(self.value)
        return self.compose(s, c, -s, -c)

    def cos(self):
        s, c = np.sin(self.value), np.cos(self.value)
        return self.compose(c, -s, -c, s)

    def tan(self):
        c = np.cos(self.value)
        if np.any(c == 0):
            raise DomainError("tan at a pole", where=_first_bad(c == 0))
        t = np.tan(self.value)
        sec2 = 1.0 + t * t
        return self.compose(t, sec2, 2 * t * sec2, 2 * sec2 * (1 + 3 * t * t))

    def atan(self):
        x = self.value
        q = 1.0 / (1.0 + x * x)
        return self.compose(np.arctan(x), q, -2 * x * q * q, (6 * x * x - 2) * q ** 3)


def _first_bad(mask):
    mask = np.asarray(mask)
    if mask.ndim == 0:
        return None
    return tuple(int(i) for i in np.argwhere(mask)[0])


def bilinear(op, a, b):
    """Leibniz rule for a bilinear ``op`` broadcasting over leading axes."""
    k = min(a.order, b.order)
    value = op(a.value, b.value)
    first = second = third = None
    if k >= 1:
        first = op(a.first, b.value) + op(a.value, b.first)
    if k >= 2:
        af, bf = a.first, b.first
        second = (
            op(a.second, b.value)
            + op(af[:, None], bf[None, :])
            + op(af[None, :], bf[:, None])
            + op(a.value, b.second)
        )
        second = _symmetrize_second(second)
    if k >= 3:
        as_, bs = a.second, b.second
        t = op(a.third, b.value) + op(a.value, b.third)
        t = t + op(as_[:, :, None], bf[None, None, :])
        t = t + op(as_[:, None, :], bf[None, :, None])
        t = t + op(as_[None, :, :], bf[:, None, None])
        t = t + op(af[:, None, None], bs[None, :, :])
        t = t + op(af[None, :, None], bs[:, None, :])
        t = t + op(af[None, None, :], bs[:, :, None])
        third = _symmetrize_third(t)
    return Jet(value, first, second, third, nvar=a.nvar, order=k)


def einsum(spec, a, b):
    """``np.einsum`` of two jets; ``spec`` must start both operands with ``...``."""
    if isinstance(b, Jet) and isinstance(a, Jet):
        return bilinear(lambda x, y: np.einsum(spec, x, y), a, b)
    if isinstance(a, Jet):
        c = np.asarray(b, dtype=float)
        return a.map_linear(lambda x: np.einsum(spec, x, c))
    c = np.asarray(a, dtype=float)
    return b.map_linear(lambda y: np.einsum(spec, c, y))


def trace(a):
    """Trace over the last two axes."""
    return a.map_linear(lambda x: np.trace(x, axis1=-2, axis2=-1))


def stack(jets, axis=-1):
    if axis >= 0:
        raise ValueError("stack along a trailing (negative) axis")
    k = min(j.order for j in jets)
    nvar = jets[0].nvar
    arrays = []
    for level in range(k + 1):
        parts = [j.arrays()[level] for j in jets]
        parts = np.broadcast_arrays(*parts)
        arrays.append(np.stack(parts, axis=axis))
    arrays += [None] * (MAX_ORDER + 1 - len(arrays))
    return Jet(*arrays, nvar=nvar, order=k)


def broadcast_to(jet, shape):
    """Broadcast the value shape of ``jet`` to ``shape``."""
    shape = tuple(shape)
    arrays = [np.broadcast_to(jet.value, shape).copy()]
    for level, arr in enumerate(jet._derivs(), start=1):
        lead = (jet.nvar,) * level
        tail = arr.shape[level:]
        arr = arr.reshape(lead + (1,) * (len(shape) - len(tail)) + tail)
        arrays.append(np.broadcast_to(arr, lead + shape).copy())
    arrays += [None] * (MAX_ORDER + 1 - len(arrays))
    return Jet(*arrays, nvar=jet.nvar, order=jet.order)


# -- linear algebra ----------------------------------------------------------

PIVOT_THRESHOLD = 1e-12


def lu_inverse(a, threshold=PIVOT_THRESHOLD):
    """Batched inverse by Gauss-Jordan elimination with partial pivoting.

    Raises :class:`SingularMatrixError` when a pivot magnitude drops below
    ``threshold``; the error carries the batch index of the first offender.
    """
    a = np.array(a, dtype=float, copy=True)
    n = a.shape[-1]
    batch = a.shape[:-2]
    m = a.reshape((-1, n, n))
    inv = np.broadcast_to(np.eye(n), m.shape).copy()
    rows = np.arange(m.shape[0])
    for col in range(n):
        piv = col + np.argmax(np.abs(m[:, col:, col]), axis=1)
        pivval = m[rows, piv, col]
        bad = np.abs(pivval) < threshold
        if np.any(bad):
            flat = int(np.argmax(bad))
            where = np.unravel_index(flat, batch) if batch else None
            raise SingularMatrixError(
                f"pivot {abs(pivval[flat]):.3e} below {threshold:g}",
                where=tuple(int(i) for i in where) if where is not None else None,
            )
        # swap rows col <-> piv
        for arr in (m, inv):
            top = arr[rows, col].copy()
            arr[rows, col] = arr[rows, piv]
            arr[rows, piv] = top
        scale = 1.0 / m[:, col, col]
        m[:, col] *= scale[:, None]
        inv[:, col] *= scale[:, None]
        for r in range(n):
            if r == col:
                continue
            f = m[:, r, col].copy()
            m[:, r] -= f[:, None] * m[:, col]
            inv[:, r] -= f[:, None] * inv[:, col]
    return inv.reshape(a.shape)


def inv(a):
    """Inverse of a matrix-valued jet (trailing two axes), via Newton steps.

    Starting from the exact inverse of the value, each step squares the
    residual ``I - A Y``; two steps make the truncated jet exact to order 3.
    """
    y = Jet.constant(lu_inverse(a.value), a.nvar, a.order)
    if a.order == 0:
        return y
    steps = 1 if a.order == 1 else 2
    for _ in range(steps):
        y = 2.0 * y - y @ (a @ y)
    return y


def substitute(f, y):
    """Chain rule: the jet of ``F o Y`` over the variables of ``y``.

    ``f`` is a jet over ``m`` variables taken at the points ``y.value``;
    ``y`` has value shape ``B + (m,)``.  The result has the order of the
    lower of the two.
    """
    k = min(f.order, y.order)
    m = y.shape[-1]
    if f.nvar != m:
        raise ValueError(f"jet over {f.nvar} variables cannot be fed {m} inner components")
    batch = y.shape[:-1]
    tail = f.shape[len(batch):]

    def flat(a, lead):
        return a.reshape(a.shape[:lead + len(batch)] + (-1,))

    fs = [flat(a, lead) for lead, a in enumerate(f.arrays()[: k + 1])]
    y1, y2, y3 = y.first, y.second, y.third
    first = second = third = None
    if k >= 1:
        first = np.einsum("i...s,a...i->a...s", fs[1], y1)
    if k >= 2:
        second = np.einsum("ij...s,a...i,b...j->ab...s", fs[2], y1, y1) \
            + np.einsum("i...s,ab...i->ab...s", fs[1], y2)
        second = _symmetrize_second(second)
    if k >= 3:
        mixed = np.einsum("ij...s,ab...i,c...j->abc...s", fs[2], y2, y1)
        third = np.einsum("ijk...s,a...i,b...j,c...k->abc...s", fs[3], y1, y1, y1) \
            + mixed + np.moveaxis(mixed, 2, 1) + np.moveaxis(mixed, 2, 0) \
            + np.einsum("i...s,abc...i->abc...s", fs[1], y3)
        third = _symmetrize_third(third)
    n = y.nvar
    out = [fs[0].reshape(batch + tail)]
    for level, arr in enumerate((first, second, third)[:k], start=1):
        out.append(arr.reshape((n,) * level + batch + tail))
    out += [None] * (MAX_ORDER + 1 - len(out))
    return Jet(*out, nvar=n, order=k)
