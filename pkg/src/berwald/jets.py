"""Truncated Taylor jets in the four coordinates (x1, x2, y1, y2) of the slit
tangent bundle.

A :class:`Jet` stores every Taylor coefficient of a scalar up to a fixed total
degree, i.e. the mixed partial derivative divided by the multi-index
factorial.  Coefficients are kept densely in graded lexicographic order, so
the coefficients of degree <= m always form a prefix of the array and
truncation is a slice.

Jets carry an arbitrary leading batch shape: ``coeffs`` has shape
``batch + (ncoef,)``.  This is how a whole sample of base points, or the
components of a vector field, are pushed through the pipeline in one pass.

    >>> p = TangentPoint((2.0, 0.0), (5.0, 0.0))
    >>> f = jet_variable(p, 0, 2) * jet_variable(p, 2, 2)
    >>> extract_partial(f, (1, 0, 1, 0))
    1.0
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from numbers import Real

import numpy as np

NVARS = 4
MAX_ORDER = 6
AXIS_NAMES = ("x1", "x2", "y1", "y2")


class JetError(ValueError):
    """Base class for jet arithmetic failures."""


class JetOrderError(JetError):
    pass


class JetDomainError(JetError):
    pass


class NonFiniteJetError(JetError):
    pass


@dataclass(frozen=True)
class TangentPoint:
    """A point (x, y) of the slit tangent bundle of a surface chart."""

    x: tuple[float, float]
    y: tuple[float, float]

    def __post_init__(self):
        x = tuple(float(v) for v in self.x)
        y = tuple(float(v) for v in self.y)
        if len(x) != 2 or len(y) != 2:
            raise ValueError("TangentPoint needs two x and two y components")
        if not all(math.isfinite(v) for v in x + y):
            raise ValueError("TangentPoint components must be finite")
        if math.hypot(*y) == 0.0:
            raise ValueError("y must be nonzero on the slit tangent bundle")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    def as_array(self) -> np.ndarray:
        return np.array(self.x + self.y)

    @classmethod
    def from_array(cls, a) -> "TangentPoint":
        a = np.asarray(a, dtype=float).ravel()
        return cls((a[0], a[1]), (a[2], a[3]))


def ncoef(order: int) -> int:
    return math.comb(order + NVARS, NVARS)


def _check_order(order):
    if not isinstance(order, (int, np.integer)) or order < 0:
        raise JetOrderError(f"jet order must be a non-negative integer, got {order!r}")
    if order > MAX_ORDER:
        raise JetOrderError(f"jet order {order} exceeds the supported maximum {MAX_ORDER}")


def _compositions(total, parts):
    if parts == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


@lru_cache(maxsize=None)
def multi_indices(order: int) -> tuple[tuple[int, ...], ...]:
    """All multi-indices of total degree <= order, graded lexicographically."""
    out = []
    for d in range(order + 1):
        out.extend(_compositions(d, NVARS))
    return tuple(out)


@lru_cache(maxsize=None)
def _position(order):
    return {a: k for k, a in enumerate(multi_indices(order))}


@lru_cache(maxsize=None)
def _factorials(order):
    return np.array(
        [math.prod(math.factorial(e) for e in a) for a in multi_indices(order)], dtype=float
    )


@lru_cache(maxsize=None)
def _product_table(order):
    # pairs (i, j) grouped by output slot k so a segmented sum finishes the product
    idx = multi_indices(order)
    pos = _position(order)
    deg = [sum(a) for a in idx]
    rows = []
    for i, a in enumerate(idx):
        for j, b in enumerate(idx):
            if deg[i] + deg[j] <= order:
                rows.append((pos[tuple(u + v for u, v in zip(a, b))], i, j))
    rows.sort()
    k = np.array([r[0] for r in rows])
    left = np.array([r[1] for r in rows])
    right = np.array([r[2] for r in rows])
    starts = np.flatnonzero(np.r_[True, k[1:] != k[:-1]])
    return left, right, starts


@lru_cache(maxsize=None)
def _derivative_table(order, axis):
    # d/dx_axis maps an order-n jet to an order-(n-1) jet
    pos = _position(order)
    src, fac = [], []
    for b in multi_indices(order - 1):
        a = list(b)
        a[axis] += 1
        src.append(pos[tuple(a)])
        fac.append(a[axis])
    return np.array(src), np.array(fac, dtype=float)


def _as_batch_constant(c):
    return np.asarray(c, dtype=float)[..., None]


class Jet:
    """Truncated multivariate Taylor polynomial with an optional batch shape.

    Binary operations require equal orders; use :func:`align` or
    :meth:`truncate` to bring jets to a common order explicitly.  Python
    numbers and batch-shaped ndarrays act as constants.
    """

    __slots__ = ("coeffs", "order")
    __array_priority__ = 1000

    def __init__(self, coeffs, order: int):
        _check_order(order)
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.ndim == 0 or coeffs.shape[-1] != ncoef(order):
            raise JetError(
                f"order-{order} jet needs {ncoef(order)} coefficients, got shape {coeffs.shape}"
            )
        if not np.isfinite(coeffs).all():
            raise NonFiniteJetError("jet coefficients must be finite")
        coeffs.flags.writeable = False
        self.coeffs = coeffs
        self.order = int(order)

    # construction -----------------------------------------------------
    @classmethod
    def constant(cls, value, order: int) -> "Jet":
        value = np.asarray(value, dtype=float)
        c = np.zeros(value.shape + (ncoef(order),))
        c[..., 0] = value
        return cls(c, order)

    # shape ------------------------------------------------------------
    @property
    def shape(self) -> tuple[int, ...]:
        return self.coeffs.shape[:-1]

    @property
    def value(self):
        v = self.coeffs[..., 0]
        return float(v) if v.ndim == 0 else v

    def __getitem__(self, idx) -> "Jet":
        if not isinstance(idx, tuple):
            idx = (idx,)
        if any(i is Ellipsis for i in idx) or len(idx) > len(self.shape):
            raise IndexError("jets index batch axes only")
        return Jet(self.coeffs[idx], self.order)

    def __len__(self):
        if not self.shape:
            raise TypeError("scalar jet has no length")
        return self.shape[0]

    def __repr__(self):
        return f"Jet(order={self.order}, shape={self.shape}, value={self.value!r})"

    def truncate(self, order: int) -> "Jet":
        _check_order(order)
        if order > self.order:
            raise JetOrderError(f"cannot raise jet order {self.order} to {order}")
        if order == self.order:
            return self
        return Jet(self.coeffs[..., : ncoef(order)], order)

    def reshape(self, *shape) -> "Jet":
        if len(shape) == 1 and isinstance(shape[0], tuple):
            shape = shape[0]
        return Jet(self.coeffs.reshape(shape + (self.coeffs.shape[-1],)), self.order)

    def sum(self, axis) -> "Jet":
        axis = axis if axis < 0 else axis - len(self.shape)
        return Jet(self.coeffs.sum(axis=axis - 1), self.order)

    def expand(self, axis) -> "Jet":
        """Insert a length-one batch axis (negative axes count batch axes)."""
        axis = axis if axis < 0 else axis - len(self.shape) - 1
        return Jet(np.expand_dims(self.coeffs, axis - 1), self.order)

    # arithmetic -------------------------------------------------------
    def _other(self, other):
        if isinstance(other, Jet):
            if other.order != self.order:
                raise JetOrderError(
                    f"order mismatch: {self.order} vs {other.order} (truncate explicitly)"
                )
            return other
        return None

    def __neg__(self):
        return Jet(-self.coeffs, self.order)

    def __pos__(self):
        return self

    def __add__(self, other):
        o = self._other(other)
        if o is not None:
            return Jet(self.coeffs + o.coeffs, self.order)
        if isinstance(other, (Real, np.ndarray)):
            c = np.array(np.broadcast_to(self.coeffs, np.broadcast_shapes(
                self.coeffs.shape, _as_batch_constant(other).shape)))
            c[..., 0] = c[..., 0] + np.asarray(other, dtype=float)
            return Jet(c, self.order)
        return NotImplemented

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, (Jet, Real, np.ndarray)):
            return self + (-other)
        return NotImplemented

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._other(other)
        if o is not None:
            left, right, starts = _product_table(self.order)
            prod = self.coeffs[..., left] * o.coeffs[..., right]
            return Jet(np.add.reduceat(prod, starts, axis=-1), self.order)
        if isinstance(other, (Real, np.ndarray)):
            return Jet(self.coeffs * _as_batch_constant(other), self.order)
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * reciprocal(self._other(other))
        if isinstance(other, (Real, np.ndarray)):
            other = np.asarray(other, dtype=float)
            if np.any(other == 0):
                raise JetDomainError("division by zero")
            return Jet(self.coeffs / other[..., None], self.order)
        return NotImplemented

    def __rtruediv__(self, other):
        if isinstance(other, (Real, np.ndarray)):
            return reciprocal(self) * other
        return NotImplemented

    def __pow__(self, exponent):
        if isinstance(exponent, (int, np.integer)) or (
            isinstance(exponent, Real) and float(exponent).is_integer()
        ):
            return integer_power(self, int(exponent))
        if isinstance(exponent, Real):
            return pow_const(self, float(exponent))
        return NotImplemented

    # calculus ---------------------------------------------------------
    def partial(self, axis: int) -> "Jet":
        """Jet of the first partial along ``axis``; the order drops by one."""
        if axis not in range(NVARS):
            raise JetError(f"invalid axis {axis!r}")
        if self.order == 0:
            raise JetOrderError("cannot differentiate an order-0 jet")
        src, fac = _derivative_table(self.order, axis)
        return Jet(self.coeffs[..., src] * fac, self.order - 1)

    def gradient(self) -> "Jet":
        """All four first partials stacked on a new trailing batch axis."""
        if self.order == 0:
            raise JetOrderError("cannot differentiate an order-0 jet")
        parts = []
        for axis in range(NVARS):
            src, fac = _derivative_table(self.order, axis)
            parts.append(self.coeffs[..., src] * fac)
        return Jet(np.stack(parts, axis=-2), self.order - 1)

    def partial_value(self, multi_index) -> np.ndarray | float:
        return extract_partial(self, multi_index)


def align(*jets):
    """Truncate every jet to the lowest order among them."""
    order = min(j.order for j in jets)
    return tuple(j.truncate(order) for j in jets)


def stack(jets, axis=-1) -> Jet:
    jets = align(*jets)
    nb = len(jets[0].shape)
    axis = axis if axis < 0 else axis - nb - 1
    return Jet(np.stack([j.coeffs for j in jets], axis=axis - 1), jets[0].order)


def einsum(subscripts: str, a: Jet, b: Jet) -> Jet:
    """Contract two jets over batch axes, e.g. ``einsum("nij,njk->nik", a, b)``.

    Subscripts name batch axes only; the truncated Taylor product is applied
    to every pair of multiplied entries.
    """
    if a.order != b.order:
        raise JetOrderError(f"order mismatch: {a.order} vs {b.order} (truncate explicitly)")
    inputs, out = subscripts.replace(" ", "").split("->")
    sa, sb = inputs.split(",")
    pair = next(ch for ch in "PQWZ" if ch not in subscripts)
    left, right, starts = _product_table(a.order)
    prod = np.einsum(f"{sa}{pair},{sb}{pair}->{out}{pair}", a.coeffs[..., left], b.coeffs[..., right])
    return Jet(np.add.reduceat(prod, starts, axis=-1), a.order)


def swapaxes(a: Jet, i: int, j: int) -> Jet:
    nb = len(a.shape)
    i, j = (i if i >= 0 else nb + i), (j if j >= 0 else nb + j)
    return Jet(np.swapaxes(a.coeffs, i, j), a.order)


def jet_variable(p, axis: int, order: int) -> Jet:
    """Coordinate function ``axis`` seeded at p (a TangentPoint or (..., 4) array)."""
    if axis not in range(NVARS):
        raise JetError(f"invalid axis {axis!r}")
    _check_order(order)
    pts = p.as_array() if isinstance(p, TangentPoint) else np.asarray(p, dtype=float)
    if pts.shape[-1] != NVARS:
        raise JetError("points must have four coordinates")
    c = np.zeros(pts.shape[:-1] + (ncoef(order),))
    c[..., 0] = pts[..., axis]
    if order >= 1:
        c[..., 1 + axis] = 1.0
    return Jet(c, order)


def variables(p, order: int) -> tuple[Jet, Jet, Jet, Jet]:
    return tuple(jet_variable(p, a, order) for a in range(NVARS))


def extract_partial(a: Jet, multi_index):
    """Mixed partial derivative of ``a`` at its base point(s)."""
    multi_index = tuple(int(m) for m in multi_index)
    if len(multi_index) != NVARS or min(multi_index) < 0:
        raise JetError(f"multi-index must have {NVARS} non-negative entries")
    if sum(multi_index) > a.order:
        raise JetOrderError(
            f"multi-index degree {sum(multi_index)} exceeds jet order {a.order}"
        )
    k = _position(a.order)[multi_index]
    out = a.coeffs[..., k] * _factorials(a.order)[k]
    return float(out) if out.ndim == 0 else out


def _compose(a: Jet, taylor) -> Jet:
    """Evaluate sum_k taylor[k] * (a - a0)^k by Horner; taylor[k] is batch-shaped."""
    delta_c = np.array(a.coeffs)
    delta_c[..., 0] = 0.0
    delta = Jet(delta_c, a.order)
    out = Jet.constant(taylor[a.order], a.order)
    for k in range(a.order - 1, -1, -1):
        out = out * delta + taylor[k]
    return out


def _value(a):
    return np.asarray(a.coeffs[..., 0])


def exp(a: Jet) -> Jet:
    e = np.exp(_value(a))
    return _compose(a, [e / math.factorial(k) for k in range(a.order + 1)])


def log(a: Jet) -> Jet:
    v = _value(a)
    if np.any(v <= 0):
        raise JetDomainError("log of a non-positive value")
    taylor = [np.log(v)]
    taylor += [(-1.0) ** (k + 1) / (k * v**k) for k in range(1, a.order + 1)]
    return _compose(a, taylor)


def sin(a: Jet) -> Jet:
    v = _value(a)
    return _compose(a, [np.sin(v + k * math.pi / 2) / math.factorial(k) for k in range(a.order + 1)])


def cos(a: Jet) -> Jet:
    v = _value(a)
    return _compose(a, [np.cos(v + k * math.pi / 2) / math.factorial(k) for k in range(a.order + 1)])


def pow_const(a: Jet, p: float) -> Jet:
    """a**p for real p; non-integer p requires a positive value."""
    if float(p).is_integer():
        return integer_power(a, int(p))
    v = _value(a)
    if np.any(v <= 0):
        raise JetDomainError(f"non-integer power {p} of a non-positive value")
    taylor, binom = [], 1.0
    for k in range(a.order + 1):
        taylor.append(binom * v ** (p - k))
        binom *= (p - k) / (k + 1)
    return _compose(a, taylor)


def sqrt(a: Jet) -> Jet:
    v = _value(a)
    if np.any(v <= 0):
        raise JetDomainError("sqrt of a non-positive value")
    return pow_const(a, 0.5)


def reciprocal(a: Jet) -> Jet:
    v = _value(a)
    if np.any(v == 0):
        raise JetDomainError("division by a jet with zero value")
    return _compose(a, [(-1.0) ** k / v ** (k + 1) for k in range(a.order + 1)])


def integer_power(a: Jet, n: int) -> Jet:
    if n < 0:
        return reciprocal(integer_power(a, -n))
    out = Jet.constant(np.ones(a.shape), a.order)
    base = a
    while n:
        if n & 1:
            out = out * base
        n >>= 1
        if n:
            base = base * base
    return out


FUNCTIONS = {"sqrt": sqrt, "exp": exp, "log": log, "sin": sin, "cos": cos}


def jet_arith(a: Jet, b: Jet, op: str) -> Jet:
    ops = {"add": Jet.__add__, "sub": Jet.__sub__, "mul": Jet.__mul__, "div": Jet.__truediv__}
    if op not in ops:
        raise JetError(f"unknown operation {op!r}")
    return ops[op](a, b)


def jet_func(a: Jet, f: str, exponent: float | None = None) -> Jet:
    if f == "pow_const":
        if exponent is None:
            raise JetError("pow_const needs an exponent")
        return pow_const(a, exponent)
    if f not in FUNCTIONS:
        raise JetError(f"unknown function {f!r}")
    return FUNCTIONS[f](a)
