"""Forward-mode automatic differentiation with vector-valued dual parts.

A :class:`Dual` carries a real value and the gradient of that value with
respect to every seeded input, so one evaluation of a map on seeded inputs
yields its full Jacobian.  Evaluators written with plain arithmetic and the
elementary functions in this module work unchanged on floats and on duals.
"""

from __future__ import annotations

import math
import operator

import numpy as np

from .errors import NumericDomainError


def _elementwise(op, left, right):
    # One side is an ndarray; produce an object array of results.
    if isinstance(left, np.ndarray):
        out = [op(v, right) for v in left.flat]
        shape = left.shape
    else:
        out = [op(left, v) for v in right.flat]
        shape = right.shape
    return np.array(out, dtype=object).reshape(shape)


class Dual:
    """Value ``a`` together with its gradient ``da`` (1-D float array)."""

    __slots__ = ("a", "da")
    # numpy defers binary ops with arrays to the reflected methods below.
    __array_ufunc__ = None

    def __init__(self, a, da):
        self.a = float(a)
        self.da = np.asarray(da, dtype=float)

    def __repr__(self) -> str:
        return f"Dual({self.a!r}, {self.da!r})"

    def __add__(self, other):
        if isinstance(other, Dual):
            return Dual(self.a + other.a, self.da + other.da)
        if isinstance(other, np.ndarray):
            return _elementwise(operator.add, self, other)
        return Dual(self.a + other, self.da)

    def __radd__(self, other):
        if isinstance(other, np.ndarray):
            return _elementwise(operator.add, other, self)
        return Dual(other + self.a, self.da)

    def __sub__(self, other):
        if isinstance(other, Dual):
            return Dual(self.a - other.a, self.da - other.da)
        if isinstance(other, np.ndarray):
            return _elementwise(operator.sub, self, other)
        return Dual(self.a - other, self.da)

    def __rsub__(self, other):
        if isinstance(other, np.ndarray):
            return _elementwise(operator.sub, other, self)
        return Dual(other - self.a, -self.da)

    def __mul__(self, other):
        if isinstance(other, Dual):
            return Dual(self.a * other.a, self.a * other.da + other.a * self.da)
        if isinstance(other, np.ndarray):
            return _elementwise(operator.mul, self, other)
        return Dual(self.a * other, self.da * other)

    def __rmul__(self, other):
        if isinstance(other, np.ndarray):
            return _elementwise(operator.mul, other, self)
        return Dual(other * self.a, other * self.da)

    def __truediv__(self, other):
        if isinstance(other, Dual):
            if other.a == 0.0:
                raise ZeroDivisionError("dual division by zero real part")
            return Dual(self.a / other.a, (self.da * other.a - self.a * other.da) / other.a**2)
        if isinstance(other, np.ndarray):
            return _elementwise(operator.truediv, self, other)
        return Dual(self.a / other, self.da / other)

    def __rtruediv__(self, other):
        if isinstance(other, np.ndarray):
            return _elementwise(operator.truediv, other, self)
        if self.a == 0.0:
            raise ZeroDivisionError("dual division by zero real part")
        return Dual(other / self.a, -other * self.da / self.a**2)

    def __neg__(self):
        return Dual(-self.a, -self.da)

    def __pos__(self):
        return self

    def __pow__(self, k):
        if isinstance(k, Dual):
            return exp(k * log(self))
        if k == 0:
            return Dual(1.0, np.zeros_like(self.da))
        return Dual(self.a**k, k * self.a ** (k - 1) * self.da)

    def __rpow__(self, base):
        return exp(self * math.log(base))

    def __mod__(self, period):
        # Reduction has unit derivative away from the seam.
        return Dual(self.a % period, self.da)

    def __abs__(self):
        return self if self.a >= 0 else -self

    def __lt__(self, other):
        return self.a < value(other)

    def __le__(self, other):
        return self.a <= value(other)

    def __gt__(self, other):
        return self.a > value(other)

    def __ge__(self, other):
        return self.a >= value(other)


def _unary(name, fn, dfn):
    npfn = getattr(np, name)

    def wrapped(x):
        if isinstance(x, Dual):
            try:
                return Dual(fn(x.a), dfn(x.a) * x.da)
            except (ValueError, ZeroDivisionError) as exc:
                raise NumericDomainError(f"{name}({x.a!r}): {exc}") from None
        if isinstance(x, np.ndarray):
            if x.dtype == object:
                return np.array([wrapped(v) for v in x.flat], dtype=object).reshape(x.shape)
            return npfn(x)
        return fn(x)

    wrapped.__name__ = name
    return wrapped


sin = _unary("sin", math.sin, math.cos)
cos = _unary("cos", math.cos, lambda a: -math.sin(a))
exp = _unary("exp", math.exp, math.exp)
log = _unary("log", math.log, lambda a: 1.0 / a)
sqrt = _unary("sqrt", math.sqrt, lambda a: 0.5 / math.sqrt(a))
tanh = _unary("tanh", math.tanh, lambda a: 1.0 - math.tanh(a) ** 2)


def value(x) -> float:
    return x.a if isinstance(x, Dual) else float(x)


def values(out) -> np.ndarray:
    """Strip gradients: float array with the same shape as ``out``."""
    out = np.asarray(out, dtype=object)
    return np.array([value(v) for v in out.flat], dtype=float).reshape(out.shape)


def has_duals(x) -> bool:
    arr = x if isinstance(x, np.ndarray) else np.asarray(x, dtype=object)
    return arr.dtype == object and any(isinstance(v, Dual) for v in arr.flat)


def seed(x) -> np.ndarray:
    """Seed each coordinate of ``x`` with a unit gradient."""
    x = np.asarray(x, dtype=float).ravel()
    eye = np.eye(x.size)
    return np.array([Dual(x[i], eye[i]) for i in range(x.size)], dtype=object)


def jacobian(func, x) -> tuple[np.ndarray, np.ndarray]:
    """Value and Jacobian of ``func`` at ``x`` from one seeded evaluation.

    Output components that come back as plain numbers contribute zero rows.
    Raises ``TypeError`` if ``func`` cannot digest dual inputs.
    """
    x = np.asarray(x, dtype=float).ravel()
    out = np.asarray(func(seed(x)), dtype=object)
    flat = out.ravel()
    val = np.empty(flat.size)
    jac = np.zeros((flat.size, x.size))
    for i, v in enumerate(flat):
        if isinstance(v, Dual):
            val[i] = v.a
            jac[i] = v.da
        else:
            val[i] = float(v)
    return val.reshape(out.shape), jac.reshape(out.shape + (x.size,))
