"""Coordinate charts, smooth maps, differential forms and pointwise calculus.

Everything lives on a single global chart whose coordinates are either
real lines or circles of a fixed period.  Two-form values are ``dim x dim``
matrices with ``Omega[i, j] = Omega(e_i, e_j)``; the interior product
contracts the first slot, ``(i_v Omega)_j = sum_i v_i Omega[i, j]``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Optional, Union

import numpy as np

from . import ad
from .errors import ChartMismatchError, NumericDomainError, SingularFormError

STRATEGIES = ("analytic", "ad", "fd")
DEFAULT_STEP = 1e-5
ANTISYMMETRY_TOL = 1e-12
NONDEGENERACY_TOL = 1e-10


@dataclass(frozen=True)
class Chart:
    """A coordinate domain: ``dim`` coordinates, each real or periodic."""

    dim: int
    periods: tuple = None
    name: str = ""

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("chart dimension must be >= 1")
        periods = self.periods if self.periods is not None else (None,) * self.dim
        periods = tuple(None if p is None else float(p) for p in periods)
        if len(periods) != self.dim:
            raise ValueError("one period entry per coordinate required")
        if any(p is not None and not p > 0 for p in periods):
            raise ValueError("periods must be positive")
        object.__setattr__(self, "periods", periods)

    @property
    def is_periodic(self) -> bool:
        return any(p is not None for p in self.periods)

    def same_as(self, other: "Chart") -> bool:
        return self.dim == other.dim and self.periods == other.periods

    def reduce(self, x):
        """Reduce periodic coordinates into ``[0, L)``; duals keep their gradient."""
        if not self.is_periodic:
            return x
        if isinstance(x, np.ndarray) and x.dtype == object:
            out = x.copy()
            for i, p in enumerate(self.periods):
                if p is not None:
                    out[i] = out[i] % p
            return out
        out = np.array(x, dtype=float)
        for i, p in enumerate(self.periods):
            if p is not None:
                r = out[..., i] % p
                # x % p can round up to p for tiny negative x.
                out[..., i] = np.where(r >= p, 0.0, r)
        return out

    def displacement(self, a, b) -> np.ndarray:
        """Minimal-image difference ``b - a``."""
        d = np.asarray(b, dtype=float) - np.asarray(a, dtype=float)
        for i, p in enumerate(self.periods):
            if p is not None:
                d[..., i] = d[..., i] - p * np.round(d[..., i] / p)
        return d

    def distance(self, a, b) -> float:
        """Max-norm of the minimal-image displacement."""
        return float(np.max(np.abs(self.displacement(a, b))))

    def point(self, coords) -> "Point":
        return Point(self, coords)

    def product(self, other: "Chart", name: str = "") -> "Chart":
        return Chart(self.dim + other.dim, self.periods + other.periods, name)


@dataclass(frozen=True, eq=False)
class Point:
    """A point of a chart; periodic coordinates are stored reduced."""

    chart: Chart
    coords: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coords, dtype=float).ravel()
        if c.size != self.chart.dim:
            raise ChartMismatchError(f"expected {self.chart.dim} coordinates, got {c.size}")
        c = self.chart.reduce(c)
        c.setflags(write=False)
        object.__setattr__(self, "coords", c)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.coords, dtype=dtype)

    def __repr__(self) -> str:
        return f"Point({self.coords.tolist()})"


def coords_of(x, chart: Optional[Chart] = None):
    """Coordinates of ``x`` (a Point or array-like) as an array.

    Object arrays of duals pass through untouched.
    """
    if isinstance(x, Point):
        if chart is not None and not x.chart.same_as(chart):
            raise ChartMismatchError("point belongs to a different chart")
        return x.coords
    if isinstance(x, np.ndarray) and x.dtype == object:
        return x
    arr = np.asarray(x, dtype=float).ravel()
    if chart is not None and arr.size != chart.dim:
        raise ChartMismatchError(f"expected {chart.dim} coordinates, got {arr.size}")
    return arr


def _check_finite(arr, what: str):
    if not np.all(np.isfinite(arr)):
        raise NumericDomainError(f"non-finite value in {what}")
    return arr


@dataclass(frozen=True, eq=False)
class SmoothMap:
    """A map between charts given by a coordinate evaluator.

    ``func`` maps a coordinate array to a coordinate array and should be
    written with plain arithmetic (and :mod:`symlift.ad` elementary
    functions) so that forward-mode differentiation can run through it.
    ``jac`` optionally returns the analytic Jacobian.
    """

    domain: Chart
    codomain: Chart
    func: Callable
    jac: Optional[Callable] = None
    strategy: str = "ad"
    h: float = DEFAULT_STEP
    name: str = ""

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown differentiation strategy {self.strategy!r}")

    def __call__(self, x):
        x = coords_of(x, self.domain)
        out = self.func(x)
        if isinstance(x, np.ndarray) and x.dtype == object:
            return self.codomain.reduce(np.asarray(out, dtype=object).ravel())
        out = np.asarray(out, dtype=float).ravel()
        _check_finite(out, f"map {self.name or 'evaluation'}")
        return self.codomain.reduce(out)

    def with_strategy(self, strategy: str, h: Optional[float] = None) -> "SmoothMap":
        return replace(self, strategy=strategy, h=self.h if h is None else h)

    def compose(self, inner: "SmoothMap") -> "SmoothMap":
        """``self o inner``."""
        if not inner.codomain.same_as(self.domain):
            raise ChartMismatchError("cannot compose maps over different charts")
        jac = None
        if self.jac is not None and inner.jac is not None:
            outer_jac, inner_jac = self.jac, inner.jac
            jac = lambda x: np.asarray(outer_jac(inner(x))) @ np.asarray(inner_jac(x))  # noqa: E731
        return SmoothMap(
            inner.domain,
            self.codomain,
            lambda x: self.func(inner(x)),
            jac,
            self.strategy,
            self.h,
            f"{self.name}o{inner.name}",
        )


def identity_map(chart: Chart) -> SmoothMap:
    n = chart.dim
    return SmoothMap(chart, chart, lambda x: x, lambda x: np.eye(n), name="id")


def _fd_jacobian(f, x, h, out_chart: Optional[Chart]):
    x = np.asarray(x, dtype=float)
    cols = []
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        fp = np.asarray(f(x + e), dtype=float)
        fm = np.asarray(f(x - e), dtype=float)
        diff = out_chart.displacement(fm, fp) if out_chart is not None else fp - fm
        cols.append(diff / (2.0 * h))
    return np.stack(cols, axis=-1)


def jacobian(m: SmoothMap, x, strategy: Optional[str] = None, h: Optional[float] = None) -> np.ndarray:
    """Jacobian ``d m_i / d x_j`` of ``m`` at ``x`` (shape codim x dim).

    ``analytic`` uses the supplied Jacobian (falling back to forward mode
    when absent), ``ad`` runs forward mode (falling back to central
    differences when the evaluator rejects duals), ``fd`` takes central
    differences along minimal-image representatives.
    """
    strategy = strategy or m.strategy
    h = m.h if h is None else h
    x = coords_of(x, m.domain)
    if ad.has_duals(x):
        # Nested differentiation is only supported through analytic Jacobians.
        if m.jac is None:
            raise TypeError("nested differentiation needs an analytic Jacobian")
        return np.asarray(m.jac(x))
    if strategy == "analytic" and m.jac is not None:
        J = np.asarray(m.jac(x), dtype=float)
    elif strategy in ("analytic", "ad"):
        try:
            _, J = ad.jacobian(m.func, x)
        except (TypeError, AttributeError):
            J = _fd_jacobian(m, x, h, m.codomain)
    else:
        J = _fd_jacobian(m, x, h, m.codomain)
    J = np.asarray(J, dtype=float).reshape(m.codomain.dim, m.domain.dim)
    return _check_finite(J, "Jacobian")


@dataclass(frozen=True, eq=False)
class OneForm:
    """A 1-form given by its covector-valued coefficient evaluator.

    ``constant`` declares constant coefficients, which makes the exterior
    derivative exactly zero without differentiating.
    """

    chart: Chart
    func: Callable
    constant: bool = False
    strategy: str = "ad"
    h: float = DEFAULT_STEP
    name: str = ""

    def __call__(self, x):
        x = coords_of(x, self.chart)
        out = self.func(x)
        if isinstance(x, np.ndarray) and x.dtype == object:
            return np.asarray(out, dtype=object).ravel()
        out = np.asarray(out, dtype=float).ravel()
        if out.size != self.chart.dim:
            raise ChartMismatchError("covector has the wrong length")
        return _check_finite(out, f"1-form {self.name}")

    def __add__(self, other: "OneForm") -> "OneForm":
        _same_chart(self.chart, other.chart)
        return OneForm(self.chart, lambda x: _as_vec(self.func(x)) + _as_vec(other.func(x)),
                       self.constant and other.constant, self.strategy, self.h,
                       f"({self.name}+{other.name})")

    def __neg__(self) -> "OneForm":
        return self.scaled(-1.0)

    def __sub__(self, other: "OneForm") -> "OneForm":
        return self + (-other)

    def scaled(self, c: float) -> "OneForm":
        return OneForm(self.chart, lambda x: c * _as_vec(self.func(x)), self.constant,
                       self.strategy, self.h, f"{c}*{self.name}")

    @classmethod
    def constant_form(cls, chart: Chart, covector, name: str = "") -> "OneForm":
        c = np.asarray(covector, dtype=float).ravel()
        return cls(chart, lambda x: c.copy(), constant=True, name=name)

    @classmethod
    def zero(cls, chart: Chart) -> "OneForm":
        return cls.constant_form(chart, np.zeros(chart.dim), "0")


@dataclass(frozen=True, eq=False)
class TwoForm:
    """A 2-form given by its antisymmetric matrix-valued evaluator."""

    chart: Chart
    func: Callable
    constant: bool = False
    name: str = ""

    def __call__(self, x):
        x = coords_of(x, self.chart)
        out = self.func(x)
        if isinstance(x, np.ndarray) and x.dtype == object:
            return np.asarray(out, dtype=object).reshape(self.chart.dim, self.chart.dim)
        W = np.asarray(out, dtype=float).reshape(self.chart.dim, self.chart.dim)
        _check_finite(W, f"2-form {self.name}")
        assert_antisymmetric(W)
        return W

    @classmethod
    def constant_form(cls, chart: Chart, matrix, name: str = "") -> "TwoForm":
        W = np.asarray(matrix, dtype=float)
        assert_antisymmetric(W)
        return cls(chart, lambda x: W.copy(), constant=True, name=name)


@dataclass(frozen=True, eq=False)
class VectorField:
    chart: Chart
    func: Callable
    name: str = ""

    def __call__(self, x):
        x = coords_of(x, self.chart)
        out = self.func(x)
        if isinstance(x, np.ndarray) and x.dtype == object:
            return np.asarray(out, dtype=object).ravel()
        return _check_finite(np.asarray(out, dtype=float).ravel(), "vector field")


def _as_vec(v):
    arr = np.asarray(v)
    if arr.dtype == object:
        return arr.ravel()
    return np.asarray(v, dtype=float).ravel()


def _same_chart(a: Chart, b: Chart):
    if not a.same_as(b):
        raise ChartMismatchError("forms live on different charts")


def assert_antisymmetric(W, tol: float = ANTISYMMETRY_TOL):
    W = np.asarray(W, dtype=float)
    scale = max(1.0, float(np.max(np.abs(W))) if W.size else 0.0)
    gap = float(np.max(np.abs(W + W.T))) if W.size else 0.0
    if gap > tol * scale:
        raise ValueError(f"2-form value not antisymmetric (|W + W^T| = {gap:.3e})")


def pullback(form: Union[OneForm, TwoForm], m: SmoothMap, x, strategy: Optional[str] = None):
    """Value of ``m^* form`` at ``x``: ``J^T a`` or ``J^T W J``."""
    if not form.chart.same_as(m.codomain):
        raise ChartMismatchError("form must live on the codomain of the map")
    x = coords_of(x, m.domain)
    J = jacobian(m, x, strategy)
    y = m(x)
    if isinstance(form, OneForm):
        return J.T @ form(y)
    return J.T @ form(y) @ J


def pullback_form(form: Union[OneForm, TwoForm], m: SmoothMap, strategy: Optional[str] = None):
    """The pulled-back form as a lazily evaluated form on ``m.domain``."""
    if not form.chart.same_as(m.codomain):
        raise ChartMismatchError("form must live on the codomain of the map")

    def func(x):
        return pullback(form, m, x, strategy)

    if isinstance(form, OneForm):
        return OneForm(m.domain, func, name=f"{m.name}^*{form.name}")
    return TwoForm(m.domain, func, name=f"{m.name}^*{form.name}")


def exterior_derivative(form: OneForm, x, strategy: Optional[str] = None,
                        h: Optional[float] = None) -> np.ndarray:
    """``(d alpha)[i, j] = d_i alpha_j - d_j alpha_i`` at ``x``."""
    x = coords_of(x, form.chart)
    n = form.chart.dim
    if form.constant:
        return np.zeros((n, n))
    strategy = strategy or form.strategy
    h = form.h if h is None else h
    M = None
    if strategy in ("ad", "analytic"):
        try:
            _, M = ad.jacobian(form.func, x)
        except (TypeError, AttributeError):
            M = None
    if M is None:
        M = _fd_jacobian(lambda y: np.asarray(form.func(y), dtype=float).ravel(), x, h, None)
    M = _check_finite(np.asarray(M, dtype=float).reshape(n, n), "exterior derivative")
    return M.T - M


def closedness_residual(beta: TwoForm, x, h: float = DEFAULT_STEP) -> float:
    """Max over ``i<j<k`` of the cyclic sum defining ``d beta`` (central differences)."""
    x = coords_of(x, beta.chart)
    n = beta.chart.dim
    if beta.constant or n < 3:
        return 0.0
    D = _fd_jacobian(lambda y: np.asarray(beta.func(y), dtype=float), x, h, None)  # (n, n, n)
    worst = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            for k in range(j + 1, n):
                c = D[j, k, i] + D[k, i, j] + D[i, j, k]
                worst = max(worst, abs(float(c)))
    return worst


def differential(f: Callable, chart: Chart, strategy: str = "ad", h: float = DEFAULT_STEP,
                 name: str = "") -> OneForm:
    """The 1-form ``df`` of a scalar function ``f``."""

    def func(x):
        if isinstance(x, np.ndarray) and x.dtype == object:
            raise TypeError("differential is not itself forward-differentiable")
        if strategy == "fd":
            g = _fd_jacobian(lambda y: np.atleast_1d(f(y)), np.asarray(x, dtype=float), h, None)
            return g.ravel()
        _, g = ad.jacobian(lambda y: np.atleast_1d(f(y)), x)
        return g.ravel()

    return OneForm(chart, func, strategy="fd", h=h, name=name or "df")


def interior_product(v, W) -> np.ndarray:
    """``(i_v W)_j = sum_i v_i W[i, j]``."""
    v = np.asarray(v)
    W = np.asarray(W)
    if W.ndim != 2 or W.shape[0] != W.shape[1] or v.shape != (W.shape[0],):
        raise ValueError("interior product: shape mismatch")
    return v @ W


def nondegeneracy(W) -> float:
    """``|det W| / ||W||_2^dim``; zero for the zero form."""
    W = np.asarray(W, dtype=float)
    norm = np.linalg.norm(W, 2)
    if norm == 0.0:
        return 0.0
    return abs(float(np.linalg.det(W))) / norm ** W.shape[0]


def solve_musical(W, xi) -> np.ndarray:
    """The tangent vector ``v`` with ``i_v W = xi``."""
    W = np.asarray(W, dtype=float)
    xi = np.asarray(xi, dtype=float)
    if xi.shape != (W.shape[0],):
        raise ValueError("solve_musical: shape mismatch")
    if nondegeneracy(W) < NONDEGENERACY_TOL:
        cond = float(np.linalg.cond(W)) if np.any(W) else float("inf")
        raise SingularFormError("2-form is degenerate", cond)
    return np.linalg.solve(W.T, xi)
