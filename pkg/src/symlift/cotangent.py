"""The cotangent fibration ``T*Q -> Q`` in coordinates ``(q_1..q_n, p_1..p_n)``.

Liouville form, canonical and magnetic symplectic forms, cotangent lifts,
fiber translations, vertical lifts, and recovery of the 1-form behind a
fibered map.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from . import ad
from .checks import CheckReport, MaxTracker, max_abs
from .errors import IllDefinedError, NotClosedError, NotFiberedError, NumericDomainError
from .geometry import (Chart, OneForm, Point, SmoothMap, TwoForm, VectorField, closedness_residual,
                       coords_of, exterior_derivative, pullback)
from .groups import ActionSpec

AD_TOL = 1e-9
FD_TOL = 1e-6


@dataclass(frozen=True)
class CotangentChart:
    """Base chart plus the induced chart of dimension ``2n`` on ``T*Q``."""

    base: Chart
    fiber_periods: tuple = None

    def __post_init__(self):
        fp = self.fiber_periods if self.fiber_periods is not None else (None,) * self.base.dim
        object.__setattr__(self, "fiber_periods", tuple(fp))

    @property
    def n(self) -> int:
        return self.base.dim

    @property
    def total(self) -> Chart:
        return Chart(2 * self.n, self.base.periods + self.fiber_periods, name=f"T*{self.base.name}")

    def point(self, q, p) -> "CotangentPoint":
        return CotangentPoint(Point(self.base, q), np.asarray(p, dtype=float))


@dataclass(frozen=True, eq=False)
class CotangentPoint:
    q: Point
    p: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float).ravel()
        if p.size != self.q.chart.dim:
            raise ValueError("covector length must match base dimension")
        object.__setattr__(self, "p", p)

    @property
    def coords(self) -> np.ndarray:
        return np.concatenate([self.q.coords, self.p])

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.coords, dtype=dtype)


def _split(pt):
    x = pt.coords if isinstance(pt, CotangentPoint) else coords_of(pt)
    n = len(x) // 2
    return x[:n], x[n:]


def _join(q, p):
    if ad.has_duals(q) or ad.has_duals(p):
        return np.concatenate([np.asarray(q, dtype=object), np.asarray(p, dtype=object)])
    return np.concatenate([np.asarray(q, dtype=float), np.asarray(p, dtype=float)])


def project(pt) -> np.ndarray:
    return _split(pt)[0]


def projection_map(cc: CotangentChart) -> SmoothMap:
    n = cc.n
    J = np.hstack([np.eye(n), np.zeros((n, n))])
    return SmoothMap(cc.total, cc.base, lambda x: x[:n], lambda x: J, "analytic", name="pi")


def liouville(pt) -> np.ndarray:
    """``theta = sum_i p_i dq_i`` as a covector on the total space."""
    q, p = _split(pt)
    return _join(p, np.zeros(len(p)))


def liouville_form(cc: CotangentChart) -> OneForm:
    return OneForm(cc.total, liouville, name="theta")


def canonical_matrix(n: int) -> np.ndarray:
    I = np.eye(n)
    Z = np.zeros((n, n))
    return np.block([[Z, I], [-I, Z]])


def canonical_symplectic(pt) -> np.ndarray:
    q, _ = _split(pt)
    return canonical_matrix(len(q))


def canonical_form(cc: CotangentChart) -> TwoForm:
    return TwoForm.constant_form(cc.total, canonical_matrix(cc.n), "omega_Q")


def embed_base_two_form(B) -> np.ndarray:
    """``pi^* B`` for a base 2-form value ``B``: the q-q block of a ``2n x 2n`` matrix."""
    B = np.asarray(B, dtype=float)
    n = B.shape[0]
    out = np.zeros((2 * n, 2 * n))
    out[:n, :n] = B
    return out


@dataclass(frozen=True, eq=False)
class MagneticTerm:
    """A closed base 2-form ``beta`` together with its numeric closedness bound."""

    beta: TwoForm
    closedness: float = 0.0

    @classmethod
    def build(cls, beta: TwoForm, samples: Optional[Sequence] = None, tol: float = 1e-8,
              seed: int = 42) -> "MagneticTerm":
        if samples is None:
            rng = np.random.default_rng(seed)
            samples = beta.chart.reduce(rng.uniform(-2, 2, size=(10, beta.chart.dim)))
        worst = 0.0
        for q in samples:
            beta(q)  # antisymmetry asserted by the evaluator
            worst = max(worst, closedness_residual(beta, q))
        if worst > tol:
            raise NotClosedError(f"magnetic term is not closed (|d beta| = {worst:.3e})")
        return cls(beta, worst)

    @classmethod
    def constant(cls, chart: Chart, B: float) -> "MagneticTerm":
        n = chart.dim
        M = np.zeros((n, n))
        if n >= 2:
            M[0, 1], M[1, 0] = B, -B
        return cls.build(TwoForm.constant_form(chart, M, f"{B}dx^dy"))


def magnetic_symplectic(term: Optional[MagneticTerm], pt) -> np.ndarray:
    """``omega_Q + pi^* beta``."""
    q, _ = _split(pt)
    W = canonical_matrix(len(q))
    if term is not None:
        W = W + embed_base_two_form(term.beta(q))
    return W


def magnetic_form(cc: CotangentChart, term: Optional[MagneticTerm]) -> TwoForm:
    if term is None:
        return canonical_form(cc)
    if term.beta.constant:
        return TwoForm.constant_form(cc.total, magnetic_symplectic(term, np.zeros(2 * cc.n)),
                                     "omega_Q,beta")
    return TwoForm(cc.total, lambda x: magnetic_symplectic(term, x), name="omega_Q,beta")


def cotangent_lift(phi: ActionSpec, g, pt):
    """``(T*phi)_g``: base ``phi_g(q)``, fiber ``J_{phi_{g^-1}}(phi_g(q))^T p``."""
    q, p = _split(pt)
    g = np.asarray(g, dtype=float)
    q2 = phi.map(g)(q)
    J = np.asarray(phi.jacobian(phi.group.inv(g), q2))
    if not ad.has_duals(J):
        if not np.all(np.isfinite(J)) or abs(np.linalg.det(J)) < 1e-14:
            raise NumericDomainError("cotangent lift: singular Jacobian")
    return _join(q2, J.T @ p)


def lift_map(phi: ActionSpec, g, cc: CotangentChart) -> SmoothMap:
    g = np.asarray(g, dtype=float)
    return SmoothMap(cc.total, cc.total, lambda x: cotangent_lift(phi, g, x), name="T*phi_g")


def fiber_translation(alpha: OneForm, pt):
    """``t_alpha(q, p) = (q, p + alpha(q))``."""
    q, p = _split(pt)
    return _join(q, p + alpha(q))


def translation_map(alpha: OneForm, cc: CotangentChart) -> SmoothMap:
    return SmoothMap(cc.total, cc.total, lambda x: fiber_translation(alpha, x),
                     strategy=alpha.strategy, name=f"t[{alpha.name}]")


def vertical_lift(lam: OneForm, pt) -> np.ndarray:
    """The vertical vector ``(0, lambda(q))``."""
    q, _ = _split(pt)
    return _join(np.zeros(len(q)), lam(q))


def fiberwise_linear(Y: VectorField, pt):
    """``<p, Y(q)>``."""
    q, p = _split(pt)
    return p @ Y(q)


@dataclass
class TranslationRecovery:
    """The 1-form behind a fibered map and the evidence that the map is ``t_alpha``."""

    alpha: OneForm
    well_definedness: float
    closedness: float
    tol: float
    argmax: object = None

    @property
    def certified(self) -> bool:
        return self.well_definedness <= self.tol and self.closedness <= self.tol

    def report(self) -> CheckReport:
        return CheckReport("fiber_translation_recovery", max(self.well_definedness, self.closedness),
                           self.tol, argmax=self.argmax,
                           breakdown={"well_definedness": self.well_definedness,
                                      "closedness": self.closedness},
                           anchor="alpha(q) = F(gamma_q) - gamma_q, d alpha = 0")


def recover_translation(F: Callable, cc: CotangentChart, base_samples: Sequence, tol: float = AD_TOL,
                        probes: int = 3, seed: int = 42, strict: bool = True) -> TranslationRecovery:
    """Recover ``alpha`` from a fibered map ``F`` with ``pi o F = pi``.

    ``alpha(q) = F(q, 0) - (q, 0)`` (fiber part).  The returned record holds
    the spread of ``F(gamma) - gamma`` across ``probes`` seeded fiber points in
    the unit ball and ``max |d alpha|``; both within ``tol`` certify
    ``F = t_alpha`` with ``alpha`` closed.
    """
    n = cc.n
    rng = np.random.default_rng(seed)
    dirs = rng.normal(size=(probes, n))
    radii = rng.uniform(0, 1, size=probes) ** (1.0 / n)
    ball = dirs / np.linalg.norm(dirs, axis=1, keepdims=True) * radii[:, None]

    def diff(q, p):
        x = np.concatenate([q, p])
        y = np.asarray(F(x), dtype=float)
        if cc.base.distance(y[:n], q) > max(tol, 1e-12):
            raise NotFiberedError("map does not preserve the projection")
        return cc.total.displacement(x, y)[n:]

    spread = MaxTracker()
    for i, q in enumerate(base_samples):
        q = np.asarray(q, dtype=float)
        ref = diff(q, np.zeros(n))
        for p in ball:
            spread.add(max_abs(diff(q, p) - ref), i)
    if strict and spread.value > tol:
        raise IllDefinedError(f"F(gamma) - gamma depends on gamma (spread {spread.value:.3e})")

    def alpha_func(q):
        q = np.asarray(q, dtype=float)
        return diff(q, np.zeros(n))

    alpha = OneForm(cc.base, alpha_func, strategy="fd", name="alpha_F")
    closed = MaxTracker()
    for i, q in enumerate(base_samples):
        closed.add(max_abs(exterior_derivative(alpha, q)), i)
    where = spread.where if spread.value >= closed.value else closed.where
    return TranslationRecovery(alpha, spread.value, closed.value, tol, where)


def symplectic_defect(F: SmoothMap, omega: TwoForm, x, strategy: Optional[str] = None) -> np.ndarray:
    """``F^* omega - omega`` at ``x``."""
    return pullback(omega, F, x, strategy) - omega(x)
