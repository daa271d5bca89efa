"""Complete Lagrangian fibrations: vertical fields, their flows, the fiber
action ``mu`` and the isotropy lattice.

Total spaces use a product layout: the first ``n`` coordinates are the base
and the projection forgets the rest.

Sign convention: with first-slot contraction, ``i_X omega = pi^* alpha``
on canonical ``T*Q`` gives ``X = (0, -alpha)``.  The fiber action is taken
as ``mu(alpha, x) = F_{-1}(x)`` (the flow of that field run backwards for
unit time), which is translation by ``+alpha`` on ``T*Q``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from . import ad
from .checks import CheckReport, MaxTracker, max_abs
from .cotangent import CotangentChart, MagneticTerm, canonical_matrix, embed_base_two_form, magnetic_form
from .errors import IllDefinedError, NotTransitiveError, NumericDomainError
from .geometry import Chart, OneForm, SmoothMap, TwoForm, exterior_derivative, jacobian, solve_musical

VERTICAL_TOL = 1e-9


@dataclass(frozen=True)
class FlowConfig:
    """Classical RK4 with ``steps`` equal steps over the requested time."""

    steps: int = 200

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError("flow needs at least one step")


DEFAULT_FLOW = FlowConfig()


@dataclass(frozen=True, eq=False)
class Lattice:
    """A constant lattice in ``T*_q Q`` spanned by the rows of ``generators``.

    Representatives live in the half-open fundamental domain of
    ``[0, 1)``-combinations of the generators.
    """

    generators: np.ndarray
    n: int

    def __post_init__(self):
        G = np.asarray(self.generators, dtype=float).reshape(-1, self.n)
        if G.shape[0] > self.n:
            raise ValueError("more generators than fiber dimensions")
        if G.shape[0] and np.linalg.matrix_rank(G) < G.shape[0]:
            raise ValueError("lattice generators must be independent")
        object.__setattr__(self, "generators", G)

    @classmethod
    def empty(cls, n: int) -> "Lattice":
        return cls(np.zeros((0, n)), n)

    @property
    def rank(self) -> int:
        return self.generators.shape[0]

    @property
    def min_norm(self) -> float:
        if self.rank == 0:
            return float("inf")
        return float(min(np.linalg.norm(v) for v in self.generators))

    @property
    def axis_periods(self) -> Optional[tuple]:
        """Per-coordinate periods when the generators are axis-aligned multiples of ``dq_i``."""
        G = self.generators
        periods = [None] * self.n
        for v in G:
            nz = np.flatnonzero(v)
            if len(nz) != 1:
                return None
            periods[nz[0]] = abs(float(v[nz[0]]))
        return tuple(periods)

    def coefficients(self, p) -> np.ndarray:
        if self.rank == 0:
            return np.zeros(0)
        return np.linalg.lstsq(self.generators.T, np.asarray(p, dtype=float), rcond=None)[0]

    def reduce(self, p) -> np.ndarray:
        """Representative of ``p`` in the fundamental domain; idempotent."""
        p = np.asarray(p, dtype=float)
        if self.rank == 0:
            return p.copy()
        periods = self.axis_periods
        if periods is not None:
            out = p.copy()
            for i, L in enumerate(periods):
                if L is not None:
                    r = out[i] % L
                    out[i] = 0.0 if r >= L else r
            return out
        c = self.coefficients(p)
        return p - np.floor(c + 1e-12) @ self.generators

    def minimal(self, v) -> np.ndarray:
        """Representative of ``v`` closest to 0 (for measuring residuals mod the lattice)."""
        v = np.asarray(v, dtype=float)
        if self.rank == 0:
            return v.copy()
        return v - np.round(self.coefficients(v)) @ self.generators

    def distance(self, a, b) -> float:
        return max_abs(self.minimal(np.asarray(b, float) - np.asarray(a, float)))


@dataclass(frozen=True, eq=False)
class LagrangianFibrationSpec:
    """``(M, Q, pi, omega)`` with ``pi`` the projection onto the first ``n`` coordinates.

    ``lattice`` is the known isotropy lattice for quotient models (used to
    reduce fiber values); it is detected independently by
    :func:`isotropy_lattice`.
    """

    name: str
    base: Chart
    total: Chart
    omega: TwoForm
    complete: bool = True
    lattice: Optional[Lattice] = None
    magnetic: Optional[MagneticTerm] = None
    _winv: Optional[np.ndarray] = field(default=None, init=False, repr=False)

    def __post_init__(self):
        if self.total.dim != 2 * self.base.dim:
            raise ValueError("total space must have twice the base dimension")
        if self.total.periods[: self.base.dim] != self.base.periods:
            raise ValueError("base periods must match the leading total coordinates")
        if self.lattice is None:
            object.__setattr__(self, "lattice", Lattice.empty(self.base.dim))
        if self.omega.constant:
            W = self.omega(np.zeros(self.total.dim))
            solve_musical(W, np.zeros(self.total.dim))  # raises when degenerate
            object.__setattr__(self, "_winv", np.linalg.inv(W))

    @property
    def n(self) -> int:
        return self.base.dim

    def project(self, x) -> np.ndarray:
        return np.asarray(x)[: self.n]

    @property
    def projection(self) -> SmoothMap:
        n = self.n
        J = np.hstack([np.eye(n), np.zeros((n, n))])
        return SmoothMap(self.total, self.base, lambda x: x[:n], lambda x: J, "analytic", name="pi")

    def point(self, q, p) -> np.ndarray:
        return self.total.reduce(np.concatenate([np.asarray(q, float), np.asarray(p, float)]))

    def fiber_distance(self, a, b) -> float:
        """Max-norm distance on the total chart."""
        return self.total.distance(a, b)


def cotangent_fibration(base: Chart, magnetic: Optional[MagneticTerm] = None,
                        name: str = "") -> LagrangianFibrationSpec:
    cc = CotangentChart(base)
    return LagrangianFibrationSpec(name or f"cotangent_r{base.dim}", base, cc.total,
                                   magnetic_form(cc, magnetic), magnetic=magnetic)


def magnetic_fibration(term: MagneticTerm) -> LagrangianFibrationSpec:
    """``(T*Q, omega_Q + pi^* beta)``; ``term`` is closed by construction."""
    return cotangent_fibration(term.beta.chart, term, "magnetic_r2")


def quotient_fibration(base: Chart, lattice: Lattice, name: str = "") -> LagrangianFibrationSpec:
    """``T*Q / Lambda`` with the descended canonical form, for axis-aligned ``Lambda``."""
    periods = lattice.axis_periods
    if periods is None:
        raise ValueError("quotient charts need an axis-aligned lattice")
    cc = CotangentChart(base, periods)
    omega = TwoForm.constant_form(cc.total, canonical_matrix(base.dim), "omega~_Q")
    return LagrangianFibrationSpec(name or f"T*{base.name}/Lambda", base, cc.total, omega,
                                   lattice=lattice)


def cylinder_s1() -> LagrangianFibrationSpec:
    """``T*S^1 / Z dq``: the 2-torus with ``omega = dq ^ dp``."""
    return quotient_fibration(Chart(1, (1.0,), name="S1"), Lattice(np.eye(1), 1), "cylinder_s1")


def torus4_model() -> LagrangianFibrationSpec:
    """``T*T^2 / Z^2``: the 4-torus with the canonical form."""
    return quotient_fibration(Chart(2, (1.0, 1.0), name="T2"), Lattice(np.eye(2), 2), "torus4_model")


def cylinder_nonuniform(eps: float = 0.3) -> LagrangianFibrationSpec:
    """2-torus with ``omega = (1 + eps cos 2 pi p) dq ^ dp``.

    The fiber density integrates to 1 over a period, so the isotropy
    lattice is still ``Z dq`` while vertical fields vary along the fiber.
    """
    if not abs(eps) < 1:
        raise ValueError("|eps| < 1 keeps the form nondegenerate")
    J = canonical_matrix(1)

    def omega(x):
        return (1.0 + eps * np.cos(2 * np.pi * float(x[1]))) * J

    total = Chart(2, (1.0, 1.0))
    return LagrangianFibrationSpec("cylinder_nonuniform", Chart(1, (1.0,), name="S1"), total,
                                   TwoForm(total, omega, name="rho(p) dq^dp"),
                                   lattice=Lattice(np.eye(1), 1))


def as_form(base: Chart, alpha) -> OneForm:
    """A 1-form, or a covector extended to a constant form."""
    if isinstance(alpha, OneForm):
        return alpha
    return OneForm.constant_form(base, alpha, "const")


def lagrangian_check(fib: LagrangianFibrationSpec, points: Sequence, tol: float = 1e-10) -> CheckReport:
    """``omega`` vanishes on ``ker T pi`` and that kernel has dimension ``n``."""
    worst = MaxTracker()
    P = fib.projection
    for i, x in enumerate(points):
        J = jacobian(P, x)
        _, sv, Vt = np.linalg.svd(J)
        rank = int(np.sum(sv > 1e-12 * max(1.0, sv[0])))
        if rank != fib.n:
            raise NumericDomainError("projection is not a submersion here")
        V = Vt[rank:].T
        if V.shape[1] != fib.n:
            raise NumericDomainError("fiber dimension differs from base dimension")
        worst.add(max_abs(V.T @ fib.omega(x) @ V), i)
    return CheckReport(f"lagrangian_fibers[{fib.name}]", worst.value, tol, argmax=worst.where,
                       anchor="ker T pi = (ker T pi)^omega")


def _pullback_covector(fib: LagrangianFibrationSpec, alpha: OneForm, q) -> np.ndarray:
    return np.concatenate([np.asarray(alpha(q), dtype=float), np.zeros(fib.n)])


def _solve_vertical(fib: LagrangianFibrationSpec, xi: np.ndarray, x) -> np.ndarray:
    if fib._winv is not None:
        return xi @ fib._winv
    return solve_musical(fib.omega(x), xi)


def vertical_field(fib: LagrangianFibrationSpec, alpha, x) -> np.ndarray:
    """``X`` with ``i_X omega = pi^* alpha`` at ``x``."""
    x = np.asarray(x, dtype=float)
    alpha = as_form(fib.base, alpha)
    v = _solve_vertical(fib, _pullback_covector(fib, alpha, x[: fib.n]), x)
    if max_abs(v[: fib.n]) > VERTICAL_TOL * max(1.0, max_abs(v)):
        raise NumericDomainError("vertical field has a horizontal component")
    return v


def flow(fib: LagrangianFibrationSpec, alpha, x, t: float, cfg: FlowConfig = DEFAULT_FLOW) -> np.ndarray:
    """Time-``t`` flow of the vertical field of ``alpha`` by classical RK4.

    ``pi^* alpha`` is constant along vertical curves, so it is evaluated once
    at the starting base point; ``omega`` is re-evaluated at every stage.
    """
    if ad.has_duals(x):
        raise TypeError("numerical flows are differentiated by central differences")
    if not fib.complete:
        raise ValueError(f"fibration {fib.name} is not declared complete")
    y = np.array(x, dtype=float)
    if t == 0:
        return fib.total.reduce(y)
    alpha = as_form(fib.base, alpha)
    xi = _pullback_covector(fib, alpha, y[: fib.n])
    if fib._winv is not None:
        v = xi @ fib._winv
        field_at = lambda z: v  # noqa: E731
    else:
        field_at = lambda z: _solve_vertical(fib, xi, z)  # noqa: E731
    dt = t / cfg.steps
    for _ in range(cfg.steps):
        k1 = field_at(y)
        k2 = field_at(y + 0.5 * dt * k1)
        k3 = field_at(y + 0.5 * dt * k2)
        k4 = field_at(y + dt * k3)
        y = y + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    if not np.all(np.isfinite(y)):
        raise NumericDomainError("flow left the finite domain")
    return fib.total.reduce(y)


def mu(fib: LagrangianFibrationSpec, alpha, x, cfg: FlowConfig = DEFAULT_FLOW) -> np.ndarray:
    """Fiber action ``mu(alpha, x)``; translation by ``+alpha`` on ``T*Q``."""
    return flow(fib, alpha, x, -1.0, cfg)


def flow_map(fib: LagrangianFibrationSpec, alpha, t: float, cfg: FlowConfig = DEFAULT_FLOW,
             h: float = 1e-5) -> SmoothMap:
    return SmoothMap(fib.total, fib.total, lambda x: flow(fib, alpha, x, t, cfg), strategy="fd", h=h,
                     name=f"F_{t}")


def verify_flow_pullback(fib: LagrangianFibrationSpec, alpha, t: float, points: Sequence,
                         tol: float = 1e-4, cfg: FlowConfig = DEFAULT_FLOW, h: float = 1e-5) -> CheckReport:
    """Residual of ``(F_t)^* omega = omega + t pi^* d alpha`` with difference Jacobians."""
    alpha = as_form(fib.base, alpha)
    F = flow_map(fib, alpha, t, cfg, h)
    worst = MaxTracker()
    for i, x in enumerate(points):
        x = np.asarray(x, dtype=float)
        J = jacobian(F, x, "fd", h)
        lhs = J.T @ fib.omega(F(x)) @ J
        rhs = fib.omega(x) + t * embed_base_two_form(exterior_derivative(alpha, x[: fib.n]))
        worst.add(max_abs(lhs - rhs), i)
    return CheckReport(f"flow_pullback[{alpha.name},t={t:g}]", worst.value, tol, argmax=worst.where,
                       anchor="(F_t)^* omega = omega + t pi^* d alpha")


def solve_fiber_translation(fib: LagrangianFibrationSpec, x, target, cfg: FlowConfig = DEFAULT_FLOW,
                            tol: float = 1e-13, maxiter: int = 30, h: float = 1e-6) -> np.ndarray:
    """Covector ``a`` at ``pi(x)`` with ``mu(a, x) = target`` (Newton iteration)."""
    x = np.asarray(x, dtype=float)
    target = np.asarray(target, dtype=float)
    n = fib.n
    if fib.base.distance(x[:n], target[:n]) > 1e-9:
        raise NotTransitiveError("target lies in a different fiber")

    def resid(a):
        return fib.total.displacement(target, mu(fib, a, x, cfg))[n:]

    a = fib.total.displacement(x, target)[n:]
    r = resid(a)
    for _ in range(maxiter):
        if max_abs(r) <= tol:
            return a
        J = np.empty((n, n))
        for j in range(n):
            e = np.zeros(n)
            e[j] = h
            J[:, j] = (resid(a + e) - resid(a - e)) / (2 * h)
        a = a - np.linalg.solve(J, r)
        r_new = resid(a)
        if max_abs(r_new) >= max_abs(r) and max_abs(r_new) <= 1e3 * tol:
            return a
        r = r_new
    if max_abs(r) > 1e-9:
        raise NotTransitiveError(f"no connecting covector found (residual {max_abs(r):.3e})")
    return a


def mu_properties(fib: LagrangianFibrationSpec, forms: Sequence[OneForm], points: Sequence,
                  tol: float = 1e-9, cfg: FlowConfig = DEFAULT_FLOW, seed: int = 42) -> CheckReport:
    """Additivity, fiberedness, pointwise dependence and fiber transitivity of ``mu``."""
    rng = np.random.default_rng(seed)
    n = fib.n
    forms = [as_form(fib.base, a) for a in forms]
    add, fibered, local, trans = MaxTracker(), MaxTracker(), MaxTracker(), MaxTracker()
    dist = fib.total.distance
    for i, x in enumerate(points):
        x = fib.total.reduce(np.asarray(x, dtype=float))
        q = x[:n]
        a = forms[i % len(forms)]
        b = forms[(i + 1) % len(forms)]
        m_ab = mu(fib, a + b, x, cfg)
        add.add(dist(m_ab, mu(fib, a, mu(fib, b, x, cfg), cfg)), i)
        fibered.add(fib.base.distance(mu(fib, a, x, cfg)[:n], q), i)
        # Differs from ``a`` away from q but agrees at q.
        c = rng.normal(size=n)
        bump = OneForm(fib.base, lambda y, q=q, c=c: a(y) + c * np.sin(fib.base.displacement(q, y)[0]),
                       name="bumped")
        local.add(dist(mu(fib, a, x, cfg), mu(fib, bump, x, cfg)), i)
        shift = rng.uniform(-0.9, 0.9, size=n)
        target = fib.total.reduce(np.concatenate([q, x[n:] + shift]))
        try:
            s = solve_fiber_translation(fib, x, target, cfg)
            trans.add(dist(mu(fib, s, x, cfg), target), i)
        except NotTransitiveError:
            trans.add(float("inf"), i)
    parts = {"additivity": add.value, "fibered": fibered.value, "pointwise": local.value,
             "transitivity": trans.value}
    key = max(parts, key=parts.get)
    where = {"additivity": add, "fibered": fibered, "pointwise": local, "transitivity": trans}[key].where
    return CheckReport(f"mu_properties[{fib.name}]", parts[key], tol, argmax=where, breakdown=parts,
                       anchor="mu(a+b,x) = mu(a,mu(b,x)), pi mu = pi, depends on a(pi x), transitive")


def _lattice_basis(hits: np.ndarray, n: int, tol: float) -> np.ndarray:
    """Primitive generators of the lattice spanned by ``hits`` (``n <= 2``)."""
    if len(hits) == 0:
        return np.zeros((0, n))
    order = np.argsort([np.linalg.norm(v) for v in hits], kind="stable")
    hits = hits[order]
    basis = [hits[0]]
    for v in hits[1:]:
        if len(basis) == n:
            break
        M = np.array(basis + [v])
        if np.linalg.matrix_rank(M, tol=1e-6 * np.linalg.norm(v)) == len(basis) + 1:
            basis.append(v)
    B = np.array(basis)
    if len(B) == 2:
        # Lagrange-Gauss reduction of the pair.
        u, w = B[0], B[1]
        for _ in range(50):
            if np.dot(w, w) < np.dot(u, u):
                u, w = w, u
            m = np.round(np.dot(u, w) / np.dot(u, u))
            if m == 0:
                break
            w = w - m * u
        B = np.array([u, w])
    for k, v in enumerate(B):
        nz = np.flatnonzero(np.abs(v) > tol)
        if len(nz) and v[nz[0]] < 0:
            B[k] = -v
    B = B[np.argsort([int(np.argmax(np.abs(v) > tol)) for v in B], kind="stable")]
    for v in hits:
        c = np.linalg.lstsq(B.T, v, rcond=None)[0]
        if max_abs(c - np.round(c)) > 1e-6:
            raise IllDefinedError("returns do not form a lattice on the sampled box")
    return B


def isotropy_lattice(fib: LagrangianFibrationSpec, q, x=None, box: float = 3.0, step: float = 0.05,
                     tol: float = 1e-8, scan: FlowConfig = FlowConfig(4),
                     cfg: FlowConfig = DEFAULT_FLOW, probes: int = 3) -> Lattice:
    """Detect ``Lambda_q = {a : mu(a, x) = x}`` by scanning covectors in ``[-box, box]^n``.

    Grid minima of the return distance are refined (bisection in one
    dimension, Newton in two) and kept when the refined return distance is
    within ``tol``.  The generators are re-tested at ``probes`` fiber points.
    """
    n = fib.n
    if n > 2:
        raise ValueError("lattice scan supports fiber dimension <= 2")
    q = np.asarray(q, dtype=float)
    if x is None:
        x = fib.point(q, np.full(n, 0.1))
    x = np.asarray(x, dtype=float)
    dist = fib.total.distance

    def signed(a, c=cfg):
        return fib.total.displacement(x, mu(fib, np.atleast_1d(a), x, c))[n:]

    hits = []
    if n == 1:
        cs = np.arange(1, int(round(box / step)) + 1) * step
        g = np.array([dist(mu(fib, [c], x, scan), x) for c in cs])
        for i in range(1, len(cs) - 1):
            if g[i] <= g[i - 1] and g[i] <= g[i + 1] and g[i] < 2 * step:
                lo, hi = cs[i] - step, cs[i] + step
                s_lo, s_hi = signed(lo)[0], signed(hi)[0]
                if signed(cs[i])[0] == 0.0:
                    c = cs[i]
                elif s_lo * s_hi < 0:
                    c = brentq(lambda a: signed(a)[0], lo, hi, xtol=1e-12, rtol=1e-15)
                else:
                    continue
                if dist(mu(fib, [c], x, cfg), x) <= tol:
                    hits.append([c])
    else:
        k = int(round(box / step))
        c1 = np.arange(-1, k + 1) * step
        c2 = np.arange(-k, k + 1) * step
        g = np.empty((len(c1), len(c2)))
        for i, a in enumerate(c1):
            for j, b in enumerate(c2):
                g[i, j] = dist(mu(fib, [a, b], x, scan), x)
        for i in range(1, len(c1) - 1):
            for j in range(1, len(c2) - 1):
                if c1[i] == 0 and c2[j] <= 0:
                    continue
                win = g[i - 1:i + 2, j - 1:j + 2]
                if g[i, j] > win.min() or g[i, j] >= 2 * step:
                    continue
                a = np.array([c1[i], c2[j]])
                for _ in range(30):
                    r = signed(a)
                    if max_abs(r) < 1e-13:
                        break
                    J = np.empty((2, 2))
                    for m in range(2):
                        e = np.zeros(2)
                        e[m] = 1e-6
                        J[:, m] = (signed(a + e) - signed(a - e)) / 2e-6
                    a = a - np.linalg.solve(J, r)
                if np.linalg.norm(a) > step / 2 and dist(mu(fib, a, x, cfg), x) <= tol:
                    hits.append(list(a))
    hits = np.array(hits, dtype=float).reshape(-1, n)
    if len(hits):
        keep = []
        for v in hits:
            if all(max_abs(v - w) > 1e-6 for w in keep):
                keep.append(v)
        hits = np.array(keep)
    B = _lattice_basis(hits, n, 1e-9)
    rng = np.random.default_rng(7)
    for _ in range(probes):
        xp = fib.point(q, x[n:] + rng.uniform(-0.5, 0.5, size=n))
        for v in B:
            if dist(mu(fib, v, xp, cfg), xp) > tol:
                raise IllDefinedError("lattice vector depends on the probe point")
    return Lattice(B, n)
