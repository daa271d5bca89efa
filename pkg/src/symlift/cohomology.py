"""Group cochains valued in 1-forms, their coboundary, lifted actions and
the primitive solver that decides whether a 1-cocycle is a coboundary.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from . import ad
from .checks import CheckReport, MaxTracker, max_abs
from .cotangent import (CotangentChart, canonical_form, cotangent_lift, embed_base_two_form, fiber_translation,
                        MagneticTerm, translation_map)
from .errors import NotClosedError, NotTransitiveError
from .geometry import Chart, OneForm, SmoothMap, TwoForm, exterior_derivative, pullback
from .groups import ActionSpec, SampleSet


@dataclass(frozen=True, eq=False)
class FormCochain:
    """An ``n``-cochain ``A: G^n -> Omega^1(Q)``.

    ``func(gs, q)`` returns the covector ``A(g_1..g_n)(q)``; ``gs`` is a
    tuple of group elements (empty for degree 0).
    """

    degree: int
    chart: Chart
    func: Callable
    constant: bool = False
    name: str = ""

    def __call__(self, *args):
        *gs, q = args
        if len(gs) != self.degree:
            raise ValueError(f"{self.name or 'cochain'} has degree {self.degree}, got {len(gs)} group arguments")
        return np.asarray(self.func(tuple(np.asarray(g, dtype=float) for g in gs), q))

    def form(self, *gs) -> OneForm:
        """The 1-form ``A(g_1..g_n)``."""
        gs = tuple(np.asarray(g, dtype=float) for g in gs)
        if len(gs) != self.degree:
            raise ValueError("arity mismatch")
        return OneForm(self.chart, lambda q: self.func(gs, q), constant=self.constant,
                       name=f"{self.name}(g)")

    @classmethod
    def from_form(cls, alpha: OneForm) -> "FormCochain":
        return cls(0, alpha.chart, lambda gs, q: alpha(q), alpha.constant, alpha.name)


def zero_cochain(chart: Chart, degree: int = 1) -> FormCochain:
    n = chart.dim
    return FormCochain(degree, chart, lambda gs, q: np.zeros(n), True, "zero")


def heisenberg_cocycle() -> FormCochain:
    """``A(x0, y0, t0) = x0^2 dy + 2 x0 dt`` on ``R^3``."""

    def func(gs, q):
        x0 = float(gs[0][0])
        return np.array([0.0, x0 * x0, 2.0 * x0])

    return FormCochain(1, Chart(3), func, True, "heisenberg_A")


def nonclosed_demo(chart: Chart) -> FormCochain:
    """``A(g)(q) = g_1 q_2 dq_1``: not closed for ``g_1 != 0`` and not a cocycle."""
    n = chart.dim

    def func(gs, q):
        vals = [float(gs[0][0]) * q[1]] + [0.0] * (n - 1)
        return np.array(vals, dtype=object if ad.has_duals(q) else float)

    return FormCochain(1, chart, func, False, "nonclosed_demo")


def _pullback_value(phi: ActionSpec, g, covector_at: Callable, q):
    """``(phi_g^* beta)(q) = J_{phi_g}(q)^T beta(phi_g(q))``."""
    m = phi.map(g)
    return np.asarray(phi.jacobian(g, q)).T @ covector_at(m(q))


def coboundary(A: FormCochain, phi: ActionSpec, gs: Sequence, q) -> np.ndarray:
    """``(delta_phi A)(g_1..g_{n+1})(q)``, term by term.

    ``(-1)^{n+1} A(g_2..g_{n+1}) + sum_i (-1)^{n+i+1} A(.., g_i g_{i+1}, ..)
    + phi_{g_{n+1}}^* A(g_1..g_n)``.
    """
    n = A.degree
    gs = [np.asarray(g, dtype=float) for g in gs]
    if len(gs) != n + 1:
        raise ValueError(f"coboundary of a degree-{n} cochain takes {n + 1} group elements")
    q = np.asarray(q, dtype=float)
    grp = phi.group
    total = (-1) ** (n + 1) * np.asarray(A(*gs[1:], q), dtype=float)
    for i in range(1, n + 1):
        merged = gs[: i - 1] + [grp.mul(gs[i - 1], gs[i])] + gs[i + 1:]
        total = total + (-1) ** (n + i + 1) * np.asarray(A(*merged, q), dtype=float)
    head = gs[:n]
    total = total + _pullback_value(phi, gs[n], lambda y: np.asarray(A(*head, y), dtype=float), q)
    return total


def coboundary_cochain(A: FormCochain, phi: ActionSpec) -> FormCochain:
    return FormCochain(A.degree + 1, A.chart, lambda gs, q: coboundary(A, phi, gs, q),
                       name=f"delta({A.name})")


def is_cocycle(A: FormCochain, phi: ActionSpec, s: SampleSet, tol: float = 1e-9,
               count: Optional[int] = None) -> CheckReport:
    """Residual of ``A(gh) = A(h) + phi_h^* A(g)`` plus ``A(e) = 0``."""
    ident, cocy = MaxTracker(), MaxTracker()
    e = phi.group.identity
    for i, (g, h, q) in enumerate(s.triples(count)):
        cocy.add(max_abs(coboundary(A, phi, (g, h), q)), (i, g.tolist(), h.tolist(), q.tolist()))
        if i < len(s.base):
            ident.add(max_abs(A(e, q)), i)
    worst = cocy if cocy.value >= ident.value else ident
    return CheckReport(f"cocycle[{A.name}]", max(cocy.value, ident.value), tol, argmax=worst.where,
                       breakdown={"cocycle": cocy.value, "identity": ident.value},
                       anchor="A(gh) = A(h) + phi_h^* A(g)")


def closed_valued(A: FormCochain, s: SampleSet, tol: float = 1e-9,
                  count: Optional[int] = None) -> CheckReport:
    """``max |d(A(g))|`` over sampled ``(g, q)``."""
    worst = MaxTracker()
    for i, (g, q, _) in enumerate(s.pairs(count)):
        worst.add(max_abs(exterior_derivative(A.form(g), q)), (i, g.tolist(), q.tolist()))
    return CheckReport(f"closed_valued[{A.name}]", worst.value, tol, argmax=worst.where,
                       anchor="d(A(g)) = 0")


def lifted_action(phi: ActionSpec, A: FormCochain, g, pt):
    """``Phi^A_g = (T*phi)_g o t_{A(g)}``."""
    return cotangent_lift(phi, g, fiber_translation(A.form(g), pt))


def lifted_map(phi: ActionSpec, A: FormCochain, g, cc: CotangentChart,
               strategy: str = "ad") -> SmoothMap:
    g = np.asarray(g, dtype=float)
    return SmoothMap(cc.total, cc.total, lambda x: lifted_action(phi, A, g, x), strategy=strategy,
                     name="Phi^A_g")


def lifted_action_composition(phi: ActionSpec, A: FormCochain, s: SampleSet, tol: float = 1e-9,
                              count: Optional[int] = None) -> CheckReport:
    """Residual of ``Phi^A_{gh} = Phi^A_g o Phi^A_h`` (and ``Phi^A_e = id``)."""
    comp = MaxTracker()
    e = phi.group.identity
    for i, (g, h, q) in enumerate(s.triples(count)):
        p = s.fibers[i % len(s.fibers)]
        x = np.concatenate([q, p])
        lhs = lifted_action(phi, A, phi.group.mul(g, h), x)
        rhs = lifted_action(phi, A, g, lifted_action(phi, A, h, x))
        comp.add(max_abs(lhs - rhs), i)
        comp.add(max_abs(lifted_action(phi, A, e, x) - x), i)
    return CheckReport(f"lifted_action_composition[{A.name}]", comp.value, tol, argmax=comp.where,
                       anchor="Phi_{gh} = Phi_g o Phi_h")


def predicted_lift_defect(phi: ActionSpec, A: FormCochain, g, q,
                          magnetic: Optional[MagneticTerm] = None) -> np.ndarray:
    """``pi^*(phi_g^* beta - beta - dA(g))`` (``beta = 0`` without a magnetic term)."""
    D = -exterior_derivative(A.form(g), q)
    if magnetic is not None:
        D = D + pullback(magnetic.beta, phi.map(g), q) - magnetic.beta(q)
    return embed_base_two_form(D)


def verify_lift_symplectic(phi: ActionSpec, A: FormCochain, omega: TwoForm, cc: CotangentChart,
                           s: SampleSet, tol: float = 1e-9, strategy: str = "ad",
                           magnetic: Optional[MagneticTerm] = None,
                           count: Optional[int] = None) -> CheckReport:
    """Residual of ``(Phi^A_g)^* omega - omega``.

    The breakdown also carries ``defect_gap``, the distance between the
    observed defect and the predicted ``pi^*(phi_g^* beta - beta - dA(g))``;
    that identity holds whether or not ``A`` is closed.
    """
    sym, gap = MaxTracker(), MaxTracker()
    for i, (g, q, p) in enumerate(s.pairs(count)):
        x = np.concatenate([q, p])
        F = lifted_map(phi, A, g, cc, strategy)
        observed = pullback(omega, F, x, strategy) - omega(x)
        sym.add(max_abs(observed), (i, g.tolist(), x.tolist()))
        gap.add(max_abs(observed - predicted_lift_defect(phi, A, g, q, magnetic)), i)
    return CheckReport(f"lift_symplectic[{A.name}]", sym.value, tol, argmax=sym.where,
                       breakdown={"symplectic": sym.value, "defect_gap": gap.value},
                       anchor="(Phi^A_g)^* omega_Q = omega_Q - pi^* dA(g)")


@dataclass
class PrimitiveFit:
    """Least-squares answer to "is ``A = delta_phi alpha`` for a closed ``alpha``?".

    ``alpha0`` is the minimizing value of the unknown at the base point,
    ``residual`` the RMS of the closedness constraints at that minimizer.
    """

    alpha0: np.ndarray
    residual: float
    tol: float
    singular_values: np.ndarray
    condition: float
    rank: int
    rows: int
    alpha: Optional[OneForm] = None
    holdout_residual: Optional[float] = None

    @property
    def feasible(self) -> bool:
        return self.residual <= self.tol

    @property
    def certified_infeasible(self) -> bool:
        return self.residual >= 10.0 * self.tol

    @property
    def verdict(self) -> str:
        if self.feasible:
            return "feasible"
        if self.certified_infeasible:
            return "infeasible: class non-trivial"
        return "inconclusive"


def _transport_parts(A: FormCochain, phi: ActionSpec, q0, q):
    """``M, b`` with ``alpha(q) = M alpha0 + b`` for the transported candidate primitive."""
    g = phi.transport(q0, q)
    J = np.asarray(phi.jacobian(g, q0), dtype=float)
    M = np.linalg.inv(J).T
    b = M @ np.asarray(A(g, q0), dtype=float)
    return M, b


def primitive_fit(A: FormCochain, phi: ActionSpec, q0, base_points: Sequence, tol: float = 1e-4,
                  h: float = 1e-3, holdout: Optional[SampleSet] = None,
                  cond_warn: float = 1e10) -> PrimitiveFit:
    """Decide whether the 1-cocycle ``A`` has a closed primitive.

    Any primitive satisfies ``alpha(q) = J^{-T}(A(g(q))(q0) + alpha(q0))``
    with ``J`` the Jacobian of ``phi_{g(q)}`` at ``q0``, so it is affine in the
    single unknown ``alpha0 = alpha(q0)``.  Closedness ``d alpha = 0``,
    central-differenced with step ``h`` at each base point, gives linear
    rows in ``alpha0``; the minimum-norm least-squares solution decides
    feasibility.
    """
    if not phi.simply_transitive:
        raise NotTransitiveError(f"action {phi.name} has no transport chart")
    q0 = np.asarray(q0, dtype=float)
    n = phi.base.dim
    C_rows, d_rows = [], []
    for q in base_points:
        q = np.asarray(q, dtype=float)
        dM = np.empty((n, n, n))  # dM[i] = d/dq_i of M
        db = np.empty((n, n))
        for i in range(n):
            e = np.zeros(n)
            e[i] = h
            Mp, bp = _transport_parts(A, phi, q0, q + e)
            Mm, bm = _transport_parts(A, phi, q0, q - e)
            dM[i] = (Mp - Mm) / (2 * h)
            db[i] = (bp - bm) / (2 * h)
        for i in range(n):
            for j in range(i + 1, n):
                C_rows.append(dM[i][j] - dM[j][i])
                d_rows.append(db[i][j] - db[j][i])
    C = np.array(C_rows).reshape(-1, n)
    d = np.array(d_rows)
    a, _, rank, sv = np.linalg.lstsq(C, -d, rcond=None)
    r = C @ a + d
    rms = float(np.linalg.norm(r) / np.sqrt(max(len(d), 1)))
    nz = sv[sv > sv[0] * 1e-12] if sv.size and sv[0] > 0 else np.array([])
    cond = float((nz[0] / nz[-1]) ** 2) if nz.size else 1.0
    if cond > cond_warn:
        warnings.warn(f"primitive_fit: normal equations ill-conditioned (cond {cond:.3e})", RuntimeWarning)
    fit = PrimitiveFit(a, rms, tol, sv, cond, int(rank), len(d))
    if fit.feasible:
        def alpha_func(q):
            M, b = _transport_parts(A, phi, q0, np.asarray(q, dtype=float))
            return M @ a + b

        fit.alpha = OneForm(phi.base, alpha_func, strategy="fd", name="primitive")
        if holdout is not None:
            prim = FormCochain.from_form(fit.alpha)
            worst = 0.0
            for g, q, _ in holdout.pairs():
                worst = max(worst, max_abs(coboundary(prim, phi, (g,), q) - A(g, q)))
            fit.holdout_residual = worst
    return fit


def equivalence_map(A: FormCochain, B: FormCochain, alpha: OneForm, phi: ActionSpec,
                    cc: CotangentChart, s: SampleSet, tol: float = 1e-9, closed_tol: float = 1e-8,
                    count: Optional[int] = None) -> CheckReport:
    """Certificate that ``Phi^A`` and ``Phi^B`` are conjugate through ``F = t_{-alpha}``.

    Checks ``(A - B)(g) = delta_phi(-alpha)(g)``, the intertwining
    ``F o Phi^B_g = Phi^A_g o F`` and ``F^* omega_Q = omega_Q``.
    """
    for q in s.base[: max(5, min(len(s.base), 10))]:
        if max_abs(exterior_derivative(alpha, q)) > closed_tol:
            raise NotClosedError(f"witness form {alpha.name} is not closed")
    neg = FormCochain.from_form(-alpha)
    F = translation_map(-alpha, cc)
    omega = canonical_form(cc)
    wit, inter, sym = MaxTracker(), MaxTracker(), MaxTracker()
    for i, (g, q, p) in enumerate(s.pairs(count)):
        diff = np.asarray(A(g, q), float) - np.asarray(B(g, q), float)
        wit.add(max_abs(diff - coboundary(neg, phi, (g,), q)), i)
        x = np.concatenate([q, p])
        lhs = F(lifted_action(phi, B, g, x))
        rhs = lifted_action(phi, A, g, F(x))
        inter.add(cc.total.distance(lhs, rhs), i)
        sym.add(max_abs(pullback(omega, F, x) - omega(x)), i)
    parts = {"witness": wit.value, "intertwining": inter.value, "symplectic": sym.value}
    key = max(parts, key=parts.get)
    where = {"witness": wit, "intertwining": inter, "symplectic": sym}[key].where
    return CheckReport(f"equivalence[{A.name}~{B.name} via {alpha.name}]", parts[key], tol,
                       argmax=where, breakdown=parts,
                       anchor="(A - B)(g) = delta_phi(-alpha)(g), t_{-alpha} intertwines")

