"""Sections of Lagrangian fibrations, the quotient ``T*Q/Lambda`` and the
section-valued cohomology that classifies lifted actions on it.

Fiber values of quotient sections are covectors taken mod the lattice of
the fibration; residuals are measured with the lattice-minimal
representative.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from . import ad
from .checks import CheckReport, MaxTracker, max_abs
from .cotangent import cotangent_lift, embed_base_two_form
from .errors import IllDefinedError, NotFiberedError, NotLagrangianError
from .fibration import (DEFAULT_FLOW, FlowConfig, LagrangianFibrationSpec, Lattice, mu,
                        solve_fiber_translation)
from .geometry import OneForm, SmoothMap, pullback
from .groups import ActionSpec, SampleSet

SECTION_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class QuotientPoint:
    """``[gamma_q]``: base point and fiber representative reduced mod the lattice."""

    q: np.ndarray
    p: np.ndarray

    @classmethod
    def make(cls, q, p, lattice: Lattice) -> "QuotientPoint":
        return cls(np.asarray(q, float), lattice.reduce(p))

    @property
    def coords(self) -> np.ndarray:
        return np.concatenate([self.q, self.p])


def quotient_reduce(p, lattice: Lattice) -> np.ndarray:
    return lattice.reduce(p)


@dataclass(frozen=True, eq=False)
class Section:
    """A section ``q -> (q, s(q))``; ``func`` returns the fiber coordinates ``s(q)``.

    ``func`` may return unreduced values; periodic fiber coordinates are
    reduced on evaluation and differentiated along minimal representatives.
    """

    fib: LagrangianFibrationSpec
    func: Callable
    name: str = ""
    strategy: str = "ad"

    def fiber(self, q) -> np.ndarray:
        return np.asarray(self.func(np.asarray(q, float)), dtype=float)

    def __call__(self, q) -> np.ndarray:
        return self.fib.point(q, self.fiber(q))

    def as_map(self) -> SmoothMap:
        def func(q):
            s = self.func(q)
            if ad.has_duals(q) or ad.has_duals(s):
                return np.concatenate([np.asarray(q, dtype=object), np.asarray(s, dtype=object)])
            return np.concatenate([np.asarray(q, float), np.asarray(s, float)])

        return SmoothMap(self.fib.base, self.fib.total, func, strategy=self.strategy, name=self.name)

    @classmethod
    def from_form(cls, fib: LagrangianFibrationSpec, alpha: OneForm) -> "Section":
        return cls(fib, lambda q: alpha(q), alpha.name, alpha.strategy)

    @classmethod
    def zero(cls, fib: LagrangianFibrationSpec) -> "Section":
        n = fib.n
        return cls(fib, lambda q: np.zeros(n), "0")


def quotient_translate(sigma: Section, x) -> np.ndarray:
    """``t_sigma([gamma_q]) = [gamma_q] + sigma(q)``."""
    fib = sigma.fib
    x = np.asarray(x, float)
    n = fib.n
    return fib.point(x[:n], fib.lattice.reduce(x[n:] + sigma.fiber(x[:n])))


def section_pullback(sigma: Section, q) -> np.ndarray:
    """``sigma^* omega`` at ``q``."""
    return pullback(sigma.fib.omega, sigma.as_map(), q)


def lagrangian_section_check(sigma: Section, points: Sequence, tol: float = SECTION_TOL) -> CheckReport:
    """Residual ``max |sigma^* omega|`` after checking ``pi o sigma = id``."""
    fib = sigma.fib
    worst = MaxTracker()
    for i, q in enumerate(points):
        q = np.asarray(q, float)
        if fib.base.distance(sigma(q)[: fib.n], q) > 1e-12:
            raise NotFiberedError(f"{sigma.name} is not a section")
        worst.add(max_abs(section_pullback(sigma, q)), i)
    return CheckReport(f"lagrangian_section[{sigma.name}]", worst.value, tol, argmax=worst.where,
                       anchor="sigma^* omega = 0")


def model_iso(fib: LagrangianFibrationSpec, sigma: Section, x_model, cfg: FlowConfig = DEFAULT_FLOW):
    """``phi_sigma([a_q]) = mu_q(a_q, sigma(q))`` for a model point ``(q, a)``."""
    x_model = np.asarray(x_model, float)
    n = fib.n
    q, a = x_model[:n], x_model[n:]
    return mu(fib, a, sigma(q), cfg)


def model_iso_map(fib: LagrangianFibrationSpec, sigma: Section, model: LagrangianFibrationSpec,
                  cfg: FlowConfig = DEFAULT_FLOW, h: float = 1e-5) -> SmoothMap:
    return SmoothMap(model.total, fib.total, lambda x: model_iso(fib, sigma, x, cfg), strategy="fd", h=h,
                     name=f"phi_{sigma.name}")


def verify_model_pullback(fib: LagrangianFibrationSpec, sigma: Section, model: LagrangianFibrationSpec,
                          points: Sequence, tol: float = 1e-4, cfg: FlowConfig = DEFAULT_FLOW,
                          h: float = 1e-5) -> CheckReport:
    """Residual of ``phi_sigma^* omega = omega~ + pi~^*(sigma^* omega)``.

    The breakdown carries ``defect``, the size of ``sigma^* omega`` seen at
    the samples; ``phi_sigma`` is symplectic exactly when it vanishes.
    """
    F = model_iso_map(fib, sigma, model, cfg, h)
    worst, defect = MaxTracker(), MaxTracker()
    for i, x in enumerate(points):
        x = np.asarray(x, float)
        lhs = pullback(fib.omega, F, x, "fd")
        sp = section_pullback(sigma, x[: fib.n])
        defect.add(max_abs(sp), i)
        worst.add(max_abs(lhs - model.omega(x) - embed_base_two_form(sp)), i)
    return CheckReport(f"model_pullback[{sigma.name}]", worst.value, tol, argmax=worst.where,
                       breakdown={"identity": worst.value, "defect": defect.value},
                       anchor="phi_sigma^* omega = omega~_Q + pi~^*(sigma^* omega)")


@dataclass
class SectionRecovery:
    section: Section
    constancy: float
    lagrangian: float
    tol: float

    @property
    def certified(self) -> bool:
        return self.constancy <= self.tol and self.lagrangian <= self.tol

    def report(self) -> CheckReport:
        return CheckReport("section_recovery", max(self.constancy, self.lagrangian), self.tol,
                           breakdown={"constancy": self.constancy, "lagrangian": self.lagrangian},
                           anchor="F(x) = mu(sigma~(pi x), x), sigma~ Lagrangian")


def recover_section(fib: LagrangianFibrationSpec, F: Callable, points: Sequence, tol: float = 1e-8,
                    probes: int = 3, cfg: FlowConfig = DEFAULT_FLOW, seed: int = 42,
                    strict: bool = True) -> SectionRecovery:
    """Write a fibered map as ``F(x) = mu(sigma~(pi(x)), x)`` and recover ``sigma~``."""
    n = fib.n
    rng = np.random.default_rng(seed)
    offsets = rng.uniform(-0.5, 0.5, size=(probes, n))

    def solve_at(q, p):
        x = fib.point(q, p)
        y = np.asarray(F(x), float)
        if fib.base.distance(y[:n], x[:n]) > 1e-9:
            raise NotFiberedError("map does not preserve the projection")
        return fib.lattice.reduce(solve_fiber_translation(fib, x, y, cfg))

    spread = MaxTracker()
    for i, q in enumerate(points):
        q = np.asarray(q, float)
        ref = solve_at(q, np.zeros(n))
        for off in offsets:
            spread.add(fib.lattice.distance(ref, solve_at(q, off)), i)
    if strict and spread.value > tol:
        raise IllDefinedError(f"fiber probes disagree (spread {spread.value:.3e})")
    sigma = Section(fib, lambda q: solve_at(q, np.zeros(n)), "recovered", "fd")
    lag = lagrangian_section_check(sigma, points, tol)
    return SectionRecovery(sigma, spread.value, lag.residual, tol)


def quotient_lift(fib: LagrangianFibrationSpec, phi: ActionSpec, g, x) -> np.ndarray:
    """``(T~*phi)_g``: the cotangent lift descended to ``T*Q / Lambda``."""
    return fib.total.reduce(cotangent_lift(phi, g, np.asarray(x, float)))


def equivariance_mu(fib: LagrangianFibrationSpec, Phi: Callable, phi: ActionSpec, s: SampleSet,
                    tol: float = 1e-8, cfg: FlowConfig = DEFAULT_FLOW,
                    count: Optional[int] = None) -> CheckReport:
    """``mu((T*phi)_g a_q, Phi_g(x)) = Phi_g(mu(a_q, x))`` and lattice invariance."""
    n = fib.n
    eq, lat = MaxTracker(), MaxTracker()
    rng = np.random.default_rng(s.seed)
    for i, (g, q, p) in enumerate(s.pairs(count)):
        x = fib.point(q, p)
        a = rng.uniform(-1.0, 1.0, size=n)
        a_moved = cotangent_lift(phi, g, np.concatenate([x[:n], a]))[n:]
        lhs = mu(fib, a_moved, Phi(g, x), cfg)
        rhs = Phi(g, mu(fib, a, x, cfg))
        eq.add(fib.total.distance(lhs, rhs), i)
        for v in fib.lattice.generators:
            moved = cotangent_lift(phi, g, np.concatenate([x[:n], v]))[n:]
            lat.add(max_abs(fib.lattice.minimal(moved)), i)
    return CheckReport(f"mu_equivariance[{fib.name}]", max(eq.value, lat.value), tol,
                       argmax=eq.where if eq.value >= lat.value else lat.where,
                       breakdown={"equivariance": eq.value, "lattice_invariance": lat.value},
                       anchor="mu((T*phi)_g a, Phi_g x) = Phi_g mu(a, x)")


@dataclass(frozen=True, eq=False)
class SectionCochain:
    """An ``n``-cochain valued in sections of ``T*Q / Lambda``.

    ``func(gs, q)`` returns the fiber covector of ``Sigma(g_1..g_n)(q)``.
    """

    degree: int
    fib: LagrangianFibrationSpec
    func: Callable
    name: str = ""

    def __call__(self, *args) -> np.ndarray:
        *gs, q = args
        if len(gs) != self.degree:
            raise ValueError(f"{self.name or 'cochain'} has degree {self.degree}, got {len(gs)} group arguments")
        return self.fib.lattice.reduce(self.func(tuple(np.asarray(g, float) for g in gs),
                                                 np.asarray(q, float)))

    def section(self, *gs) -> Section:
        gs = tuple(np.asarray(g, float) for g in gs)
        return Section(self.fib, lambda q: self.func(gs, q), f"{self.name}(g)")

    @classmethod
    def from_section(cls, sigma: Section) -> "SectionCochain":
        return cls(0, sigma.fib, lambda gs, q: sigma.func(q), sigma.name)


def section_coboundary(S: SectionCochain, phi: ActionSpec, gs: Sequence, q) -> np.ndarray:
    """``(delta Sigma)(g_1..g_{n+1})(q)`` in the fiber group ``T*_q Q / Lambda_q``.

    The last term is ``(T~*phi)_{g_{n+1}^-1} o Sigma(g_1..g_n) o phi_{g_{n+1}}``,
    i.e. ``J_{phi_h}(q)^T Sigma(..)(phi_h(q))``.
    """
    n = S.degree
    gs = [np.asarray(g, float) for g in gs]
    if len(gs) != n + 1:
        raise ValueError(f"coboundary of a degree-{n} cochain takes {n + 1} group elements")
    q = np.asarray(q, float)
    grp = phi.group
    total = (-1) ** (n + 1) * S(*gs[1:], q)
    for i in range(1, n + 1):
        merged = gs[: i - 1] + [grp.mul(gs[i - 1], gs[i])] + gs[i + 1:]
        total = total + (-1) ** (n + i + 1) * S(*merged, q)
    h = gs[n]
    moved = phi.map(h)(q)
    total = total + np.asarray(phi.jacobian(h, q)).T @ S(*gs[:n], moved)
    return S.fib.lattice.reduce(total)


def section_cocycle(S: SectionCochain, phi: ActionSpec, s: SampleSet, tol: float = 1e-8,
                    count: Optional[int] = None) -> CheckReport:
    """``Sigma(gh) = Sigma(h) + (T~*phi)_{h^-1} o Sigma(g) o phi_h`` and ``Sigma(e) = 0``."""
    lat = S.fib.lattice
    cocy, ident = MaxTracker(), MaxTracker()
    e = phi.group.identity
    for i, (g, h, q) in enumerate(s.triples(count)):
        cocy.add(max_abs(lat.minimal(section_coboundary(S, phi, (g, h), q))), (i, g.tolist(), h.tolist()))
        ident.add(max_abs(lat.minimal(S(e, q))), i)
    return CheckReport(f"section_cocycle[{S.name}]", max(cocy.value, ident.value), tol,
                       argmax=cocy.where if cocy.value >= ident.value else ident.where,
                       breakdown={"cocycle": cocy.value, "identity": ident.value},
                       anchor="Sigma(gh) = Sigma(h) + (T~*phi)_{h^-1} Sigma(g) phi_h")


def sections_lagrangian(S: SectionCochain, s: SampleSet, tol: float = SECTION_TOL,
                        count: Optional[int] = None) -> CheckReport:
    """``max_g |Sigma(g)^* omega~|`` over sampled ``(g, q)``."""
    worst = MaxTracker()
    for i, (g, q, _) in enumerate(s.pairs(count)):
        worst.add(max_abs(section_pullback(S.section(g), q)), (i, g.tolist(), q.tolist()))
    return CheckReport(f"sections_lagrangian[{S.name}]", worst.value, tol, argmax=worst.where,
                       anchor="Sigma(g)^* omega~ = 0")


def sigma_lifted_action(fib: LagrangianFibrationSpec, phi: ActionSpec, S: SectionCochain, g, x,
                        cfg: FlowConfig = DEFAULT_FLOW, Phi: Optional[Callable] = None) -> np.ndarray:
    """``Phi^Sigma_g(x) = Phi_g(mu^(Sigma(g)(pi x), x))`` with ``Phi`` the descended lift by default."""
    x = np.asarray(x, float)
    shifted = mu(fib, S(g, x[: fib.n]), x, cfg)
    if Phi is None:
        return quotient_lift(fib, phi, g, shifted)
    return Phi(g, shifted)


def verify_sigma_action(fib: LagrangianFibrationSpec, phi: ActionSpec, S: SectionCochain, s: SampleSet,
                        tol: float = 1e-8, cfg: FlowConfig = DEFAULT_FLOW,
                        count: Optional[int] = None) -> CheckReport:
    """Action axioms of ``Phi^Sigma``."""
    grp = phi.group
    comp = MaxTracker()
    for i, (g, h, q) in enumerate(s.triples(count)):
        x = fib.point(q, s.fibers[i % len(s.fibers)])
        lhs = sigma_lifted_action(fib, phi, S, grp.mul(g, h), x, cfg)
        rhs = sigma_lifted_action(fib, phi, S, g, sigma_lifted_action(fib, phi, S, h, x, cfg), cfg)
        comp.add(fib.total.distance(lhs, rhs), i)
        comp.add(fib.total.distance(sigma_lifted_action(fib, phi, S, grp.identity, x, cfg), x), i)
    return CheckReport(f"sigma_action[{S.name}]", comp.value, tol, argmax=comp.where,
                       anchor="Phi^Sigma_{gh} = Phi^Sigma_g o Phi^Sigma_h")


def verify_sigma_symplectic(fib: LagrangianFibrationSpec, phi: ActionSpec, S: SectionCochain,
                            s: SampleSet, tol: float = 1e-6, cfg: FlowConfig = DEFAULT_FLOW,
                            h: float = 1e-5, count: Optional[int] = None) -> CheckReport:
    """Residual of ``(Phi^Sigma_g)^* omega~ - omega~``; ``defect_gap`` compares it with ``-pi^* dSigma(g)``."""
    sym, gap = MaxTracker(), MaxTracker()
    for i, (g, q, p) in enumerate(s.pairs(count)):
        x = fib.point(q, p)
        F = SmoothMap(fib.total, fib.total, lambda y, g=g: sigma_lifted_action(fib, phi, S, g, y, cfg),
                      strategy="fd", h=h)
        observed = pullback(fib.omega, F, x, "fd") - fib.omega(x)
        sym.add(max_abs(observed), (i, g.tolist(), x.tolist()))
        predicted = embed_base_two_form(section_pullback(S.section(g), q))
        gap.add(max_abs(observed - predicted), i)
    return CheckReport(f"sigma_symplectic[{S.name}]", sym.value, tol, argmax=sym.where,
                       breakdown={"symplectic": sym.value, "defect_gap": gap.value},
                       anchor="(Phi^Sigma_g)^* omega~ = omega~ iff Sigma(g) Lagrangian")


def sigma_from_lift(fib: LagrangianFibrationSpec, Phi: Callable, phi: ActionSpec, g, q) -> np.ndarray:
    """``Sigma(g)(q) = (T~*phi)_{g^-1}(Phi~_g([0_q]))`` (fiber covector mod the lattice)."""
    n = fib.n
    y = Phi(np.asarray(g, float), fib.point(q, np.zeros(n)))
    back = quotient_lift(fib, phi, phi.group.inv(g), y)
    if fib.base.distance(back[:n], q) > 1e-9:
        raise NotFiberedError("lifted map is not fibered over the base action")
    return fib.lattice.reduce(back[n:])


def sigma_cochain_from_lift(fib: LagrangianFibrationSpec, Phi: Callable, phi: ActionSpec,
                            name: str = "Sigma_Phi") -> SectionCochain:
    return SectionCochain(1, fib, lambda gs, q: sigma_from_lift(fib, Phi, phi, gs[0], q), name)


def verify_sigma_from_lift(fib: LagrangianFibrationSpec, Phi: Callable, phi: ActionSpec, s: SampleSet,
                           tol: float = 1e-8, count: Optional[int] = None) -> CheckReport:
    """``Phi~_g([gamma_q]) = (T~*phi)_g([gamma_q]) + (T~*phi)_g(Sigma(g)(q))``."""
    n = fib.n
    worst = MaxTracker()
    for i, (g, q, p) in enumerate(s.pairs(count)):
        x = fib.point(q, p)
        sig = sigma_from_lift(fib, Phi, phi, g, x[:n])
        base_part = quotient_lift(fib, phi, g, x)
        extra = cotangent_lift(phi, g, np.concatenate([x[:n], sig]))[n:]
        predicted = fib.point(base_part[:n], base_part[n:] + extra)
        worst.add(fib.total.distance(Phi(g, x), predicted), i)
    return CheckReport("sigma_from_lift", worst.value, tol, argmax=worst.where,
                       anchor="Phi~_g([gamma]) = (T~*phi)_g([gamma]) + (T~*phi)_g(Sigma(g)(q))")


def sigma_equivalence(fib: LagrangianFibrationSpec, phi: ActionSpec, S1: SectionCochain,
                      S2: SectionCochain, sigma: Section, s: SampleSet, tol: float = 1e-8,
                      cfg: FlowConfig = DEFAULT_FLOW, h: float = 1e-5,
                      count: Optional[int] = None) -> CheckReport:
    """Certificate that ``F^(x) = mu^(sigma~(pi x), x)`` conjugates ``Phi^{Sigma1}`` to ``Phi^{Sigma2}``.

    Checks ``Sigma2(g) - Sigma1(g) = delta_phi(sigma~)(g)`` mod the lattice,
    ``F^ o Phi^{Sigma1}_g = Phi^{Sigma2}_g o F^`` and ``F^* omega~ = omega~``.
    """
    lag = lagrangian_section_check(sigma, s.base[: min(len(s.base), 10)], max(tol, SECTION_TOL))
    if not lag.passed:
        raise NotLagrangianError(f"{sigma.name} is not Lagrangian (residual {lag.residual:.3e})")
    n = fib.n
    lat = fib.lattice
    S0 = SectionCochain.from_section(sigma)

    def Fhat(x):
        x = np.asarray(x, float)
        return mu(fib, sigma.fiber(x[:n]), x, cfg)

    Fmap = SmoothMap(fib.total, fib.total, Fhat, strategy="fd", h=h, name="F^")
    wit, inter, sym = MaxTracker(), MaxTracker(), MaxTracker()
    for i, (g, q, p) in enumerate(s.pairs(count)):
        x = fib.point(q, p)
        diff = S2(g, x[:n]) - S1(g, x[:n]) - section_coboundary(S0, phi, (g,), x[:n])
        wit.add(max_abs(lat.minimal(diff)), i)
        lhs = Fhat(sigma_lifted_action(fib, phi, S1, g, x, cfg))
        rhs = sigma_lifted_action(fib, phi, S2, g, Fhat(x), cfg)
        inter.add(fib.total.distance(lhs, rhs), i)
        sym.add(max_abs(pullback(fib.omega, Fmap, x, "fd") - fib.omega(x)), i)
    parts = {"witness": wit.value, "intertwining": inter.value, "symplectic": sym.value}
    key = max(parts, key=parts.get)
    where = {"witness": wit, "intertwining": inter, "symplectic": sym}[key].where
    return CheckReport(f"sigma_equivalence[{S1.name}~{S2.name} via {sigma.name}]", parts[key], tol,
                       argmax=where, breakdown=parts,
                       anchor="Sigma2(g) - Sigma1(g) = delta_phi(sigma~)(g)")
