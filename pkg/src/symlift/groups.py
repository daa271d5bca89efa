"""Coordinate Lie groups, left actions on base charts, and axiom checks."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from . import ad
from .checks import CheckReport, MaxTracker
from .geometry import Chart, SmoothMap, jacobian
from .errors import NumericDomainError

DEFAULT_SEED = 42
DEFAULT_BOUND = 2.0


@dataclass(frozen=True, eq=False)
class GroupSpec:
    """A group law on coordinates ``R^m`` (components may be periodic)."""

    name: str
    chart: Chart
    multiply: Callable
    inverse: Callable
    identity: np.ndarray = None

    def __post_init__(self):
        e = np.zeros(self.chart.dim) if self.identity is None else np.asarray(self.identity, float)
        object.__setattr__(self, "identity", e)

    @property
    def dim(self) -> int:
        return self.chart.dim

    def mul(self, g, h) -> np.ndarray:
        return self.chart.reduce(np.asarray(self.multiply(np.asarray(g, float), np.asarray(h, float)), float))

    def inv(self, g) -> np.ndarray:
        return self.chart.reduce(np.asarray(self.inverse(np.asarray(g, float)), float))

    def prod(self, *gs) -> np.ndarray:
        out = self.identity
        for g in gs:
            out = self.mul(out, g)
        return out

    def sample(self, count: int, seed: int = DEFAULT_SEED, bound: float = DEFAULT_BOUND) -> np.ndarray:
        rng = np.random.default_rng(seed)
        return self.chart.reduce(rng.uniform(-bound, bound, size=(count, self.dim)))


@dataclass(frozen=True, eq=False)
class ActionSpec:
    """A left action ``phi: G x Q -> Q``.

    ``apply(g, q)`` returns coordinates and should tolerate dual-number
    ``q`` so the action can be differentiated in ``q``.  ``jac(g, q)`` is the
    optional analytic Jacobian in ``q``.  ``transport(q0, q)``, when given,
    returns the unique ``g`` with ``phi_g(q0) = q`` (simply transitive case).
    """

    name: str
    group: GroupSpec
    base: Chart
    apply: Callable
    jac: Optional[Callable] = None
    transport: Optional[Callable] = None
    strategy: str = "analytic"

    def __call__(self, g, q):
        return self.map(g)(q)

    def map(self, g) -> SmoothMap:
        g = np.asarray(g, dtype=float)
        jac = None if self.jac is None else (lambda q: self.jac(g, q))
        strategy = self.strategy if (self.jac is not None or self.strategy != "analytic") else "ad"
        return SmoothMap(self.base, self.base, lambda q: self.apply(g, q), jac, strategy,
                         name=f"{self.name}[g]")

    def jacobian(self, g, q, strategy: Optional[str] = None) -> np.ndarray:
        """Jacobian of ``phi_g`` in ``q``; dual ``q`` requires an analytic Jacobian."""
        return jacobian(self.map(g), q, strategy)

    def with_strategy(self, strategy: str) -> "ActionSpec":
        return replace(self, strategy=strategy)

    @property
    def simply_transitive(self) -> bool:
        return self.transport is not None


@dataclass(frozen=True, eq=False)
class SampleSet:
    """Seeded, materialized samples: group elements, base points and covectors."""

    seed: int
    groups: np.ndarray
    base: np.ndarray
    fibers: np.ndarray

    @property
    def counts(self) -> dict:
        return {"group": len(self.groups), "base": len(self.base), "fiber": len(self.fibers)}

    def triples(self, count: Optional[int] = None):
        """Deterministic ``(g, h, q)`` triples cycling through the materialized lists."""
        n = count or max(len(self.groups), len(self.base))
        m = len(self.groups)
        for i in range(n):
            yield self.groups[i % m], self.groups[(i * 7 + 3) % m], self.base[i % len(self.base)]

    def pairs(self, count: Optional[int] = None):
        """``(g, q, p)`` tuples."""
        n = count or max(len(self.groups), len(self.base))
        for i in range(n):
            yield (self.groups[i % len(self.groups)], self.base[i % len(self.base)],
                   self.fibers[i % len(self.fibers)])


def make_samples(group: Optional[GroupSpec], base: Chart, count: int = 100, seed: int = DEFAULT_SEED,
                 bound: float = DEFAULT_BOUND, fiber_bound: Optional[float] = None,
                 group_count: Optional[int] = None, fiber_count: Optional[int] = None) -> SampleSet:
    """Uniform samples on ``[-bound, bound]`` per coordinate, periodic ones reduced."""
    rng = np.random.default_rng(seed)
    gc = group_count or count
    fc = fiber_count or count
    fb = bound if fiber_bound is None else fiber_bound
    if group is not None:
        gs = group.chart.reduce(rng.uniform(-bound, bound, size=(gc, group.dim)))
    else:
        gs = np.zeros((gc, 0))
    qs = base.reduce(rng.uniform(-bound, bound, size=(count, base.dim)))
    ps = rng.uniform(-fb, fb, size=(fc, base.dim))
    return SampleSet(seed, gs, qs, ps)


def heisenberg_group() -> GroupSpec:
    def mul(g, h):
        return np.array([g[0] + h[0], g[1] + h[1], g[2] + h[2] + g[0] * h[1]])

    def inv(g):
        return np.array([-g[0], -g[1], -g[2] + g[0] * g[1]])

    return GroupSpec("heisenberg", Chart(3, name="H"), mul, inv)


def heisenberg_action() -> ActionSpec:
    """The Heisenberg group acting on itself by left multiplication."""
    grp = heisenberg_group()

    def apply(g, q):
        return np.array([q[0] + g[0], q[1] + g[1], q[2] + g[2] + g[0] * q[1]], dtype=object
                        if ad.has_duals(q) else float)

    def jac(g, q):
        return np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, float(g[0]), 1.0]])

    def transport(q0, q):
        return grp.mul(q, grp.inv(q0))

    return ActionSpec("heisenberg", grp, Chart(3, name="R3"), apply, jac, transport)


def translation_group(dim: int, periods=None, name: str = "") -> GroupSpec:
    chart = Chart(dim, periods, name=name)
    return GroupSpec(name or f"translation_{dim}", chart, lambda g, h: g + h, lambda g: -g)


def translation_action(chart: Chart, name: str = "") -> ActionSpec:
    """``phi_g(q) = q + g`` on ``chart`` by the matching translation group."""
    grp = translation_group(chart.dim, chart.periods, name)
    n = chart.dim

    def apply(g, q):
        return q + g

    def jac(g, q):
        return np.eye(n)

    def transport(q0, q):
        return grp.chart.reduce(np.asarray(q, float) - np.asarray(q0, float))

    return ActionSpec(name or grp.name, grp, chart, apply, jac, transport)


def rotation_s1() -> GroupSpec:
    """The circle group ``R/Z``."""
    return translation_group(1, (1.0,), "rotation_s1")


def rotation_action() -> ActionSpec:
    """Rotations of the period-1 circle."""
    return translation_action(Chart(1, (1.0,), name="S1"), "rotation_s1")


def scaling_action() -> ActionSpec:
    """``R`` acting on ``R^2`` by ``(x, y) -> (e^s x, y)``; does not preserve ``dx^dy``."""
    grp = GroupSpec("scaling_x", Chart(1), lambda g, h: g + h, lambda g: -g)

    def apply(g, q):
        return np.array([q[0] * float(np.exp(g[0])), q[1]], dtype=object if ad.has_duals(q) else float)

    def jac(g, q):
        return np.diag([float(np.exp(g[0])), 1.0])

    return ActionSpec("scaling_x", grp, Chart(2, name="R2"), apply, jac)


GROUPS = {
    "heisenberg": heisenberg_group,
    "translation_r2": lambda: translation_group(2, None, "translation_r2"),
    "translation_torus2": lambda: translation_group(2, (1.0, 1.0), "translation_torus2"),
    "rotation_s1": rotation_s1,
}


def verify_group(grp: GroupSpec, s: SampleSet, tol: float = 1e-12) -> CheckReport:
    """Identity, inverse and associativity residuals over sampled triples."""
    ident, invs, assoc = MaxTracker(), MaxTracker(), MaxTracker()
    e = grp.identity
    dist = grp.chart.distance
    for i, (g, h, _) in enumerate(s.triples()):
        k = s.groups[(i * 11 + 5) % len(s.groups)]
        ident.add(max(dist(grp.mul(g, e), g), dist(grp.mul(e, g), g)), i)
        invs.add(max(dist(grp.mul(g, grp.inv(g)), e), dist(grp.mul(grp.inv(g), g), e)), i)
        assoc.add(dist(grp.mul(grp.mul(g, h), k), grp.mul(g, grp.mul(h, k))), i)
    trackers = {"identity": ident, "inverse": invs, "associativity": assoc}
    worst = max(trackers, key=lambda k: trackers[k].value)
    return CheckReport(f"group_axioms[{grp.name}]", trackers[worst].value, tol,
                       argmax=trackers[worst].where,
                       breakdown={k: t.value for k, t in trackers.items()},
                       anchor="g e = e g = g, g g^-1 = e, (gh)k = g(hk)")


def verify_action(phi: ActionSpec, s: SampleSet, tol: float = 1e-10) -> CheckReport:
    """Residuals of ``phi_e = id`` and ``phi_{gh} = phi_g o phi_h``."""
    grp = phi.group
    dist = phi.base.distance
    ident, comp = MaxTracker(), MaxTracker()
    try:
        for i, (g, h, q) in enumerate(s.triples()):
            ident.add(dist(phi(grp.identity, q), q), i)
            comp.add(dist(phi(grp.mul(g, h), q), phi(g, phi(h, q))), i)
    except NumericDomainError as exc:
        return CheckReport(f"action_axioms[{phi.name}]", float("nan"), tol, note=str(exc))
    worst = ident if ident.value >= comp.value else comp
    return CheckReport(f"action_axioms[{phi.name}]", max(ident.value, comp.value), tol,
                       argmax=worst.where,
                       breakdown={"identity": ident.value, "composition": comp.value},
                       anchor="phi_e = id, phi_{gh} = phi_g o phi_h")
