"""Named verification scenarios and the runner that turns them into reports."""

from __future__ import annotations

import time

from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

import numpy as np
import yaml

from . import ad
from .checks import CheckReport, MaxTracker, max_abs
from .cohomology import (FormCochain, closed_valued, coboundary, coboundary_cochain, equivalence_map,
                         heisenberg_cocycle, is_cocycle, lifted_action, lifted_action_composition,
                         nonclosed_demo, primitive_fit, verify_lift_symplectic, zero_cochain)
from .cotangent import (CotangentChart, MagneticTerm, canonical_form, cotangent_lift,
                        embed_base_two_form, fiber_translation, liouville_form, magnetic_form,
                        recover_translation, translation_map, vertical_lift)
from .fibration import (FlowConfig, LagrangianFibrationSpec, cotangent_fibration, cylinder_nonuniform,
                        cylinder_s1, flow, isotropy_lattice, lagrangian_check, magnetic_fibration, mu,
                        mu_properties, torus4_model, verify_flow_pullback, vertical_field)
from .geometry import Chart, OneForm, differential, exterior_derivative, pullback
from .groups import (ActionSpec, heisenberg_action, make_samples, rotation_action, scaling_action,
                     translation_action, verify_action, verify_group)
from .report import VerificationReport
from .sections import (Section, SectionCochain, equivariance_mu, quotient_lift, quotient_translate,
                       recover_section, section_coboundary, section_cocycle, sections_lagrangian,
                       sigma_equivalence, verify_model_pullback, verify_sigma_action,
                       verify_sigma_symplectic)

TWO_PI = 2 * np.pi


class ConfigError(ValueError):
    """Malformed or inconsistent scenario configuration."""


@dataclass
class ScenarioConfig:
    scenario: str
    seed: int = 42
    group_samples: int = 100
    base_samples: int = 100
    fiber_samples: int = 100
    bound: float = 2.0
    strategy: str = "ad"
    h: float = 1e-5
    flow_steps: int = 200
    cochain: str = "heisenberg_A"
    tolerances: dict = field(default_factory=dict)
    tol: Optional[float] = None
    output: Optional[str] = None

    def __post_init__(self):
        if not isinstance(self.seed, int) or isinstance(self.seed, bool):
            raise ValueError("seed must be an integer")
        for name in ("group_samples", "base_samples", "fiber_samples", "flow_steps"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.strategy not in ("analytic", "ad", "fd"):
            raise ValueError(f"unknown differentiation strategy {self.strategy!r}")
        if not self.h > 0 or not self.bound > 0:
            raise ValueError("step and bounds must be positive")
        if self.tol is not None and not self.tol > 0:
            raise ValueError("tolerance must be positive")
        for k, v in self.tolerances.items():
            if not float(v) > 0:
                raise ValueError(f"tolerance for {k} must be positive")

    def echo(self) -> dict:
        d = asdict(self)
        d.pop("output")
        d["tolerances"] = dict(sorted(d["tolerances"].items()))
        return d

    def count(self, cap: int, kind: str = "base") -> int:
        return max(1, min(cap, getattr(self, f"{kind}_samples")))


@dataclass
class Check:
    key: str
    anchor: str
    tol: float
    fn: Callable
    relation: str = "<="


@dataclass
class Scenario:
    name: str
    description: str
    build: Callable


def _record(check: Check, tol: float, fn_result: CheckReport) -> CheckReport:
    fn_result.name = check.key
    fn_result.anchor = check.anchor
    fn_result.tol = tol
    fn_result.relation = check.relation
    return fn_result


def _value(name, residual, tol, argmax=None, breakdown=None, note="") -> CheckReport:
    return CheckReport(name, float(residual), tol, argmax=argmax, breakdown=breakdown or {}, note=note)


# ----------------------------------------------------------------------------------------------
# Shared test forms

def _r2_forms() -> list:
    R2 = Chart(2)
    return [
        OneForm.constant_form(R2, [1.0, 0.0], "dx"),
        OneForm(R2, lambda q: np.array([0.0 * q[0], q[0]]), name="x dy"),
        OneForm(R2, lambda q: np.array([q[1], 0.0 * q[0]]), name="y dx"),
        differential(lambda q: ad.sin(q[0]) * q[1], R2, name="d(sin(x) y)"),
        OneForm(R2, lambda q: np.array([q[0] * q[1], ad.cos(q[0]) + q[1] ** 2]), name="xy dx + (cos x + y^2) dy"),
    ]


def _heisenberg_dictionary() -> list:
    R3 = Chart(3)
    return [
        OneForm.constant_form(R3, [1.0, 0.0, 0.0], "dx"),
        OneForm.constant_form(R3, [0.0, 0.0, 1.0], "dt"),
        OneForm(R3, lambda q: np.array([q[1], q[0], 0.0 * q[0]]), name="d(xy)"),
        OneForm(R3, lambda q: np.array([0.0 * q[0], q[2], q[1]]), name="d(yt)"),
        OneForm(R3, lambda q: np.array([2 * q[0], 0.0 * q[0], 2 * q[2]]), name="d(x^2+t^2)"),
    ]


def plus_coboundary(A: FormCochain, alpha: OneForm, phi: ActionSpec) -> FormCochain:
    """``A + delta_phi(alpha)``."""
    a0 = FormCochain.from_form(alpha)
    return FormCochain(1, A.chart, lambda gs, q: np.asarray(A(gs[0], q), float) + coboundary(a0, phi, gs, q),
                       name=f"{A.name}+delta({alpha.name})")


def coboundary_of(alpha: OneForm, phi: ActionSpec) -> FormCochain:
    return FormCochain(1, alpha.chart, lambda gs, q: coboundary(FormCochain.from_form(alpha), phi, gs, q),
                       name=f"coboundary_of:{alpha.name}")


def cochain_by_name(name: str, phi: ActionSpec) -> FormCochain:
    """``heisenberg_A``, ``zero``, ``nonclosed_demo`` or ``coboundary_of:<form>``."""
    if name == "heisenberg_A":
        return heisenberg_cocycle()
    if name == "zero":
        return zero_cochain(phi.base)
    if name == "nonclosed_demo":
        return nonclosed_demo(phi.base)
    if name.startswith("coboundary_of:"):
        form_name = name.split(":", 1)[1]
        pool = _heisenberg_dictionary() if phi.base.dim == 3 else _r2_forms()
        for f in pool:
            if f.name == form_name:
                return coboundary_of(f, phi)
        raise KeyError(f"unknown form {form_name!r}")
    raise KeyError(f"unknown cochain {name!r}")


def heisenberg_lift_formula(g, x) -> np.ndarray:
    """Closed form of ``Phi^A_g`` for the Heisenberg cocycle."""
    x0, y0, t0 = g
    x, y, t, a1, a2, a3 = x
    return np.array([x + x0, y + y0, t + t0 + x0 * y, a1, a2 - x0 ** 2 - x0 * a3, a3 + 2 * x0])


def heisenberg_obstruction_grid() -> np.ndarray:
    v = (-1.0, 0.0, 1.0)
    return np.array([[a, b, c] for a in v for b in v for c in v])


def delta_squared_check(phi: ActionSpec, s, alpha: OneForm, A: FormCochain, count: int) -> Callable:
    """``delta(delta alpha) = 0`` on degree 0 and ``delta(delta A) = 0`` on degree 1."""
    def run(tol):
        worst = MaxTracker()
        d0 = coboundary_cochain(FormCochain.from_form(alpha), phi)
        d1 = coboundary_cochain(A, phi)
        trip = list(s.triples(count))
        for i, (g, h, q) in enumerate(trip):
            k = trip[(i + 1) % len(trip)][0]
            worst.add(max_abs(coboundary(d0, phi, (g, h), q)), ("degree0", i))
            worst.add(max_abs(coboundary(d1, phi, (g, h, k), q)), ("degree1", i))
        return _value("", worst.value, tol, worst.where)
    return run


# ----------------------------------------------------------------------------------------------
# Scenario builders

def _heisenberg(cfg: ScenarioConfig) -> list:
    phi = heisenberg_action()
    A = cochain_by_name(cfg.cochain, phi)
    nonclosed = nonclosed_demo(phi.base)
    cc = CotangentChart(phi.base)
    omega = canonical_form(cc)
    s = make_samples(phi.group, phi.base, cfg.base_samples, cfg.seed, cfg.bound,
                     group_count=cfg.group_samples, fiber_count=cfg.fiber_samples)
    sym_count = cfg.count(50)

    def closed_form():
        worst = MaxTracker()
        for i, (g, q, p) in enumerate(s.pairs()):
            x = np.concatenate([q, p])
            worst.add(max_abs(lifted_action(phi, A, g, x) - heisenberg_lift_formula(g, x)), i)
        return _value("", worst.value, 0, worst.where)

    def lift_is_action():
        return lifted_action_composition(phi, zero_cochain(phi.base), s)

    def obstruction(tol):
        fit = primitive_fit(A, phi, np.zeros(3), heisenberg_obstruction_grid(), tol=1e-4)
        return _value("", fit.residual, tol, list(fit.alpha0),
                      {"rows": fit.rows, "rank": fit.rank, "normal_condition": fit.condition},
                      note=fit.verdict)

    def control(tol):
        parts, verdicts = {}, []
        holdout = make_samples(phi.group, phi.base, 20, cfg.seed + 1)
        for form in _heisenberg_dictionary()[:2]:
            fit = primitive_fit(coboundary_of(form, phi), phi, np.zeros(3), heisenberg_obstruction_grid(),
                                tol=1e-4, holdout=holdout)
            hold = fit.holdout_residual if fit.holdout_residual is not None else float("inf")
            parts[f"delta({form.name})"] = max(fit.residual, hold)
            verdicts.append(f"delta({form.name}): {fit.verdict}")
        return _value("", max(parts.values()), tol, breakdown=parts, note="; ".join(verdicts))

    def defect_identity(strategy):
        def run(tol):
            r = verify_lift_symplectic(phi, nonclosed, canonical_form(cc), cc, s, tol, strategy, count=sym_count)
            return _value("", r.breakdown["defect_gap"], tol, r.argmax,
                          breakdown={"defect": r.breakdown["symplectic"]})
        return run

    def roundtrip_over_dictionary(tol):
        worst, parts = 0.0, {}
        for alpha in _heisenberg_dictionary():
            B = plus_coboundary(A, alpha, phi)
            r = equivalence_map(A, B, alpha, phi, cc, s, tol)
            parts[alpha.name] = r.residual
            worst = max(worst, r.residual)
        return _value("", worst, tol, breakdown=parts)

    def refute_dictionary(tol):
        parts = {}
        for alpha in _heisenberg_dictionary():
            r = equivalence_map(A, zero_cochain(phi.base), alpha, phi, cc, s, tol)
            parts[alpha.name] = r.breakdown["witness"]
        return _value("", min(parts.values()), tol, breakdown=parts,
                      note="every dictionary witness fails")

    checks = [
        Check("group_axioms", "g e = e g = g, g g^-1 = e, (gh)k = g(hk)", 1e-12,
              lambda tol: verify_group(phi.group, s, tol)),
        Check("action_axioms", "phi_e = id, phi_{gh} = phi_g o phi_h", 1e-10,
              lambda tol: verify_action(phi, s, tol)),
        Check("cocycle", "A(gh) = A(h) + phi_h^* A(g)", 1e-9, lambda tol: is_cocycle(A, phi, s, tol)),
        Check("closedness", "d(A(g)) = 0", 1e-9, lambda tol: closed_valued(A, s, tol)),
        Check("cotangent_lift_action", "(T*phi)_{gh} = (T*phi)_g o (T*phi)_h", 1e-9,
              lambda tol: lift_is_action()),
        Check("lifted_action_composition", "Phi_{gh} = Phi_g o Phi_h", 1e-9,
              lambda tol: lifted_action_composition(phi, A, s, tol)),
        Check("symplectic", "(Phi^A_g)^* omega_Q = omega_Q - pi^* dA(g)", 1e-9,
              lambda tol: verify_lift_symplectic(phi, A, omega, cc, s, tol, cfg.strategy, count=sym_count)),
        Check("symplectic_fd", "(Phi^A_g)^* omega_Q = omega_Q - pi^* dA(g)", 1e-6,
              lambda tol: verify_lift_symplectic(phi, A, omega, cc, s, tol, "fd", count=sym_count)),
        Check("defect_identity_nonclosed", "(Phi^A_g)^* omega_Q - omega_Q = -pi^* dA(g)", 1e-9,
              defect_identity(cfg.strategy)),
        Check("defect_identity_nonclosed_fd", "(Phi^A_g)^* omega_Q - omega_Q = -pi^* dA(g)", 1e-6,
              defect_identity("fd")),
        Check("obstruction", "A = phi^* alpha - alpha with d alpha = 0 is infeasible", 1e-3, obstruction, ">="),
        Check("obstruction_control", "delta_phi(dx), delta_phi(dt) have closed primitives", 1e-6, control),
        Check("equivalence_roundtrip", "(A - B)(g) = delta_phi(-alpha)(g), t_{-alpha} intertwines", 1e-9,
              roundtrip_over_dictionary),
        Check("equivalence_to_zero_refuted", "A - 0 != delta_phi(-alpha) for dictionary alpha", 1e-3,
              refute_dictionary, ">="),
        Check("delta_squared", "delta_phi o delta_phi = 0", 1e-8,
              delta_squared_check(phi, s, _heisenberg_dictionary()[3], A, cfg.count(50, "group"))),
    ]
    if cfg.cochain == "heisenberg_A":
        checks.insert(4, Check("lift_closed_form", "Phi_g(x,y,t,a) = (.., a2 - x0^2 - x0 a3, a3 + 2 x0)", 1e-12,
                               lambda tol: closed_form()))
    return checks


def _cotangent_common(cfg: ScenarioConfig, n: int) -> tuple:
    base = Chart(n, name=f"R{n}")
    fib = cotangent_fibration(base)
    phi = translation_action(base, f"translation_r{n}")
    s = make_samples(phi.group, base, cfg.base_samples, cfg.seed, cfg.bound,
                     group_count=cfg.group_samples, fiber_count=cfg.fiber_samples)
    pts = [np.concatenate([q, p]) for q, p in zip(s.base, s.fibers)]
    return base, fib, phi, s, pts


def _flow_vs_translation(fib, forms, pts, cfg, count) -> Callable:
    def run(tol):
        worst = MaxTracker()
        steps = FlowConfig(cfg.flow_steps)
        for i, x in enumerate(pts[:count]):
            a = forms[i % len(forms)]
            q = x[: fib.n]
            expected = fib.point(q, x[fib.n:] - np.asarray(a(q), float))
            worst.add(fib.total.distance(flow(fib, a, x, 1.0, steps), expected), i)
            worst.add(fib.total.distance(mu(fib, a, x, steps), fib.point(q, x[fib.n:] + a(q))), i)
        return _value("", worst.value, tol, worst.where)
    return run


def _cotangent_r1(cfg: ScenarioConfig) -> list:
    base, fib, phi, s, pts = _cotangent_common(cfg, 1)
    forms = [OneForm.constant_form(base, [1.0], "dq"),
             OneForm(base, lambda q: np.array([ad.sin(q[0])]), name="sin(q) dq")]

    def lattice(tol):
        L = isotropy_lattice(fib, np.zeros(1))
        return _value("", float(L.rank), tol, note="generators found in [-3, 3]: " + str(L.generators.tolist()))

    return [
        Check("lagrangian_fibers", "ker T pi = (ker T pi)^omega", 1e-12,
              lambda tol: lagrangian_check(fib, pts[: cfg.count(20)], tol)),
        Check("flow_vs_translation", "F_1 = t_{-alpha}, mu(alpha) = t_alpha", 1e-10,
              _flow_vs_translation(fib, forms, pts, cfg, cfg.count(10))),
        Check("mu_properties", "mu is a fibered, pointwise, transitive action", 1e-9,
              lambda tol: mu_properties(fib, forms, pts[: cfg.count(10)], tol, FlowConfig(cfg.flow_steps))),
        Check("lattice_empty", "Lambda_q = 0 on T*Q", 0.5, lattice),
    ]


def _cotangent_r2(cfg: ScenarioConfig) -> list:
    base, fib, phi, s, pts = _cotangent_common(cfg, 2)
    cc = CotangentChart(base)
    omega = canonical_form(cc)
    forms = _r2_forms()
    steps = FlowConfig(cfg.flow_steps)

    def liouville(tol):
        theta = liouville_form(cc)
        worst = MaxTracker()
        for i, x in enumerate(pts[: cfg.count(20)]):
            worst.add(max_abs(-exterior_derivative(theta, x) - omega(x)), i)
        return _value("", worst.value, tol, worst.where)

    def translation_pullback(strategy):
        def run(tol):
            worst = MaxTracker()
            for k, a in enumerate(forms):
                t = translation_map(a, cc)
                for i, x in enumerate(pts[: cfg.count(10)]):
                    expected = omega(x) - embed_base_two_form(exterior_derivative(a, x[:2]))
                    worst.add(max_abs(pullback(omega, t, x, strategy) - expected), (a.name, i))
            return _value("", worst.value, tol, worst.where)
        return run

    def vertical(tol):
        worst = MaxTracker()
        for i, x in enumerate(pts[: cfg.count(20)]):
            lam = forms[i % len(forms)]
            v = vertical_lift(lam, x)
            pulled = np.concatenate([lam(x[:2]), np.zeros(2)])
            worst.add(max_abs(v @ omega(x) + pulled), ("contraction", i))
            worst.add(max_abs(vertical_field(fib, lam, x) + v), ("field", i))
        return _value("", worst.value, tol, worst.where,
                      note="i_{vertical_lift(l)} omega_Q = -pi^* l; vertical_field(l) = -vertical_lift(l)")

    def recover(tol):
        alpha = OneForm(base, lambda q: np.array([1.0 + q[1], q[0]]), name="dx + d(xy)")
        rec = recover_translation(lambda x: fiber_translation(alpha, x), cc, s.base[: cfg.count(10)], tol)
        gap = max(max_abs(rec.alpha(q) - alpha(q)) for q in s.base[: cfg.count(10)])
        return _value("", max(gap, rec.well_definedness, rec.closedness), tol,
                      breakdown={"form_gap": gap, "well_definedness": rec.well_definedness,
                                 "closedness": rec.closedness})

    def nonclosed_recovery(tol):
        ydx = forms[2]
        rec = recover_translation(lambda x: fiber_translation(ydx, x), cc, s.base[: cfg.count(10)], 1e-9)
        return _value("", rec.closedness, tol, note="closedness residual of y dx; certification refused"
                      if not rec.certified else "unexpectedly certified")

    def flow_pullback(tol):
        worst, parts = 0.0, {}
        small = FlowConfig(min(cfg.flow_steps, 20))
        for a in forms:
            for t in (0.0, 0.5, 1.0):
                r = verify_flow_pullback(fib, a, t, pts[: cfg.count(3)], tol, small)
                parts[f"{a.name}@{t:g}"] = r.residual
                worst = max(worst, r.residual)
        return _value("", worst, tol, breakdown=parts)

    def section_roundtrip(tol):
        worst = 0.0
        for a in (forms[0], forms[3], forms[4]):
            sig = Section.from_form(fib, a)
            rec = recover_section(fib, lambda x: quotient_translate(sig, x), s.base[: cfg.count(5)],
                                  tol=tol, cfg=FlowConfig(1), strict=False)
            gap = max(fib.lattice.distance(rec.section.fiber(q), sig.fiber(q)) for q in s.base[: cfg.count(5)])
            worst = max(worst, gap, rec.constancy)
        return _value("", worst, tol)

    def model(which):
        sig = Section.from_form(fib, forms[3] if which == "lagrangian" else forms[2])
        return lambda tol: verify_model_pullback(fib, sig, fib, pts[: cfg.count(5)], tol, steps)

    probe = FormCochain(1, base, lambda gs, q: np.array([gs[0][0] * q[1], ad.sin(gs[0][1]) * q[0]]),
                        name="g0 q1 dx + sin(g1) q0 dy")

    def lift_equivariance(tol):
        Phi = lambda g, x: cotangent_lift(phi, g, x)  # noqa: E731
        return equivariance_mu(fib, Phi, phi, s, tol, steps, count=cfg.count(20))

    return [
        Check("lagrangian_fibers", "ker T pi = (ker T pi)^omega", 1e-12,
              lambda tol: lagrangian_check(fib, pts[: cfg.count(20)], tol)),
        Check("liouville", "omega_Q = -d theta_Q", 1e-9, liouville),
        Check("translation_pullback_ad", "t_alpha^* omega_Q = omega_Q - pi^*(d alpha)", 1e-9,
              translation_pullback("ad")),
        Check("translation_pullback_fd", "t_alpha^* omega_Q = omega_Q - pi^*(d alpha)", 1e-6,
              translation_pullback("fd")),
        Check("vertical_lift", "i_X omega_Q = -pi^* lambda for X = (0, lambda)", 1e-10, vertical),
        Check("recover_translation", "alpha(q) = F(gamma_q) - gamma_q", 1e-9, recover),
        Check("recover_translation_nonclosed", "|d(y dx)| = 1", 0.5, nonclosed_recovery, ">="),
        Check("flow_vs_translation", "F_1 = t_{-alpha}, mu(alpha) = t_alpha", 1e-10,
              _flow_vs_translation(fib, forms, pts, cfg, cfg.count(10))),
        Check("flow_pullback", "(F_t)^* omega = omega + t pi^* d alpha", 1e-4, flow_pullback),
        Check("mu_properties", "mu is a fibered, pointwise, transitive action", 1e-9,
              lambda tol: mu_properties(fib, forms, pts[: cfg.count(10)], tol, steps)),
        Check("mu_equivariance", "mu((T*phi)_g a, Phi_g x) = Phi_g mu(a, x)", 1e-8, lift_equivariance),
        Check("delta_squared", "delta_phi o delta_phi = 0", 1e-8,
              delta_squared_check(phi, s, forms[4], probe, cfg.count(50, "group"))),
        Check("section_roundtrip", "F(x) = mu(sigma~(pi x), x)", 1e-8, section_roundtrip),
        Check("model_pullback_lagrangian", "phi_sigma^* omega = omega~ + pi~^*(sigma^* omega)", 1e-4,
              model("lagrangian")),
        Check("model_pullback_nonlagrangian", "phi_sigma^* omega = omega~ + pi~^*(sigma^* omega)", 1e-4,
              model("nonlagrangian")),
    ]


def cylinder_cochains(fib: LagrangianFibrationSpec) -> dict:
    """Section cochains on the cylinder: ``Sigma(g) = [c(g) dq]``."""
    return {
        "compliant": SectionCochain(1, fib, lambda gs, q: np.array([2.0 * gs[0][0]]), "2g dq"),
        "noncocycle": SectionCochain(1, fib, lambda gs, q: np.array([0.5 * gs[0][0] ** 2]), "g^2/2 dq"),
        "zero": SectionCochain(1, fib, lambda gs, q: np.zeros(1), "0"),
    }


def torus_nonlagrangian(fib: LagrangianFibrationSpec, phi: ActionSpec) -> SectionCochain:
    """``Sigma = delta_phi(0.3 sin(2 pi q1) dq2)``: a cocycle valued in non-Lagrangian sections."""
    sig = Section(fib, lambda q: np.array([0.0 * q[0], 0.3 * ad.sin(TWO_PI * q[0])]), "0.3 sin(2pi q1) dq2")
    S0 = SectionCochain.from_section(sig)

    def func(gs, q):
        g = gs[0]
        if ad.has_duals(q):
            return sig.func(q + g) - sig.func(q)
        return section_coboundary(S0, phi, (g,), q)

    return SectionCochain(1, fib, func, "delta(0.3 sin(2pi q1) dq2)")


def quadrant(fib, phi, S, s, cfg, flow_cfg) -> dict:
    """Both sides of "Phi^Sigma is a symplectic action iff Sigma is a Lagrangian cocycle"."""
    count = cfg.count(8)
    coc = section_cocycle(S, phi, s, 1e-8, count=count)
    lag = sections_lagrangian(S, s, 1e-8, count=count)
    act = verify_sigma_action(fib, phi, S, s, 1e-8, flow_cfg, count=count)
    sym = verify_sigma_symplectic(fib, phi, S, s, 1e-6, flow_cfg, count=count)
    return {"cocycle": coc, "lagrangian": lag, "action": act, "symplectic": sym}


def _quadrant_check(fib, phi, S, s, cfg, flow_cfg, expect: tuple) -> Callable:
    def run(tol):
        q = quadrant(fib, phi, S, s, cfg, flow_cfg)
        flags = {k: v.passed for k, v in q.items()}
        agree = (flags["cocycle"] == flags["action"]) and (flags["lagrangian"] == flags["symplectic"])
        matches = (flags["cocycle"], flags["lagrangian"]) == expect
        residual = 0.0 if (agree and matches) else 1.0
        gap = abs(q["symplectic"].residual - q["lagrangian"].residual)
        return _value("", residual, tol, breakdown={**{k: v.residual for k, v in q.items()},
                                                    "symplectic_vs_lagrangian_gap": gap},
                      note=", ".join(f"{k}={'pass' if v else 'fail'}" for k, v in flags.items()))
    return run


def _cylinder(cfg: ScenarioConfig) -> list:
    fib = cylinder_s1()
    phi = rotation_action()
    s = make_samples(phi.group, fib.base, cfg.base_samples, cfg.seed, cfg.bound,
                     group_count=cfg.group_samples, fiber_count=cfg.fiber_samples)
    pts = [fib.point(q, p) for q, p in zip(s.base, s.fibers)]
    steps = FlowConfig(cfg.flow_steps)
    quad_flow = FlowConfig(min(cfg.flow_steps, 20))
    forms = [OneForm.constant_form(fib.base, [0.37], "0.37 dq"),
             OneForm(fib.base, lambda q: np.array([0.2 * ad.sin(TWO_PI * q[0])]), name="0.2 sin(2pi q) dq")]
    cochains = cylinder_cochains(fib)

    def lattice(tol):
        L = isotropy_lattice(fib, np.array([0.3]))
        if L.rank != 1:
            return _value("", float("inf"), tol, note=f"rank {L.rank}")
        return _value("", abs(L.generators[0, 0] - 1.0), tol, note=f"generator {float(L.generators[0, 0]):.12g} dq")

    def loop(tol):
        worst = MaxTracker()
        for i, x in enumerate(pts[: cfg.count(10)]):
            worst.add(fib.total.distance(flow(fib, [1.0], x, 1.0, steps), x), i)
        return _value("", worst.value, tol, worst.where)

    def vertical(tol):
        worst = MaxTracker()
        for i, x in enumerate(pts[: cfg.count(10)]):
            c = 0.5 + i * 0.1
            v = vertical_field(fib, [c], x)
            worst.add(max(abs(v[0]), abs(abs(v[1]) - c)), i)
        return _value("", worst.value, tol, worst.where)

    def order(tol):
        ratio = flow_order_ratio()
        return _value("", abs(np.log2(ratio) - 4.0), tol, breakdown={"ratio": ratio},
                      note="ratio in [8, 32] iff residual <= 1")

    def flow_pullback(tol):
        worst, parts = 0.0, {}
        small = FlowConfig(min(cfg.flow_steps, 20))
        for a in forms:
            for t in (0.0, 0.5, 1.0):
                r = verify_flow_pullback(fib, a, t, pts[: cfg.count(3)], tol, small)
                parts[f"{a.name}@{t:g}"] = r.residual
                worst = max(worst, r.residual)
        return _value("", worst, tol, breakdown=parts)

    def rotation_equivariance(tol):
        Phi = lambda g, x: quotient_lift(fib, phi, g, x)  # noqa: E731
        return equivariance_mu(fib, Phi, phi, s, tol, quad_flow, count=cfg.count(20))

    def scaling_negative(tol):
        Phi = lambda g, x: fib.point(phi.map(g)(x[:1]), 2.0 * x[1:])  # noqa: E731
        r = equivariance_mu(fib, Phi, phi, s, 1e-8, quad_flow, count=cfg.count(20))
        return _value("", r.breakdown["equivariance"], tol, r.argmax)

    def equivalence(tol):
        sig = Section(fib, lambda q: np.array([0.1 * ad.sin(TWO_PI * q[0])]), "0.1 sin(2pi q) dq")
        S1 = cochains["compliant"]
        S0 = SectionCochain.from_section(sig)
        S2 = SectionCochain(1, fib, lambda gs, q: S1.func(gs, q) + section_coboundary(S0, phi, gs, q),
                            "2g dq + delta(sigma)")
        return sigma_equivalence(fib, phi, S1, S2, sig, s, tol, quad_flow, count=cfg.count(10))

    def nonequivalence(tol):
        parts = {}
        for c in (0.0, 0.25, 0.5, 0.75):
            sig = Section(fib, lambda q, c=c: np.array([c + 0.0 * q[0]]), f"{c} dq")
            r = sigma_equivalence(fib, phi, cochains["compliant"], cochains["zero"], sig, s, 1e-8, quad_flow,
                                  count=cfg.count(10))
            parts[sig.name] = r.breakdown["witness"]
        return _value("", min(parts.values()), tol, breakdown=parts)

    return [
        Check("lagrangian_fibers", "ker T pi = (ker T pi)^omega", 1e-12,
              lambda tol: lagrangian_check(fib, pts[: cfg.count(20)], tol)),
        Check("lattice_detection", "Lambda_q = Z dq", 1e-6, lattice),
        Check("vertical_field", "i_X omega = pi^*(c dq), |X| = |c|", 1e-12, vertical),
        Check("flow_vs_translation", "F_1 = t_{-alpha}, mu(alpha) = t_alpha", 1e-10,
              _flow_vs_translation(fib, forms, pts, cfg, cfg.count(10))),
        Check("flow_closes_loop", "F_1 along dq returns to x", 1e-10, loop),
        Check("flow_order", "RK4 error ratio under step halving in [8, 32]", 1.0, order),
        Check("flow_pullback", "(F_t)^* omega = omega + t pi^* d alpha", 1e-4, flow_pullback),
        Check("mu_properties", "mu is a fibered, pointwise, transitive action", 1e-8,
              lambda tol: mu_properties(fib, forms, pts[: cfg.count(10)], tol, steps)),
        Check("mu_equivariance", "mu((T*phi)_g a, Phi_g x) = Phi_g mu(a, x)", 1e-8, rotation_equivariance),
        Check("mu_equivariance_violated", "fiber scaling breaks mu-equivariance", 0.1, scaling_negative, ">="),
        Check("sigma_compliant", "Phi^Sigma symplectic action iff Sigma Lagrangian cocycle", 0.5,
              _quadrant_check(fib, phi, cochains["compliant"], s, cfg, quad_flow, (True, True))),
        Check("sigma_noncocycle", "Phi^Sigma symplectic action iff Sigma Lagrangian cocycle", 0.5,
              _quadrant_check(fib, phi, cochains["noncocycle"], s, cfg, quad_flow, (False, True))),
        Check("sigma_zero", "Phi^Sigma symplectic action iff Sigma Lagrangian cocycle", 0.5,
              _quadrant_check(fib, phi, cochains["zero"], s, cfg, quad_flow, (True, True))),
        Check("sigma_equivalence", "Sigma2(g) - Sigma1(g) = delta_phi(sigma~)(g)", 1e-8, equivalence),
        Check("sigma_nonequivalence", "no constant sigma~ relates 2g dq to 0", 1e-3, nonequivalence, ">="),
    ]


def flow_order_ratio(eps: float = 0.3, coarse: int = 10) -> float:
    """Error ratio of RK4 at ``coarse`` and ``2 coarse`` steps against a 400-step reference."""
    fib = cylinder_nonuniform(eps)
    x = np.array([0.2, 0.3])
    ref = flow(fib, [1.0], x, 1.0, FlowConfig(400))
    e1 = max_abs(fib.total.displacement(ref, flow(fib, [1.0], x, 1.0, FlowConfig(coarse))))
    e2 = max_abs(fib.total.displacement(ref, flow(fib, [1.0], x, 1.0, FlowConfig(2 * coarse))))
    return e1 / e2


def torus_sections(fib: LagrangianFibrationSpec) -> list:
    return [
        Section.zero(fib),
        Section(fib, lambda q: np.array([0.3 + 0.0 * q[0], 0.7 + 0.0 * q[0]]), "0.3 dq1 + 0.7 dq2"),
        Section(fib, lambda q: np.array([ad.cos(TWO_PI * q[0]) * ad.sin(TWO_PI * q[1]),
                                         ad.sin(TWO_PI * q[0]) * ad.cos(TWO_PI * q[1])]) * 0.5,
                "d(sin(2pi q1) sin(2pi q2))/(4pi)"),
        Section(fib, lambda q: np.array([0.0 * q[0], 0.3 * ad.sin(TWO_PI * q[0])]), "0.3 sin(2pi q1) dq2"),
    ]


def _torus4(cfg: ScenarioConfig) -> list:
    fib = torus4_model()
    phi = translation_action(fib.base, "translation_torus2")
    s = make_samples(phi.group, fib.base, cfg.base_samples, cfg.seed, cfg.bound,
                     group_count=cfg.group_samples, fiber_count=cfg.fiber_samples)
    pts = [fib.point(q, p) for q, p in zip(s.base, s.fibers)]
    quad_flow = FlowConfig(min(cfg.flow_steps, 20))
    sections = torus_sections(fib)

    def lattice(tol):
        L = isotropy_lattice(fib, np.array([0.3, 0.6]))
        if L.rank != 2:
            return _value("", float("inf"), tol, note=f"rank {L.rank}")
        return _value("", max_abs(L.generators - np.eye(2)), tol, note=str(L.generators.tolist()))

    def roundtrip(tol):
        parts = {}
        for sig in sections:
            rec = recover_section(fib, lambda x, sig=sig: quotient_translate(sig, x), s.base[: cfg.count(5)],
                                  tol=tol, cfg=FlowConfig(1), strict=False)
            gap = max(fib.lattice.distance(rec.section.fiber(q), sig.fiber(q)) for q in s.base[: cfg.count(5)])
            parts[sig.name] = max(gap, rec.constancy)
        return _value("", max(parts.values()), tol, breakdown=parts)

    def nonlagrangian_recovery(tol):
        sig = sections[3]
        rec = recover_section(fib, lambda x: quotient_translate(sig, x), s.base[: cfg.count(5)],
                              tol=1e-8, cfg=FlowConfig(1))
        return _value("", rec.lagrangian, tol, breakdown={"constancy": rec.constancy},
                      note="constancy holds, Lagrangian check fails")

    def quadrant_nonlag(tol):
        return _quadrant_check(fib, phi, torus_nonlagrangian(fib, phi), s, cfg, quad_flow, (True, False))(tol)

    forms = [OneForm.constant_form(fib.base, [0.25, -0.5], "0.25 dq1 - 0.5 dq2"),
             OneForm(fib.base, lambda q: np.array([0.1 * ad.sin(TWO_PI * q[1]), 0.0 * q[0]]),
                     name="0.1 sin(2pi q2) dq1")]

    return [
        Check("lagrangian_fibers", "ker T pi = (ker T pi)^omega", 1e-12,
              lambda tol: lagrangian_check(fib, pts[: cfg.count(20)], tol)),
        Check("lattice_detection", "Lambda_q = Z dq1 + Z dq2", 1e-6, lattice),
        Check("mu_properties", "mu is a fibered, pointwise, transitive action", 1e-8,
              lambda tol: mu_properties(fib, forms, pts[: cfg.count(10)], tol, quad_flow)),
        Check("section_roundtrip", "F(x) = mu(sigma~(pi x), x)", 1e-8, roundtrip),
        Check("section_recovery_nonlagrangian", "|sigma~^* omega~| > 0 for 0.3 sin(2pi q1) dq2", 0.1,
              nonlagrangian_recovery, ">="),
        Check("sigma_nonlagrangian", "Phi^Sigma symplectic action iff Sigma Lagrangian cocycle", 0.5,
              quadrant_nonlag),
    ]


def _magnetic(cfg: ScenarioConfig) -> list:
    base = Chart(2, name="R2")
    term = MagneticTerm.constant(base, 1.0)
    fib = magnetic_fibration(term)
    cc = CotangentChart(base)
    omega = magnetic_form(cc, term)
    trans = translation_action(base, "translation_r2")
    scale = scaling_action()
    s = make_samples(trans.group, base, cfg.base_samples, cfg.seed, cfg.bound,
                     group_count=cfg.group_samples, fiber_count=cfg.fiber_samples)
    s_scale = make_samples(scale.group, base, cfg.base_samples, cfg.seed, cfg.bound,
                           group_count=cfg.group_samples, fiber_count=cfg.fiber_samples)
    pts = [np.concatenate([q, p]) for q, p in zip(s.base, s.fibers)]
    count = cfg.count(50)
    zero = zero_cochain(base)

    def nondegenerate(tol):
        worst = min(abs(np.linalg.det(omega(x))) for x in pts[: cfg.count(20)])
        return _value("", worst, tol)

    def lattice(tol):
        L = isotropy_lattice(fib, np.zeros(2))
        return _value("", float(L.rank), tol, note="generators found: " + str(L.generators.tolist()))

    def scaling(kind):
        def run(tol):
            r = verify_lift_symplectic(scale, zero, omega, cc, s_scale, tol, cfg.strategy, magnetic=term,
                                       count=count)
            key = "defect_gap" if kind == "gap" else "symplectic"
            return _value("", r.breakdown[key], tol, r.argmax)
        return run

    return [
        Check("lagrangian_fibers", "ker T pi = (ker T pi)^omega", 1e-12,
              lambda tol: lagrangian_check(fib, pts[: cfg.count(20)], tol)),
        Check("nondegenerate", "|det(omega_Q + pi^* beta)| >= 1", 1.0, nondegenerate, ">="),
        Check("lattice_empty", "Lambda is the zero section", 0.5, lattice),
        Check("lift_symplectic_translations", "(T*phi)_g^* omega_{Q,beta} = omega_{Q,beta}", 1e-6,
              lambda tol: verify_lift_symplectic(trans, zero, omega, cc, s, tol, cfg.strategy, magnetic=term,
                                                 count=count)),
        Check("scaling_defect", "(T*phi)_g^* omega_{Q,beta} - omega_{Q,beta} = pi^*(phi_g^* beta - beta)",
              1e-6, scaling("gap")),
        Check("scaling_not_symplectic", "beta not invariant under scaling", 0.1, scaling("sym"), ">="),
    ]


SCENARIOS = {
    "heisenberg": Scenario("heisenberg", "Heisenberg cocycle on T*R^3: cocycle, symplecticity, obstruction, "
                           "equivalence", _heisenberg),
    "cotangent_r1": Scenario("cotangent_r1", "T*R: flows are translations, trivial isotropy lattice",
                             _cotangent_r1),
    "cotangent_r2": Scenario("cotangent_r2", "T*R^2: Liouville form, fiber translations, flows, sections",
                             _cotangent_r2),
    "cylinder_s1": Scenario("cylinder_s1", "T*S^1/Z: lattice, flows, section cocycles under rotations",
                            _cylinder),
    "torus4_model": Scenario("torus4_model", "T*T^2/Z^2: lattice, section recovery, non-Lagrangian cocycle",
                             _torus4),
    "magnetic_r2": Scenario("magnetic_r2", "T*R^2 with omega_Q + pi^*(dx^dy): invariant and non-invariant lifts",
                            _magnetic),
}


def list_scenarios() -> list:
    return [(name, sc.description) for name, sc in SCENARIOS.items()]


def run(cfg: ScenarioConfig, timing: bool = False) -> VerificationReport:
    """Execute every check of a scenario in order; failures are recorded, not raised."""
    if cfg.scenario not in SCENARIOS:
        raise KeyError(f"unknown scenario {cfg.scenario!r}")
    start = time.perf_counter()
    try:
        checks = SCENARIOS[cfg.scenario].build(cfg)
    except KeyError as exc:
        raise ConfigError(f"bad scenario setting: {exc}") from exc
    report = VerificationReport(cfg.scenario, cfg.seed, cfg.echo())
    for check in checks:
        tol = cfg.tol if cfg.tol is not None else float(cfg.tolerances.get(check.key, check.tol))
        try:
            result = check.fn(tol)
        except Exception as exc:  # failures are data
            result = CheckReport(check.key, float("nan"), tol, note=f"{type(exc).__name__}: {exc}")
        report.checks.append(_record(check, tol, result))
    if timing:
        report.runtime_ms = round((time.perf_counter() - start) * 1000.0, 3)
    return report


_CONFIG_KEYS = {"scenario", "seed", "samples", "bound", "strategy", "h", "flow_steps", "tolerances", "tol",
                "cochain", "output"}


def _as_float(v, key) -> float:
    if isinstance(v, bool):
        raise ConfigError(f"{key} must be a number")
    try:
        return float(v)
    except (TypeError, ValueError):
        raise ConfigError(f"{key} must be a number, got {v!r}") from None


def config_from_mapping(data: dict, **overrides) -> ScenarioConfig:
    """Validate a parsed config mapping; ``overrides`` that are not None win."""
    if not isinstance(data, dict):
        raise ConfigError("config must be a mapping")
    unknown = sorted(set(data) - _CONFIG_KEYS)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    kw = {k: v for k, v in data.items() if k != "samples"}
    samples = data.get("samples")
    if isinstance(samples, int):
        kw.update(group_samples=samples, base_samples=samples, fiber_samples=samples)
    elif isinstance(samples, dict):
        extra = sorted(set(samples) - {"group", "base", "fiber"})
        if extra:
            raise ConfigError(f"unknown sample kinds: {', '.join(extra)}")
        kw.update({f"{k}_samples": v for k, v in samples.items()})
    elif samples is not None:
        raise ConfigError("samples must be an integer or a mapping")
    kw.update({k: v for k, v in overrides.items() if v is not None})
    if "scenario" not in kw:
        raise ConfigError("scenario name missing")
    if kw.get("tolerances") is None:
        kw["tolerances"] = {}
    if not isinstance(kw["tolerances"], dict):
        raise ConfigError("tolerances must be a mapping")
    # YAML 1.1 reads ``1e-30`` (no dot) as a string
    for k in ("bound", "h", "tol"):
        if kw.get(k) is not None:
            kw[k] = _as_float(kw[k], k)
    kw["tolerances"] = {str(k): _as_float(v, k) for k, v in kw["tolerances"].items()}
    try:
        return ScenarioConfig(**kw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path, **overrides) -> ScenarioConfig:
    with open(path, encoding="utf-8") as fh:
        try:
            data = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse {path}: {exc}") from exc
    return config_from_mapping(data or {}, **overrides)
