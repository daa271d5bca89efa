"""Symplectic lifts of group actions to cotangent bundles and Lagrangian fibrations, checked numerically."""

from .cohomology import (FormCochain, coboundary, equivalence_map, heisenberg_cocycle, is_cocycle, lifted_action,
                         primitive_fit, verify_lift_symplectic)
from .cotangent import CotangentChart, canonical_form, cotangent_lift, fiber_translation, recover_translation
from .fibration import LagrangianFibrationSpec, flow, isotropy_lattice, mu
from .geometry import Chart, OneForm, SmoothMap, TwoForm, exterior_derivative, jacobian, pullback
from .groups import ActionSpec, GroupSpec, heisenberg_action, make_samples
from .scenarios import ScenarioConfig, list_scenarios, run
from .sections import Section, SectionCochain, recover_section, sigma_equivalence

__version__ = "0.1.0"

__all__ = [
    "ActionSpec", "Chart", "CotangentChart", "FormCochain", "GroupSpec", "LagrangianFibrationSpec", "OneForm",
    "ScenarioConfig", "Section", "SectionCochain", "SmoothMap", "TwoForm", "canonical_form", "coboundary",
    "cotangent_lift", "equivalence_map", "exterior_derivative", "fiber_translation", "flow",
    "heisenberg_action", "heisenberg_cocycle", "is_cocycle", "isotropy_lattice", "jacobian", "lifted_action",
    "list_scenarios", "make_samples", "mu", "primitive_fit", "pullback", "recover_section",
    "recover_translation", "run", "sigma_equivalence", "verify_lift_symplectic",
]
