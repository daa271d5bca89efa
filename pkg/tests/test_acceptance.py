"""The twelve acceptance criteria, each at its stated tolerance.

A PASS/FAIL line per criterion is printed in the terminal summary.
"""

import sys
import time

import numpy as np
import pytest

from symlift.cli import main
from symlift.cohomology import (FormCochain, coboundary, coboundary_cochain, equivalence_map, heisenberg_cocycle,
                                is_cocycle, lifted_action, nonclosed_demo, primitive_fit, verify_lift_symplectic,
                                zero_cochain)
from symlift.cotangent import CotangentChart, MagneticTerm, canonical_form, magnetic_form
from symlift.fibration import (FlowConfig, cotangent_fibration, cylinder_s1, flow, isotropy_lattice,
                               torus4_model, verify_flow_pullback)
from symlift.geometry import Chart
from symlift.groups import heisenberg_action, make_samples, rotation_action, scaling_action, translation_action
from symlift.scenarios import (SCENARIOS, ScenarioConfig, _heisenberg_dictionary, _r2_forms, coboundary_of,
                               cylinder_cochains, flow_order_ratio, heisenberg_lift_formula,
                               heisenberg_obstruction_grid, plus_coboundary, quadrant, run, torus_nonlagrangian,
                               torus_sections)
from symlift.sections import (Section, SectionCochain, quotient_translate, recover_section, section_coboundary,
                              sigma_equivalence, verify_model_pullback)
from test_oracle import OBSTRUCTION_RMS, exact_obstruction

PHI = heisenberg_action()
A = heisenberg_cocycle()
CC3 = CotangentChart(Chart(3))
S100 = make_samples(PHI.group, PHI.base, 100, seed=42, bound=2.0)


@pytest.mark.criterion(1, "Heisenberg cocycle identity <= 1e-9, 100 samples, < 1 s")
def test_criterion_01_cocycle():
    assert PHI.strategy == "analytic"
    start = time.perf_counter()
    r = is_cocycle(A, PHI, S100, 1e-9, count=100)
    elapsed = time.perf_counter() - start
    print(f"cocycle residual {r.residual:.3e}, {elapsed * 1000:.1f} ms")
    assert r.passed and elapsed < 1.0


@pytest.mark.criterion(2, "lifted action matches the closed form <= 1e-12")
def test_criterion_02_closed_form():
    worst = 0.0
    for g, q, p in S100.pairs(100):
        x = np.concatenate([q, p])
        worst = max(worst, np.abs(lifted_action(PHI, A, g, x) - heisenberg_lift_formula(g, x)).max())
    print(f"closed-form gap {worst:.3e}")
    assert worst <= 1e-12


@pytest.mark.criterion(3, "symplecticity: fd <= 1e-6, AD <= 1e-9; defect identity for non-closed A")
def test_criterion_03_symplectic():
    omega = canonical_form(CC3)
    s50 = make_samples(PHI.group, PHI.base, 50, seed=42)
    fd = verify_lift_symplectic(PHI, A, omega, CC3, s50, 1e-6, "fd", count=50)
    ad_ = verify_lift_symplectic(PHI, A, omega, CC3, s50, 1e-9, "ad", count=50)
    bad = nonclosed_demo(PHI.base)
    gap_fd = verify_lift_symplectic(PHI, bad, omega, CC3, s50, 1e-6, "fd", count=50).breakdown["defect_gap"]
    gap_ad = verify_lift_symplectic(PHI, bad, omega, CC3, s50, 1e-9, "ad", count=50).breakdown["defect_gap"]
    print(f"fd {fd.residual:.3e}, ad {ad_.residual:.3e}, defect gap fd {gap_fd:.3e} ad {gap_ad:.3e}")
    assert fd.passed and ad_.passed
    assert gap_fd <= 1e-6 and gap_ad <= 1e-9


@pytest.mark.criterion(4, "non-triviality certificate matches the exact oracle; control is feasible")
def test_criterion_04_obstruction():
    mean_sq, rows, _ = exact_obstruction()
    oracle = float(mean_sq) ** 0.5
    fit = primitive_fit(A, PHI, np.zeros(3), heisenberg_obstruction_grid(), tol=1e-4)
    holdout = make_samples(PHI.group, PHI.base, 20, seed=43)
    control = primitive_fit(coboundary_of(_heisenberg_dictionary()[0], PHI), PHI, np.zeros(3),
                            heisenberg_obstruction_grid(), tol=1e-4, holdout=holdout)
    print(f"RMS {fit.residual!r} (oracle {oracle!r}), control {control.residual:.3e} "
          f"holdout {control.holdout_residual:.3e}")
    assert fit.rows == rows
    assert fit.residual == pytest.approx(OBSTRUCTION_RMS, rel=1e-9)
    assert fit.residual == pytest.approx(oracle, rel=1e-9)
    assert fit.residual >= 10 * fit.tol and fit.verdict == "infeasible: class non-trivial"
    assert control.feasible and control.residual <= 1e-6 and control.holdout_residual <= 1e-6


def _delta_squared(phi, s, alpha, cochain, count=50):
    d0 = coboundary_cochain(FormCochain.from_form(alpha), phi)
    d1 = coboundary_cochain(cochain, phi)
    trip = list(s.triples(count))
    worst = 0.0
    for i, (g, h, q) in enumerate(trip):
        k = trip[(i + 1) % len(trip)][0]
        worst = max(worst, np.abs(coboundary(d0, phi, (g, h), q)).max(),
                    np.abs(coboundary(d1, phi, (g, h, k), q)).max())
    return worst


@pytest.mark.criterion(5, "delta o delta = 0 on degrees 0 and 1 <= 1e-8")
def test_criterion_05_complex():
    heis = _delta_squared(PHI, S100, _heisenberg_dictionary()[3], A)
    R2 = Chart(2)
    trans = translation_action(R2)
    s = make_samples(trans.group, R2, 50, seed=42)
    tr = _delta_squared(trans, s, _r2_forms()[4], nonclosed_demo(R2))
    print(f"heisenberg {heis:.3e}, translations {tr:.3e}")
    assert heis <= 1e-8 and tr <= 1e-8


@pytest.mark.criterion(6, "equivalence round trip over the 5-form dictionary <= 1e-9")
def test_criterion_06_equivalence():
    worst = {}
    for alpha in _heisenberg_dictionary():
        r = equivalence_map(A, plus_coboundary(A, alpha, PHI), alpha, PHI, CC3, S100, 1e-9, count=100)
        worst[alpha.name] = (r.residual, r.breakdown["intertwining"])
        assert r.passed
    print(worst)


@pytest.mark.criterion(7, "flow vs translation <= 1e-10, flow pullback <= 1e-4, RK4 ratio in [8, 32]")
def test_criterion_07_flow():
    fib = cotangent_fibration(Chart(2))
    xs = np.random.default_rng(42).uniform(-2, 2, size=(20, 4))
    gap = 0.0
    for i, x in enumerate(xs):
        a = _r2_forms()[i % 5]
        q = x[:2]
        gap = max(gap, np.abs(flow(fib, a, x, 1.0, FlowConfig(200)) - np.concatenate([q, x[2:] - a(q)])).max())
    pull = max(verify_flow_pullback(fib, a, t, xs[:3], 1e-4, FlowConfig(20)).residual
               for a in _r2_forms() for t in (0.0, 0.5, 1.0))
    ratio = flow_order_ratio()
    print(f"translation gap {gap:.3e}, pullback {pull:.3e}, RK4 ratio {ratio:.3f}")
    assert gap <= 1e-10 and pull <= 1e-4 and 8 <= ratio <= 32


@pytest.mark.criterion(8, "lattice detection: cylinder 1 dq, T*R empty, T^4 {dq1, dq2}")
def test_criterion_08_lattice():
    cyl = isotropy_lattice(cylinder_s1(), np.array([0.3]))
    flat = isotropy_lattice(cotangent_fibration(Chart(1)), np.zeros(1), box=3.0)
    tor = isotropy_lattice(torus4_model(), np.array([0.3, 0.6]))
    print(f"cylinder {cyl.generators.tolist()}, T*R rank {flat.rank}, torus {tor.generators.tolist()}")
    assert cyl.rank == 1 and abs(cyl.generators[0, 0] - 1.0) <= 1e-6
    assert flat.rank == 0
    assert tor.rank == 2 and np.abs(tor.generators - np.eye(2)).max() <= 1e-6


@pytest.mark.criterion(9, "section recovery round trip <= 1e-8; model pullback identity <= 1e-4")
def test_criterion_09_quotient():
    fib = torus4_model()
    base = make_samples(None, fib.base, 10, seed=42).base
    worst = 0.0
    for sig in torus_sections(fib):
        rec = recover_section(fib, lambda x, sig=sig: quotient_translate(sig, x), base, 1e-8,
                              cfg=FlowConfig(1), strict=False)
        worst = max([worst, rec.constancy] + [fib.lattice.distance(rec.section.fiber(q), sig.fiber(q))
                                              for q in base])
    T = cotangent_fibration(Chart(2))
    xs = np.random.default_rng(42).uniform(-2, 2, size=(5, 4))
    lag = Section.from_form(T, _r2_forms()[3])
    nonlag = Section.from_form(T, _r2_forms()[2])
    r_lag = verify_model_pullback(T, lag, T, xs, 1e-4)
    r_non = verify_model_pullback(T, nonlag, T, xs, 1e-4)
    print(f"round trip {worst:.3e}, model pullback {r_lag.residual:.3e} / {r_non.residual:.3e} "
          f"(defect {r_non.breakdown['defect']:.3f})")
    assert worst <= 1e-8
    assert r_lag.passed and r_non.passed and r_non.breakdown["defect"] > 0.5


@pytest.mark.criterion(10, "Phi^Sigma action+symplectic iff Sigma cocycle+Lagrangian; equivalence <= 1e-8")
def test_criterion_10_classification():
    cyl, rot = cylinder_s1(), rotation_action()
    s = make_samples(rot.group, cyl.base, 100, seed=42)
    cfg = ScenarioConfig("cylinder_s1")
    cochains = cylinder_cochains(cyl)
    cases = [(cyl, rot, cochains["compliant"], s, (True, True)),
             (cyl, rot, cochains["noncocycle"], s, (False, True)),
             (cyl, rot, cochains["zero"], s, (True, True))]
    # a one-dimensional base carries no non-Lagrangian section; this quadrant lives on T^4
    tor = torus4_model()
    tphi = translation_action(tor.base)
    cases.append((tor, tphi, torus_nonlagrangian(tor, tphi), make_samples(tphi.group, tor.base, 100, seed=42),
                  (True, False)))
    for fib, phi, S, samples, expect in cases:
        q = quadrant(fib, phi, S, samples, cfg, FlowConfig(20))
        flags = {k: v.passed for k, v in q.items()}
        print(S.name, flags)
        assert (flags["cocycle"], flags["lagrangian"]) == expect
        assert flags["action"] == flags["cocycle"] and flags["symplectic"] == flags["lagrangian"]
    sig = Section(cyl, lambda q: np.array([0.1 * np.sin(2 * np.pi * q[0])]))
    S1 = cochains["compliant"]
    S0 = SectionCochain.from_section(sig)
    S2 = SectionCochain(1, cyl, lambda gs, q: S1.func(gs, q) + section_coboundary(S0, rot, gs, q))
    r = sigma_equivalence(cyl, rot, S1, S2, sig, s, 1e-8, FlowConfig(20), count=20)
    print(f"sigma equivalence {r.residual:.3e}")
    assert r.passed


@pytest.mark.criterion(11, "magnetic: invariant lift <= 1e-6; non-invariant defect identity <= 1e-6")
def test_criterion_11_magnetic():
    R2 = Chart(2)
    term = MagneticTerm.constant(R2, 1.0)
    cc = CotangentChart(R2)
    omega = magnetic_form(cc, term)
    trans, scale = translation_action(R2), scaling_action()
    s = make_samples(trans.group, R2, 50, seed=42)
    ss = make_samples(scale.group, R2, 50, seed=42)
    inv = verify_lift_symplectic(trans, zero_cochain(R2), omega, cc, s, 1e-6, magnetic=term)
    non = verify_lift_symplectic(scale, zero_cochain(R2), omega, cc, ss, 1e-6, magnetic=term)
    print(f"invariant {inv.residual:.3e}, scaling defect {non.residual:.3f}, gap {non.breakdown['defect_gap']:.3e}")
    assert inv.passed
    assert not non.passed and non.breakdown["defect_gap"] <= 1e-6


@pytest.mark.criterion(12, "byte-identical reports; full default suite < 60 s")
def test_criterion_12_determinism(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["verify", "heisenberg", "--seed", "42", "--report", str(a), "--quiet"]) == 0
    assert main(["verify", "heisenberg", "--seed", "42", "--report", str(b), "--quiet"]) == 0
    assert a.read_bytes() == b.read_bytes()
    start = time.perf_counter()
    verdicts = {name: run(ScenarioConfig(name)).overall for name in SCENARIOS}
    elapsed = time.perf_counter() - start
    print(f"{verdicts}, {elapsed:.1f} s")
    assert all(v == "pass" for v in verdicts.values())
    assert elapsed < 60.0


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s"]))
