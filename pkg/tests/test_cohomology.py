import numpy as np
import pytest

from symlift.cohomology import (FormCochain, closed_valued, coboundary, coboundary_cochain, equivalence_map,
                                heisenberg_cocycle, is_cocycle, lifted_action, lifted_action_composition,
                                nonclosed_demo, primitive_fit, verify_lift_symplectic, zero_cochain)
from symlift.cotangent import CotangentChart, MagneticTerm, canonical_form, cotangent_lift, magnetic_form
from symlift.errors import NotClosedError
from symlift.geometry import OneForm
from symlift.groups import make_samples
from symlift.scenarios import (coboundary_of, heisenberg_lift_formula, heisenberg_obstruction_grid,
                               plus_coboundary, _heisenberg_dictionary)

A_HEIS = heisenberg_cocycle()


def const_dx_cochain(chart):
    e = np.zeros(chart.dim)
    e[0] = 1.0
    return FormCochain(1, chart, lambda gs, q: e.copy(), name="dx")


def test_cochain_arity():
    with pytest.raises(ValueError):
        A_HEIS(np.zeros(3), np.zeros(3), np.zeros(3))


def test_invariant_form_has_zero_coboundary(trans2, trans2_samples, r2):
    dx = FormCochain.from_form(OneForm.constant_form(r2, [1.0, 0.0]))
    for g, q, _ in trans2_samples.pairs(20):
        assert np.array_equal(coboundary(dx, trans2, (g,), q), np.zeros(2))


def test_heisenberg_cocycle(heis, heis_samples):
    r = is_cocycle(A_HEIS, heis, heis_samples, 1e-9)
    assert r.passed and r.residual <= 1e-9
    assert closed_valued(A_HEIS, heis_samples).residual == 0.0


def test_constant_cochain_is_not_a_cocycle(trans2, trans2_samples, r2):
    r = is_cocycle(const_dx_cochain(r2), trans2, trans2_samples, 1e-9)
    assert not r.passed and r.residual == pytest.approx(1.0)
    z = is_cocycle(zero_cochain(r2), trans2, trans2_samples)
    assert z.passed and z.residual == 0.0


def test_closed_valued_detects_y_dx(trans2, trans2_samples, r2):
    A = nonclosed_demo(r2)
    r = closed_valued(A, trans2_samples, 1e-9)
    expected = max(abs(g[0]) for g, _, _ in trans2_samples.pairs())
    assert r.residual == pytest.approx(expected, rel=1e-6)
    assert closed_valued(zero_cochain(r2), trans2_samples).residual == 0.0


def test_lifted_action_value(heis):
    pt = np.array([0.0, 1.0, 0.0, 1.0, 1.0, 1.0])
    assert np.allclose(lifted_action(heis, A_HEIS, [1, 0, 0], pt), [1, 1, 1, 1, -1, 3])


def test_lifted_action_closed_form(heis, heis_samples):
    for g, q, p in heis_samples.pairs():
        x = np.concatenate([q, p])
        assert np.abs(lifted_action(heis, A_HEIS, g, x) - heisenberg_lift_formula(g, x)).max() <= 1e-12


def test_zero_cochain_gives_cotangent_lift(heis, heis_samples):
    for g, q, p in heis_samples.pairs(20):
        x = np.concatenate([q, p])
        assert np.array_equal(lifted_action(heis, zero_cochain(heis.base), g, x), cotangent_lift(heis, g, x))


def test_composition_iff_cocycle(heis, heis_samples, trans2, trans2_samples, r2):
    assert lifted_action_composition(heis, A_HEIS, heis_samples).passed
    assert not lifted_action_composition(trans2, const_dx_cochain(r2), trans2_samples).passed


@pytest.mark.parametrize("strategy,tol", [("ad", 1e-9), ("fd", 1e-6)])
def test_heisenberg_lift_symplectic(heis, heis_samples, cc3, omega3, strategy, tol):
    assert verify_lift_symplectic(heis, A_HEIS, omega3, cc3, heis_samples, tol, strategy, count=50).passed


def test_defect_of_nonclosed_cochain(trans2, trans2_samples, r2):
    cc = CotangentChart(r2)
    r = verify_lift_symplectic(trans2, nonclosed_demo(r2), canonical_form(cc), cc, trans2_samples, 1e-6, "fd")
    assert not r.passed
    assert r.breakdown["defect_gap"] <= 1e-6


def test_invariant_magnetic_term(trans2, trans2_samples, r2):
    cc = CotangentChart(r2)
    term = MagneticTerm.constant(r2, 1.0)
    r = verify_lift_symplectic(trans2, zero_cochain(r2), magnetic_form(cc, term), cc, trans2_samples, 1e-9,
                               magnetic=term)
    assert r.passed


def test_primitive_fit_heisenberg_infeasible(heis):
    fit = primitive_fit(A_HEIS, heis, np.zeros(3), heisenberg_obstruction_grid(), tol=1e-4)
    assert fit.certified_infeasible
    assert fit.verdict == "infeasible: class non-trivial"
    # the binding row: 2 x0 - alpha3(0) = 0 cannot hold for every x0
    assert fit.alpha0[2] == pytest.approx(0.0, abs=1e-9)


@pytest.mark.parametrize("index", [0, 1])
def test_primitive_fit_control(heis, index):
    form = _heisenberg_dictionary()[index]
    holdout = make_samples(heis.group, heis.base, 20, seed=43)
    fit = primitive_fit(coboundary_of(form, heis), heis, np.zeros(3), heisenberg_obstruction_grid(), 1e-4,
                        holdout=holdout)
    assert fit.feasible and fit.residual <= 1e-6
    assert fit.holdout_residual <= 1e-6


def test_primitive_fit_zero(heis):
    fit = primitive_fit(zero_cochain(heis.base), heis, np.zeros(3), heisenberg_obstruction_grid())
    assert fit.feasible
    assert np.array_equal(fit.alpha0, np.zeros(3))
    assert np.abs(fit.alpha(np.array([0.3, -1.0, 2.0]))).max() == 0.0


def test_equivalence_roundtrip(heis, heis_samples, cc3):
    for alpha in _heisenberg_dictionary():
        B = plus_coboundary(A_HEIS, alpha, heis)
        r = equivalence_map(A_HEIS, B, alpha, heis, cc3, heis_samples, 1e-9)
        assert r.passed, (alpha.name, r.breakdown)


def test_equivalence_to_zero_fails_for_dictionary(heis, heis_samples, cc3):
    for alpha in _heisenberg_dictionary():
        r = equivalence_map(A_HEIS, zero_cochain(heis.base), alpha, heis, cc3, heis_samples, 1e-9, count=20)
        assert not r.passed


def test_equivalence_trivial(heis, heis_samples, cc3):
    r = equivalence_map(A_HEIS, A_HEIS, OneForm.zero(heis.base), heis, cc3, heis_samples)
    assert r.passed and r.residual == 0.0


def test_equivalence_requires_closed_witness(heis, heis_samples, cc3):
    ydx = OneForm(heis.base, lambda q: np.array([q[1], 0.0 * q[0], 0.0 * q[0]]), name="y dx")
    with pytest.raises(NotClosedError):
        equivalence_map(A_HEIS, A_HEIS, ydx, heis, cc3, heis_samples)


def test_delta_squared_degree0(heis, heis_samples):
    rng = np.random.default_rng(11)
    c = rng.normal(size=3)
    alpha = OneForm(heis.base, lambda q: np.array([c[0] * q[1] * q[2], np.sin(q[0]) * c[1], q[0] * q[1] * c[2]]),
                    strategy="fd")
    d0 = coboundary_cochain(FormCochain.from_form(alpha), heis)
    for g, h, q in heis_samples.triples(50):
        assert np.abs(coboundary(d0, heis, (g, h), q)).max() <= 1e-8


@pytest.mark.flagged
def test_delta_squared_degree1(heis, heis_samples, trans2, trans2_samples, r2):
    # sign pattern of the general-degree coboundary, checked by brute force
    probe = FormCochain(1, heis.base, lambda gs, q: np.array([gs[0][0] * q[1], gs[0][2] ** 2, q[0] * gs[0][1]]))
    trip = list(heis_samples.triples(50))
    d1 = coboundary_cochain(probe, heis)
    for i, (g, h, q) in enumerate(trip):
        k = trip[(i + 5) % len(trip)][1]
        assert np.abs(coboundary(d1, heis, (g, h, k), q)).max() <= 1e-8
    probe2 = nonclosed_demo(r2)
    d1 = coboundary_cochain(probe2, trans2)
    trip = list(trans2_samples.triples(50))
    for i, (g, h, q) in enumerate(trip):
        k = trip[(i + 5) % len(trip)][1]
        assert np.abs(coboundary(d1, trans2, (g, h, k), q)).max() <= 1e-8
