import numpy as np
import pytest

from symlift.errors import ChartMismatchError, SingularFormError
from symlift.geometry import (Chart, OneForm, SmoothMap, TwoForm, exterior_derivative, identity_map,
                              interior_product, jacobian, pullback, solve_musical)
from symlift.groups import heisenberg_action


def test_identity_jacobian():
    R3 = Chart(3)
    assert np.array_equal(jacobian(identity_map(R3), np.array([0.3, -1.0, 2.0])), np.eye(3))


@pytest.mark.parametrize("strategy", ["analytic", "ad", "fd"])
def test_heisenberg_translation_jacobian(strategy):
    m = heisenberg_action().map(np.array([1.0, 0.0, 0.0]))
    J = jacobian(m, np.zeros(3), strategy)
    assert np.allclose(J, [[1, 0, 0], [0, 1, 0], [0, 1, 1]], atol=1e-9)


def test_analytic_vs_difference_jacobian():
    R2 = Chart(2)
    m = SmoothMap(R2, R2, lambda v: np.array([v[0] * v[1], v[0] ** 2]),
                  jac=lambda v: np.array([[v[1], v[0]], [2 * v[0], 0.0]]))
    x = np.array([2.0, 3.0])
    gap = np.abs(jacobian(m, x, "analytic") - jacobian(m, x, "fd", 1e-5)).max()
    assert gap <= 1e-6


def test_periodic_difference_uses_minimal_image():
    S1 = Chart(1, periods=(1.0,))
    m = SmoothMap(S1, S1, lambda v: v + 0.5)
    assert np.allclose(jacobian(m, np.array([0.999999]), "fd"), [[1.0]])


def test_pullback_identity_and_chart_mismatch():
    R2 = Chart(2)
    a = OneForm(R2, lambda q: np.array([q[1], q[0] ** 2]))
    x = np.array([0.4, -0.7])
    assert np.allclose(pullback(a, identity_map(R2), x), a(x))
    with pytest.raises(ChartMismatchError):
        pullback(a, identity_map(Chart(3)), np.zeros(3))


def test_heisenberg_pullback_of_cocycle_value():
    # phi_{(x1,y1,t1)}^*(x0^2 dy + 2 x0 dt) = (x0^2 + 2 x0 x1) dy + 2 x0 dt
    x0, x1 = 1.0, 2.0
    R3 = Chart(3)
    form = OneForm.constant_form(R3, [0.0, x0 ** 2, 2 * x0])
    m = heisenberg_action().map(np.array([x1, 0.3, -0.2]))
    out = pullback(form, m, np.array([0.5, 0.1, 0.9]))
    assert np.allclose(out, [0.0, 5.0, 2.0])


def test_translation_pullback_of_constant_two_form():
    R2 = Chart(2)
    W = TwoForm.constant_form(R2, [[0.0, 1.0], [-1.0, 0.0]])
    m = SmoothMap(R2, R2, lambda q: q + np.array([0.3, -1.2]))
    assert np.allclose(pullback(W, m, np.array([1.0, 2.0])), W(np.zeros(2)))


def test_exterior_derivative_examples():
    R2, R3 = Chart(2), Chart(3)
    xdy = OneForm(R2, lambda q: np.array([0.0 * q[0], q[0]]))
    d = exterior_derivative(xdy, np.array([0.2, 0.5]))
    assert np.allclose(d, [[0.0, 1.0], [-1.0, 0.0]])
    assert np.array_equal(exterior_derivative(OneForm.constant_form(R3, [0.0, 1.0, 2.0]), np.ones(3)),
                          np.zeros((3, 3)))
    assert np.allclose(exterior_derivative(OneForm.constant_form(R2, [0.0, 1.0]), np.ones(2)), 0.0)


def test_interior_product():
    W = np.array([[0.0, 1.0], [-1.0, 0.0]])
    assert np.array_equal(interior_product(np.zeros(2), W), np.zeros(2))
    assert np.allclose(interior_product(np.array([1.0, 0.0]), W), [0.0, 1.0])
    v = np.array([0.3, -2.0])
    assert interior_product(v, W) @ v == pytest.approx(0.0)


def test_solve_musical_back_substitution():
    W = np.array([[0.0, 1.0], [-1.0, 0.0]])
    assert np.array_equal(solve_musical(W, np.zeros(2)), np.zeros(2))
    v = solve_musical(W, np.array([1.0, 0.0]))
    assert np.allclose(interior_product(v, W), [1.0, 0.0])
    with pytest.raises(SingularFormError):
        solve_musical(np.zeros((2, 2)), np.array([1.0, 0.0]))


def test_two_form_rejects_asymmetric():
    with pytest.raises(ValueError):
        TwoForm.constant_form(Chart(2), [[0.0, 1.0], [1.0, 0.0]])


def test_nonfinite_output_rejected():
    R1 = Chart(1)
    m = SmoothMap(R1, R1, lambda v: np.log(v), strategy="fd")
    with pytest.raises(ArithmeticError), np.errstate(all="ignore"):
        jacobian(m, np.array([0.0]))
