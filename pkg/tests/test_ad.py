import numpy as np
import pytest

from symlift import ad


def test_dual_product_rule():
    x = ad.Dual(3.0, np.array([1.0, 0.0]))
    y = ad.Dual(2.0, np.array([0.0, 1.0]))
    z = x * y + ad.sin(x)
    assert z.a == pytest.approx(6.0 + np.sin(3.0))
    assert np.allclose(z.da, [2.0 + np.cos(3.0), 3.0])


def test_division_and_power():
    x = ad.Dual(2.0, np.array([1.0]))
    assert np.allclose((1.0 / x).da, [-0.25])
    assert np.allclose((x ** 3).da, [12.0])


def test_jacobian_matches_closed_form():
    def f(v):
        return np.array([v[0] * v[1], v[0] ** 2, ad.exp(v[1])])

    val, jac = ad.jacobian(f, np.array([2.0, 3.0]))
    assert np.allclose(val, [6.0, 4.0, np.exp(3.0)])
    assert np.allclose(jac, [[3.0, 2.0], [4.0, 0.0], [0.0, np.exp(3.0)]])


def test_float_coercion_refused():
    # silently dropping the tangent would corrupt Jacobians
    with pytest.raises(TypeError):
        np.asarray([ad.Dual(1.0, np.ones(1))], dtype=float)


def test_log_domain():
    with pytest.raises(ArithmeticError):
        ad.log(ad.Dual(-1.0, np.ones(1)))
