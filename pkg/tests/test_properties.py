import json

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from symlift import ad
from symlift.cohomology import FormCochain, coboundary, coboundary_cochain, heisenberg_cocycle
from symlift.cotangent import cotangent_lift, fiber_translation
from symlift.fibration import Lattice
from symlift.geometry import Chart, OneForm
from symlift.groups import heisenberg_action
from symlift.report import dumps

coord = st.floats(-2.0, 2.0, allow_nan=False)
vec3 = st.tuples(coord, coord, coord).map(np.array)
vec2 = st.tuples(coord, coord).map(np.array)
PHI = heisenberg_action()
A = heisenberg_cocycle()


@settings(max_examples=60, deadline=None)
@given(vec3, vec3, vec3)
def test_heisenberg_cocycle_identity(g, h, q):
    assert np.abs(coboundary(A, PHI, (g, h), q)).max() <= 1e-9


@settings(max_examples=40, deadline=None)
@given(vec3, vec3, vec3, vec3)
def test_cotangent_lift_is_an_action(g, h, q, p):
    x = np.concatenate([q, p])
    lhs = cotangent_lift(PHI, PHI.group.mul(g, h), x)
    rhs = cotangent_lift(PHI, g, cotangent_lift(PHI, h, x))
    assert np.abs(lhs - rhs).max() <= 1e-9


@settings(max_examples=40, deadline=None)
@given(vec3, vec3, vec3, st.tuples(coord, coord, coord))
def test_delta_squared_on_linear_forms(g, h, q, c):
    c = np.array(c)
    alpha = OneForm(PHI.base, lambda y: np.array([c[0] * y[1], c[1] * y[0], c[2] + 0.0 * y[0]]))
    d0 = coboundary_cochain(FormCochain.from_form(alpha), PHI)
    assert np.abs(coboundary(d0, PHI, (g, h), q)).max() <= 1e-9


@settings(max_examples=40, deadline=None)
@given(vec2, vec2, vec2, vec2)
def test_fiber_translations_add(q, p, a, b):
    R2 = Chart(2)
    fa, fb = OneForm.constant_form(R2, a), OneForm.constant_form(R2, b)
    x = np.concatenate([q, p])
    both = fiber_translation(fa, fiber_translation(fb, x))
    assert np.allclose(both, fiber_translation(OneForm.constant_form(R2, a + b), x), atol=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.tuples(st.floats(-50, 50), st.floats(-50, 50)).map(np.array))
def test_lattice_reduce_idempotent(p):
    L = Lattice(np.array([[1.0, 0.0], [0.0, 1.0]]), 2)
    r = L.reduce(p)
    assert np.all((r >= 0) & (r < 1))
    assert np.array_equal(L.reduce(r), r)
    assert L.distance(r, p) <= 1e-9


@settings(max_examples=40, deadline=None)
@given(vec2)
def test_ad_matches_differences(x):
    def f(v):
        return np.array([v[0] * ad.sin(v[1]), ad.exp(v[0] * 0.3) + v[1] ** 3])

    _, jac = ad.jacobian(f, x)
    h = 1e-6
    fd = np.column_stack([(f(x + h * e) - f(x - h * e)) / (2 * h) for e in np.eye(2)])
    assert np.allclose(jac, fd, atol=1e-6)


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_report_float_roundtrip(x):
    assert json.loads(dumps(x)) == x
