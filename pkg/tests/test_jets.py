import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from berwald import jets
from berwald.jets import Jet, JetError, JetOrderError, NonFiniteJetError, TangentPoint

from conftest import fd_partial


def test_coefficient_count_matches_binomial():
    for order in range(7):
        assert jets.ncoef(order) == math.comb(order + 4, 4)
        assert len(jets.multi_indices(order)) == jets.ncoef(order)


def test_seeded_variable_y1():
    p = TangentPoint((0.0, 0.0), (1.0, 0.0))
    v = jets.jet_variable(p, 2, 2)
    assert v.value == 1.0
    assert v.partial_value((0, 0, 1, 0)) == 1.0
    rest = np.delete(v.coeffs, [0, 3])
    assert np.all(rest == 0)


def test_seeded_variable_x1():
    v = jets.jet_variable(TangentPoint((3.0, 0.0), (1.0, 0.0)), 0, 1)
    assert v.value == 3.0
    assert v.partial_value((1, 0, 0, 0)) == 1.0


def test_bilinear_product():
    x1, _, y1, _ = jets.variables(TangentPoint((2.0, 0.0), (5.0, 0.0)), 2)
    f = x1 * y1
    assert f.value == 10.0
    assert f.partial_value((1, 0, 0, 0)) == 5.0
    assert f.partial_value((0, 0, 1, 0)) == 2.0
    assert f.partial_value((1, 0, 1, 0)) == 1.0


def test_sqrt_gradient_is_unit_vector():
    _, _, y1, y2 = jets.variables(np.array([0.0, 0.0, 3.0, 4.0]), 1)
    r = jets.jet_func(jets.jet_arith(y1 * y1, y2 * y2, "add"), "sqrt")
    assert r.value == pytest.approx(5.0)
    assert r.partial_value((0, 0, 1, 0)) == pytest.approx(0.6)
    assert r.partial_value((0, 0, 0, 1)) == pytest.approx(0.8)


def test_square_of_x1():
    x1 = jets.jet_variable(np.array([2.0, 0, 1, 0]), 0, 2)
    s = jets.jet_arith(x1, x1, "mul")
    assert s.value == 4.0
    assert s.partial_value((1, 0, 0, 0)) == 4.0
    assert s.coeffs[jets.multi_indices(2).index((2, 0, 0, 0))] == 1.0
    assert s.partial_value((2, 0, 0, 0)) == 2.0


def test_cubic_third_derivative():
    y1 = jets.jet_variable(np.array([0, 0, 2.0, 0]), 2, 3)
    c = y1 ** 3
    assert c.partial_value((0, 0, 3, 0)) == pytest.approx(6.0)
    assert c.partial_value((0, 0, 0, 0)) == pytest.approx(8.0)


def test_polynomials_are_exact():
    p = np.array([0.3, -0.7, 1.1, 0.4])
    x1, x2, y1, y2 = jets.variables(p, 4)
    f = x1 ** 2 * y2 - 3 * x2 * y1 ** 3 + 0.5
    assert f.partial_value((2, 0, 0, 1)) == pytest.approx(2.0, abs=1e-14)
    assert f.partial_value((0, 1, 3, 0)) == pytest.approx(-18.0, abs=1e-13)
    assert f.partial_value((1, 0, 0, 1)) == pytest.approx(2 * p[0], abs=1e-14)


def test_transcendental_partials_vs_finite_differences():
    p = np.array([0.3, -0.2, 0.9, 0.6])
    x1, x2, y1, y2 = jets.variables(p, 6)
    f = jets.exp(x1 * y2) * jets.sin(y1) / jets.sqrt(1 + x2 ** 2 + y1 ** 2) + jets.log(2 + x1 * x2) * jets.cos(y2)
    import mpmath as mp

    def g(a, b, c, d):
        return mp.exp(a * d) * mp.sin(c) / mp.sqrt(1 + b ** 2 + c ** 2) + mp.log(2 + a * b) * mp.cos(d)

    for mi in jets.multi_indices(3):
        ref = fd_partial(g, p, mi)
        assert abs(f.partial_value(mi) - ref) <= 1e-9 * max(1.0, abs(ref)), mi


def test_pow_const_and_reciprocal():
    x = jets.jet_variable(np.array([1.7, 0, 1, 0]), 0, 4)
    a = jets.pow_const(x, 2.5)
    assert a.partial_value((2, 0, 0, 0)) == pytest.approx(2.5 * 1.5 * 1.7 ** 0.5)
    r = jets.reciprocal(x)
    assert r.partial_value((3, 0, 0, 0)) == pytest.approx(-6 / 1.7 ** 4)


def test_order_mismatch_is_an_error():
    a = jets.jet_variable(np.zeros(4) + 1, 0, 3)
    b = jets.jet_variable(np.zeros(4) + 1, 1, 2)
    with pytest.raises(JetOrderError):
        a + b
    c, d = jets.align(a, b)
    assert c.order == d.order == 2


def test_domain_and_finiteness_errors():
    z = jets.jet_variable(np.zeros(4), 0, 2)
    with pytest.raises(JetError):
        jets.log(z)
    with pytest.raises(JetError):
        jets.sqrt(z - 1)
    with pytest.raises(NonFiniteJetError):
        Jet(np.full(jets.ncoef(1), np.nan), 1)
    with pytest.raises(JetOrderError):
        z.partial_value((0, 0, 3, 0))
    with pytest.raises(JetOrderError):
        z.truncate(1).truncate(2)


def test_batched_matches_single_points():
    pts = np.array([[0.1, 0.2, 1.0, 0.5], [-0.4, 0.3, 0.2, 1.5]])
    def f(p):
        x1, x2, y1, y2 = jets.variables(p, 4)
        return jets.sqrt(y1 ** 2 + y2 ** 2) * jets.exp(x1 - x2)
    fb = f(pts)
    for k in range(2):
        np.testing.assert_array_equal(fb.coeffs[k], f(pts[k]).coeffs)


def test_derivative_drops_order():
    x = jets.jet_variable(np.array([1.0, 2, 3, 4]), 1, 5)
    d = (x ** 3).partial(1)
    assert d.order == 4
    assert d.value == pytest.approx(12.0)
    assert d.partial_value((0, 1, 0, 0)) == pytest.approx(12.0)


def _random_jet(seed, order=3, shift=0.0):
    c = np.random.default_rng(seed).normal(size=jets.ncoef(order))
    c[0] = abs(c[0]) + shift
    return Jet(c, order)


seeds = st.integers(min_value=0, max_value=10 ** 6)


@settings(max_examples=40, deadline=None)
@given(seeds, seeds, seeds)
def test_ring_laws(s1, s2, s3):
    a, b, c = _random_jet(s1), _random_jet(s2), _random_jet(s3)
    np.testing.assert_allclose(((a * b) * c).coeffs, (a * (b * c)).coeffs, atol=1e-10)
    np.testing.assert_allclose((a * (b + c)).coeffs, (a * b + a * c).coeffs, atol=1e-10)
    np.testing.assert_allclose((a * b).coeffs, (b * a).coeffs, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(seeds, seeds, st.integers(min_value=0, max_value=3))
def test_leibniz_rule(s1, s2, axis):
    a, b = _random_jet(s1), _random_jet(s2)
    lhs = (a * b).partial(axis)
    rhs = a.partial(axis) * b.truncate(2) + a.truncate(2) * b.partial(axis)
    np.testing.assert_allclose(lhs.coeffs, rhs.coeffs, atol=1e-10)


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_function_inverses(s):
    a = _random_jet(s, shift=0.5)
    np.testing.assert_allclose((jets.sqrt(a) * jets.sqrt(a)).coeffs, a.coeffs, rtol=1e-9, atol=1e-9)
    np.testing.assert_allclose(jets.exp(jets.log(a)).coeffs, a.coeffs, rtol=1e-9, atol=1e-9)
    np.testing.assert_allclose((a * jets.reciprocal(a)).coeffs, Jet.constant(1.0, 3).coeffs, atol=1e-9)


def test_deterministic():
    p = np.array([0.25, -0.5, 1.25, 0.75])
    def f():
        x1, x2, y1, y2 = jets.variables(p, 6)
        return jets.sqrt(y1 ** 2 + y2 ** 2 + x1 * x2 * y1 * y2).coeffs
    assert f().tobytes() == f().tobytes()
