import numpy as np
import pytest
from scipy import integrate

from flowexplosion.nonlinearity import (
    NonlinearityError,
    custom,
    exponential,
    nonlinearity,
    phi_transform,
    phi_transform_bound,
    power,
    uniform_bound_constant,
)


def quad_h(g, s):
    return integrate.quad(lambda t: 1.0 / g(t), 0.0, s, epsabs=1e-14, epsrel=1e-13)[0]


@pytest.mark.parametrize("s", [0.1, 1.0, 3.7, 20.0])
def test_exponential_h_matches_quadrature(s):
    g = exponential()
    assert g.h(s) == pytest.approx(quad_h(np.exp, s), abs=1e-12)
    assert g.h(s) == pytest.approx(1 - np.exp(-s), abs=1e-15)


@pytest.mark.parametrize("s", [0.1, 1.0, 3.7, 20.0])
def test_power2_h_matches_quadrature(s):
    g = power(2.0)
    assert g.h(s) == pytest.approx(quad_h(lambda t: (1 + t) ** 2, s), abs=1e-12)
    assert g.h(s) == pytest.approx(s / (1 + s), abs=1e-15)


def test_h_infinity():
    assert exponential().h_infinity == 1.0
    assert power(2.0).h_infinity == pytest.approx(1.0)
    assert power(3.0).h_infinity == pytest.approx(0.5)


@pytest.mark.parametrize("g", [exponential(), power(2.0), power(1.5)])
def test_h_zero(g):
    assert g.h(0.0) == 0.0


def test_power_rejects_small_exponent():
    with pytest.raises(NonlinearityError):
        power(1.0)
    with pytest.raises(NonlinearityError):
        nonlinearity("power", {"m": 0.5})


def test_unknown_name():
    with pytest.raises(NonlinearityError):
        nonlinearity("cubic")


def test_custom_nonlinearity_uses_quadrature():
    g = custom("exp2", lambda s: np.exp(2 * np.asarray(s, float)), lambda s: 2 * np.exp(2 * np.asarray(s, float)))
    assert g.h_infinity == pytest.approx(0.5, abs=1e-10)
    assert g.h(1.0) == pytest.approx((1 - np.exp(-2)) / 2, abs=1e-12)
    y = 0.3
    assert g.h(g.h_inv(y)) == pytest.approx(y, abs=1e-10)


def test_custom_rejects_concave_or_integrable_growth():
    with pytest.raises(NonlinearityError):
        custom("lin", lambda s: 1 + np.asarray(s, float), lambda s: np.ones_like(np.asarray(s, float)))
    with pytest.raises(NonlinearityError):
        custom("neg", lambda s: np.exp(np.asarray(s, float)) - 2, lambda s: np.exp(np.asarray(s, float)))


def test_phi_transform_values():
    g = exponential()
    assert phi_transform(g, 1.0, 2.0, 0.0) == 0.0
    assert phi_transform(g, 1.0, 2.0, 60.0) == pytest.approx(np.log(2.0), abs=1e-12)
    assert phi_transform_bound(g, 0.5) == pytest.approx(np.log(2.0))


@pytest.mark.parametrize("g", [exponential(), power(2.0)])
def test_phi_transform_derivative_identity(g):
    l0, l1 = 1.0, 3.0
    s = np.linspace(0.05, 20.0, 60)
    d = 1e-5
    num = (phi_transform(g, l0, l1, s + d) - phi_transform(g, l0, l1, s - d)) / (2 * d)
    exact = l0 * g.g(phi_transform(g, l0, l1, s)) / (l1 * g.g(s))
    assert np.max(np.abs(num - exact)) < 1e-6


def test_phi_transform_shape():
    g = exponential()
    s = np.linspace(0, 30, 301)
    phi = phi_transform(g, 1.0, 2.0, s)
    assert np.all(phi <= s + 1e-15)
    d = np.diff(phi)
    assert np.all(d > 0)
    assert np.all(np.diff(d) <= 1e-15)  # concave
    assert np.all(phi <= phi_transform_bound(g, 0.5) + 1e-15)


def test_phi_transform_preconditions():
    with pytest.raises(NonlinearityError):
        phi_transform(exponential(), 2.0, 1.0, 1.0)
    with pytest.raises(NonlinearityError):
        phi_transform(exponential(), 1.0, 2.0, -1.0)


def test_uniform_bound_constant_exponential():
    assert uniform_bound_constant(exponential(), 0.5) == pytest.approx(-np.log(0.4), rel=1e-14)
    assert uniform_bound_constant(exponential(), 0.5) == pytest.approx(0.916, abs=1e-3)


def test_h_inverse_at_saturation():
    g = exponential()
    assert g.h(40.0) == g.h_infinity
    assert g.h_inv(g.h_infinity) == np.inf
    with pytest.raises(NonlinearityError):
        g.h_inv(1.5)
