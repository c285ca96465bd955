import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate, special

from conftest import random_trig, trig_polys
from toeplitz_trace.symbol import (
    FourierSymbol,
    LogPower,
    Rational,
    SymbolError,
    TwistedPower,
    analytic_derivative,
    analytic_extension,
    circle_zeros,
    derivative,
    evaluate,
    from_coefficients,
    from_family,
    harmonic_extension,
    multiply,
    omega_form,
    sobolev_half_norm,
    sup_norm,
    symbol_from_json,
)


def test_from_coefficients_basic():
    f = from_coefficients({1: 1})
    assert f.degree == 1 and f.coefficient(1) == 1 and f.exact
    g = from_coefficients({0: 1, 1: 1})
    assert np.allclose(g.coeffs, [0, 1, 1])
    h = from_coefficients({-2: 3j})
    assert h.degree == 2 and h.coefficient(-2) == 3j


def test_from_coefficients_rejects_empty():
    with pytest.raises(SymbolError):
        from_coefficients({})


def test_twisted_integer_alpha_is_polynomial():
    f = from_family(TwistedPower(0, 1.0), 1)
    assert np.allclose(f.coeffs, [0, 1, 1], atol=1e-14)


def test_rational_with_single_circle_zero_matches_one_plus_z():
    f = from_family(Rational(1.0, ((-1.0, 1),), ()), 4)
    assert np.allclose(f.coeffs, from_coefficients({0: 1, 1: 1, 4: 0}).coeffs, atol=1e-13)


def test_twisted_half_power_binomial_coefficients():
    f = from_family(TwistedPower(0, 0.5), 64)
    for k in range(6):
        assert f.coefficient(k) == pytest.approx(special.binom(0.5, k), abs=1e-12)
    assert f.coefficient(1) == pytest.approx(0.5)
    assert f.coefficient(2) == pytest.approx(-0.125)
    assert f.residual > 0


def test_evaluate_and_derivative():
    assert evaluate(from_coefficients({1: 1}), math.pi) == pytest.approx(-1)
    d = derivative(from_coefficients({0: 1, 1: 1}))
    assert np.allclose(d.coeffs, [0, 0, 1j])
    alpha = 0.7
    f = from_family(TwistedPower(0, alpha), 64)
    assert f.derivative_values(np.array([0.0]))[0] == pytest.approx(1j * alpha * 2 ** (alpha - 1))


def test_multiply_examples():
    one = multiply(from_coefficients({1: 1}), from_coefficients({-1: 1}))
    assert one.coefficient(0) == 1 and np.count_nonzero(one.coeffs) == 1
    sq = multiply(from_coefficients({0: 1, 1: 1}), from_coefficients({0: 1, 1: 1}))
    assert [sq.coefficient(k) for k in range(3)] == [1, 2, 1]


@given(trig_polys(6), trig_polys(6), trig_polys(6))
def test_multiply_commutative_associative(f, g, h):
    fg, gf = multiply(f, g), multiply(g, f)
    assert np.allclose(fg.coeffs, gf.coeffs, atol=1e-12)
    left, right = multiply(fg, h), multiply(f, multiply(g, h))
    assert np.allclose(left.coeffs, right.coeffs, atol=1e-12)


@given(trig_polys(16), trig_polys(16))
def test_krein_algebra_product_inequality(f, g):
    lhs = sobolev_half_norm(multiply(f, g)) ** 2
    rhs = 2 * sobolev_half_norm(f) ** 2 * sup_norm(g) ** 2 + 2 * sup_norm(f) ** 2 * sobolev_half_norm(g) ** 2
    assert lhs <= rhs * (1 + 1e-12)


def test_sobolev_norm_examples():
    assert sobolev_half_norm(from_coefficients({1: 1})) == pytest.approx(math.sqrt(2))
    assert sobolev_half_norm(from_coefficients({0: -3})) == pytest.approx(3)
    f = from_coefficients({2: 3, -1: 1})
    assert sobolev_half_norm(f) == pytest.approx(math.sqrt(29))
    assert sobolev_half_norm(f, "double_integral") == pytest.approx(math.sqrt(29), abs=1e-6)


@given(trig_polys(16))
def test_sobolev_methods_agree(f):
    a = sobolev_half_norm(f)
    b = sobolev_half_norm(f, "double_integral", nodes=512)
    assert b == pytest.approx(a, abs=1e-6)


def test_omega_examples():
    assert omega_form(from_coefficients({-1: 1}), from_coefficients({1: 1})) == 1


@given(trig_polys(8), trig_polys(8))
def test_omega_skew_bounded_and_integral(f, g):
    w = omega_form(f, g)
    assert w == pytest.approx(-omega_form(g, f), abs=1e-12)
    assert abs(w) <= sobolev_half_norm(f) * sobolev_half_norm(g) + 1e-12
    t = 2 * math.pi * np.arange(256) / 256
    integral = np.mean(f(t) * g.derivative_values(t)) / 1j
    assert abs(integral - w) <= 1e-10


@given(trig_polys(8), st.floats(0, 0.95), st.floats(0, 2 * math.pi))
def test_harmonic_extension_matches_poisson(f, r, theta):
    z = r * np.exp(1j * theta)
    t = 2 * math.pi * np.arange(4096) / 4096
    kernel = (1 - r**2) / np.abs(np.exp(1j * t) - z) ** 2
    poisson = np.mean(kernel * f(t))
    assert abs(harmonic_extension(f, z) - poisson) <= 1e-8


def test_extensions():
    assert harmonic_extension(from_coefficients({1: 1}), 0) == 0
    f = from_coefficients({0: 1, 1: 1})
    assert analytic_extension(f, 0.3 + 0.2j) == pytest.approx(1.3 + 0.2j)
    assert analytic_derivative(f, 0.3 + 0.2j) == pytest.approx(1)
    with pytest.raises(SymbolError):
        analytic_extension(from_coefficients({-1: 1}), 0.1)
    with pytest.raises(SymbolError):
        harmonic_extension(f, 1.0)


def test_family_derivatives_by_cauchy():
    f = from_family(TwistedPower(0, 1.5), 32)
    z = 0.4 - 0.1j
    exact = 1.5 * 0.5 * (1 + z) ** -0.5
    assert analytic_derivative(f, z, order=2) == pytest.approx(exact, abs=1e-10)


def test_circle_zeros_examples():
    zs = circle_zeros(from_coefficients({0: 1, 1: 1}))
    assert len(zs) == 1
    z = zs[0]
    assert z.location == pytest.approx(math.pi, abs=1e-10)
    assert z.beta == pytest.approx(2, abs=1e-6)
    assert z.h_value == pytest.approx(1, abs=1e-6)
    assert circle_zeros(from_coefficients({1: 1})) == []
    tw = circle_zeros(from_family(TwistedPower(2, 0.75), 64))
    assert len(tw) == 1 and tw[0].beta == pytest.approx(1.5)


def test_scanned_zero_profile_fit():
    # symbol with no family data: a generic evaluator
    base = from_family(TwistedPower(0, 1.5), 64)
    g = FourierSymbol(base.coeffs, evaluator=base.evaluator, derivative_evaluator=base.derivative_evaluator,
                      truncation="raw")
    zs = circle_zeros(g)
    assert len(zs) == 1
    assert zs[0].beta == pytest.approx(3, rel=1e-3)


@given(trig_polys(6))
def test_zero_free_symbol_has_no_zeros(f):
    g = from_coefficients({**{k: c for k, c in zip(f.indices, f.coeffs)}, 0: f.coefficient(0) + 10})
    assert circle_zeros(g) == []


def test_log_power_zero_is_unprofiled():
    f = from_family(LogPower(1.0), 128)
    zs = circle_zeros(f)
    assert zs and not zs[0].profiled


def test_fejer_does_not_increase_sup_norm():
    fam = TwistedPower(1, 0.5)
    raw, fej = from_family(fam, 32), from_family(fam, 32, "fejer")
    assert sup_norm(fej.truncated()) <= sup_norm(raw.truncated()) + 1e-12


@given(trig_polys(10))
def test_sup_norm_is_upper_bound(f):
    t = np.linspace(0, 2 * math.pi, 20001)
    assert sup_norm(f) >= np.max(np.abs(f(t))) - 1e-12


def test_symbol_json_roundtrip(rng):
    f = random_trig(rng, 5)
    g = symbol_from_json(f.to_json())
    assert np.allclose(f.coeffs, g.coeffs)
    fam = from_family(TwistedPower(1, 0.5), 16)
    h = symbol_from_json(fam.to_json())
    assert h.family == fam.family and h.degree == 16
    with pytest.raises(SymbolError):
        symbol_from_json({"kind": "coeffs", "coeffs": [[0, 1, 0]], "extra": 1})


def test_rational_rejects_pole_on_circle():
    with pytest.raises(SymbolError):
        Rational(1.0, (), ((1j, 1),))


def test_truncation_residual_is_honest():
    f = from_family(TwistedPower(0, 0.5), 32)
    t = np.linspace(0, 2 * math.pi, 2001)
    assert np.max(np.abs(f(t) - f.truncated()(t))) <= f.residual + 1e-12
    val, _ = integrate.quad(lambda s: abs(f(np.array([s]))[0]) ** 2, 0, 2 * math.pi)
    assert val / (2 * math.pi) == pytest.approx(np.sum(np.abs(f.coeffs) ** 2), abs=2e-3)
