import math

import numpy as np
import pytest
from hypothesis import given, settings
from scipy import special

from conftest import random_trig, trig_polys
from toeplitz_trace.funcalc import ScalarFunction
from toeplitz_trace.quadrature import (
    QuadratureError,
    besov_integral,
    boundary_trace_integral,
    circle_integral,
    disk_trace_integral,
    heat_integral,
    principal_value_integral,
)
from toeplitz_trace.quadrature.besov import complete_bell, stirling_first
from toeplitz_trace.symbol import (
    LogPower,
    TwistedPower,
    ZeroProfile,
    circle_zeros,
    from_coefficients,
    from_family,
    multiply,
)

SHIFT = from_coefficients({1: 1})
ONE_PLUS_Z = from_coefficients({0: 1, 1: 1})


def test_circle_integral_examples():
    assert abs(circle_integral(lambda t: np.exp(1j * t)).value) < 1e-15
    assert circle_integral(lambda t: np.abs(1 + np.exp(1j * t)) ** 2).value == pytest.approx(2)
    f = random_trig(np.random.default_rng(3), 8)
    exact = np.sum(np.abs(f.coeffs) ** 2)
    res = circle_integral(lambda t: np.abs(f(t)) ** 2, 32)
    assert abs(res.value - exact) < 1e-14
    raw = circle_integral(lambda t: np.ones_like(t), 16, normalized=False)
    assert raw.value == pytest.approx(2 * math.pi)


def test_circle_integral_rejects_nan():
    with pytest.raises(QuadratureError):
        circle_integral(lambda t: np.full_like(t, np.nan))


def test_boundary_examples():
    assert boundary_trace_integral(SHIFT, ScalarFunction.identity()).value == pytest.approx(1)
    assert boundary_trace_integral(ONE_PLUS_Z, ScalarFunction.identity()).value == pytest.approx(1)
    half = boundary_trace_integral(ONE_PLUS_Z, ScalarFunction.power(0.5))
    assert half.value.real == pytest.approx(2 / math.pi, abs=1e-12)


@pytest.mark.filterwarnings("ignore:divide by zero")
def test_boundary_rejects_phi_infinite_at_zero():
    phi = ScalarFunction.custom(lambda x: np.log(x), lambda x: 1 / x)
    with pytest.raises(QuadratureError):
        boundary_trace_integral(ONE_PLUS_Z, phi)


def test_heat_integral_examples():
    assert heat_integral(ONE_PLUS_Z, 0).value == 0
    for s in (0.3, 4.0):
        assert heat_integral(SHIFT, s).value.real == pytest.approx(1 - math.exp(-s), abs=1e-14)
    assert abs(heat_integral(ONE_PLUS_Z, 100.0).value.real - 0.5) <= 0.08


@given(trig_polys(5, analytic=True))
@settings(max_examples=10)
def test_heat_integral_nonnegative_for_analytic(f):
    values = [heat_integral(f, s).value.real for s in (0.5, 1, 2, 4, 8)]
    assert min(values) >= -1e-12


def test_principal_value_examples():
    zero_free = from_coefficients({0: 3, 1: 1, 2: 1})
    res = principal_value_integral(zero_free, [], normalized=False)
    assert abs(res.value.imag / (2 * math.pi) - round(res.value.imag / (2 * math.pi))) < 1e-12
    assert abs(res.value.real) < 1e-12
    assert principal_value_integral(ONE_PLUS_Z).value.real == pytest.approx(0.5, abs=1e-12)
    cubed = multiply(from_coefficients({2: 1}), multiply(ONE_PLUS_Z, multiply(ONE_PLUS_Z, ONE_PLUS_Z)))
    assert principal_value_integral(cubed).value.real == pytest.approx(3.5, abs=1e-10)


def test_principal_value_window_invariance():
    f = from_family(TwistedPower(1, 0.5), 64)
    zeros = circle_zeros(f)
    a = principal_value_integral(f, zeros, eps0_fraction=0.25)
    b = principal_value_integral(f, zeros, eps0_fraction=0.125)
    assert abs(a.value - b.value) <= a.abs_error + b.abs_error + 1e-13


def test_principal_value_refuses_unprofiled():
    bad = ZeroProfile(1.0, math.nan, complex(math.nan), math.nan, math.nan, profiled=False)
    with pytest.raises(QuadratureError):
        principal_value_integral(ONE_PLUS_Z, [bad])


@given(trig_polys(6))
@settings(max_examples=15)
def test_argument_principle_integer(f):
    g = from_coefficients({**{int(k): c for k, c in zip(f.indices, f.coeffs)}, 0: f.coefficient(0) + 8})
    v = principal_value_integral(g, []).value
    assert abs(v - round(v.real)) < 1e-10


def test_disk_examples():
    assert disk_trace_integral(SHIFT, ScalarFunction.identity()).value.real == pytest.approx(1, abs=1e-12)
    sq = disk_trace_integral(ONE_PLUS_Z, ScalarFunction.power(2))
    assert sq.value.real == pytest.approx(boundary_trace_integral(ONE_PLUS_Z, ScalarFunction.power(2)).value.real,
                                          abs=1e-6)
    half = disk_trace_integral(ONE_PLUS_Z, ScalarFunction.power(0.5), "analytic")
    assert half.value.real == pytest.approx(2 / math.pi, abs=1e-6)


def test_disk_analytic_mode_needs_analytic_symbol():
    from toeplitz_trace.symbol import SymbolError

    with pytest.raises(SymbolError):
        disk_trace_integral(from_coefficients({-1: 1, 1: 1}), ScalarFunction.identity(), "analytic")


STOKES_PHIS = [ScalarFunction.identity(), ScalarFunction.power(2), ScalarFunction.exp_heat(1.0)]


@pytest.mark.parametrize("seed", range(20))
def test_stokes_consistency(seed):
    rng = np.random.default_rng(seed)
    f = random_trig(rng, int(rng.integers(1, 6)))
    for phi in STOKES_PHIS:
        bd = boundary_trace_integral(f, phi)
        dk = disk_trace_integral(f, phi, rings=256, angular=256)
        assert abs(bd.value.real - dk.value.real) <= bd.abs_error + dk.abs_error + 1e-9


def test_disk_ring_refinement_within_error():
    phi = ScalarFunction.power(0.5)
    coarse = disk_trace_integral(ONE_PLUS_Z, phi, rings=256)
    fine = disk_trace_integral(ONE_PLUS_Z, phi, rings=512)
    assert abs(coarse.value - fine.value) <= coarse.abs_error + 1e-12


def test_disk_interior_zero_with_power():
    f = from_coefficients({0: -0.5, 1: 1})  # F = z - 1/2 vanishes inside
    phi = ScalarFunction.power(0.5)
    dk = disk_trace_integral(f, phi)
    bd = boundary_trace_integral(f, phi)
    assert abs(dk.value.real - bd.value.real) <= dk.abs_error + bd.abs_error
    assert dk.abs_error < 1e-4


def test_combinatorics():
    assert list(stirling_first(3)) == [0, 2, -3, 1]
    # derivatives of exp(G) over exp(G): Y_1 = G', Y_2 = G'^2 + G''
    Y = complete_bell([np.zeros(1), np.array([3.0]), np.array([5.0])])
    assert Y[1][0] == pytest.approx(3.0) and Y[2][0] == pytest.approx(14.0)


@pytest.mark.parametrize("p", [0.5, 1.0, 2.0])
def test_besov_twisted_power_finite(p):
    res = besov_integral(from_family(TwistedPower(0, 1.5), 64), p)
    assert res.verdict == "finite" and res.decay == "exponential"


def test_besov_polynomial_value():
    f = multiply(ONE_PLUS_Z, ONE_PLUS_Z)
    res = besov_integral(f, 2.0, 1)
    # int |F'|^2 dA = pi sum k |c_k|^2 = 6 pi for F = (1+z)^2
    assert res.verdict == "finite"
    assert res.value == pytest.approx(6 * math.pi, rel=1e-8)


def test_besov_area_value_for_fractional_power():
    res = besov_integral(from_family(TwistedPower(0, 1.5), 64), 2.0, 1)
    k = np.arange(1, 4000)
    exact = math.pi * np.sum(k * special.binom(1.5, k) ** 2)
    assert res.value == pytest.approx(exact, rel=1e-6)


@pytest.mark.parametrize("p,verdict", [(0.4, "divergent"), (0.6, "finite")])
def test_besov_psi_threshold(p, verdict):
    assert besov_integral(from_family(LogPower(1.0), 64), p).verdict == verdict


def test_besov_rejects_small_np():
    with pytest.raises(ValueError):
        besov_integral(ONE_PLUS_Z, 0.5, 2)
