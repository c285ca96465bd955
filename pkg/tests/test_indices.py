import math

import numpy as np
import pytest

from conftest import random_trig
from toeplitz_trace.funcalc import ScalarFunction
from toeplitz_trace.indices import (
    closed_forms,
    elliptic_value,
    fredholm_index,
    gamma_value,
    krein_check,
    principal_function,
    rational_witten,
    schatten_limit,
    shift_sum_value,
    spectral_shift,
    ssf_from_principal,
    ssf_integral,
    ssf_pushforward,
    winding_number,
    witten_index,
)
from toeplitz_trace.quadrature import QuadratureError
from toeplitz_trace.symbol import (
    LogPower,
    Rational,
    SymbolError,
    TwistedPower,
    from_coefficients,
    from_family,
    multiply,
    sup_norm,
)

SHIFT = from_coefficients({1: 1})
ONE_PLUS_Z = from_coefficients({0: 1, 1: 1})


def test_winding_examples():
    assert winding_number(SHIFT) == 1
    assert winding_number(from_coefficients({3: 1})) == 3
    f = multiply(from_coefficients({0: -0.5, 1: 1}), from_coefficients({0: -2, 1: 1}))
    assert winding_number(f) == 1


def test_winding_refuses_points_on_the_curve():
    with pytest.raises(SymbolError):
        winding_number(SHIFT, 1.0)


def test_fredholm_examples():
    assert fredholm_index(SHIFT) == -1
    assert fredholm_index(from_coefficients({-2: 2, -1: 1})) == 2
    rat = Rational(1.0, ((0.5, 1),), ((2.0, 1),))
    f = from_family(rat, 128)
    assert fredholm_index(f) == -1
    assert fredholm_index(f) == rational_witten(rat.zeros, rat.poles)


def test_fredholm_refuses_circle_zeros():
    with pytest.raises(SymbolError, match="witten"):
        fredholm_index(ONE_PLUS_Z)


@pytest.mark.parametrize("n,alpha", [(0, 1.0), (1, 0.5), (2, 1.5), (0, 0.3)])
def test_witten_twisted_power(n, alpha):
    rep = witten_index(from_family(TwistedPower(n, alpha), 128), heat=False)
    assert rep.witten == pytest.approx(-n - alpha / 2, abs=1e-8)
    assert rep.route("closed_form").value == pytest.approx(-n - alpha / 2)
    assert rep.fredholm is None and rep.agreement


def test_witten_rational_with_circle_zero():
    rat = Rational(1.0, ((-1.0, 1), (0.5, 1)), ((2.0, 1),))
    rep = witten_index(from_family(rat, 128), heat=False)
    assert rep.witten == pytest.approx(-1.5, abs=1e-8)
    assert rational_witten(rat.zeros, rat.poles) == -1.5


def test_witten_heat_route_for_one_plus_z():
    rep = witten_index(ONE_PLUS_Z)
    assert rep.witten == pytest.approx(-0.5, abs=1e-10)
    assert rep.route("heat_limit").value == pytest.approx(-0.5, abs=2e-2)
    assert rep.agreement


@pytest.mark.parametrize("seed", range(20))
def test_witten_equals_fredholm_without_zeros(seed):
    rng = np.random.default_rng(seed)
    f = random_trig(rng, int(rng.integers(1, 6)))
    rep = witten_index(f, heat=False)
    assert rep.fredholm is not None
    assert round(rep.witten) == rep.fredholm == fredholm_index(f)
    assert abs(rep.witten - rep.fredholm) < 1e-8


def test_witten_refuses_unprofiled_zeros():
    with pytest.raises((QuadratureError, SymbolError)):
        witten_index(from_family(LogPower(1.0), 128), heat=False)


def test_principal_function_examples():
    assert principal_function(SHIFT, 0.3) == 1
    assert principal_function(SHIFT, 1.5j) == 0
    assert principal_function(ONE_PLUS_Z, 1.0) == 1
    # on the curve the principal value gives the half-integer
    assert principal_function(SHIFT, 1.0) == pytest.approx(0.5, abs=1e-8)


def test_ssf_shift_is_one():
    x = np.linspace(0.05, 0.95, 8)
    for route in (spectral_shift, ssf_from_principal, ssf_pushforward):
        assert np.allclose(route(SHIFT, x).values, 1, atol=1e-8)
    assert spectral_shift(SHIFT, [1.0]).values[0] == pytest.approx(1)
    assert np.allclose(ssf_pushforward(from_coefficients({2: 1}), x).values, 2, atol=1e-8)


@pytest.mark.parametrize("f", [ONE_PLUS_Z, from_coefficients({2: 1}), from_coefficients({1: 1, 3: 1})],
                         ids=["1+z", "z^2", "z+z^3"])
def test_ssf_routes_agree(f):
    top = sup_norm(f) ** 2
    x = top * (np.arange(16) + 0.5) / 16
    a = spectral_shift(f, x).values
    b = ssf_from_principal(f, x).values
    c = ssf_pushforward(f, x).values
    assert np.max(np.abs(a - b)) < 2e-3
    assert np.max(np.abs(a - c)) < 2e-3


def test_ssf_vanishes_above_sup():
    for f in (SHIFT, ONE_PLUS_Z):
        x = sup_norm(f) ** 2 * np.array([1.01, 1.5, 3.0])
        for route in (spectral_shift, ssf_from_principal):
            assert np.allclose(route(f, x).values, 0, atol=1e-12)


def test_ssf_csv_and_json():
    s = spectral_shift(ONE_PLUS_Z, [0.5, 1.0])
    assert s.to_csv().splitlines()[0] == "x,xi"
    assert len(s.to_json()["xi"]) == 2


def test_ssf_integral_gamma_value():
    r = ssf_integral(ONE_PLUS_Z, ScalarFunction.power(0.5))
    assert r.value == pytest.approx(2 / math.pi, abs=1e-6)


def test_krein_shift():
    chk = krein_check(SHIFT, ScalarFunction.power(2), N=32)
    assert chk.agreement
    for v in chk.values().values():
        assert v == pytest.approx(1, abs=1e-6)


def test_krein_one_plus_z_heat():
    chk = krein_check(ONE_PLUS_Z, ScalarFunction.exp_heat(5.0), tolerance=1e-4)
    assert chk.agreement, chk.values()


def test_krein_one_plus_z_gamma():
    chk = krein_check(ONE_PLUS_Z, ScalarFunction.power(0.5), tolerance=2e-3)
    assert chk.agreement
    for v in chk.values().values():
        assert v == pytest.approx(2 / math.pi, abs=2e-3)


def test_closed_form_examples():
    assert gamma_value(2) == pytest.approx(1)
    assert gamma_value(1) == pytest.approx(2 / math.pi)
    assert shift_sum_value(2) == pytest.approx(2 / math.pi)
    assert shift_sum_value(3) == pytest.approx(1 / 3 + 2 / math.pi * math.tan(math.pi / 3))
    assert elliptic_value(1.0) == pytest.approx(2 / math.pi)
    assert closed_forms("anyv", n=1, alpha=0.5) == -1.25
    assert closed_forms("helton_howe_monomials", m=3, n=2, h=SHIFT) == 2
    with pytest.raises(KeyError):
        closed_forms("nope")
    with pytest.raises(ValueError):
        closed_forms("shift_sum_even", n=3)


def test_elliptic_matches_small_a_series():
    # (2/pi) E(a) with E(a) = (pi/2)(1 - a^2/4 - 3a^4/64 - ...)
    a = 0.1
    assert elliptic_value(a) == pytest.approx(1 - a**2 / 4 - 3 * a**4 / 64, abs=1e-7)


def test_schatten_limit_one_plus_z():
    r = schatten_limit(ONE_PLUS_Z)
    assert abs(r.value - (-0.5)) <= 2e-2


def test_schatten_limit_schedule_validation():
    with pytest.raises(ValueError):
        schatten_limit(ONE_PLUS_Z, (1.0, 0.5))
