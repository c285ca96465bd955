import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_trig
from toeplitz_trace.funcalc import (
    DomainError,
    OperatorMonotone,
    ScalarFunction,
    check_qtrace,
    convergence_rate,
    heat_trace,
    matrix_function,
    om_resolvent_trace,
    pair_spectra,
    perturbation_log_trace,
    richardson,
    trace_phi_difference,
)
from toeplitz_trace.indices import spectral_shift
from toeplitz_trace.quadrature import boundary_trace_integral
from toeplitz_trace.symbol import TwistedPower, from_coefficients, from_family

SHIFT = from_coefficients({1: 1})
ONE_PLUS_Z = from_coefficients({0: 1, 1: 1})
FUNCTIONS = [
    ScalarFunction.power(0.5),
    ScalarFunction.power(1.5),
    ScalarFunction.exp_heat(2.0),
    ScalarFunction.polynomial([1.0, -2.0, 0.5]),
    ScalarFunction.resolvent(0.7),
]


@pytest.mark.parametrize("phi", FUNCTIONS, ids=lambda p: p.variant)
def test_derivative_matches_finite_differences(phi):
    x = np.linspace(0.05, 1, 20)
    h = 1e-6
    fd = (phi(x + h) - phi(x - h)) / (2 * h)
    assert np.allclose(phi.derivative(x), fd, rtol=1e-6, atol=1e-8)


@pytest.mark.parametrize("phi", FUNCTIONS, ids=lambda p: p.variant)
def test_json_roundtrip(phi):
    back = ScalarFunction.from_json(phi.to_json())
    x = np.linspace(0, 3, 7)
    assert np.allclose(back(x), phi(x))


def test_schatten_exponent_spelling():
    phi = ScalarFunction.from_json({"variant": "power", "p": 1.0})
    assert phi.params[0] == 0.5
    with pytest.raises(ValueError):
        ScalarFunction.from_json({"variant": "power", "p": 1.0, "q": 0.5})
    with pytest.raises(ValueError):
        ScalarFunction.from_json({"variant": "cosine"})


def test_matrix_function_examples(rng):
    H = rng.standard_normal((5, 5))
    H = H + H.T
    assert np.allclose(matrix_function(H, ScalarFunction.identity()), H)
    D = matrix_function(np.diag([0.0, 1.0]), ScalarFunction.exp_heat(3.0))
    assert np.allclose(D, np.diag([1, math.exp(-3)]))
    X = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
    P = X @ X.conj().T
    R = matrix_function(P, ScalarFunction.power(0.5))
    assert np.allclose(R @ R, P, atol=1e-10)


def test_matrix_function_domain():
    with pytest.raises(DomainError):
        matrix_function(np.diag([1.0, -0.1]), ScalarFunction.power(0.5))
    with pytest.warns(RuntimeWarning, match="clipped"):
        out = matrix_function(np.diag([1.0, -1e-12]), ScalarFunction.power(0.5))
    assert np.allclose(out, np.diag([1.0, 0.0]))


@pytest.mark.parametrize("phi", FUNCTIONS, ids=lambda p: p.variant)
def test_shift_trace_is_phi1_minus_phi0(phi):
    r = trace_phi_difference(SHIFT, phi, 16)
    assert r.value == pytest.approx(float(phi(1.0) - phi(0.0)), abs=1e-12)


def test_one_plus_z_square_matches_boundary():
    phi = ScalarFunction.power(2)
    r = trace_phi_difference(ONE_PLUS_Z, phi, 32)
    assert r.value == pytest.approx(3, abs=1e-12)
    assert r.value == pytest.approx(boundary_trace_integral(ONE_PLUS_Z, phi).value.real, abs=1e-12)


def test_polynomial_phi_is_size_independent(rng):
    f = random_trig(rng, 3)
    phi = ScalarFunction.polynomial([0, 1, 1, 1])
    values = [trace_phi_difference(f, phi, n, richardson_on=False).value for n in (12, 20, 40)]
    assert np.ptp(values) <= 1e-12 * max(1.0, abs(values[0]))


def test_heat_trace_examples():
    for s in (0.5, 3.0):
        assert heat_trace(SHIFT, s, 8).value == pytest.approx(1 - math.exp(-s), abs=1e-13)
    r = heat_trace(ONE_PLUS_Z, 10.0, 256)
    from toeplitz_trace.quadrature import heat_integral

    assert r.value == pytest.approx(heat_integral(ONE_PLUS_Z, 10.0).value.real, abs=1e-6)


def test_heat_trace_sign_for_analytic(rng):
    f = random_trig(rng, 4, analytic=True)
    for s in (0.5, 2.0):
        assert heat_trace(f, s, 128).value >= -1e-12


@pytest.mark.parametrize("q", [0.25, 0.5, 0.9])
def test_power_measure_reconstruction(q):
    phi = OperatorMonotone.power_q(q)
    assert phi.integrable()
    for x in (0.0, 0.3, 1.0, 4.0, 10.0):
        assert phi(x) == pytest.approx(x**q, abs=1e-8)


def test_om_route_matches_spectral_route():
    direct = trace_phi_difference(ONE_PLUS_Z, ScalarFunction.power(0.5), 256, richardson_on=False)
    om = om_resolvent_trace(ONE_PLUS_Z, OperatorMonotone.power_q(0.5), 256, richardson_on=False)
    assert om.value == pytest.approx(direct.value, abs=1e-5)
    assert om_resolvent_trace(SHIFT, OperatorMonotone.power_q(0.5), 16).value == pytest.approx(1, abs=1e-9)


def test_om_atom_is_a_single_resolvent():
    lam = 0.8
    atom = om_resolvent_trace(ONE_PLUS_Z, OperatorMonotone.resolvent_atom(lam, 1 / lam), 64, richardson_on=False)
    direct = trace_phi_difference(ONE_PLUS_Z, ScalarFunction.resolvent(lam), 64, richardson_on=False)
    assert atom.value == pytest.approx(direct.value, abs=1e-12)


def test_convergence_rate_rule():
    assert convergence_rate(ONE_PLUS_Z, ScalarFunction.power(0.5)) == pytest.approx(1.0)
    assert convergence_rate(ONE_PLUS_Z, ScalarFunction.power(2)) is None
    assert convergence_rate(SHIFT, ScalarFunction.power(0.5)) is None
    tw = from_family(TwistedPower(1, 0.5), 64)
    assert convergence_rate(tw, ScalarFunction.power(1.5)) == pytest.approx(1.5)


def test_richardson_removes_power_law():
    values = {n: 2.0 + 3.0 / n for n in (64, 128, 256)}
    best, err = richardson(values, 1.0)
    assert best == pytest.approx(2.0, abs=1e-12) and err <= 1e-12


def _psd(rng, n, rank=None):
    X = rng.standard_normal((n, rank or n)) + 1j * rng.standard_normal((n, rank or n))
    return X @ X.conj().T


def test_qtrace_equality_at_zero_B(rng):
    A = _psd(rng, 5)
    lhs, rhs = check_qtrace(A, np.zeros((5, 5)), 0.5)
    assert lhs == pytest.approx(rhs, rel=1e-12)


@given(st.integers(0, 2**32 - 1), st.sampled_from([0.25, 0.5, 0.75]))
def test_qtrace_inequality(seed, q):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 9))
    B = _psd(rng, n)
    A = B + _psd(rng, n, int(rng.integers(1, n + 1)))
    lhs, rhs = check_qtrace(A, B, q)
    assert lhs <= rhs + 1e-10


def test_qtrace_commuting_diagonal(rng):
    b = rng.random(6)
    a = b + rng.random(6)
    lhs, rhs = check_qtrace(np.diag(a), np.diag(b), 0.5)
    assert lhs <= rhs + 1e-12


def test_qtrace_rejects_unordered(rng):
    with pytest.raises(DomainError):
        check_qtrace(np.zeros((3, 3)), _psd(rng, 3), 0.5)


def test_perturbation_log_trace():
    A = np.eye(6)
    assert perturbation_log_trace(A, A, 1.0) == pytest.approx(0, abs=1e-14)
    B = np.diag([0.0, 1, 1, 1, 1, 1])
    for lam in (0.1, 1.0, 7.0):
        assert perturbation_log_trace(A, B, lam) == pytest.approx(math.log(1 + 1 / lam), rel=1e-12)


def test_perturbation_log_trace_against_ssf():
    # the analytic pair satisfies A >= B, and h(1) = int xi(x)/(1+x) dx
    a_sec, b_sec = pair_spectra(ONE_PLUS_Z, 256)
    from toeplitz_trace.operators import product_sections

    pair = product_sections(ONE_PLUS_Z, 256)
    h = perturbation_log_trace(pair.A, pair.B, 1.0)
    u, w = np.polynomial.legendre.leggauss(64)
    theta = 0.5 * math.pi * (u + 1)
    x = 2 * (1 - np.cos(theta))
    xi = spectral_shift(ONE_PLUS_Z, x).values
    integral = float(np.sum(w * 0.5 * math.pi * 2 * np.sin(theta) * xi / (1 + x)))
    assert h == pytest.approx(integral, abs=1e-4)
    assert a_sec.size == b_sec.size == 256


def test_om_route_reports_truncation_for_families():
    tw = from_family(TwistedPower(0, 0.5), 64)
    r = om_resolvent_trace(tw, OperatorMonotone.power_q(0.5), 128, richardson_on=False)
    assert r.truncation_error > 0
    finer = om_resolvent_trace(from_family(TwistedPower(0, 0.5), 128), OperatorMonotone.power_q(0.5), 128,
                               richardson_on=False)
    assert abs(finer.value - r.value) <= 2 * r.truncation_error
    assert om_resolvent_trace(ONE_PLUS_Z, OperatorMonotone.power_q(0.5), 32).truncation_error == 0
