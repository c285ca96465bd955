import numpy as np
import pytest
from hypothesis import given

from conftest import random_trig, trig_polys
from toeplitz_trace.funcalc import ScalarFunction, _trace_from_spectra
from toeplitz_trace.operators import (
    commutator,
    commutator_trace,
    dump_matrix,
    hankel_section,
    monomial_commutator_trace,
    naive_pair,
    product_sections,
    schatten_norm,
    self_commutator,
    singular_values,
    toeplitz_section,
)
from toeplitz_trace.symbol import SymbolError, TwistedPower, from_coefficients, from_family, omega_form, sobolev_half_norm

SHIFT = from_coefficients({1: 1})
ONE_PLUS_Z = from_coefficients({0: 1, 1: 1})


def test_toeplitz_section_examples():
    assert np.array_equal(toeplitz_section(SHIFT, 3).entries, np.eye(3, k=-1))
    assert np.array_equal(toeplitz_section(ONE_PLUS_Z, 2).entries, [[1, 0], [1, 1]])


def test_toeplitz_matvec_against_circulant_embedding(rng):
    f = random_trig(rng, 4)
    N = 64
    T = toeplitz_section(f, N).entries
    x = rng.standard_normal(N) + 1j * rng.standard_normal(N)
    col = np.array([f.coefficient(k) for k in range(N)])
    row = np.array([f.coefficient(-k) for k in range(N)])
    c = np.concatenate([col, [0], row[1:][::-1]])
    y = np.fft.ifft(np.fft.fft(c) * np.fft.fft(np.concatenate([x, np.zeros(N)])))[:N]
    assert np.allclose(T @ x, y, atol=1e-12)


def test_hankel_section_examples(rng):
    H = hankel_section(from_coefficients({-1: 1}), 3, 3).entries
    expected = np.zeros((3, 3))
    expected[0, 0] = 1
    assert np.array_equal(H, expected)
    assert not np.any(hankel_section(ONE_PLUS_Z, 4, 4).entries)
    f = random_trig(rng, 6)
    H = hankel_section(f, 6, 6).entries
    hs = sum(n * abs(f.coefficient(-n)) ** 2 for n in range(1, 7))
    assert np.sum(np.abs(H) ** 2) == pytest.approx(hs, rel=1e-13)


def test_shift_product_sections():
    pair = product_sections(SHIFT, 5)
    assert np.allclose(pair.A, np.eye(5))
    assert np.allclose(pair.B, np.diag([0, 1, 1, 1, 1]))
    assert np.allclose(self_commutator(SHIFT, 4), np.diag([1, 0, 0, 0]))


@pytest.mark.parametrize("N", [1, 2, 7, 30])
def test_one_plus_z_trace_is_one(N):
    pair = product_sections(ONE_PLUS_Z, N)
    assert np.trace(pair.difference).real == pytest.approx(1, abs=1e-13)


@given(trig_polys(8))
def test_trace_difference_equals_hankel_identity(f):
    N = 2 * f.degree + 3
    pair = product_sections(f, N)
    expected = sum(n * (abs(f.coefficient(n)) ** 2 - abs(f.coefficient(-n)) ** 2) for n in range(1, f.degree + 1))
    assert np.trace(pair.difference).real == pytest.approx(expected, abs=1e-12)
    assert np.allclose(pair.A, pair.A.conj().T, atol=1e-14)
    assert np.allclose(pair.B, pair.B.conj().T, atol=1e-14)
    d = f.degree
    assert np.allclose(pair.difference[d:, :], 0, atol=1e-13)
    assert np.allclose(pair.difference[:, d:], 0, atol=1e-13)


def test_product_sections_refuse_small_sections(rng):
    with pytest.raises(SymbolError):
        product_sections(random_trig(rng, 5), 3)


def test_index_collapse_guard():
    for phi in (ScalarFunction.identity(), ScalarFunction.power(0.5), ScalarFunction.exp_heat(2.0)):
        A, B = naive_pair(SHIFT, 16)
        naive = _trace_from_spectra(np.linalg.eigvalsh(A), np.linalg.eigvalsh(B), phi)
        assert naive == pytest.approx(0, abs=1e-12)
        pair = product_sections(SHIFT, 16)
        good = _trace_from_spectra(np.linalg.eigvalsh(pair.A), np.linalg.eigvalsh(pair.B), phi)
        assert good == pytest.approx(float(phi(1.0) - phi(0.0)), abs=1e-12)


def test_self_commutator_analytic_is_psd(rng):
    f = random_trig(rng, 5, analytic=True)
    assert np.linalg.eigvalsh(self_commutator(f, 20)).min() >= -1e-12


def test_self_commutator_real_symbol_vanishes(rng):
    g = random_trig(rng, 4)
    c = 0.5 * (g.coeffs + np.conj(g.coeffs[::-1]))
    f = from_coefficients({int(n): v for n, v in zip(g.indices, c)})
    assert np.allclose(self_commutator(f, 12), 0, atol=1e-13)


def test_commutator_examples():
    assert commutator_trace(from_coefficients({-1: 1}), SHIFT).value == pytest.approx(1)
    assert commutator_trace(from_coefficients({-2: 1}), from_coefficients({3: 1})).value == 0
    M = commutator(from_coefficients({-2: 1}), from_coefficients({3: 1}), 10)
    assert np.trace(M) == 0


@given(trig_polys(16), trig_polys(16))
def test_helton_howe_and_trace_norm_bound(f, g):
    ct = commutator_trace(f, g)
    assert abs(ct.value - omega_form(f, g)) <= 1e-10
    N = f.degree + g.degree + 8
    M = commutator(f, g, N)
    assert schatten_norm(M, 1) <= sobolev_half_norm(f) * sobolev_half_norm(g) + 1e-10


@pytest.mark.parametrize("m", range(1, 5))
@pytest.mark.parametrize("n", range(1, 5))
def test_monomial_commutator_trace(m, n, rng):
    h = random_trig(rng, 4)
    assert monomial_commutator_trace(h, m, n) == pytest.approx(min(m, n) * h.coefficient(m - n), abs=1e-13)


def test_schatten_examples(rng):
    assert schatten_norm(np.eye(3), 1) == pytest.approx(3)
    u = rng.standard_normal(5)
    u *= 2 / np.linalg.norm(u)
    for p in (0.5, 1, 2, 7):
        assert schatten_norm(np.outer(u, u), p) == pytest.approx(4)
    M = rng.standard_normal((6, 4)) + 1j * rng.standard_normal((6, 4))
    assert schatten_norm(M, 2) == pytest.approx(np.linalg.norm(M, "fro"), rel=1e-12)
    s = singular_values(M)
    assert np.all(np.diff(s) <= 0)


def test_evaluator_symbols_are_truncated():
    f = from_family(TwistedPower(0, 0.5), 16)
    pair = product_sections(f, 20)
    assert pair.degree == 16 and not pair.exact


def test_dump_matrix(tmp_path):
    M = toeplitz_section(from_coefficients({0: 1, 1: 2j}), 3).entries
    path = dump_matrix(M, tmp_path / "m.csv")
    data = np.loadtxt(path, delimiter=",")
    assert np.allclose(data[:, 0::2] + 1j * data[:, 1::2], M)
    path = dump_matrix(M, tmp_path / "m", "npy")
    assert np.allclose(np.load(path), M)
