"""Finite sections of Toeplitz, Hankel and product operators on the Hardy space."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.linalg as sla

from .symbol import FourierSymbol, SymbolError, sobolev_half_norm


def _maybe_real(M: np.ndarray) -> np.ndarray:
    return M.real.copy() if not np.any(M.imag) else M


def _coeff_vector(f: FourierSymbol, start: int, stop: int, step: int = 1) -> np.ndarray:
    return np.asarray(f.coefficient(np.arange(start, stop, step)), dtype=complex)


@dataclass(frozen=True, eq=False)
class ToeplitzSection:
    entries: np.ndarray
    symbol: FourierSymbol
    size: int


@dataclass(frozen=True, eq=False)
class HankelSection:
    entries: np.ndarray
    rows: int
    cols: int


@dataclass(frozen=True, eq=False)
class SectionPair:
    """N x N compressions of T_f^* T_f (A) and T_f T_f^* (B)."""

    A: np.ndarray
    B: np.ndarray
    size: int
    degree: int
    exact: bool
    symbol: FourierSymbol

    @property
    def difference(self) -> np.ndarray:
        return self.A - self.B


def toeplitz_section(f: FourierSymbol, N: int) -> ToeplitzSection:
    """entries[j, k] = f^(j - k)."""
    if N < 1:
        raise ValueError("section size must be at least 1")
    col = _coeff_vector(f, 0, N)
    row = _coeff_vector(f, 0, -N, -1)
    return ToeplitzSection(sla.toeplitz(col, row), f, N)


def hankel_section(f: FourierSymbol, M: int, N: int) -> HankelSection:
    """entries[m, k] = f^(-(m + 1 + k)); only negative coefficients enter."""
    if M < 1 or N < 1:
        raise ValueError("Hankel sizes must be at least 1")
    v = _coeff_vector(f, -1, -(M + N), -1)
    return HankelSection(sla.hankel(v[:M], v[M - 1 :]), M, N)


def _exact_symbol(f: FourierSymbol) -> FourierSymbol:
    return f.truncated().trimmed() if f.evaluator is not None else f.trimmed()


def _gram_of_hankel(f: FourierSymbol, N: int) -> np.ndarray:
    """N-section of H_f^* H_f; the Hankel has at most d nonzero rows."""
    rows = max(f.effective_degree, 1)
    H = hankel_section(f, rows, N).entries
    return H.conj().T @ H


def product_sections(f: FourierSymbol, N: int) -> SectionPair:
    """Sections of the infinite products, built from T_{|f|^2} minus Hankel Gram matrices."""
    g = _exact_symbol(f)
    d = g.effective_degree
    if N < d:
        raise SymbolError(f"section size {N} is below the symbol degree {d}; the corner would be contaminated")
    modulus = FourierSymbol(np.convolve(g.coeffs, np.conj(g.coeffs[::-1])))
    T = toeplitz_section(modulus, N).entries
    A = T - _gram_of_hankel(g, N)
    B = T - _gram_of_hankel(g.conjugate(), N)
    A = _maybe_real(0.5 * (A + A.conj().T))
    B = _maybe_real(0.5 * (B + B.conj().T))
    return SectionPair(A, B, N, d, f.exact, f)


def naive_pair(f: FourierSymbol, N: int) -> tuple[np.ndarray, np.ndarray]:
    """Products of N x N Toeplitz sections; kept only to exhibit the index collapse."""
    T = toeplitz_section(_exact_symbol(f), N).entries
    return T.conj().T @ T, T @ T.conj().T


def self_commutator(f: FourierSymbol, N: int) -> np.ndarray:
    pair = product_sections(f, N)
    return pair.A - pair.B


def commutator(f: FourierSymbol, g: FourierSymbol, N: int) -> np.ndarray:
    """N-section of [T_f, T_g] = H_{conj g}^* H_f - H_{conj f}^* H_g."""
    f, g = _exact_symbol(f), _exact_symbol(g)
    rows = max(f.effective_degree, g.effective_degree, 1)
    Hf = hankel_section(f, rows, N).entries
    Hg = hankel_section(g, rows, N).entries
    Hfc = hankel_section(f.conjugate(), rows, N).entries
    Hgc = hankel_section(g.conjugate(), rows, N).entries
    return Hgc.conj().T @ Hf - Hfc.conj().T @ Hg


@dataclass(frozen=True)
class CommutatorTrace:
    value: complex
    bound: float  # trace-norm bound ||f||_{W1/2} ||g||_{W1/2}
    size: int


def commutator_trace(f: FourierSymbol, g: FourierSymbol) -> CommutatorTrace:
    """Trace of [T_f, T_g] from a section large enough to hold its support."""
    N = max(f.effective_degree + g.effective_degree, 1)
    value = complex(np.trace(commutator(f, g, N)))
    return CommutatorTrace(value, sobolev_half_norm(f) * sobolev_half_norm(g), N)


def monomial_commutator_trace(h: FourierSymbol, m: int, n: int) -> complex:
    """Tr(T_h [T_{e_-m}, T_{e_n}]); the commutator lives in the first max(m, n) rows."""
    if m < 1 or n < 1:
        raise ValueError("monomial degrees must be positive")
    size = max(m, n, _exact_symbol(h).effective_degree + 1)
    C = commutator(FourierSymbol._monomial(-m), FourierSymbol._monomial(n), size)
    return complex(np.trace(toeplitz_section(_exact_symbol(h), size).entries @ C))


def singular_values(M: np.ndarray) -> np.ndarray:
    return sla.svdvals(M)


def schatten_norm(M: np.ndarray, p: float) -> float:
    if not p > 0:
        raise ValueError("Schatten exponent must be positive")
    s = singular_values(M)
    if math.isinf(p):
        return float(s[0]) if s.size else 0.0
    if s.size == 0 or s[0] == 0:
        return 0.0
    top = s[0]
    return float(top * np.sum((s / top) ** p) ** (1 / p))


def dump_matrix(M: np.ndarray, path: str | Path, fmt: str = "csv") -> Path:
    """Write a dense matrix: CSV rows of re,im pairs, or a .npy file."""
    path = Path(path)
    M = np.asarray(M, dtype=complex)
    if fmt == "csv":
        inter = np.empty((M.shape[0], 2 * M.shape[1]))
        inter[:, 0::2] = M.real
        inter[:, 1::2] = M.imag
        np.savetxt(path, inter, delimiter=",", fmt="%.17g")
    elif fmt in ("npy", "binary"):
        np.save(path, M)
        if path.suffix != ".npy":
            path = path.with_name(path.name + ".npy")
    else:
        raise ValueError(f"unknown matrix dump format {fmt!r}")
    return path
