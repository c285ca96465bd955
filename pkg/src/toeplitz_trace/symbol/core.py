"""Symbols on the unit circle: finite Fourier data plus optional closed forms."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Mapping

import numpy as np
from numpy.polynomial import polynomial as P

from .families import Family, family_from_json
from .profile import SymbolError

TWO_PI = 2 * math.pi
DEFAULT_NODES = 4096
DEFAULT_DEGREE = 256


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class FourierSymbol:
    """A function on the circle.

    ``coeffs[n + degree]`` holds the Fourier coefficient of index ``n``. When an
    ``evaluator`` is attached the coefficients are its degree-d truncation
    (``truncation`` records raw or Fejer) and ``residual`` bounds the dropped
    l1 mass; ``tail_sobolev`` is the matching W^{1/2} norm of the dropped part.
    """

    coeffs: np.ndarray
    evaluator: Callable | None = None
    derivative_evaluator: Callable | None = None
    family: Family | None = None
    truncation: str = "exact"
    residual: float = 0.0
    tail_sobolev: float = 0.0

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.coeffs, dtype=complex))
        if c.ndim != 1 or c.size % 2 == 0:
            raise SymbolError("coefficient vector must have odd length 2d+1")
        if self.truncation not in ("exact", "raw", "fejer"):
            raise SymbolError(f"unknown truncation mode {self.truncation!r}")
        if not (self.residual >= 0 and self.tail_sobolev >= 0):
            raise SymbolError("truncation residuals must be nonnegative")
        object.__setattr__(self, "coeffs", _readonly(c))

    @property
    def degree(self) -> int:
        return (self.coeffs.size - 1) // 2

    @property
    def indices(self) -> np.ndarray:
        d = self.degree
        return np.arange(-d, d + 1)

    def coefficient(self, n):
        n = np.asarray(n)
        d = self.degree
        inside = np.abs(n) <= d
        out = np.where(inside, self.coeffs[np.clip(n + d, 0, 2 * d)], 0.0)
        return out if out.ndim else complex(out)

    @property
    def exact(self) -> bool:
        """True when the coefficient vector is the whole symbol."""
        return self.residual == 0.0 and self.truncation != "fejer"

    @property
    def support(self) -> tuple[int, int]:
        nz = np.flatnonzero(self.coeffs != 0)
        if nz.size == 0:
            return (0, 0)
        return int(nz[0] - self.degree), int(nz[-1] - self.degree)

    @property
    def effective_degree(self) -> int:
        lo, hi = self.support
        return max(abs(lo), abs(hi))

    def is_analytic(self, tol: float = 1e-14) -> bool:
        if self.family is not None:
            return self.family.analytic
        scale = max(float(np.max(np.abs(self.coeffs))), 1e-300)
        return bool(np.all(np.abs(self.coeffs[: self.degree]) <= tol * scale))

    # pointwise values
    def series(self, t):
        """The truncated Fourier series at angles t."""
        t = np.asarray(t, dtype=float)
        z = np.exp(1j * t)
        return P.polyval(z, self.coeffs) * z ** (-self.degree)

    def __call__(self, t):
        if self.evaluator is not None:
            return self.evaluator(np.asarray(t, dtype=float))
        return self.series(t)

    def grid_values(self, nodes: int = DEFAULT_NODES):
        """Values at t_k = 2 pi k / nodes."""
        if self.evaluator is not None:
            return self.evaluator(TWO_PI * np.arange(nodes) / nodes)
        folded = np.zeros(nodes, dtype=complex)
        np.add.at(folded, self.indices % nodes, self.coeffs)
        return np.fft.ifft(folded) * nodes

    def derivative_values(self, t):
        if self.derivative_evaluator is not None:
            return self.derivative_evaluator(np.asarray(t, dtype=float))
        t = np.asarray(t, dtype=float)
        z = np.exp(1j * t)
        return P.polyval(z, 1j * self.indices * self.coeffs) * z ** (-self.degree)

    def log_derivative(self, t):
        if self.family is not None and self.evaluator is not None:
            return self.family.log_derivative(np.asarray(t, dtype=float))
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.derivative_values(t) / self(t)

    # derived symbols
    def derivative(self) -> "FourierSymbol":
        return FourierSymbol(1j * self.indices * self.coeffs, evaluator=self.derivative_evaluator,
                             truncation=self.truncation if self.derivative_evaluator else "exact")

    def conjugate(self) -> "FourierSymbol":
        """The symbol t -> conj(f(t))."""
        ev = self.evaluator
        dev = self.derivative_evaluator
        return FourierSymbol(
            np.conj(self.coeffs[::-1]),
            evaluator=(lambda t: np.conj(ev(t))) if ev else None,
            derivative_evaluator=(lambda t: np.conj(dev(t))) if dev else None,
            truncation=self.truncation,
            residual=self.residual,
            tail_sobolev=self.tail_sobolev,
        )

    def truncated(self) -> "FourierSymbol":
        """Forget the evaluator and keep only the coefficient data."""
        return FourierSymbol(self.coeffs)

    def trimmed(self) -> "FourierSymbol":
        """Drop outer zero coefficients, keeping the evaluator."""
        d = self.effective_degree
        c = self.coeffs[self.degree - d : self.degree + d + 1]
        return replace(self, coeffs=c)

    @classmethod
    def _monomial(cls, n: int) -> "FourierSymbol":
        c = np.zeros(2 * abs(n) + 1, dtype=complex)
        c[n + abs(n)] = 1
        return cls(c)

    def to_json(self) -> dict:
        if self.family is not None:
            return {
                "kind": "family",
                "family": self.family.to_json(),
                "truncation": {"degree": self.degree, "mode": self.truncation if self.truncation != "exact" else "raw"},
            }
        nz = np.flatnonzero(self.coeffs)
        return {
            "kind": "coeffs",
            "coeffs": [[int(i - self.degree), float(self.coeffs[i].real), float(self.coeffs[i].imag)] for i in nz],
        }


def from_coefficients(coeffs) -> FourierSymbol:
    """Build an exact symbol from {n: c}, a list of (n, c) / (n, re, im) entries."""
    if isinstance(coeffs, Mapping):
        items = [(int(n), complex(c)) for n, c in coeffs.items()]
    else:
        items = []
        for entry in coeffs:
            if len(entry) == 2:
                items.append((int(entry[0]), complex(entry[1])))
            elif len(entry) == 3:
                items.append((int(entry[0]), complex(float(entry[1]), float(entry[2]))))
            else:
                raise SymbolError(f"cannot read coefficient entry {entry!r}")
    if not items:
        raise SymbolError("empty coefficient list")
    d = max(abs(n) for n, _ in items)
    c = np.zeros(2 * d + 1, dtype=complex)
    for n, v in items:
        c[n + d] += v
    return FourierSymbol(c)


def constant(value: complex) -> FourierSymbol:
    return FourierSymbol(np.array([complex(value)]))


def from_family(family: Family, truncation_degree: int = DEFAULT_DEGREE, mode: str = "raw") -> FourierSymbol:
    """Attach the family's closed forms to its degree-d truncation."""
    if truncation_degree < 0:
        raise SymbolError("truncation degree must be nonnegative")
    if mode not in ("raw", "fejer"):
        raise SymbolError(f"unknown truncation mode {mode!r}")
    data = family.coefficients(truncation_degree)
    c = data.values
    residual = data.residual
    tail = data.tail_sobolev
    if mode == "fejer":
        n = np.arange(-truncation_degree, truncation_degree + 1)
        weight = 1 - np.abs(n) / (truncation_degree + 1)
        dropped = c * (1 - weight)
        residual += float(np.sum(np.abs(dropped)))
        tail = math.hypot(tail, float(np.sqrt(np.sum((1 + np.abs(n)) * np.abs(dropped) ** 2))))
        c = c * weight
    return FourierSymbol(
        c,
        evaluator=family.evaluate,
        derivative_evaluator=family.derivative,
        family=family,
        truncation=mode,
        residual=residual,
        tail_sobolev=tail,
    )


def symbol_from_json(data: dict, degree: int = DEFAULT_DEGREE) -> FourierSymbol:
    """Read the JSON symbol schema (kind coeffs or family)."""
    allowed = {"kind", "coeffs", "family", "truncation"}
    extra = set(data) - allowed
    if extra:
        raise SymbolError(f"unknown symbol keys: {sorted(extra)}")
    kind = data.get("kind", "family" if "family" in data else "coeffs")
    if kind == "coeffs":
        return from_coefficients(data.get("coeffs", []))
    if kind != "family":
        raise SymbolError(f"unknown symbol kind {kind!r}")
    trunc = dict(data.get("truncation", {}))
    extra = set(trunc) - {"degree", "mode"}
    if extra:
        raise SymbolError(f"unknown truncation keys: {sorted(extra)}")
    return from_family(family_from_json(data["family"]), int(trunc.get("degree", degree)), trunc.get("mode", "raw"))


# algebra

def evaluate(f: FourierSymbol, t):
    return f(t)


def derivative(f: FourierSymbol) -> FourierSymbol:
    return f.derivative()


def multiply(f: FourierSymbol, g: FourierSymbol) -> FourierSymbol:
    """Pointwise product; coefficients convolve and degrees add."""
    c = np.convolve(f.coeffs, g.coeffs)
    if f.evaluator is None and g.evaluator is None:
        return FourierSymbol(c)
    fa = np.sum(np.abs(f.coeffs))
    ga = np.sum(np.abs(g.coeffs))
    residual = f.residual * (ga + g.residual) + g.residual * fa
    return FourierSymbol(
        c,
        evaluator=lambda t: f(t) * g(t),
        derivative_evaluator=lambda t: f.derivative_values(t) * g(t) + f(t) * g.derivative_values(t),
        truncation="raw",
        residual=float(residual),
        tail_sobolev=float(math.hypot(f.tail_sobolev * (ga + g.residual), g.tail_sobolev * (fa + f.residual))),
    )


def shift(f: FourierSymbol, w: complex) -> FourierSymbol:
    """The symbol f - w."""
    c = np.array(f.coeffs)
    c[f.degree] -= w
    ev = f.evaluator
    return FourierSymbol(
        c,
        evaluator=(lambda t: ev(t) - w) if ev else None,
        derivative_evaluator=f.derivative_evaluator,
        truncation=f.truncation,
        residual=f.residual,
        tail_sobolev=f.tail_sobolev,
    )


def reciprocal(f: FourierSymbol, degree: int, nodes: int | None = None) -> FourierSymbol:
    """Degree-d truncation of 1/f for a zero-free symbol, sampled by FFT."""
    nodes = nodes or max(DEFAULT_NODES, 1 << int(math.ceil(math.log2(8 * (degree + 1)))))
    vals = f.grid_values(nodes)
    if np.min(np.abs(vals)) == 0:
        raise SymbolError("reciprocal of a symbol with a circle zero")
    c = np.fft.fft(1 / vals) / nodes
    n = np.fft.fftfreq(nodes, 1.0 / nodes).astype(int)
    keep = np.abs(n) <= degree
    out = np.zeros(2 * degree + 1, dtype=complex)
    out[n[keep] + degree] = c[keep]
    return FourierSymbol(out)


def omega_form(f: FourierSymbol, g: FourierSymbol) -> complex:
    """sum_n n * f^(-n) * g^(n)."""
    d = min(f.degree, g.degree)
    n = np.arange(-d, d + 1)
    return complex(np.sum(n * f.coefficient(-n) * g.coefficient(n)))


def sobolev_half_norm(f: FourierSymbol, method: str = "coefficient", nodes: int = 1024) -> float:
    """sqrt(sum (1+|n|) |f^(n)|^2), or the same quantity from the double integral of differences."""
    if method == "coefficient":
        sq = float(np.sum((1 + np.abs(f.indices)) * np.abs(f.coeffs) ** 2))
        return math.sqrt(sq + f.tail_sobolev**2) if f.evaluator is not None else math.sqrt(sq)
    if method != "double_integral":
        raise SymbolError(f"unknown Sobolev method {method!r}")
    vals = f.grid_values(nodes)
    # D(u_k): mean over t of |f(t+u_k) - f(t)|^2, all shifts at once
    shifts = (np.arange(nodes)[:, None] + np.arange(nodes)[None, :]) % nodes
    D = np.mean(np.abs(vals[shifts] - vals[None, :]) ** 2, axis=1)
    u = TWO_PI * np.arange(1, nodes) / nodes
    kernel = D[1:] / (4 * np.sin(u / 2) ** 2)
    t = TWO_PI * np.arange(nodes) / nodes
    diag = float(np.mean(np.abs(f.derivative_values(t)) ** 2))
    if not math.isfinite(diag):
        # non-Lipschitz symbol: treat the diagonal cell as flat
        diag = float(kernel[0])
    seminorm = (diag + float(np.sum(kernel))) / nodes
    return math.sqrt(float(np.mean(np.abs(vals) ** 2)) + seminorm)


def sup_norm(f: FourierSymbol, nodes: int = DEFAULT_NODES) -> float:
    """Upper estimate of max |f| from a grid plus a Lipschitz correction."""
    t = TWO_PI * np.arange(nodes) / nodes
    vals = np.abs(f(t))
    grid_max = float(np.max(vals))
    if f.evaluator is None:
        wiener = float(np.sum(np.abs(f.coeffs)))
        lip = float(np.sum(np.abs(f.indices * f.coeffs)))
        return min(wiener, grid_max + math.pi / nodes * lip)
    with np.errstate(all="ignore"):
        dmax = float(np.max(np.abs(f.derivative_values(t))))
    if math.isfinite(dmax):
        return grid_max + math.pi / nodes * dmax
    fine = np.abs(f(np.linspace(0, TWO_PI, 16 * nodes, endpoint=False)))
    return float(max(grid_max, np.max(fine)))


# disk side

def _check_disk(z):
    z = np.asarray(z, dtype=complex)
    if np.any(np.abs(z) >= 1):
        raise SymbolError("point outside the open unit disk")
    return z


def harmonic_extension(f: FourierSymbol, z):
    """Poisson extension: F_+(z) + conj(F_-(z)) from the coefficient split."""
    z = _check_disk(z)
    if f.family is not None and f.family.analytic:
        return f.family.analytic_value(z)
    d = f.degree
    plus = P.polyval(z, f.coeffs[d:])
    minus = P.polyval(np.conj(z), np.concatenate([[0.0], f.coeffs[:d][::-1]]))
    return plus + minus


def _require_analytic(f: FourierSymbol):
    if not f.is_analytic():
        raise SymbolError("symbol has nonzero negative Fourier coefficients; no analytic extension")


def analytic_extension(f: FourierSymbol, z):
    z = _check_disk(z)
    _require_analytic(f)
    if f.family is not None:
        return f.family.analytic_value(z)
    return P.polyval(z, f.coeffs[f.degree :])


def analytic_derivative(f: FourierSymbol, z, order: int = 1, cauchy_nodes: int = 64):
    """order-th complex derivative of the analytic extension."""
    z = _check_disk(z)
    _require_analytic(f)
    if order < 0:
        raise SymbolError("derivative order must be nonnegative")
    if order == 0:
        return analytic_extension(f, z)
    if f.family is None:
        c = f.coeffs[f.degree :]
        return P.polyval(z, P.polyder(c, order)) if order < c.size else np.zeros_like(z)
    if order == 1:
        return f.family.analytic_derivative(z)
    # Cauchy integral on a circle of radius (1-|z|)/2
    radius = (1 - np.abs(z)) / 2
    theta = TWO_PI * np.arange(cauchy_nodes) / cauchy_nodes
    ring = np.exp(1j * theta)
    zz = z[..., None] + radius[..., None] * ring
    vals = f.family.analytic_value(zz)
    coef = np.mean(vals * ring ** (-order), axis=-1) / radius**order
    return math.factorial(order) * coef
