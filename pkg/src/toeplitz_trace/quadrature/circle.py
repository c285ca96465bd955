"""Integrals over the unit circle: plain, trace-formula boundary sides, and principal values."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from ..funcalc import ScalarFunction
from ..symbol import DEFAULT_NODES, FourierSymbol, ZeroProfile, circle_zeros

TWO_PI = 2 * math.pi
MAX_NODES = 1 << 20


class QuadratureError(ArithmeticError):
    """The quadrature could not produce a trustworthy value."""


@dataclass(frozen=True)
class QuadratureResult:
    value: complex
    abs_error: float
    nodes: int
    method: str

    def to_json(self) -> dict:
        return {
            "value": [self.value.real, self.value.imag],
            "abs_error": self.abs_error,
            "nodes": self.nodes,
            "method": self.method,
        }


def _grid(nodes: int) -> np.ndarray:
    return TWO_PI * np.arange(nodes) / nodes


def circle_integral(integrand, nodes: int = DEFAULT_NODES, normalized: bool = True) -> QuadratureResult:
    """Trapezoid rule on [0, 2pi); the error is the change from nodes/2 to nodes."""
    vals = np.asarray(integrand(_grid(nodes)), dtype=complex)
    if not np.all(np.isfinite(vals)):
        raise QuadratureError("integrand is not finite on the grid")
    full = complex(np.mean(vals))
    half = complex(np.mean(vals[::2])) if nodes >= 2 else full
    scale = 1.0 if normalized else TWO_PI
    return QuadratureResult(full * scale, abs(full - half) * scale, nodes, "trapezoid")


def adaptive_circle_integral(integrand, nodes: int = DEFAULT_NODES, tol: float = 1e-13,
                             normalized: bool = True) -> QuadratureResult:
    """Double the trapezoid grid until two successive values agree."""
    res = circle_integral(integrand, nodes, normalized)
    while res.abs_error > tol * max(1.0, abs(res.value)) and res.nodes < MAX_NODES:
        res = circle_integral(integrand, 2 * res.nodes, normalized)
    return res


def _arc_quad(func, a: float, b: float) -> tuple[complex, float]:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, err = integrate.quad(func, a, b, complex_func=True, limit=400, epsabs=1e-14, epsrel=1e-13)
    return complex(val), float(abs(err))


def _split_quad(func, cuts: list[float]) -> tuple[complex, float]:
    """Adaptive quadrature over [0, 2pi) split at the given angles."""
    cuts = sorted(c % TWO_PI for c in cuts)
    edges = cuts + [cuts[0] + TWO_PI] if cuts else [0.0, TWO_PI]
    total, err = 0j, 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        if b - a <= 0:
            continue
        # bisect once so both endpoint singularities sit at ends of separate pieces
        mid = 0.5 * (a + b)
        for lo, hi in ((a, mid), (mid, b)):
            v, e = _arc_quad(func, lo, hi)
            total += v
            err += e
    return total, err


def _boundary_integrand(f: FourierSymbol, phi: ScalarFunction):
    def integrand(t):
        t = np.asarray(t, dtype=float)
        fv = f(t)
        x = np.abs(fv) ** 2
        with np.errstate(all="ignore"):
            out = phi.divided(x) * np.conj(fv) * f.derivative_values(t)
        return np.where(x == 0, 0.0, out)

    return integrand


def _needs_split(f: FourierSymbol, phi: ScalarFunction, zeros: list[ZeroProfile]) -> bool:
    if not zeros:
        return False
    if not phi.smooth:
        return True
    return any(not z.profiled or not (z.beta / 2).is_integer() for z in zeros)


def boundary_trace_integral(f: FourierSymbol, phi: ScalarFunction, nodes: int = DEFAULT_NODES,
                            zeros: list[ZeroProfile] | None = None) -> QuadratureResult:
    """(1/2 pi i) int Phi(|f|^2) conj(f) f' dt with Phi(x) = (phi(x) - phi(0))/x; zero where f vanishes."""
    if not math.isfinite(float(phi(0.0))):
        raise QuadratureError("phi is not finite at 0")
    zeros = circle_zeros(f) if zeros is None else zeros
    integrand = _boundary_integrand(f, phi)
    if _needs_split(f, phi, zeros):
        val, err = _split_quad(integrand, [z.location for z in zeros])
        return QuadratureResult(val / (TWO_PI * 1j), err / TWO_PI, 0, "adaptive-split")
    res = adaptive_circle_integral(integrand, nodes)
    return QuadratureResult(res.value / 1j, res.abs_error, res.nodes, res.method)


def heat_integral(f: FourierSymbol, s: float, nodes: int = DEFAULT_NODES,
                  zeros: list[ZeroProfile] | None = None) -> QuadratureResult:
    """(1/2 pi i) int (1 - exp(-s|f|^2)) f'/f dt, matched to Tr(exp(-sB) - exp(-sA))."""
    if s < 0:
        raise ValueError("s must be nonnegative")
    if s == 0:
        return QuadratureResult(0j, 0.0, 0, "exact")
    r = boundary_trace_integral(f, ScalarFunction.exp_heat(s), nodes, zeros)
    return QuadratureResult(-r.value, r.abs_error, r.nodes, r.method)


_GL_X, _GL_W = np.polynomial.legendre.leggauss(48)


def _gauss(func, a: float, b: float) -> complex:
    x = 0.5 * (b - a) * _GL_X + 0.5 * (a + b)
    return complex(0.5 * (b - a) * np.sum(_GL_W * func(x)))


def _pv_extrapolate(values: list[complex]) -> tuple[complex, float]:
    """Richardson in eps -> 0 for a remainder odd in eps; returns (value, error estimate)."""
    table = [values]
    for m in range(1, len(values)):
        r = 2.0 ** (2 * m - 1)
        prev = table[-1]
        table.append([(r * prev[i + 1] - prev[i]) / (r - 1) for i in range(len(prev) - 1)])
    best = table[-1][0]
    return best, abs(best - table[-2][-1]) + abs(table[-2][-1] - table[-2][0])


def principal_value_integral(f: FourierSymbol, zeros: list[ZeroProfile] | None = None,
                             eps0_fraction: float = 0.25, levels: int = 6, nodes: int = DEFAULT_NODES,
                             normalized: bool = True) -> QuadratureResult:
    """(1/2 pi i) p.v. int f'/f dt, excising symmetric windows around circle zeros.

    The excised integral is computed for eps_k = eps_0 / 2^k and extrapolated to
    eps = 0; the remainder is odd in eps for smooth local data, so the
    Richardson table eliminates eps, eps^3, eps^5, ...
    """
    zeros = circle_zeros(f, strict=True) if zeros is None else zeros
    if any(not z.profiled for z in zeros):
        raise QuadratureError("principal value needs every circle zero profiled")
    scale = 1 / (TWO_PI * 1j) if normalized else 1.0
    L = f.log_derivative
    if not zeros:
        res = adaptive_circle_integral(lambda t: L(t), nodes, normalized=False)
        return QuadratureResult(res.value * scale, res.abs_error * abs(scale), res.nodes, "trapezoid")

    eps0 = [eps0_fraction * z.delta for z in zeros]
    # base: complement of the widest windows
    edges = []
    for z, e in zip(zeros, eps0):
        edges.append((z.location + e, z.location - e))
    base, qerr = 0j, 0.0
    for k, (start, _) in enumerate(edges):
        end = edges[(k + 1) % len(edges)][1]
        if end <= start:
            end += TWO_PI
        v, e = _arc_quad(L, start, end)
        base += v
        qerr += e
    values = [base]
    for level in range(1, levels + 1):
        inc = 0j
        for z, e in zip(zeros, eps0):
            outer, inner = e / 2 ** (level - 1), e / 2**level
            inc += _gauss(L, z.location + inner, z.location + outer)
            inc += _gauss(L, z.location - outer, z.location - inner)
        values.append(values[-1] + inc)

    # roundoff near high-order zeros can spoil the finest windows, so keep the depth
    # whose extrapolation error estimate is smallest
    candidates = [_pv_extrapolate(values[:d]) for d in range(3, len(values) + 1)]
    best, err = min(candidates, key=lambda c: c[1])
    if err > 1e-6 * (1 + abs(best)):
        raise QuadratureError("excised integrals do not settle as the windows shrink")
    err += qerr
    return QuadratureResult(best * scale, err * abs(scale), 0, "pv-richardson")
