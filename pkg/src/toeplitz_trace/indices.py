"""Fredholm and Witten indices, principal functions and spectral shift functions.

Sign conventions (every route converts through these):

==================  ==========================================================
quantity            definition used here
==================  ==========================================================
winding(f, w)       (1/2 pi i) int f'/(f - w) dt, counterclockwise positive
Fredholm index      ind T_f = -winding(f, 0)
Witten index        ind_W T_f = -(1/2 pi i) p.v. int f'/f dt
heat values         h(s) = Tr(exp(-sB) - exp(-sA)), so ind_W = -lim h(s)
principal function  g(w) = -ind(T_f - w) = winding(f, w)
spectral shift      Tr(phi(A) - phi(B)) = int phi'(x) xi(x) dx
==================  ==========================================================

Here A = T_f^* T_f and B = T_f T_f^*.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, optimize
from scipy.special import gamma

from .funcalc import OperatorMonotone, ScalarFunction, TraceResult, heat_trace, om_resolvent_trace, trace_phi_difference
from .operators import commutator_trace
from .quadrature import (
    QuadratureError,
    boundary_trace_integral,
    disk_trace_integral,
    heat_integral,
    principal_value_integral,
)
from .symbol import (
    DEFAULT_NODES,
    FourierSymbol,
    SymbolError,
    ZeroProfile,
    circle_zeros,
    polynomial_model,
    reciprocal,
    shift,
    sup_norm,
)

TWO_PI = 2 * math.pi
HEAT_SCHEDULE = (25.0, 50.0, 100.0, 200.0)
SCAN_NODES = 8192
ROUNDING_TOL = 0.1


class IndexError_(ArithmeticError):
    """An index could not be computed or its routes disagree."""


@dataclass(frozen=True)
class Route:
    name: str
    value: float
    error: float

    def to_json(self) -> dict:
        return {"route": self.name, "value": self.value, "error": self.error}


@dataclass(frozen=True)
class IndexReport:
    fredholm: int | None
    witten: float | None
    routes: list[Route]
    zeros: list[ZeroProfile]
    agreement: bool

    def route(self, name: str) -> Route:
        for r in self.routes:
            if r.name == name:
                return r
        raise KeyError(name)

    def to_json(self) -> dict:
        return {
            "fredholm": self.fredholm,
            "witten": self.witten,
            "routes": [r.to_json() for r in self.routes],
            "zeros": [z.to_json() for z in self.zeros],
            "agreement": self.agreement,
        }


@dataclass(frozen=True)
class SpectralShiftFunction:
    grid: np.ndarray
    values: np.ndarray
    route: str  # "boundary", "principal_function" or "pushforward"
    imaginary_residual: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def integral(self) -> float:
        return float(integrate.trapezoid(self.values, self.grid))

    def to_json(self) -> dict:
        out = {"route": self.route, "x": self.grid.tolist(), "xi": self.values.tolist()}
        if self.imaginary_residual.size:
            out["imaginary_residual"] = self.imaginary_residual.tolist()
        return out

    def to_csv(self) -> str:
        rows = ["x,xi"] + [f"{x:.12g},{v:.12g}" for x, v in zip(self.grid, self.values)]
        return "\n".join(rows) + "\n"


# winding numbers and the Fredholm index

def _winding_value(f: FourierSymbol, w: complex, nodes: int) -> tuple[float, float]:
    """(1/2 pi i) int f'/(f - w) by the trapezoid rule, doubled until stable; returns (value, min distance)."""
    scale = max(sup_norm(f), abs(w), 1e-300)
    prev = None
    while True:
        t = TWO_PI * np.arange(nodes) / nodes
        diff = f(t) - w
        dist = float(np.min(np.abs(diff)))
        if dist <= 1e-10 * scale:
            raise SymbolError(f"w={w} lies on the curve f(T) (distance {dist:.3g})")
        val = complex(np.mean(f.derivative_values(t) / diff) / 1j)
        if prev is not None and abs(val - prev) < 1e-9 or nodes >= 1 << 20:
            return val.real, dist
        prev, nodes = val, 2 * nodes


def winding_number(f: FourierSymbol, w: complex = 0.0, nodes: int = DEFAULT_NODES) -> int:
    val, _ = _winding_value(f, complex(w), nodes)
    k = round(val)
    if abs(val - k) >= ROUNDING_TOL:
        raise SymbolError(f"winding integral {val:.6g} is not close to an integer")
    return int(k)


def fredholm_index(f: FourierSymbol, cross_check: bool = True, degree: int = 256) -> int:
    """-winding(f, 0), checked against Tr([T_f, T_{1/f}]) when the truncated reciprocal is accurate."""
    zeros = circle_zeros(f)
    if zeros:
        raise SymbolError("f vanishes on the circle, so T_f is not Fredholm; use witten_index")
    index = -winding_number(f, 0.0)
    if cross_check:
        g = reciprocal(f, degree)
        tail = float(np.sum(np.abs(g.coeffs[:8])) + np.sum(np.abs(g.coeffs[-8:])))
        if tail < 1e-10:
            value = commutator_trace(f.truncated() if f.evaluator is not None else f, g).value
            if abs(value - index) > ROUNDING_TOL:
                raise IndexError_(f"commutator trace {value.real:.6g} disagrees with -winding = {index}")
    return index


# the Witten index

def _heat_values(f: FourierSymbol, schedule, N: int) -> np.ndarray:
    if f.exact and f.evaluator is None:
        return np.array([heat_trace(f, s, N).value for s in schedule])
    zeros = circle_zeros(f)
    return np.array([heat_integral(f, s, zeros=zeros).value.real for s in schedule])


def heat_limit(f: FourierSymbol, zeros: list[ZeroProfile], schedule=HEAT_SCHEDULE, N: int = 1024) -> Route:
    """Extrapolate h(s) -> h(inf) with c0 + c1 s^-r (+ c2 s^-2r), r = 1/beta_min; returns -c0."""
    s = np.asarray(schedule, dtype=float)
    h = _heat_values(f, s, N)
    if not zeros:
        return Route("heat_limit", -float(h[-1]), float(abs(h[-1] - h[-2])))
    rate = 1.0 / min(z.beta for z in zeros)
    two = np.column_stack([np.ones_like(s), s**-rate])
    three = np.column_stack([two, s ** (-2 * rate)])
    c2 = np.linalg.lstsq(two, h, rcond=None)[0][0]
    c3 = np.linalg.lstsq(three, h, rcond=None)[0][0]
    return Route("heat_limit", -float(c3), float(abs(c3 - c2)))


def _closed_form(f: FourierSymbol) -> float | None:
    if f.family is not None and f.evaluator is not None:
        return f.family.witten_closed_form()
    if f.evaluator is None:
        model = polynomial_model(f)
        return 0.0 if model is None else model.witten_closed_form()
    return None


def witten_index(f: FourierSymbol, heat: bool = True, N: int = 1024, eps0_fraction: float = 0.25,
                 levels: int = 6, nodes: int = DEFAULT_NODES) -> IndexReport:
    """Witten index by the principal-value route, the heat limit and any closed form."""
    zeros = circle_zeros(f, nodes=nodes, strict=True)
    pv = principal_value_integral(f, zeros, eps0_fraction=eps0_fraction, levels=levels, nodes=nodes)
    routes = [Route("pv_integral", -pv.value.real, pv.abs_error)]
    if heat:
        routes.append(heat_limit(f, zeros, N=N))
    closed = _closed_form(f)
    if closed is not None:
        routes.append(Route("closed_form", float(closed), 0.0))
    witten = routes[0].value
    fredholm = None
    if not zeros:
        fredholm = -winding_number(f, 0.0)
        routes.append(Route("fredholm", float(fredholm), 0.0))
    agreement = all(abs(r.value - witten) <= r.error + routes[0].error + 1e-9 for r in routes)
    return IndexReport(fredholm, witten, routes, zeros, agreement)


SCHATTEN_SCHEDULE = (1.0, 0.5, 0.25, 0.125)


def schatten_limit(f: FourierSymbol, schedule=SCHATTEN_SCHEDULE, N: int = 512) -> Route:
    """Witten index as -lim_{p -> 0} Tr(|T_f|^p - |T_f^*|^p).

    Each trace uses the resolvent route with q = p/2; the limit is the
    constant term of a quadratic fit in p, and the error compares it with a
    linear fit through the three smallest p plus the largest trace error.
    """
    p = np.asarray(sorted(schedule), dtype=float)
    if np.any(p <= 0) or np.any(p >= 2) or p.size < 3:
        raise ValueError("the schedule needs at least three exponents in (0, 2)")
    traces = [om_resolvent_trace(f, OperatorMonotone.power_q(v / 2), N) for v in p]
    values = np.array([t.value for t in traces])
    quad = np.polyfit(p, values, min(2, p.size - 2))[-1]
    lin = np.polyfit(p[:3], values[:3], 1)[-1]
    err = abs(quad - lin) + max(t.error for t in traces)
    return Route("schatten_limit", -float(quad), float(err))


# principal function

def principal_function(f: FourierSymbol, w: complex) -> float:
    """g(w) = winding(f, w) off the curve; on the curve the principal value of the winding integral."""
    w = complex(w)
    try:
        return float(winding_number(f, w))
    except SymbolError:
        g = shift(f, w)
        zeros = circle_zeros(g, strict=True)
        return float(principal_value_integral(g, zeros).value.real)


# spectral shift functions

class _ModulusScan:
    """|f|^2 on a fixed grid, reused by every level-set query on the same symbol."""

    def __init__(self, f: FourierSymbol, nodes: int = SCAN_NODES):
        self.f = f
        self.t = TWO_PI * np.arange(nodes + 1) / nodes
        self.vals = np.asarray(f(self.t), dtype=complex)
        self.sq = np.abs(self.vals) ** 2
        self.nodes = nodes

    def _sq(self, s: float) -> float:
        return abs(complex(self.f(s))) ** 2

    def crossings(self, x: float) -> list[float]:
        """Angles where |f|^2 = x, from sign changes refined by brentq."""
        tol = 1e-13 * max(x, 1.0)
        g = self.sq - x
        # roundoff-level values count as inside the superlevel set
        g = np.where(np.abs(g) <= tol, tol, g)
        idx = np.flatnonzero(np.sign(g[:-1]) * np.sign(g[1:]) < 0)
        return [self._refine(x, self.t[k], self.t[k + 1], tol) for k in idx]

    def _refine(self, x: float, a: float, b: float, tol: float) -> float:
        ga, gb = self._sq(a) - x, self._sq(b) - x
        if ga * gb > 0:
            return a if abs(ga) <= abs(gb) else b
        if abs(ga) <= tol or abs(gb) <= tol:
            return a if abs(ga) <= abs(gb) else b
        return optimize.brentq(lambda s: self._sq(s) - x, a, b, xtol=1e-15)

    def superlevel_arcs(self, x: float) -> list[tuple[float, float]]:
        """Arcs of [0, 2pi) where |f|^2 >= x."""
        cuts = sorted(self.crossings(x))
        if not cuts:
            return [(0.0, TWO_PI)] if self.sq[0] >= x else []
        ends = cuts + [cuts[0] + TWO_PI]
        return [(a, b) for a, b in zip(ends[:-1], ends[1:]) if self._sq(0.5 * (a + b)) >= x]

    def log_increment(self, a: float, b: float) -> complex:
        """int_a^b f'/f dt as the change of a continuous logarithm along the arc."""
        n = self.nodes
        k0, k1 = int(math.floor(a / TWO_PI * n)) + 1, int(math.ceil(b / TWO_PI * n)) - 1
        inner = np.arange(k0, k1 + 1)
        t = np.concatenate([[a], TWO_PI * inner / n, [b]])
        v = np.concatenate([[complex(self.f(a))], self.vals[inner % n], [complex(self.f(b))]])
        return complex(np.log(v[-1] / v[0]).real + 1j * self._turning(t, v))

    def _turning(self, t: np.ndarray, v: np.ndarray, depth: int = 0) -> float:
        ratio = v[1:] / v[:-1]
        bad = np.abs(ratio - 1) > 0.5
        total = float(np.sum(np.angle(ratio[~bad])))
        if depth > 12 and np.any(bad):
            raise SymbolError("argument of f turns too fast to follow on the superlevel arc")
        for k in np.flatnonzero(bad):
            sub = np.linspace(t[k], t[k + 1], 17)
            vals = np.asarray(self.f(sub), dtype=complex)
            vals[0], vals[-1] = v[k], v[k + 1]
            total += self._turning(sub, vals, depth + 1)
        return total

    def extreme_values(self) -> list[float]:
        """Local extreme values of |f|^2, where the superlevel sets change shape."""
        v = self.sq[:-1]
        left, right = np.roll(v, 1), np.roll(v, -1)
        ext = v[((v >= left) & (v >= right)) | ((v <= left) & (v <= right))]
        return sorted(set(np.round(ext, 12).tolist()))


_SCANS: dict[int, _ModulusScan] = {}


def _scan(f: FourierSymbol) -> _ModulusScan:
    cached = _SCANS.get(id(f))
    if cached is None or cached.f is not f:
        if len(_SCANS) > 32:
            _SCANS.clear()
        cached = _SCANS[id(f)] = _ModulusScan(f)
    return cached


def _ssf_point(f: FourierSymbol, x: float) -> complex:
    scan = _scan(f)
    total = sum((scan.log_increment(a, b) for a, b in scan.superlevel_arcs(x)), 0j)
    return total / (TWO_PI * 1j)


def spectral_shift(f: FourierSymbol, x_grid) -> SpectralShiftFunction:
    """xi(x) = (1/2 pi i) int_{|f|^2 >= x} f'/f dt; the imaginary part is kept as a residual."""
    x = np.asarray(x_grid, dtype=float)
    if np.any(x <= 0):
        raise ValueError("the spectral shift grid must be positive")
    vals = np.array([_ssf_point(f, xi) for xi in x])
    return SpectralShiftFunction(x, vals.real, "boundary", np.abs(vals.imag))


def _ring_average(counter, x: float, f: FourierSymbol) -> float:
    """Average over theta of an integer-valued function of w = sqrt(x) e^{i theta}.

    The function only changes where the ring meets the curve, at the angles
    arg f(t) with |f(t)|^2 = x, so it is evaluated once per arc between them.
    """
    r = math.sqrt(x)
    angles = sorted(float(np.angle(complex(f(t)))) % TWO_PI for t in _scan(f).crossings(x))
    if not angles:
        return float(counter(r))
    ends = angles + [angles[0] + TWO_PI]
    total = 0.0
    for a, b in zip(ends[:-1], ends[1:]):
        if b - a < 1e-12:
            continue
        total += (b - a) * counter(r * np.exp(0.5j * (a + b)))
    return total / TWO_PI


def ssf_from_principal(f: FourierSymbol, x_grid) -> SpectralShiftFunction:
    """xi(x) = (1/2 pi) int g(sqrt(x) e^{i theta}) d theta."""
    x = np.asarray(x_grid, dtype=float)
    vals = np.array([_ring_average(lambda w: principal_function(f, w), xi, f) for xi in x])
    return SpectralShiftFunction(x, vals, "principal_function")


def _multiplicity(f: FourierSymbol):
    """w -> number of solutions of F(z) = w in the disk."""
    if f.evaluator is None:
        c = np.trim_zeros(f.coeffs[f.degree :], "b")

        def count(w):
            if c.size <= 1:
                return 0
            p = c.copy()
            p[0] -= w
            return int(np.sum(np.abs(np.roots(p[::-1])) < 1))

        return count
    # argument principle on the boundary values
    return lambda w: winding_number(f, w)


def ssf_pushforward(f: FourierSymbol, x_grid) -> SpectralShiftFunction:
    """xi(x) as the density of the pushforward of area under F, i.e. the ring average of the multiplicity."""
    if not f.is_analytic():
        raise SymbolError("the pushforward route needs an analytic symbol")
    x = np.asarray(x_grid, dtype=float)
    count = _multiplicity(f)
    vals = np.array([_ring_average(count, xi, f) for xi in x])
    return SpectralShiftFunction(x, vals, "pushforward")


# Krein's trace formula

@dataclass(frozen=True)
class KreinCheck:
    matrix_trace: TraceResult
    ssf_integral: Route
    boundary_integral: Route
    disk_integral: Route
    agreement: bool
    tolerance: float

    def values(self) -> dict[str, float]:
        return {
            "matrix_trace": self.matrix_trace.value,
            "ssf_integral": self.ssf_integral.value,
            "boundary_integral": self.boundary_integral.value,
            "disk_integral": self.disk_integral.value,
        }

    def to_json(self) -> dict:
        return {
            "matrix_trace": self.matrix_trace.to_json(),
            "ssf_integral": self.ssf_integral.to_json(),
            "boundary_integral": self.boundary_integral.to_json(),
            "disk_integral": self.disk_integral.to_json(),
            "agreement": self.agreement,
            "tolerance": self.tolerance,
        }


def ssf_integral(f: FourierSymbol, phi: ScalarFunction, order: int = 64) -> Route:
    """int phi'(x) xi(x) dx over (0, ||f||_inf^2], with xi from the boundary route.

    Between consecutive critical values of |f|^2 the substitution
    x = a + (b - a)(1 - cos u)/2 absorbs the square-root edges of xi; the
    error is the change from order/2 to order Gauss nodes.
    """
    scan = _scan(f)
    top = float(np.max(scan.sq))
    edges = [0.0, *[v for v in scan.extreme_values() if 0 < v < top], top]

    def rule(m: int) -> float:
        u, w = np.polynomial.legendre.leggauss(m)
        total = 0.0
        for a, b in zip(edges[:-1], edges[1:]):
            if b - a <= 1e-14 * top:
                continue
            theta = 0.5 * math.pi * (u + 1)
            x = a + 0.5 * (b - a) * (1 - np.cos(theta))
            jac = 0.25 * math.pi * (b - a) * np.sin(theta)
            vals = np.array([_ssf_point(f, xi).real for xi in x])
            total += float(np.sum(w * jac * phi.derivative(x) * vals))
        return total

    full, half = rule(order), rule(order // 2)
    return Route("ssf_integral", full, abs(full - half))


def krein_check(f: FourierSymbol, phi: ScalarFunction, N: int = 512, tolerance: float = 2e-3,
                nodes: int = DEFAULT_NODES, rings: int = 512, angular: int = 1024) -> KreinCheck:
    """Tr(phi(A) - phi(B)) by the matrix route and by three integral formulas."""
    if phi.variant == "power" and phi.params[0] < 1:
        matrix = om_resolvent_trace(f, OperatorMonotone.power_q(phi.params[0]), N)
    else:
        matrix = trace_phi_difference(f, phi, N)
    ssf = ssf_integral(f, phi)
    bd = boundary_trace_integral(f, phi, nodes)
    boundary = Route("boundary_integral", bd.value.real, bd.abs_error)
    dk = disk_trace_integral(f, phi, "harmonic", rings, angular)
    disk = Route("disk_integral", dk.value.real, dk.abs_error)
    vals = [matrix.value, ssf.value, boundary.value, disk.value]
    agreement = max(vals) - min(vals) <= tolerance
    return KreinCheck(matrix, ssf, boundary, disk, agreement, tolerance)


# closed-form reference values

def gamma_value(p: float) -> float:
    """Tr(|S+1|^p - |S*+1|^p)."""
    return float(gamma(1 + p) / (2 * gamma(1 + p / 2) ** 2))


def elliptic_value(a: float) -> float:
    """Tr(|S+a| - |S*+a|) as an elliptic-type integral."""
    if not a > 0:
        raise ValueError("a must be positive")
    upper = math.pi / 2 if a <= 1 else math.asin(1 / a)
    val, _ = integrate.quad(lambda th: math.sqrt(max(0.0, 1 - (a * math.sin(th)) ** 2)), 0, upper,
                            epsabs=1e-14, epsrel=1e-13)
    return 2 * val / math.pi


def shift_sum_value(n: int) -> float:
    """Tr(|1 + S + ... + S^(n-1)| - |1 + S* + ... + S*^(n-1)|) by the tangent sums."""
    if n < 2:
        raise ValueError("n must be at least 2")
    if n % 2 == 0:
        return (n - 1) / math.pi * sum(math.tan((j + 0.5) * math.pi / n) / (j + 0.5) for j in range(n // 2))
    tail = sum(math.tan(j * math.pi / n) / j for j in range(1, (n - 1) // 2 + 1))
    return (n - 1) / (2 * n) + (n - 1) / math.pi * tail


def twisted_power_witten(n: int, alpha: float) -> float:
    return -n - alpha / 2


def rational_witten(zeros, poles) -> float:
    """sum of pole orders inside - zero orders inside - half the zero orders on the circle."""
    inside_poles = sum(m for b, m in poles if abs(b) < 1 - 1e-12)
    inside = sum(m for a, m in zeros if abs(a) < 1 - 1e-12)
    circle = sum(m for a, m in zeros if abs(abs(a) - 1) <= 1e-12)
    return float(inside_poles - inside - 0.5 * circle)


def helton_howe_monomial(m: int, n: int, h: FourierSymbol) -> complex:
    """Tr(T_h [T_{e_-m}, T_{e_n}]) = min(m, n) h^(m - n)."""
    return min(m, n) * complex(h.coefficient(m - n))


def _elliptic_small(a: float) -> float:
    if not 0 < a < 1:
        raise ValueError("elliptic_small_a needs 0 < a < 1")
    return elliptic_value(a)


def _elliptic_large(a: float) -> float:
    if not a > 1:
        raise ValueError("elliptic_large_a needs a > 1")
    return elliptic_value(a)


def _shift_sum_even(n: int) -> float:
    if n % 2:
        raise ValueError("shift_sum_even needs even n")
    return shift_sum_value(n)


def _shift_sum_odd(n: int) -> float:
    if n % 2 == 0:
        raise ValueError("shift_sum_odd needs odd n")
    return shift_sum_value(n)


CLOSED_FORMS = {
    "gamma": gamma_value,
    "elliptic_small_a": _elliptic_small,
    "elliptic_large_a": _elliptic_large,
    "shift_sum_even": _shift_sum_even,
    "shift_sum_odd": _shift_sum_odd,
    "anyv": twisted_power_witten,
    "rational": rational_witten,
    "helton_howe_monomials": helton_howe_monomial,
}


def closed_forms(example_id: str, **params):
    try:
        fn = CLOSED_FORMS[example_id]
    except KeyError:
        raise KeyError(f"unknown example id {example_id!r}; known: {sorted(CLOSED_FORMS)}") from None
    return fn(**params)


__all__ = [
    "IndexReport", "KreinCheck", "Route", "SpectralShiftFunction", "CLOSED_FORMS", "closed_forms",
    "elliptic_value", "fredholm_index", "gamma_value", "heat_limit", "krein_check", "principal_function",
    "rational_witten", "schatten_limit", "shift_sum_value", "spectral_shift", "ssf_from_principal", "ssf_integral",
    "ssf_pushforward", "twisted_power_witten", "winding_number", "witten_index", "QuadratureError",
]
