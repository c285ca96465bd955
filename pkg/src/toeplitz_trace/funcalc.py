"""Scalar functions of Hermitian matrices and the matrix side of the trace formulas."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np
import scipy.linalg as sla
from scipy import integrate

from .operators import product_sections
from .symbol import FourierSymbol, circle_zeros, from_family, sobolev_half_norm, sup_norm

CLIP_TOL = 1e-10
ROUNDOFF_TOL = 1e-13  # negatives this small are clipped without a warning


class DomainError(ValueError):
    """A matrix eigenvalue falls outside the domain of the scalar function."""


@dataclass(frozen=True, eq=False)
class ScalarFunction:
    """A function on [0, inf) applied to spectra.

    ``power`` with parameter q is x -> x**q, so the Schatten-type trace
    Tr(|T|^p - |T^*|^p) uses q = p/2.
    """

    variant: str
    params: tuple = ()
    smoothness: str = "holomorphic"
    fn: Callable | None = field(default=None, repr=False)
    dfn: Callable | None = field(default=None, repr=False)

    # constructors
    @classmethod
    def power(cls, q: float) -> "ScalarFunction":
        if not q > 0:
            raise ValueError("power exponent must be positive")
        q = float(q)
        smooth = "holomorphic" if q.is_integer() else ("op_monotone" if q < 1 else "W1")
        return cls("power", (q,), smooth)

    @classmethod
    def exp_heat(cls, s: float) -> "ScalarFunction":
        if not s > 0:
            raise ValueError("heat parameter must be positive")
        return cls("exp_heat", (float(s),))

    @classmethod
    def polynomial(cls, coefficients) -> "ScalarFunction":
        c = tuple(float(v) for v in coefficients)
        if not c:
            raise ValueError("empty polynomial")
        return cls("polynomial", c)

    @classmethod
    def resolvent(cls, lam: float) -> "ScalarFunction":
        if not lam > 0:
            raise ValueError("resolvent parameter must be positive")
        return cls("resolvent", (float(lam),), "op_monotone")

    @classmethod
    def custom(cls, fn, dfn, smoothness: str = "W1", name: str = "custom") -> "ScalarFunction":
        return cls("custom", (name,), smoothness, fn, dfn)

    @classmethod
    def identity(cls) -> "ScalarFunction":
        return cls.polynomial([0.0, 1.0])

    # evaluation
    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        v, p = self.variant, self.params
        if v == "power":
            return np.power(np.maximum(x, 0.0), p[0])
        if v == "exp_heat":
            return np.exp(-p[0] * x)
        if v == "polynomial":
            return np.polynomial.polynomial.polyval(x, p)
        if v == "resolvent":
            return x / (p[0] + x)
        return np.asarray(self.fn(x), dtype=float)

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        v, p = self.variant, self.params
        if v == "power":
            with np.errstate(divide="ignore"):
                return p[0] * np.power(np.maximum(x, 0.0), p[0] - 1)
        if v == "exp_heat":
            return -p[0] * np.exp(-p[0] * x)
        if v == "polynomial":
            return np.polynomial.polynomial.polyval(x, np.polynomial.polynomial.polyder(p)) if len(p) > 1 else 0 * x
        if v == "resolvent":
            return p[0] / (p[0] + x) ** 2
        return np.asarray(self.dfn(x), dtype=float)

    def divided(self, x):
        """(phi(x) - phi(0)) / x, continued by phi'(0) at x = 0."""
        x = np.asarray(x, dtype=float)
        v, p = self.variant, self.params
        if v == "power":
            with np.errstate(divide="ignore"):
                return np.power(np.maximum(x, 0.0), p[0] - 1)
        if v == "exp_heat":
            s = p[0]
            with np.errstate(invalid="ignore", divide="ignore"):
                out = np.expm1(-s * x) / x
            return np.where(x == 0, -s, out)
        if v == "polynomial":
            return np.polynomial.polynomial.polyval(x, p[1:]) if len(p) > 1 else 0 * x
        if v == "resolvent":
            return 1 / (p[0] + x)
        with np.errstate(invalid="ignore", divide="ignore"):
            out = (self(x) - float(self(0.0))) / x
        return np.where(x == 0, self.derivative(np.zeros_like(x)), out)

    @property
    def needs_nonnegative(self) -> bool:
        return self.variant == "power" and not self.params[0].is_integer()

    @property
    def smooth(self) -> bool:
        """Entire (or analytic near the spectrum), so finite sections converge geometrically."""
        return self.variant in ("exp_heat", "polynomial", "resolvent") or (
            self.variant == "power" and self.params[0].is_integer()
        ) or (self.variant == "custom" and self.smoothness == "holomorphic")

    @property
    def polynomial_degree(self) -> int | None:
        if self.variant == "polynomial":
            return len(self.params) - 1
        if self.variant == "power" and self.params[0].is_integer():
            return int(self.params[0])
        return None

    def to_json(self) -> dict:
        v, p = self.variant, self.params
        if v == "power":
            return {"variant": "power", "q": p[0]}
        if v == "exp_heat":
            return {"variant": "exp_heat", "s": p[0]}
        if v == "polynomial":
            return {"variant": "polynomial", "coefficients": list(p)}
        if v == "resolvent":
            return {"variant": "resolvent", "lambda": p[0]}
        return {"variant": "custom", "name": p[0], "smoothness": self.smoothness}

    @classmethod
    def from_json(cls, data: dict) -> "ScalarFunction":
        data = dict(data)
        variant = data.pop("variant", None)
        keys = {
            "power": {"q", "p"},
            "exp_heat": {"s"},
            "polynomial": {"coefficients"},
            "resolvent": {"lambda"},
        }
        if variant not in keys:
            raise ValueError(f"unknown function variant {variant!r}; expected one of {sorted(keys)}")
        extra = set(data) - keys[variant]
        if extra:
            raise ValueError(f"unknown keys for {variant}: {sorted(extra)}")
        if variant == "power":
            if ("q" in data) == ("p" in data):
                raise ValueError("power needs exactly one of q (x**q) or p (Schatten exponent, q = p/2)")
            return cls.power(data["q"] if "q" in data else float(data["p"]) / 2)
        if variant == "exp_heat":
            return cls.exp_heat(data["s"])
        if variant == "polynomial":
            return cls.polynomial(data["coefficients"])
        return cls.resolvent(data["lambda"])


@dataclass(frozen=True, eq=False)
class OperatorMonotone:
    """phi(x) = phi(0) + a x + int x/(lam + x) lam dmu(lam), mu = density + atoms."""

    a: float = 0.0
    phi0: float = 0.0
    density: Callable | None = None
    atoms: tuple[tuple[float, float], ...] = ()
    q: float | None = None

    @classmethod
    def power_q(cls, q: float) -> "OperatorMonotone":
        if not 0 < q < 1:
            raise ValueError("power_q needs 0 < q < 1")
        c = math.sin(q * math.pi) / math.pi
        return cls(0.0, 0.0, lambda lam: c * lam ** (q - 2), (), float(q))

    @classmethod
    def resolvent_atom(cls, lam0: float, weight: float = 1.0) -> "OperatorMonotone":
        return cls(0.0, 0.0, None, ((float(lam0), float(weight)),))

    def __call__(self, x: float) -> float:
        """Reconstruct phi(x) from the representation."""
        total = self.phi0 + self.a * x
        for lam, w in self.atoms:
            total += w * lam * x / (lam + x)
        if self.density is not None and x > 0:
            lo_pow, hi_pow = self.tail_exponents()
            r_lo, r_hi = max(lo_pow + 2, 1e-3), max(-(hi_pow + 1), 1e-3)
            c = math.log(x)
            a, b = c - min(40 / r_lo, 300.0), c + min(40 / r_hi, 300.0)

            def g(u):
                return x / (math.exp(u) + x) * (math.exp(2 * u) * self.density(math.exp(u)))

            val, _ = integrate.quad(g, a, b, limit=400, points=[c], epsabs=1e-13, epsrel=1e-12)
            # both tails are close to pure exponentials in u
            total += val + g(a) / r_lo + g(b) / r_hi
        return total

    def tail_exponents(self) -> tuple[float, float]:
        """Local power laws of the density at 0 and infinity, fitted from samples."""
        if self.density is None:
            return (math.inf, -math.inf)
        lo = math.log(self.density(1e-10) / self.density(1e-12)) / math.log(100)
        hi = math.log(self.density(1e12) / self.density(1e10)) / math.log(100)
        return lo, hi

    def integrable(self) -> bool:
        """int lam/(1+lam) dmu < inf, judged from the fitted tail powers."""
        lo, hi = self.tail_exponents()
        return lo > -2 and hi < -1

    def as_scalar(self) -> ScalarFunction:
        if self.q is not None and not self.atoms and self.a == 0 and self.phi0 == 0:
            return ScalarFunction.power(self.q)
        return ScalarFunction.custom(np.vectorize(self.__call__), None, "op_monotone", "operator_monotone")


# spectral calculus

def _spectrum(H: np.ndarray, phi: ScalarFunction, eigenvectors: bool):
    if eigenvectors:
        w, U = np.linalg.eigh(H)
    else:
        w, U = np.linalg.eigvalsh(H), None
    if phi.needs_nonnegative and w.size:
        scale = max(float(np.max(np.abs(w))), 1e-300)
        low = float(w.min())
        if low < -CLIP_TOL * scale:
            raise DomainError(f"eigenvalue {low:.3e} is negative beyond tolerance for {phi.variant}")
        if low < -ROUNDOFF_TOL * scale:
            warnings.warn(f"clipped eigenvalues down to {low:.3e} to zero", RuntimeWarning, stacklevel=3)
        w = np.maximum(w, 0.0)
    return w, U


def matrix_function(H: np.ndarray, phi: ScalarFunction) -> np.ndarray:
    """U phi(Lambda) U^* for Hermitian H."""
    H = np.asarray(H)
    if not np.allclose(H, H.conj().T, atol=1e-12 * max(1.0, float(np.max(np.abs(H))))):
        raise ValueError("matrix is not Hermitian")
    w, U = _spectrum(H, phi, eigenvectors=True)
    return (U * phi(w)) @ U.conj().T


@lru_cache(maxsize=32)
def _pair_spectra(key: bytes, N: int) -> tuple[np.ndarray, np.ndarray]:
    coeffs = np.frombuffer(key, dtype=complex)
    pair = product_sections(FourierSymbol(coeffs), N)
    a, b = np.linalg.eigvalsh(pair.A), np.linalg.eigvalsh(pair.B)
    # both operators are positive; eigenvalues inside the rounding floor are zeros
    floor = 8 * N * np.finfo(float).eps * max(float(a[-1]), float(b[-1]), 1e-300)
    a = np.where(np.abs(a) < floor, 0.0, a)
    b = np.where(np.abs(b) < floor, 0.0, b)
    a.setflags(write=False)
    b.setflags(write=False)
    return a, b


def pair_spectra(f: FourierSymbol, N: int) -> tuple[np.ndarray, np.ndarray]:
    """Sorted eigenvalues of the section pair, cached per symbol and size."""
    g = f.truncated().trimmed()
    return _pair_spectra(np.ascontiguousarray(g.coeffs).tobytes(), N)


def _trace_from_spectra(a, b, phi: ScalarFunction) -> float:
    if phi.needs_nonnegative:
        scale = max(float(np.max(np.abs(a))), float(np.max(np.abs(b))), 1e-300)
        low = min(float(a.min()), float(b.min()))
        if low < -CLIP_TOL * scale:
            raise DomainError(f"eigenvalue {low:.3e} is negative beyond tolerance")
        a, b = np.maximum(a, 0), np.maximum(b, 0)
    return float(math.fsum(phi(a)) - math.fsum(phi(b)))


@dataclass(frozen=True)
class TraceResult:
    """A matrix-side trace with its finite-section diagnostics."""

    value: float
    error: float
    size: int
    samples: dict = field(default_factory=dict)  # N -> raw section value
    rate: float | None = None  # algebraic rate used for extrapolation, if any
    truncation_error: float = 0.0  # first-order bound from the symbol truncation

    def to_json(self) -> dict:
        return {
            "value": self.value,
            "error": self.error,
            "size": self.size,
            "samples": {str(k): v for k, v in sorted(self.samples.items())},
            "rate": self.rate,
            "truncation_error": self.truncation_error,
        }


def convergence_rate(f: FourierSymbol, phi: ScalarFunction) -> float | None:
    """Algebraic finite-section rate kappa for the pair (f, phi), or None if geometric.

    For phi = x**q with q not an integer, the section error near a circle zero of
    order beta behaves like N^(-q beta); smooth phi or zero-free f converge geometrically.
    """
    if phi.smooth:
        return None
    if phi.variant != "power":
        return 1.0
    zeros = circle_zeros(f.truncated() if f.family is None else f)
    betas = [z.beta for z in zeros if z.profiled]
    if not zeros:
        return None
    if len(betas) < len(zeros):
        return 1.0
    return phi.params[0] * min(betas)


def richardson(values: dict, rate: float | None) -> tuple[float, float]:
    """Combine section values at N, 2N (and N/2 when present) into (estimate, error)."""
    sizes = sorted(values)
    if len(sizes) == 1:
        return values[sizes[0]], math.inf
    if rate is None:
        return values[sizes[-1]], abs(values[sizes[-1]] - values[sizes[-2]])
    r = 2.0**rate

    def extrap(n1, n2):
        return (r * values[n2] - values[n1]) / (r - 1)

    best = extrap(sizes[-2], sizes[-1])
    if len(sizes) >= 3:
        err = abs(best - extrap(sizes[-3], sizes[-2])) / (r - 1)
    else:
        err = abs(best - values[sizes[-1]])
    return best, err


def _truncation_bound(f: FourierSymbol, phi: ScalarFunction) -> float:
    if f.evaluator is None or f.exact:
        return 0.0
    nf = sobolev_half_norm(f)
    nd = sobolev_half_norm(f.truncated())
    top = sup_norm(f) ** 2
    xs = np.linspace(0, top, 257)
    lip = float(np.max(np.abs(phi.derivative(xs))))
    return lip * f.tail_sobolev * (nf + nd)


def _section_sizes(N: int, richardson_on: bool, rate) -> list[int]:
    if not richardson_on:
        return [N]
    if rate is not None and N >= 8:
        return [N // 2, N, 2 * N]
    return [N, 2 * N]


def trace_phi_difference(f: FourierSymbol, phi: ScalarFunction, N: int, richardson_on: bool = True) -> TraceResult:
    """Tr(phi(A_N) - phi(B_N)) with a finite-section extrapolation in N."""
    rate = convergence_rate(f, phi) if richardson_on else None
    values = {}
    for n in _section_sizes(N, richardson_on, rate):
        a, b = pair_spectra(f, n)
        values[n] = _trace_from_spectra(a, b, phi)
    value, err = richardson(values, rate)
    if not richardson_on:
        err = 0.0
    return TraceResult(value, err, max(values), values, rate, _truncation_bound(f, phi))


def heat_trace(f: FourierSymbol, s: float, N: int, richardson_on: bool = True) -> TraceResult:
    """Tr(exp(-sB) - exp(-sA)); equals 1 - exp(-s) for the shift."""
    r = trace_phi_difference(f, ScalarFunction.exp_heat(s), N, richardson_on)
    return TraceResult(-r.value, r.error, r.size, {k: -v for k, v in r.samples.items()}, r.rate, r.truncation_error)


def _resolvent_difference(a: np.ndarray, b: np.ndarray, lam) -> np.ndarray:
    """Tr((lam + B)^-1 - (lam + A)^-1) for a vector of lam.

    With both spectra sorted, A - B has finite rank, so the eigenvalues
    interlace and the paired form avoids cancellation between the two sums.
    """
    lam = np.atleast_1d(np.asarray(lam, dtype=float))[:, None]
    return np.sum((a - b)[None, :] / ((lam + a[None, :]) * (lam + b[None, :])), axis=1)


_GL16 = np.polynomial.legendre.leggauss(16)
_GL8 = np.polynomial.legendre.leggauss(8)


def _panel_rule(func, lo: float, hi: float, width: float, rule) -> float:
    edges = np.linspace(lo, hi, max(2, int(math.ceil((hi - lo) / width)) + 1))
    x, w = rule
    a, b = edges[:-1, None], edges[1:, None]
    nodes = (0.5 * (b - a) * x + 0.5 * (a + b)).ravel()
    weights = (0.5 * (b - a) * w).ravel()
    total = 0.0
    for start in range(0, nodes.size, 4096):
        sl = slice(start, start + 4096)
        total += float(np.sum(weights[sl] * func(nodes[sl])))
    return total


def _om_from_spectra(a, b, phi: OperatorMonotone) -> tuple[float, float]:
    a = np.sort(np.maximum(a, 0.0))
    b = np.sort(np.maximum(b, 0.0))
    total = phi.a * float(np.sum(a - b))
    for lam, w in phi.atoms:
        total += w * lam**2 * float(_resolvent_difference(a, b, lam)[0])
    err = 0.0
    if phi.density is None:
        return total, err
    positive = np.concatenate([a[a > 0], b[b > 0]])
    top = float(positive.max()) if positive.size else 1.0
    bottom = float(positive.min()) if positive.size else 1.0
    lo_pow, hi_pow = phi.tail_exponents()
    # integrand in u = log lam behaves like exp((lo_pow + 2) u) near 0 when kernels are unbalanced,
    # and like exp((hi_pow + 1) u) at infinity
    lo_rate = max(lo_pow + 2, 1e-3)
    hi_rate = max(-(hi_pow + 1), 1e-3)
    # -340 keeps lam^2 and lam^(q-2) inside double range for every q in (0, 1)
    u_lo = max(math.log(bottom) + math.log(1e-15 * lo_rate) / lo_rate, -340.0)
    u_hi = min(math.log(top) - math.log(1e-15 * hi_rate) / hi_rate, 700.0)
    u_lo, u_hi = min(u_lo, -30.0), max(u_hi, 30.0)

    def integrand(u):
        lam = np.exp(u)
        return _resolvent_difference(a, b, lam) * lam * (lam**2 * phi.density(lam))

    # each eigenvalue contributes a sigmoid of unit width in u, so half-unit panels resolve it
    val = _panel_rule(integrand, u_lo, u_hi, 0.5, _GL16)
    coarse = _panel_rule(integrand, u_lo, u_hi, 0.5, _GL8)
    tail = abs(float(integrand(u_lo)[0])) / lo_rate + abs(float(integrand(u_hi)[0])) / hi_rate
    return total + val, abs(val - coarse) + tail


def om_resolvent_trace(f: FourierSymbol, phi: OperatorMonotone, N: int, richardson_on: bool = True) -> TraceResult:
    """Tr(phi(A_N) - phi(B_N)) through the resolvent integral of the operator-monotone representation."""
    rate = convergence_rate(f, phi.as_scalar()) if richardson_on and phi.q is not None else None
    values, qerrs = {}, []
    for n in _section_sizes(N, richardson_on, rate):
        a, b = pair_spectra(f, n)
        v, e = _om_from_spectra(a, b, phi)
        values[n] = v
        qerrs.append(e)
    value, err = richardson(values, rate)
    if not richardson_on:
        err = 0.0
    return TraceResult(value, err + max(qerrs), max(values), values, rate, _halved_degree_change(f, phi, N))


def _halved_degree_change(f: FourierSymbol, phi: OperatorMonotone, N: int) -> float:
    """Change in the trace when a family symbol is truncated at half its degree.

    x^q with q < 1 is not Lipschitz at 0, so the first-order truncation bound is
    infinite; this empirical estimate replaces it. It understates the error when
    the coefficients decay only logarithmically.
    """
    if f.family is None or f.evaluator is None or f.exact or f.degree < 2:
        return 0.0
    mode = f.truncation if f.truncation in ("raw", "fejer") else "raw"
    coarse = from_family(f.family, f.degree // 2, mode)
    full_value, _ = _om_from_spectra(*pair_spectra(f, N), phi)
    coarse_value, _ = _om_from_spectra(*pair_spectra(coarse, N), phi)
    return abs(full_value - coarse_value)


def _psd_root(D: np.ndarray, what: str) -> np.ndarray:
    w, U = np.linalg.eigh(D)
    scale = max(float(np.max(np.abs(w))), 1e-300) if w.size else 1.0
    if w.size and w.min() < -CLIP_TOL * scale:
        raise DomainError(f"{what} is not positive semidefinite (eigenvalue {w.min():.3e})")
    return (U * np.sqrt(np.maximum(w, 0))) @ U.conj().T


def check_qtrace(A: np.ndarray, B: np.ndarray, q: float) -> tuple[float, float]:
    """(Tr(A^q - B^q), Tr((A - B)^q)) for A >= B >= 0."""
    if not 0 < q < 1:
        raise ValueError("q must lie in (0, 1)")
    D = A - B
    _psd_root(D, "A - B")
    phi = ScalarFunction.power(q)
    wa, _ = _spectrum(A, phi, False)
    wb, _ = _spectrum(B, phi, False)
    wd, _ = _spectrum(D, phi, False)
    lhs = float(math.fsum(phi(wa)) - math.fsum(phi(wb)))
    rhs = float(math.fsum(phi(wd)))
    return lhs, rhs


def perturbation_log_trace(A: np.ndarray, B: np.ndarray, lam: float) -> float:
    """Tr log(1 + D^{1/2} (lam + B)^{-1} D^{1/2}) with D = A - B >= 0."""
    if not lam > 0:
        raise ValueError("lambda must be positive")
    root = _psd_root(A - B, "A - B")
    inner = sla.solve(lam * np.eye(B.shape[0]) + B, root, assume_a="pos")
    M = root.conj().T @ inner
    w = np.linalg.eigvalsh(0.5 * (M + M.conj().T))
    return float(math.fsum(np.log1p(np.maximum(w, 0.0))))
