"""Named parametric symbols with closed-form evaluators.

Every family exposes the same small protocol: pointwise values, derivative and
logarithmic derivative on the circle, a truncated coefficient vector with tail
estimates, the analytic extension when it exists, exact zero profiles when they
are known in closed form, and (for Besov analysis) local logarithmic germs at
boundary singularities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, ClassVar

import numpy as np

from .profile import SymbolError, ZeroProfile, unprofiled

TWO_PI = 2 * math.pi
_UNIT_TOL = 1e-12


def wrap_angle(t):
    """Map angles into [-pi, pi)."""
    return np.mod(np.asarray(t, dtype=float) + math.pi, TWO_PI) - math.pi


@dataclass(frozen=True)
class Coefficients:
    """Degree-d truncation of a family's Fourier series."""

    values: np.ndarray  # index n lives at values[n + d]
    residual: float  # estimate of sum_{|n|>d} |c_n|
    tail_sobolev: float  # estimate of sqrt(sum_{|n|>d} (1+|n|) |c_n|^2)


@dataclass(frozen=True)
class BoundaryGerm:
    """Local logarithm of an analytic symbol near a boundary singularity.

    With ``z = point * (1 - exp(ell))`` the symbol equals ``exp(log_value(ell))``
    for ``Re ell`` very negative inside the disk.
    """

    point: complex
    log_value: Callable[[np.ndarray], np.ndarray]


def _fft_coefficients(evaluate, degree: int, nodes: int) -> Coefficients:
    """Coefficients from samples; tail quantities come from the unused modes."""
    t = TWO_PI * np.arange(nodes) / nodes
    c = np.fft.fft(evaluate(t)) / nodes
    n = np.fft.fftfreq(nodes, 1.0 / nodes).astype(int)
    keep = np.abs(n) <= degree
    out = np.zeros(2 * degree + 1, dtype=complex)
    out[n[keep] + degree] = c[keep]
    tail = ~keep
    residual = float(np.sum(np.abs(c[tail])))
    tail_sob = float(np.sqrt(np.sum((1 + np.abs(n[tail])) * np.abs(c[tail]) ** 2)))
    return Coefficients(out, residual, tail_sob)


class Family:
    """Shared protocol; subclasses fill in the closed forms."""

    variant: ClassVar[str] = ""

    def params(self) -> dict:
        raise NotImplementedError

    def to_json(self) -> dict:
        return {"variant": self.variant, **self.params()}

    # circle side
    def evaluate(self, t):
        raise NotImplementedError

    def derivative(self, t):
        raise NotImplementedError

    def log_derivative(self, t):
        return self.derivative(t) / self.evaluate(t)

    def coefficients(self, degree: int) -> Coefficients:
        raise NotImplementedError

    # disk side
    @property
    def analytic(self) -> bool:
        return False

    def analytic_value(self, z):
        raise SymbolError(f"{self.variant} symbol has no analytic extension")

    def analytic_derivative(self, z):
        raise SymbolError(f"{self.variant} symbol has no analytic extension")

    def zero_profiles(self) -> list[ZeroProfile] | None:
        """Exact profiles, or None when the zeros must be located numerically."""
        return None

    def boundary_germs(self) -> list[BoundaryGerm]:
        return []

    def witten_closed_form(self) -> float | None:
        return None


def _merge_roots(roots) -> tuple[tuple[complex, int], ...]:
    merged: list[list] = []
    for r, k in roots:
        r = complex(r)
        for entry in merged:
            if abs(entry[0] - r) < 1e-14:
                entry[1] += int(k)
                break
        else:
            merged.append([r, int(k)])
    return tuple((r, k) for r, k in merged)


@dataclass(frozen=True)
class Rational(Family):
    """c * prod (z - a_k)^{n_k} / prod (z - b_j)^{m_j} restricted to the circle."""

    variant: ClassVar[str] = "rational"
    c: complex = 1.0
    zeros: tuple[tuple[complex, int], ...] = ()
    poles: tuple[tuple[complex, int], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "c", complex(self.c))
        object.__setattr__(self, "zeros", _merge_roots(self.zeros))
        object.__setattr__(self, "poles", _merge_roots(self.poles))
        if self.c == 0:
            raise SymbolError("rational symbol with c = 0")
        for a, k in self.zeros + self.poles:
            if k < 1:
                raise SymbolError("multiplicities must be positive integers")
        for b, _ in self.poles:
            if abs(abs(b) - 1.0) < _UNIT_TOL:
                raise SymbolError(f"pole {b} lies on the unit circle")
        for b, _ in self.poles:
            for a, _ in self.zeros:
                if abs(a - b) < 1e-14:
                    raise SymbolError(f"zero and pole coincide at {a}")

    def params(self):
        enc = lambda roots: [[r.real, r.imag, k] for r, k in roots]
        return {"c": [self.c.real, self.c.imag], "zeros": enc(self.zeros), "poles": enc(self.poles)}

    def _num_den(self):
        num = np.array([1.0 + 0j])
        for a, k in self.zeros:
            for _ in range(k):
                num = np.polymul(num, [1.0, -a])
        den = np.array([1.0 + 0j])
        for b, k in self.poles:
            for _ in range(k):
                den = np.polymul(den, [1.0, -b])
        return self.c * num, den

    def analytic_value(self, z):
        # product form keeps relative accuracy next to the zeros
        z = np.asarray(z, dtype=complex)
        out = np.full(z.shape, self.c, dtype=complex)
        for a, k in self.zeros:
            out = out * (z - a) ** k
        for b, k in self.poles:
            out = out / (z - b) ** k
        return out

    def _derivative_z(self, z):
        num, den = self._num_den()
        n, d = np.polyval(num, z), np.polyval(den, z)
        dn, dd = np.polyval(np.polyder(num), z), np.polyval(np.polyder(den), z)
        return (dn * d - n * dd) / d**2

    def analytic_derivative(self, z):
        if not self.analytic:
            super().analytic_derivative(z)
        return self._derivative_z(z)

    @property
    def analytic(self):
        return all(abs(b) > 1 for b, _ in self.poles)

    def evaluate(self, t):
        return self.analytic_value(np.exp(1j * np.asarray(t, dtype=float)))

    def derivative(self, t):
        z = np.exp(1j * np.asarray(t, dtype=float))
        return 1j * z * self._derivative_z(z)

    def log_derivative(self, t):
        z = np.exp(1j * np.asarray(t, dtype=float))
        acc = np.zeros_like(z)
        for a, k in self.zeros:
            acc = acc + k / (z - a)
        for b, k in self.poles:
            acc = acc - k / (z - b)
        return 1j * z * acc

    def coefficients(self, degree):
        nonzero_poles = [(b, k) for b, k in self.poles if b != 0]
        if not nonzero_poles:
            num, _ = self._num_den()
            shift = sum(k for b, k in self.poles if b == 0)
            powers = np.arange(len(num) - 1, -1, -1) - shift
            out = np.zeros(2 * degree + 1, dtype=complex)
            keep = np.abs(powers) <= degree
            out[powers[keep] + degree] = num[keep]
            lost = num[~keep]
            lost_pow = powers[~keep]
            return Coefficients(
                out,
                float(np.sum(np.abs(lost))),
                float(np.sqrt(np.sum((1 + np.abs(lost_pow)) * np.abs(lost) ** 2))),
            )
        rho = max(min(abs(b), 1 / abs(b)) for b, _ in nonzero_poles)
        want = max(4 * (degree + 1), int(math.ceil(2 * 40 / -math.log(rho))) if rho > 0 else 0)
        nodes = 1 << max(10, int(math.ceil(math.log2(want))))
        nodes = min(nodes, 1 << 22)
        return _fft_coefficients(self.evaluate, degree, nodes)

    def circle_zeros(self):
        return [(a, k) for a, k in self.zeros if abs(abs(a) - 1.0) < _UNIT_TOL]

    def zero_profiles(self):
        on_circle = self.circle_zeros()
        profiles = []
        angles = [math.atan2(a.imag, a.real) % TWO_PI for a, _ in on_circle]
        for idx, (a, k) in enumerate(on_circle):
            h = abs(self.c) ** 2
            for a2, k2 in self.zeros:
                if a2 != a:
                    h *= abs(a - a2) ** (2 * k2)
            for b, m in self.poles:
                h /= abs(a - b) ** (2 * m)
            # window: stay clear of neighbouring zeros and of nearby off-circle features
            sep = math.pi / 2
            for jdx, other in enumerate(angles):
                if jdx != idx:
                    gap = abs((other - angles[idx] + math.pi) % TWO_PI - math.pi)
                    sep = min(sep, 0.5 * gap)
            for r, _ in self.zeros + self.poles:
                if abs(r - a) > 0 and abs(abs(r) - 1.0) >= _UNIT_TOL:
                    sep = min(sep, abs(r - a))
            profiles.append(ZeroProfile(angles[idx], 2.0 * k, complex(k), h, sep))
        return profiles

    def witten_closed_form(self):
        inside_poles = sum(m for b, m in self.poles if abs(b) < 1)
        inside_zeros = sum(k for a, k in self.zeros if abs(a) < 1 - _UNIT_TOL)
        circle = sum(k for _, k in self.circle_zeros())
        return float(inside_poles - inside_zeros - 0.5 * circle)


@dataclass(frozen=True)
class TwistedPower(Family):
    """exp(i n t) (1 + exp(i t))^alpha with the principal power."""

    variant: ClassVar[str] = "twisted_power"
    n: int = 0
    alpha: float = 1.0

    def __post_init__(self):
        if int(self.n) != self.n:
            raise SymbolError("twist n must be an integer")
        object.__setattr__(self, "n", int(self.n))
        if not self.alpha > 0:
            raise SymbolError("alpha must be positive")
        object.__setattr__(self, "alpha", float(self.alpha))

    def params(self):
        return {"n": self.n, "alpha": self.alpha}

    def _onepz(self, tw, power):
        # (1 + e^{it})^power = (2 cos(t/2))^power e^{i power t/2} for t in [-pi, pi)
        with np.errstate(divide="ignore", invalid="ignore"):
            return (2 * np.cos(tw / 2)) ** power * np.exp(0.5j * power * tw)

    def evaluate(self, t):
        t = np.asarray(t, dtype=float)
        return np.exp(1j * self.n * t) * self._onepz(wrap_angle(t), self.alpha)

    def derivative(self, t):
        t = np.asarray(t, dtype=float)
        tw = wrap_angle(t)
        z = np.exp(1j * t)
        lead = 1j * self.n * self._onepz(tw, self.alpha) if self.n else 0.0
        if self.alpha == 1.0:
            tail = 1j * z
        else:
            tail = 1j * self.alpha * z * self._onepz(tw, self.alpha - 1)
        return np.exp(1j * self.n * t) * (lead + tail)

    def log_derivative(self, t):
        tw = wrap_angle(t)
        with np.errstate(divide="ignore"):
            return 1j * (self.n + self.alpha / 2) - 0.5 * self.alpha * np.tan(tw / 2)

    def coefficients(self, degree):
        if abs(self.n) > degree:
            raise SymbolError(f"truncation degree {degree} is below the twist {self.n}")
        a = self.alpha
        top = degree - self.n  # largest binomial index kept
        horizon = max(64 * (top + 1), 4096)
        j = np.arange(horizon + 1)
        ratios = np.ones(horizon + 1)
        ratios[1:] = (a - j[:-1]) / j[1:]
        binom = np.cumprod(ratios)
        out = np.zeros(2 * degree + 1, dtype=complex)
        lo = max(0, -degree - self.n)
        out[self.n + np.arange(lo, top + 1) + degree] = binom[lo : top + 1]
        if float(a).is_integer() and top >= a:
            return Coefficients(out, 0.0, 0.0)
        rest = binom[top + 1 :]
        idx = self.n + j[top + 1 :]
        residual = float(np.sum(np.abs(rest)))
        sob = float(np.sum((1 + np.abs(idx)) * rest**2))
        # |binom(a, j)| ~ C j^{-a-1}; close the sums analytically past the horizon
        last = abs(binom[-1])
        if last > 0:
            C = last * horizon ** (a + 1)
            residual += C * horizon ** (-a) / a
            sob += C**2 * horizon ** (-2 * a) / (2 * a)
        return Coefficients(out, residual, math.sqrt(sob))

    @property
    def analytic(self):
        return self.n >= 0

    def analytic_value(self, z):
        if not self.analytic:
            super().analytic_value(z)
        z = np.asarray(z, dtype=complex)
        return z**self.n * (1 + z) ** self.alpha

    def analytic_derivative(self, z):
        if not self.analytic:
            super().analytic_derivative(z)
        z = np.asarray(z, dtype=complex)
        a, n = self.alpha, self.n
        head = n * z ** (n - 1) * (1 + z) ** a if n else 0.0
        return head + a * z**n * (1 + z) ** (a - 1)

    def zero_profiles(self):
        return [ZeroProfile(math.pi, 2 * self.alpha, complex(self.alpha), 1.0, math.pi / 2)]

    def boundary_germs(self):
        n, a = self.n, self.alpha
        if float(a).is_integer():
            return []  # a polynomial, analytic across the circle

        def log_value(ell):
            # z = -1 + e^ell, so log z = i pi + log(1 - e^ell) on this local branch
            return n * (1j * math.pi + np.log1p(-np.exp(ell))) + a * ell

        return [BoundaryGerm(-1.0 + 0j, log_value)]

    def witten_closed_form(self):
        return -self.n - self.alpha / 2


def _log_psi_circle(t):
    tw = wrap_angle(t)
    with np.errstate(divide="ignore", invalid="ignore"):
        L = np.log(2 * np.cos(tw / 2)) + 0.5j * tw
        return 1j * tw - np.log(L), L


def _psi_disk(z):
    z = np.asarray(z, dtype=complex)
    L = np.log1p(z)
    small = np.abs(z) < 1e-8
    with np.errstate(divide="ignore", invalid="ignore"):
        psi = np.where(small, 1 + z / 2, z / np.where(small, 1, L))
        # psi'/psi = 1/z - 1/((1+z) L)
        dlog = np.where(small, 0.5 - 5 * z / 12, 1 / np.where(small, 1, z) - 1 / ((1 + z) * np.where(small, 1, L)))
    return psi, dlog


@dataclass(frozen=True)
class LogPower(Family):
    """psi^alpha (form "psi_power") or 1/(C - log psi) (form "inverse_log"), psi(z) = z/log(1+z)."""

    variant: ClassVar[str] = "log_power"
    alpha: float = 1.0
    C: float = 2.0
    form: str = "psi_power"

    def __post_init__(self):
        if self.form not in ("psi_power", "inverse_log"):
            raise SymbolError(f"unknown log_power form {self.form!r}")
        if self.form == "psi_power" and not self.alpha > 0:
            raise SymbolError("alpha must be positive")
        if self.form == "inverse_log":
            # C - log psi stays in the right half plane iff C beats sup Re log psi,
            # which by the maximum principle is attained on the circle
            lp, _ = _log_psi_circle(np.linspace(-math.pi, math.pi, 8193)[1:-1])
            if not self.C > float(np.max(lp.real)):
                raise SymbolError(f"C={self.C} lets C - log psi vanish on the disk")

    def params(self):
        return {"alpha": self.alpha, "C": self.C, "form": self.form}

    def _from_log_psi(self, lp):
        if self.form == "psi_power":
            return np.exp(self.alpha * lp)
        return 1.0 / (self.C - lp)

    def _log_derivative_factor(self, lp):
        # d log F / d log psi
        if self.form == "psi_power":
            return self.alpha
        return 1.0 / (self.C - lp)

    def evaluate(self, t):
        lp, _ = _log_psi_circle(t)
        with np.errstate(invalid="ignore", over="ignore"):
            out = self._from_log_psi(lp)
        tw = wrap_angle(t)
        return np.where(tw <= -math.pi, 0.0, out)

    def log_derivative(self, t):
        t = np.asarray(t, dtype=float)
        z = np.exp(1j * t)
        lp, L = _log_psi_circle(t)
        with np.errstate(divide="ignore", invalid="ignore"):
            dlog_psi = 1 / z - 1 / ((1 + z) * L)
            return 1j * z * self._log_derivative_factor(lp) * dlog_psi

    def derivative(self, t):
        with np.errstate(invalid="ignore"):
            out = self.evaluate(t) * self.log_derivative(t)
        return np.where(np.isfinite(out), out, 0.0)

    def coefficients(self, degree):
        nodes = 1 << max(16, int(math.ceil(math.log2(16 * (degree + 1)))))
        return _fft_coefficients(self.evaluate, degree, nodes)

    @property
    def analytic(self):
        return True

    def analytic_value(self, z):
        psi, _ = _psi_disk(z)
        return self._from_log_psi(np.log(psi))

    def analytic_derivative(self, z):
        psi, dlog = _psi_disk(z)
        lp = np.log(psi)
        return self._from_log_psi(lp) * self._log_derivative_factor(lp) * dlog

    def zero_profiles(self):
        return [unprofiled(math.pi)]

    def boundary_germs(self):
        def log_psi(ell):
            # psi = (1 - e^ell)/(-ell) near z = -1, real and positive for real ell < 0
            return np.log1p(-np.exp(ell)) - np.log(-ell)

        if self.form == "psi_power":
            a = self.alpha
            return [BoundaryGerm(-1.0 + 0j, lambda ell: a * log_psi(ell))]
        C = self.C
        return [BoundaryGerm(-1.0 + 0j, lambda ell: -np.log(C - log_psi(ell)))]


class _PolynomialAlias(Family):
    """Families that are special polynomials; the rational form carries the analysis."""

    def as_rational(self) -> Rational:
        raise NotImplementedError

    def evaluate(self, t):
        return self.as_rational().evaluate(t)

    def derivative(self, t):
        return self.as_rational().derivative(t)

    def log_derivative(self, t):
        return self.as_rational().log_derivative(t)

    @property
    def analytic(self):
        return True

    def analytic_value(self, z):
        return self.as_rational().analytic_value(z)

    def analytic_derivative(self, z):
        return self.as_rational().analytic_derivative(z)

    def zero_profiles(self):
        return self.as_rational().zero_profiles()

    def witten_closed_form(self):
        return self.as_rational().witten_closed_form()


@dataclass(frozen=True)
class ShiftSum(_PolynomialAlias):
    """1 + e^{it} + ... + e^{i(n-1)t}."""

    variant: ClassVar[str] = "shift_sum"
    n: int = 2

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise SymbolError("shift_sum needs an integer n >= 1")
        object.__setattr__(self, "n", int(self.n))

    def params(self):
        return {"n": self.n}

    def as_rational(self):
        roots = tuple((complex(np.exp(2j * math.pi * k / self.n)), 1) for k in range(1, self.n))
        return Rational(1.0, roots, ())

    def coefficients(self, degree):
        if degree < self.n - 1:
            raise SymbolError(f"shift_sum({self.n}) needs degree >= {self.n - 1}")
        out = np.zeros(2 * degree + 1, dtype=complex)
        out[degree : degree + self.n] = 1.0
        return Coefficients(out, 0.0, 0.0)


@dataclass(frozen=True)
class ShiftPlus(_PolynomialAlias):
    """e^{it} + a."""

    variant: ClassVar[str] = "shift_plus"
    a: complex = 1.0

    def __post_init__(self):
        object.__setattr__(self, "a", complex(self.a))

    def params(self):
        return {"a": [self.a.real, self.a.imag]}

    def as_rational(self):
        return Rational(1.0, ((-self.a, 1),), ())

    def coefficients(self, degree):
        if degree < 1:
            raise SymbolError("shift_plus needs degree >= 1")
        out = np.zeros(2 * degree + 1, dtype=complex)
        out[degree] = self.a
        out[degree + 1] = 1.0
        return Coefficients(out, 0.0, 0.0)


FAMILIES: dict[str, type[Family]] = {
    cls.variant: cls for cls in (Rational, TwistedPower, LogPower, ShiftSum, ShiftPlus)
}


def _complex(value) -> complex:
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise SymbolError(f"complex number must be [re, im], got {value!r}")
        return complex(float(value[0]), float(value[1]))
    return complex(value)


def _roots(items) -> tuple[tuple[complex, int], ...]:
    out = []
    for item in items:
        if isinstance(item, dict):
            out.append((_complex(item["at"]), int(item.get("multiplicity", 1))))
        elif len(item) == 3:
            out.append((complex(float(item[0]), float(item[1])), int(item[2])))
        elif len(item) == 2:
            out.append((_complex(item[0]), int(item[1])))
        else:
            raise SymbolError(f"cannot read root entry {item!r}")
    return tuple(out)


def family_from_json(data: dict) -> Family:
    data = dict(data)
    variant = data.pop("variant", None)
    if variant not in FAMILIES:
        raise SymbolError(f"unknown family variant {variant!r}; expected one of {sorted(FAMILIES)}")
    allowed = {
        "rational": {"c", "zeros", "poles"},
        "twisted_power": {"n", "alpha"},
        "log_power": {"alpha", "C", "form"},
        "shift_sum": {"n"},
        "shift_plus": {"a"},
    }[variant]
    extra = set(data) - allowed
    if extra:
        raise SymbolError(f"unknown keys for {variant}: {sorted(extra)}")
    if variant == "rational":
        return Rational(_complex(data.get("c", 1.0)), _roots(data.get("zeros", [])), _roots(data.get("poles", [])))
    if variant == "shift_plus":
        return ShiftPlus(_complex(data.get("a", 1.0)))
    return FAMILIES[variant](**data)
