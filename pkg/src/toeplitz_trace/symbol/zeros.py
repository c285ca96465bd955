"""Locating circle zeros and fitting their local power profiles."""

from __future__ import annotations

import math

import numpy as np
from scipy.optimize import minimize_scalar

from .core import DEFAULT_NODES, FourierSymbol
from .families import Rational
from .profile import UnprofiledZeroError, ZeroProfile, unprofiled

TWO_PI = 2 * math.pi
FIT_POINTS = 32
FIT_SPAN = 2.0**-16
FIT_TOL = 1e-3
MIN_DELTA = 1e-7


def fit_profile(f: FourierSymbol, location: float, delta: float) -> ZeroProfile:
    """Least-squares fit of log|f|^2 = beta log|t - t_j| + log h on (t_j + delta 2^-16, t_j + delta].

    The window is halved until the worst relative misfit drops below 1e-3;
    a zero that never fits is returned unprofiled.
    """
    residual = math.inf
    while delta >= MIN_DELTA:
        x = delta * np.geomspace(FIT_SPAN, 1.0, FIT_POINTS)
        with np.errstate(divide="ignore"):
            y = np.log(np.abs(f(location + x)) ** 2)
        if np.all(np.isfinite(y)):
            design = np.column_stack([np.log(x), np.ones_like(x)])
            (beta, logh), *_ = np.linalg.lstsq(design, y, rcond=None)
            residual = float(np.max(np.abs(np.expm1(y - design @ [beta, logh]))))
            if residual < FIT_TOL and beta > 0.05:
                probe = delta * 2.0**-8
                g_right = probe * f.log_derivative(location + probe)
                g_left = -probe * f.log_derivative(location - probe)
                g = complex(0.5 * (g_right + g_left))
                return ZeroProfile(location % TWO_PI, float(beta), g, float(math.exp(logh)), float(delta),
                                   fit_residual=residual)
        delta /= 2
    return unprofiled(location, residual)


def polynomial_model(f: FourierSymbol) -> Rational | None:
    """The trigonometric polynomial f as c z^lo prod (z - r), circle roots merged and snapped.

    Returns None for a constant symbol.
    """
    lo, hi = f.support
    if hi == lo:
        return None
    c = f.coeffs[lo + f.degree : hi + f.degree + 1]
    roots = np.roots(c[::-1])
    scale = float(np.sum(np.abs(c)))
    near = [r for r in roots if abs(abs(r) - 1) < 1e-3]
    clusters: list[list[complex]] = []
    for r in near:
        for cl in clusters:
            if abs(np.mean(cl) - r) < 2e-3:
                cl.append(r)
                break
        else:
            clusters.append([r])
    accepted: list[tuple[complex, int]] = []
    for cl in clusters:
        center = complex(np.mean(cl))
        center /= abs(center)
        if abs(f.series(np.angle(center))) <= 1e-9 * scale:
            accepted.append((center, len(cl)))
    others = [
        (complex(r), 1)
        for r in roots
        if not any(abs(r - a) < 2e-3 and abs(abs(r) - 1) < 1e-3 for a, _ in accepted)
    ]
    zeros = tuple(accepted) + tuple(others)
    poles: tuple = ()
    if lo > 0:
        zeros = zeros + ((0j, lo),)
    elif lo < 0:
        poles = ((0j, -lo),)
    return Rational(complex(c[-1]), zeros, poles)


def _polynomial_zeros(f: FourierSymbol) -> list[ZeroProfile]:
    model = polynomial_model(f)
    if model is None:
        return []
    return model.zero_profiles()


def _scan_zeros(f: FourierSymbol, nodes: int) -> list[ZeroProfile]:
    t = TWO_PI * np.arange(nodes) / nodes
    mag = np.abs(f(t))
    top = float(np.max(mag))
    if top == 0:
        raise UnprofiledZeroError("symbol vanishes identically")
    left, right = np.roll(mag, 1), np.roll(mag, -1)
    candidates = np.flatnonzero((mag <= left) & (mag <= right) & (mag < 0.5 * top))
    found: list[float] = []
    h = TWO_PI / nodes
    for k in candidates:
        res = minimize_scalar(lambda s: float(np.abs(f(s)) ** 2), bounds=(t[k] - h, t[k] + h),
                              method="bounded", options={"xatol": 1e-13})
        s = float(res.x)
        for _ in range(100):
            fs = f(s)
            if fs == 0:
                break
            dfs = f.derivative_values(s)
            if not np.isfinite(dfs) or dfs == 0:
                break
            step = float(np.real(fs / dfs))
            if abs(step) > h:
                break
            s -= step
            if abs(step) < 1e-16:
                break
        if abs(f(s)) <= 1e-9 * top and not any(abs((s - o + math.pi) % TWO_PI - math.pi) < h for o in found):
            found.append(s % TWO_PI)
    found.sort()
    profiles = []
    for idx, s in enumerate(found):
        gap = math.pi / 2
        for jdx, o in enumerate(found):
            if jdx != idx:
                gap = min(gap, 0.5 * abs((o - s + math.pi) % TWO_PI - math.pi))
        profiles.append(fit_profile(f, s, gap))
    return profiles


def circle_zeros(f: FourierSymbol, nodes: int = DEFAULT_NODES, strict: bool = False) -> list[ZeroProfile]:
    """Zeros of f on the circle with their local profiles, sorted by location.

    Families with known profiles answer in closed form; trigonometric
    polynomials go through their polynomial roots; anything else is scanned
    on a grid and refined. With ``strict`` an unprofiled zero raises.
    """
    profiles = None
    if f.family is not None and f.evaluator is not None:
        profiles = f.family.zero_profiles()
    if profiles is None:
        profiles = _polynomial_zeros(f) if f.evaluator is None else _scan_zeros(f, nodes)
    profiles = sorted(profiles, key=lambda p: p.location)
    if strict:
        bad = [p for p in profiles if not p.profiled]
        if bad:
            raise UnprofiledZeroError(
                f"zero at t={bad[0].location:.6g} is not of power type; the principal-value theory does not apply"
            )
    return profiles
