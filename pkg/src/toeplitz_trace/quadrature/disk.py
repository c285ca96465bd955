"""Area integrals over the unit disk for the trace formulas."""

from __future__ import annotations

import math

import numpy as np
from numpy.polynomial import polynomial as P

from ..funcalc import ScalarFunction
from ..symbol import FourierSymbol, SymbolError, circle_zeros
from .circle import QuadratureResult

TWO_PI = 2 * math.pi
BOUNDARY_GAP = 1e-6  # innermost radial panel reaches 1 - r = 1e-6


def gauss_panels(edges, order: int) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre nodes and weights over consecutive edges."""
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.asarray(edges, dtype=float)
    a, b = edges[:-1, None], edges[1:, None]
    nodes = 0.5 * (b - a) * x + 0.5 * (a + b)
    weights = 0.5 * (b - a) * w
    return nodes.ravel(), weights.ravel()


def radial_edges(levels: int | None = None, inner: bool = False) -> np.ndarray:
    """Panels [0, 1/2], then geometric in 1 - r down to the boundary gap, then up to 1."""
    levels = levels or int(math.ceil(math.log2(1 / BOUNDARY_GAP)))
    outer = 1 - 2.0 ** -np.arange(1, levels + 1)
    lead = [0.0]
    if inner:
        lead += list(0.5 * 2.0 ** -np.arange(levels, 0, -1))
    return np.concatenate([lead, outer, [1.0]])


def graded_angles(cuts, order: int, levels: int = 20) -> tuple[np.ndarray, np.ndarray]:
    """Gauss panels on [0, 2pi) refined geometrically toward each cut angle."""
    cuts = sorted(c % TWO_PI for c in cuts)
    ends = cuts + [cuts[0] + TWO_PI]
    edges = []
    for a, b in zip(ends[:-1], ends[1:]):
        mid = 0.5 * (a + b)
        half = mid - a
        left = a + half * 2.0 ** -np.arange(levels, -1, -1)
        right = b - half * 2.0 ** -np.arange(0, levels + 1)
        edges.extend([a, *left, *right[1:]])
    edges.append(ends[-1])
    return gauss_panels(np.unique(np.asarray(edges)), order)


def _bump(s):
    """Smooth step: 1 for s <= 1/2, 0 for s >= 1."""
    s = np.clip(2 * np.asarray(s, dtype=float) - 1, 0, 1)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(s < 1, np.exp(-1 / np.where(s < 1, 1 - s, 1)), 0.0)
        b = np.where(s > 0, np.exp(-1 / np.where(s > 0, s, 1)), 0.0)
    return a / (a + b)


class _DiskData:
    """Values of the extension and the two derivative parts at points of the disk."""

    def __init__(self, f: FourierSymbol, mode: str):
        if mode not in ("harmonic", "analytic"):
            raise SymbolError(f"unknown disk mode {mode!r}")
        self.f = f
        analytic = f.is_analytic()
        if mode == "analytic" and not analytic:
            raise SymbolError("analytic mode needs a symbol without negative Fourier coefficients")
        self.closed = f.family is not None and f.evaluator is not None and f.family.analytic
        d = f.degree
        self.plus = f.coeffs[d:]
        self.minus = np.concatenate([[0.0], np.conj(f.coeffs[:d][::-1])])
        self.has_minus = bool(np.any(self.minus)) and not self.closed

    def __call__(self, z):
        if self.closed:
            fam = self.f.family
            return fam.analytic_value(z), fam.analytic_derivative(z), 0.0
        F = P.polyval(z, self.plus)
        dF = P.polyval(z, P.polyder(self.plus)) if self.plus.size > 1 else np.zeros_like(z)
        if not self.has_minus:
            return F, dF, 0.0
        G = P.polyval(z, self.minus)
        dG = P.polyval(z, P.polyder(self.minus))
        return F + np.conj(G), dF, dG

    def density(self, z, phi: ScalarFunction):
        ext, dplus, dminus = self(z)
        x = np.abs(ext) ** 2
        with np.errstate(all="ignore"):
            out = phi.derivative(x) * (np.abs(dplus) ** 2 - np.abs(dminus) ** 2)
        return np.where(np.isfinite(out), out, 0.0)

    def interior_zeros(self) -> list[complex]:
        """Zeros of the analytic extension strictly inside, away from the origin."""
        if self.has_minus:
            return []
        if self.closed:
            fam = self.f.family
            roots = [a for a, _ in getattr(fam, "zeros", ())]
            if hasattr(fam, "as_rational"):
                roots = [a for a, _ in fam.as_rational().zeros]
        else:
            c = np.trim_zeros(self.plus, "b")
            roots = list(np.roots(c[::-1])) if c.size > 1 else []
        return [complex(a) for a in roots if 1e-12 < abs(a) < 1 - 1e-9]


def _integrate(data: _DiskData, phi, r_nodes, r_w, t_nodes, t_w, weight=None):
    total = 0.0
    # row blocks keep memory bounded
    for start in range(0, r_nodes.size, 64):
        r = r_nodes[start : start + 64, None]
        z = r * np.exp(1j * t_nodes[None, :])
        dens = data.density(z, phi)
        if weight is not None:
            dens = dens * weight(z)
        total += float(np.sum((r_w[start : start + 64, None] * r) * (dens * t_w[None, :])))
    return total / math.pi


def _local_patch(data: _DiskData, phi, center: complex, radius: float, order: int) -> float:
    """Integral of density * bump over a disk around an interior zero, in polar coordinates about it."""
    edges = np.concatenate([[0.0], radius * 2.0 ** -np.arange(40, -1, -1)])
    r, rw = gauss_panels(edges, order)
    t = TWO_PI * np.arange(256) / 256
    tw = np.full(t.size, TWO_PI / t.size)
    z = center + r[:, None] * np.exp(1j * t[None, :])
    dens = data.density(z, phi) * _bump(r[:, None] / radius)
    return float(np.sum((rw * r)[:, None] * dens * tw[None, :])) / math.pi


def disk_trace_integral(f: FourierSymbol, phi: ScalarFunction, mode: str = "harmonic",
                        rings: int = 512, angular: int = 1024) -> QuadratureResult:
    """(1/pi) int_D phi'(|f~|^2) (|F_+'|^2 - |F_-'|^2) dA with f~ = F_+ + conj(F_-).

    In analytic mode the symbol must extend holomorphically and the density
    is phi'(|F|^2)|F'|^2. Rings are Gauss panels geometric toward |z| = 1;
    angles are uniform unless boundary zeros call for grading.
    """
    data = _DiskData(f, mode)
    edges = radial_edges()
    zeros = circle_zeros(f) if (f.evaluator is not None or not phi.smooth) else []
    graded = bool(zeros) and (not phi.smooth or f.evaluator is not None)
    if f.family is not None and f.family.boundary_germs():
        graded = True
        zeros = zeros or [type("Z", (), {"location": math.pi})()]
    inner = [] if phi.smooth else data.interior_zeros()

    def weight_out(z):
        w = np.ones(z.shape)
        for a, rad in patches:
            w = w * (1 - _bump(np.abs(z - a) / rad))
        return w

    patches = []
    for a in inner:
        others = [abs(a - b) for b in inner if b != a]
        rad = 0.5 * min([1 - abs(a), abs(a)] + others)
        patches.append((a, rad))

    def run(order_r: int, order_t: int) -> float:
        r, rw = gauss_panels(edges, order_r)
        if graded:
            t, tw = graded_angles([z.location for z in zeros], order_t)
        else:
            n = max(8, angular * order_t // order_full_t)
            t = TWO_PI * np.arange(n) / n
            tw = np.full(n, TWO_PI / n)
        val = _integrate(data, phi, r, rw, t, tw, weight_out if patches else None)
        for a, rad in patches:
            val += _local_patch(data, phi, a, rad, order_r)
        return val

    order_full_r = max(4, rings // (len(edges) - 1))
    order_full_t = 12 if graded else 2
    full = run(order_full_r, order_full_t)
    half = run(max(2, order_full_r // 2), max(1, order_full_t // 2))
    nodes = order_full_r * (len(edges) - 1)
    return QuadratureResult(complex(full), abs(full - half), nodes, f"disk-{mode}")
