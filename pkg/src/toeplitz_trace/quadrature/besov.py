"""Membership of analytic symbols in the Besov class B_p^{1/p}.

The quantity is ``int_D (1 - |z|^2)^(n p - 2) |F^(n)(z)|^p dA`` with ``n p > 1``.
Away from boundary singularities it is computed on a polar grid. Near a
singular point ``b`` the symbol is written through its logarithmic germ
``F = exp(G(ell))`` with ``z = b (1 - e^ell)``. With ``ell = -u + i theta`` the
part of the integral inside ``|z - b| < e^-u0`` becomes ``int_u0^inf J(u) du``.
The decay of ``J`` decides membership.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from math import comb, factorial

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.special import logsumexp, roots_jacobi

from ..symbol import FourierSymbol, SymbolError
from ..symbol.families import BoundaryGerm
from .disk import gauss_panels

TWO_PI = 2 * math.pi
CAUCHY_NODES = 32
JACOBI_NODES = 64
TAIL_START = 4.0
POWER_WINDOW = (1e50, 1e250)


@dataclass(frozen=True)
class BesovResult:
    verdict: str  # "finite", "divergent" or "marginal"
    marginal: bool
    p: float
    n: int
    exponent: float  # decay rate of the tail density (exponential or power, see ``decay``)
    decay: str  # "exponential", "power", "none"
    value: float | None
    bulk: float
    tail: float | None
    details: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "verdict": self.verdict,
            "marginal": self.marginal,
            "p": self.p,
            "n": self.n,
            "exponent": self.exponent,
            "decay": self.decay,
            "value": self.value,
            "bulk": self.bulk,
            "tail": self.tail,
            **self.details,
        }


def stirling_first(n: int) -> np.ndarray:
    """Signed Stirling numbers s(n, k), k = 0..n."""
    s = np.zeros((n + 1, n + 1))
    s[0, 0] = 1
    for i in range(1, n + 1):
        for k in range(1, i + 1):
            s[i, k] = s[i - 1, k - 1] - (i - 1) * s[i - 1, k]
    return s[n]


def complete_bell(g: list[np.ndarray]) -> list[np.ndarray]:
    """Y_0..Y_n from g_j = G^(j); Y_k is exp(-G) times the k-th derivative of exp(G)."""
    Y = [np.ones_like(g[1])]
    for k in range(len(g) - 1):
        Y.append(sum(comb(k, i) * Y[k - i] * g[i + 1] for i in range(k + 1)))
    return Y


def _germ_derivatives(germ: BoundaryGerm, ell: np.ndarray, n: int) -> list[np.ndarray]:
    """G and its first n ell-derivatives, by Cauchy integrals on circles of radius max(|ell|/2, 1/4)."""
    R = np.maximum(np.abs(ell) / 2, 0.25)
    phase = np.exp(1j * TWO_PI * np.arange(CAUCHY_NODES) / CAUCHY_NODES)
    vals = germ.log_value(ell[..., None] + R[..., None] * phase)
    co = np.fft.fft(vals, axis=-1) / CAUCHY_NODES
    logR = np.log(R)
    with np.errstate(under="ignore"):
        return [germ.log_value(ell)] + [co[..., k] * factorial(k) * np.exp(-k * logR) for k in range(1, n + 1)]


def log_tail_density(germ: BoundaryGerm, u, p: float, n: int) -> np.ndarray:
    """log J(u), J(u) = int (2 cos t - e^-u)^(np-2) |F|^p |sum_k s(n,k) Y_k|^p dt over |t| < acos(e^-u / 2)."""
    u = np.atleast_1d(np.asarray(u, dtype=float))
    a = n * p - 2
    x, w = roots_jacobi(JACOBI_NODES, a, a)
    rho = np.exp(-u)[:, None]
    tmax = np.arccos(np.minimum(rho / 2, 1.0))
    theta = tmax * x[None, :]
    ell = -u[:, None] + 1j * theta
    g = _germ_derivatives(germ, ell, n)
    Y = complete_bell(g)
    s = stirling_first(n)
    S = sum(s[k] * Y[k] for k in range(n + 1))
    smooth = (2 * np.cos(theta) - rho) / (1 - x[None, :] ** 2)
    with np.errstate(divide="ignore"):
        terms = p * np.real(g[0]) + p * np.log(np.abs(S)) + a * np.log(smooth) + np.log(tmax)
    return logsumexp(terms, b=w[None, :], axis=1)


def _singular_points(f: FourierSymbol, germs: list[BoundaryGerm]) -> list[complex]:
    fam = f.family
    if hasattr(fam, "as_rational"):
        fam = fam.as_rational()
    poles = [complex(b) for b, _ in getattr(fam, "poles", ())]
    return [g.point for g in germs] + poles


def _nth_derivative(f: FourierSymbol, n: int, germs: list[BoundaryGerm]):
    """z -> F^(n)(z) for the holomorphic extension.

    Families go through Cauchy integrals whose radius is half the distance
    to the nearest singularity, so they reach across the circle where F
    continues analytically.
    """
    if f.evaluator is None:
        c = f.coeffs[f.degree :]
        dc = P.polyder(c, n) if c.size > n else np.zeros(1)
        return lambda z: P.polyval(z, dc)
    fam = f.family
    singular = _singular_points(f, germs)
    phase = np.exp(1j * TWO_PI * np.arange(CAUCHY_NODES) / CAUCHY_NODES)

    def deriv(z):
        radius = np.full(z.shape, 0.5)
        for b in singular:
            radius = np.minimum(radius, 0.5 * np.abs(z - b))
        vals = fam.analytic_value(z[..., None] + radius[..., None] * phase)
        co = np.fft.fft(vals, axis=-1)[..., n] / CAUCHY_NODES
        return co * factorial(n) / radius**n

    return deriv


def _allowed_arcs(r: float, germs: list[BoundaryGerm], radius: float) -> list[tuple[float, float]]:
    """Angular intervals of |z| = r outside every disk |z - b| < radius.

    Each germ angle ends an interval even when the ring misses its disk, so
    the panels are graded toward the singular points.
    """
    cuts = []
    for germ in germs:
        c = (1 + r * r - radius * radius) / (2 * r)
        cuts.append((float(np.angle(germ.point)), math.acos(c) if c < 1 else 0.0))
    cuts.sort()
    arcs = []
    for k, (centre, half) in enumerate(cuts):
        nxt_centre, nxt_half = cuts[(k + 1) % len(cuts)]
        if k + 1 == len(cuts):
            nxt_centre += TWO_PI
        arcs.append((centre + half, nxt_centre - nxt_half))
    return arcs


def _arc_nodes(lo: float, hi: float, order: int = 8) -> tuple[np.ndarray, np.ndarray]:
    """Gauss panels on [lo, hi], geometrically refined toward both ends."""
    if hi <= lo:
        return np.empty(0), np.empty(0)
    half = 0.5 * (hi - lo)
    levels = 10
    steps = half * 2.0 ** -np.arange(levels, -1, -1)
    edges = np.unique(np.concatenate([[lo], lo + steps, hi - steps[::-1], [hi]]))
    return gauss_panels(edges, order)


def bulk_integral(f: FourierSymbol, p: float, n: int, germs: list[BoundaryGerm],
                  radius: float, levels: int = 40, order: int = 8) -> tuple[float, list[float]]:
    """Integral over the disk minus the germ neighbourhoods.

    Returns the total and the partial integrals over |z| <= 1 - 2^-k.
    """
    a = n * p - 2
    deriv = _nth_derivative(f, n, germs)
    # radial variable s = 1 - r: Gauss panels on [2^-(k+1), 2^-k], Gauss-Jacobi on the last piece
    edges = 2.0 ** -np.arange(0, levels + 1)
    if germs:
        # the excised arcs open like a square root at 1 - r = radius
        near = radius * np.concatenate([1 - 2.0 ** -np.arange(1, 31), 1 + 2.0 ** -np.arange(0, 6), [1.0]])
        edges = np.unique(np.concatenate([edges, near]))[::-1]
    panels = [gauss_panels(edges[k : k + 2][::-1], order) for k in range(edges.size - 1)]
    s0 = edges[-1]
    xj, wj = roots_jacobi(order * 2, 0.0, a)
    last_nodes = s0 * (1 + xj) / 2
    last_weights = wj * (s0 / 2) ** (a + 1) / last_nodes**a  # undo the weight; it is restored below
    panels.append((last_nodes, last_weights))

    pieces = []
    for s_nodes, s_w in panels:
        acc = 0.0
        for s, ws in zip(s_nodes, s_w):
            r = 1 - s
            if germs:
                t, wt = (np.concatenate(x) for x in zip(*(_arc_nodes(lo, hi) for lo, hi in _allowed_arcs(r, germs, radius))))
            else:
                t, wt = _uniform(256)
            vals = np.abs(deriv(r * np.exp(1j * t))) ** p
            acc += ws * r * (s * (2 - s)) ** a * float(np.sum(wt * vals))
        pieces.append(acc)
    partial = np.cumsum(pieces[:-1]).tolist()
    return float(np.sum(pieces)), partial


def _uniform(m: int):
    return TWO_PI * np.arange(m) / m, np.full(m, TWO_PI / m)


def _tail_integral(germ, p, n, u0: float, u_max: float) -> float:
    """int_u0^u_max J(u) du with Gauss panels in log u."""
    # fine panels where J may still decay exponentially, coarse ones in the power regime
    v_lo, v_mid, v_hi = math.log(u0), math.log(max(1e3, u0)), math.log(u_max)
    fine = np.arange(v_lo, min(v_mid, v_hi), 0.125)
    v_edges = np.concatenate([fine, np.arange(fine[-1] + 0.125, v_hi + 4, 4.0)])
    v, w = gauss_panels(v_edges, 8)
    u = np.exp(v)
    logJ = log_tail_density(germ, u, p, n)
    return float(np.exp(logsumexp(logJ + v, b=w)))


def _classify_tail(germ, p, n) -> dict:
    l16, l32, l64 = log_tail_density(germ, [16.0, 32.0, 64.0], p, n)
    s1, s2 = -(l32 - l16) / 16, -(l64 - l32) / 32
    if s2 > 0.05 and s2 >= 0.8 * s1:
        return {"verdict": "finite", "marginal": False, "decay": "exponential", "exponent": float(s2)}
    if s2 < -0.05 and s2 <= 0.8 * s1:
        return {"verdict": "divergent", "marginal": False, "decay": "exponential", "exponent": float(s2)}
    u = np.geomspace(*POWER_WINDOW, 41)
    lu = np.log(u)
    kappa = -np.gradient(log_tail_density(germ, u, p, n), lu)
    design = np.column_stack([np.ones_like(lu), 1 / lu])
    (k_inf, m), *_ = np.linalg.lstsq(design, kappa, rcond=None)
    out = {"decay": "power", "exponent": float(k_inf), "log_correction": float(m)}
    if k_inf > 1.02:
        return {**out, "verdict": "finite", "marginal": False}
    if k_inf < 0.98:
        return {**out, "verdict": "divergent", "marginal": False}
    # J ~ u^-1 (log u)^-m: integrable exactly when m > 1
    if m > 1.05:
        return {**out, "verdict": "finite", "marginal": True}
    if m < 0.95:
        return {**out, "verdict": "divergent", "marginal": True}
    return {**out, "verdict": "marginal", "marginal": True}


def besov_integral(f: FourierSymbol, p: float, n: int | None = None) -> BesovResult:
    """Decide whether the holomorphic extension of f lies in B_p^{1/p} and estimate the integral."""
    if not p > 0:
        raise ValueError("p must be positive")
    if not f.is_analytic():
        raise SymbolError("Besov membership needs an analytic symbol")
    n = math.floor(1 / p) + 1 if n is None else int(n)
    if not n * p > 1:
        raise ValueError(f"n p = {n * p} must exceed 1")
    germs = f.family.boundary_germs() if f.family is not None and f.evaluator is not None else []
    radius = math.exp(-TAIL_START)
    bulk, partial = bulk_integral(f, p, n, germs, radius)

    if not germs:
        # analytic across the circle: increments over 1 - r = 2^-k decay like 2^-k(np-1)
        inc = np.abs(np.diff([0.0, *partial]))[-20:-4]
        k = np.arange(inc.size)
        mask = inc > 0
        slope = -np.polyfit(k[mask], np.log2(inc[mask]), 1)[0] if mask.sum() > 2 else n * p - 1
        return BesovResult("finite", False, p, n, float(slope), "none", bulk, bulk, 0.0)

    verdicts, tails, info = [], [], []
    for germ in germs:
        cls = _classify_tail(germ, p, n)
        info.append(cls)
        verdicts.append(cls["verdict"])
        if cls["verdict"] == "divergent":
            tails.append(None)
            continue
        U = POWER_WINDOW[1] if cls["decay"] == "power" else 1e4
        tail = _tail_integral(germ, p, n, TAIL_START, U)
        if cls["decay"] == "power" and cls["exponent"] > 1:
            tail += float(np.exp(log_tail_density(germ, [U], p, n)[0])) * U / (cls["exponent"] - 1)
        tails.append(tail)
    if "divergent" in verdicts:
        verdict = "divergent"
    elif "marginal" in verdicts:
        verdict = "marginal"
    else:
        verdict = "finite"
    worst = min(info, key=lambda c: (c["decay"] == "exponential", c["exponent"]))
    tail = None if any(t is None for t in tails) else float(sum(tails))
    value = None if tail is None or verdict != "finite" else bulk + tail
    return BesovResult(verdict, any(c["marginal"] for c in info), p, n, worst["exponent"], worst["decay"],
                       value, bulk, tail, {"germs": info})
