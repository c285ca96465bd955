from __future__ import annotations

import math
from dataclasses import dataclass


class SymbolError(ValueError):
    """Invalid symbol data or an operation the symbol does not support."""


class UnprofiledZeroError(SymbolError):
    """A circle zero whose local behaviour is not of power type."""


@dataclass(frozen=True)
class ZeroProfile:
    """Local model of a circle zero.

    Near ``location`` the symbol satisfies ``|f(t)|^2 ~ |t - location|^beta * h_value``
    and ``(t - location) f'(t)/f(t) -> g_value``; the model is trusted on the
    window ``|t - location| <= delta``.
    """

    location: float
    beta: float
    g_value: complex
    h_value: float
    delta: float
    profiled: bool = True
    fit_residual: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.location < 2 * math.pi + 1e-12:
            raise SymbolError(f"zero location {self.location} outside [0, 2pi)")
        if self.profiled:
            if not (self.beta > 0 and self.h_value > 0 and self.delta > 0):
                raise SymbolError("profiled zero needs beta, h_value, delta > 0")

    def to_json(self) -> dict:
        return {
            "location": self.location,
            "beta": self.beta,
            "g_value": [self.g_value.real, self.g_value.imag],
            "h_value": self.h_value,
            "delta": self.delta,
            "profiled": self.profiled,
            "fit_residual": self.fit_residual,
        }


def unprofiled(location: float, residual: float = math.inf) -> ZeroProfile:
    return ZeroProfile(location % (2 * math.pi), math.nan, complex(math.nan), math.nan,
                       math.nan, profiled=False, fit_residual=residual)
