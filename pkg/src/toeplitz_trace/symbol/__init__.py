"""Symbols on the unit circle."""

from .core import (
    DEFAULT_DEGREE,
    DEFAULT_NODES,
    FourierSymbol,
    analytic_derivative,
    analytic_extension,
    constant,
    derivative,
    evaluate,
    from_coefficients,
    from_family,
    harmonic_extension,
    multiply,
    omega_form,
    reciprocal,
    shift,
    sobolev_half_norm,
    sup_norm,
    symbol_from_json,
)
from .families import (
    FAMILIES,
    BoundaryGerm,
    Family,
    LogPower,
    Rational,
    ShiftPlus,
    ShiftSum,
    TwistedPower,
    family_from_json,
)
from .profile import SymbolError, UnprofiledZeroError, ZeroProfile
from .zeros import circle_zeros, fit_profile, polynomial_model

SymbolFamily = Family

__all__ = [
    "DEFAULT_DEGREE", "DEFAULT_NODES", "FourierSymbol", "SymbolFamily", "Family", "ZeroProfile",
    "SymbolError", "UnprofiledZeroError", "BoundaryGerm", "FAMILIES",
    "Rational", "TwistedPower", "LogPower", "ShiftSum", "ShiftPlus", "family_from_json",
    "analytic_derivative", "analytic_extension", "circle_zeros", "polynomial_model", "constant", "derivative", "evaluate",
    "fit_profile", "from_coefficients", "from_family", "harmonic_extension", "multiply", "omega_form",
    "reciprocal", "shift", "sobolev_half_norm", "sup_norm", "symbol_from_json",
]
