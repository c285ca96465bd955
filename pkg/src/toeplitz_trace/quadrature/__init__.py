"""Symbol-side integrals: circle, principal value, disk and Besov-type."""

from .circle import (
    QuadratureError,
    QuadratureResult,
    adaptive_circle_integral,
    boundary_trace_integral,
    circle_integral,
    heat_integral,
    principal_value_integral,
)

__all__ = [
    "QuadratureError", "QuadratureResult", "adaptive_circle_integral", "boundary_trace_integral",
    "circle_integral", "heat_integral", "principal_value_integral",
]

from .disk import disk_trace_integral  # noqa: E402

__all__ += ["disk_trace_integral"]

from .besov import BesovResult, besov_integral  # noqa: E402

__all__ += ["BesovResult", "besov_integral"]
