"""Validated job descriptions and the dispatch from a job to the numerical routines."""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .. import indices
from ..funcalc import DomainError, OperatorMonotone, ScalarFunction, heat_trace, om_resolvent_trace, trace_phi_difference
from ..operators import dump_matrix, monomial_commutator_trace, product_sections, toeplitz_section
from ..quadrature import QuadratureError, besov_integral, boundary_trace_integral, heat_integral
from ..symbol import (
    DEFAULT_DEGREE,
    DEFAULT_NODES,
    Family,
    FourierSymbol,
    Rational,
    ShiftSum,
    SymbolError,
    TwistedPower,
    circle_zeros,
    from_coefficients,
    from_family,
    polynomial_model,
    sup_norm,
    symbol_from_json,
)
from .expr import parse_symbol_expression

COMMANDS = ("index", "witten", "trace", "heat", "ssf", "besov", "krein-check", "reproduce", "dump-matrix")
FORMATS = ("json", "csv", "table")
QUADRATURE_DEFAULTS = {
    "circle_nodes": DEFAULT_NODES,
    "rings": 512,
    "angular": 1024,
    "eps0_fraction": 0.25,
    "pv_levels": 6,
}
COMMAND_PARAMS = {
    "index": set(),
    "witten": {"heat"},
    "trace": {"tol"},
    "heat": {"s", "tol"},
    "ssf": {"grid", "route"},
    "besov": {"p", "n"},
    "krein-check": {"tol"},
    "reproduce": {"id", "p", "a", "n", "m", "alpha", "h"},
    "dump-matrix": {"which", "matrix_format"},
}
SSF_ROUTES = ("boundary", "principal_function", "pushforward", "all")
MATRICES = ("toeplitz", "A", "B", "difference")

EXIT_OK, EXIT_INPUT, EXIT_DISAGREE = 0, 1, 2


class JobError(ValueError):
    """The job description is invalid."""


class DisagreementError(ArithmeticError):
    """A computation finished but its independent routes disagree."""


@dataclass
class JobSpec:
    command: str
    symbol: str | dict | None = None
    function: str | dict | None = None
    quadrature: dict = field(default_factory=dict)
    size: int | None = None
    degree: int = DEFAULT_DEGREE
    format: str = "json"
    out: str | None = None
    seed: int | None = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise JobError(f"unknown command {self.command!r}; expected one of {', '.join(COMMANDS)}")
        if self.format not in FORMATS:
            raise JobError(f"unknown format {self.format!r}; expected one of {', '.join(FORMATS)}")
        extra = set(self.quadrature) - set(QUADRATURE_DEFAULTS)
        if extra:
            raise JobError(f"unknown quadrature keys: {sorted(extra)}")
        extra = set(self.params) - COMMAND_PARAMS[self.command]
        if extra:
            raise JobError(f"unknown parameters for {self.command}: {sorted(extra)}")
        if self.size is not None and (int(self.size) != self.size or self.size < 1):
            raise JobError("size must be a positive integer")
        if int(self.degree) != self.degree or self.degree < 0:
            raise JobError("degree must be a nonnegative integer")
        for key in ("circle_nodes", "rings", "angular", "pv_levels"):
            if key in self.quadrature and (int(self.quadrature[key]) != self.quadrature[key]
                                           or self.quadrature[key] < 1):
                raise JobError(f"quadrature.{key} must be a positive integer")
        if "eps0_fraction" in self.quadrature and not 0 < self.quadrature["eps0_fraction"] < 1:
            raise JobError("quadrature.eps0_fraction must lie in (0, 1)")
        needs_symbol = self.command not in ("reproduce",)
        if needs_symbol and self.symbol is None:
            raise JobError(f"{self.command} needs --symbol")
        if self.command in ("trace", "krein-check") and self.function is None:
            raise JobError(f"{self.command} needs --phi")
        required = {"heat": "s", "besov": "p", "reproduce": "id"}.get(self.command)
        if required and required not in self.params:
            raise JobError(f"{self.command} needs --{required}")
        if self.command == "ssf" and self.params.get("route", "boundary") not in SSF_ROUTES:
            raise JobError(f"ssf route must be one of {', '.join(SSF_ROUTES)}")
        if self.command == "dump-matrix" and self.params.get("which", "toeplitz") not in MATRICES:
            raise JobError(f"dump-matrix --which must be one of {', '.join(MATRICES)}")

    def setting(self, key: str):
        return self.quadrature.get(key, QUADRATURE_DEFAULTS[key])

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, data: dict) -> "JobSpec":
        if not isinstance(data, dict):
            raise JobError("a job must be a JSON object")
        known = {f for f in cls.__dataclass_fields__}
        extra = set(data) - known
        if extra:
            raise JobError(f"unknown job keys: {sorted(extra)}")
        if "command" not in data:
            raise JobError("a job needs a command")
        return cls(**data)


@dataclass
class Outcome:
    """What a command produced: the JSON payload, rows for tabular output and the exit status."""

    result: dict
    rows: list[dict]
    columns: list[str]
    status: int = EXIT_OK
    title: str = ""
    raw_text: str | None = None  # bypasses formatting (matrix dumps to stdout)


# inputs

def load_symbol(spec, degree: int = DEFAULT_DEGREE) -> FourierSymbol:
    """Inline JSON, a JSON file path, or an expression string."""
    if isinstance(spec, dict):
        return symbol_from_json(spec, degree)
    if isinstance(spec, FourierSymbol):
        return spec
    text = str(spec).strip()
    if text.startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise JobError(f"symbol JSON is malformed: {exc}") from None
        return symbol_from_json(data, degree)
    if text.endswith(".json") or (os.sep in text and Path(text).exists()):
        path = Path(text)
        if not path.exists():
            raise JobError(f"symbol file {text} does not exist")
        try:
            data = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise JobError(f"symbol file {text} is not valid JSON: {exc}") from None
        return symbol_from_json(data, degree)
    parsed = parse_symbol_expression(text)
    if isinstance(parsed, Family):
        return from_family(parsed, degree)
    return parsed


def _number(text: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise JobError(f"expected a number, got {text!r}") from None


def parse_function(spec) -> ScalarFunction:
    """``power:q``, ``schatten:p``, ``exp_heat:s``, ``poly:c0,c1,...``, ``resolvent:lambda``, ``identity`` or JSON."""
    if isinstance(spec, ScalarFunction):
        return spec
    try:
        if isinstance(spec, dict):
            return ScalarFunction.from_json(spec)
        text = str(spec).strip()
        if text.startswith("{"):
            return ScalarFunction.from_json(json.loads(text))
        name, _, arg = text.partition(":")
        name = name.strip().lower()
        if name == "identity":
            return ScalarFunction.identity()
        if name == "power":
            return ScalarFunction.power(_number(arg))
        if name == "schatten":
            return ScalarFunction.power(_number(arg) / 2)
        if name in ("exp_heat", "exp", "heat"):
            return ScalarFunction.exp_heat(_number(arg))
        if name in ("poly", "polynomial"):
            return ScalarFunction.polynomial([_number(c) for c in arg.split(",")])
        if name == "resolvent":
            return ScalarFunction.resolvent(_number(arg))
    except json.JSONDecodeError as exc:
        raise JobError(f"function JSON is malformed: {exc}") from None
    raise JobError(f"cannot read function {spec!r}; try power:q, schatten:p, exp_heat:s, poly:c0,c1, resolvent:l")


def _operator_monotone(phi: ScalarFunction) -> bool:
    return phi.variant == "power" and phi.params[0] < 1


def matrix_trace(f: FourierSymbol, phi: ScalarFunction, N: int):
    """Tr(phi(A) - phi(B)) on sections, through the resolvent integral when phi is a power below one."""
    if _operator_monotone(phi):
        return om_resolvent_trace(f, OperatorMonotone.power_q(phi.params[0]), N)
    return trace_phi_difference(f, phi, N)


def _route_row(name, value, error=None) -> dict:
    return {"route": name, "value": value, "error": error}


def _compare(matrix, integral, tol: float) -> tuple[float, float, bool]:
    diff = abs(matrix.value - integral.value.real)
    bar = max(tol, 3 * (matrix.error + integral.abs_error) + matrix.truncation_error)
    return diff, bar, diff <= bar


# commands

def cmd_index(job: JobSpec, f: FourierSymbol) -> Outcome:
    zeros = circle_zeros(f, nodes=job.setting("circle_nodes"))
    if zeros:
        where = ", ".join(f"{z.location:.6g}" for z in zeros)
        raise JobError(f"the symbol vanishes on the circle (t = {where}); T_f is not Fredholm, use witten")
    winding = indices.winding_number(f, 0.0, job.setting("circle_nodes"))
    try:
        fredholm = indices.fredholm_index(f)
    except indices.IndexError_ as exc:
        raise DisagreementError(str(exc)) from None
    result = {"winding": winding, "fredholm": fredholm}
    rows = [{"quantity": "winding", "value": winding}, {"quantity": "fredholm_index", "value": fredholm}]
    return Outcome(result, rows, ["quantity", "value"])


def cmd_witten(job: JobSpec, f: FourierSymbol) -> Outcome:
    report = indices.witten_index(
        f,
        heat=bool(job.params.get("heat", True)),
        N=job.size or 1024,
        eps0_fraction=job.setting("eps0_fraction"),
        levels=job.setting("pv_levels"),
        nodes=job.setting("circle_nodes"),
    )
    rows = [_route_row(r.name, r.value, r.error) for r in report.routes]
    status = EXIT_OK if report.agreement else EXIT_DISAGREE
    title = f"Witten index {report.witten:.10g}"
    return Outcome(report.to_json(), rows, ["route", "value", "error"], status, title)


def _pair_outcome(matrix, integral, tol: float, label: str) -> Outcome:
    diff, bar, ok = _compare(matrix, integral, tol)
    result = {
        "matrix_trace": matrix.to_json(),
        "integral": integral.to_json(),
        "difference": diff,
        "tolerance": bar,
        "agreement": ok,
    }
    rows = [
        _route_row("matrix_trace", matrix.value, matrix.error),
        _route_row(label, integral.value.real, integral.abs_error),
    ]
    return Outcome(result, rows, ["route", "value", "error"], EXIT_OK if ok else EXIT_DISAGREE,
                   f"difference {diff:.3g} (tolerance {bar:.3g})")


def cmd_trace(job: JobSpec, f: FourierSymbol) -> Outcome:
    phi = parse_function(job.function)
    matrix = matrix_trace(f, phi, job.size or 512)
    integral = boundary_trace_integral(f, phi, job.setting("circle_nodes"))
    out = _pair_outcome(matrix, integral, float(job.params.get("tol", 1e-6)), "boundary_integral")
    out.result["function"] = phi.to_json()
    return out


def cmd_heat(job: JobSpec, f: FourierSymbol) -> Outcome:
    s = float(job.params["s"])
    if not s > 0:
        raise JobError("--s must be positive")
    matrix = heat_trace(f, s, job.size or 512)
    integral = heat_integral(f, s, job.setting("circle_nodes"))
    out = _pair_outcome(matrix, integral, float(job.params.get("tol", 1e-6)), "heat_integral")
    out.result["s"] = s
    return out


def ssf_grid(f: FourierSymbol, points: int) -> np.ndarray:
    """Midpoints of ``points`` equal cells covering (0, sup |f|^2]."""
    top = sup_norm(f) ** 2
    return top * (np.arange(points) + 0.5) / points


def cmd_ssf(job: JobSpec, f: FourierSymbol) -> Outcome:
    points = int(job.params.get("grid", 64))
    if points < 1:
        raise JobError("--grid must be positive")
    route = job.params.get("route", "boundary")
    grid = ssf_grid(f, points)
    builders = {
        "boundary": indices.spectral_shift,
        "principal_function": indices.ssf_from_principal,
        "pushforward": indices.ssf_pushforward,
    }
    chosen = list(builders) if route == "all" else [route]
    if route == "all" and not f.is_analytic():
        chosen.remove("pushforward")
    curves = {name: builders[name](f, grid) for name in chosen}
    columns = ["x"] + [f"xi_{name}" if len(chosen) > 1 else "xi" for name in chosen]
    rows = []
    for k, x in enumerate(grid):
        row = {"x": x}
        for name, col in zip(chosen, columns[1:]):
            row[col] = curves[name].values[k]
        rows.append(row)
    result = {"x": grid, "routes": {name: c.values for name, c in curves.items()}}
    status = EXIT_OK
    if len(curves) > 1:
        spread = max(float(np.max(np.abs(c.values - curves[chosen[0]].values))) for c in curves.values())
        result["max_route_difference"] = spread
        status = EXIT_OK if spread <= 1e-6 else EXIT_DISAGREE
    return Outcome(result, rows, columns, status)


def cmd_besov(job: JobSpec, f: FourierSymbol) -> Outcome:
    n = job.params.get("n")
    res = besov_integral(f, float(job.params["p"]), None if n is None else int(n))
    data = res.to_json()
    rows = [{"quantity": k, "value": data[k]} for k in
            ("verdict", "marginal", "p", "n", "decay", "exponent", "value", "bulk", "tail")]
    return Outcome(data, rows, ["quantity", "value"])


def cmd_krein(job: JobSpec, f: FourierSymbol) -> Outcome:
    phi = parse_function(job.function)
    check = indices.krein_check(
        f, phi, N=job.size or 512, tolerance=float(job.params.get("tol", 2e-3)),
        nodes=job.setting("circle_nodes"), rings=job.setting("rings"), angular=job.setting("angular"),
    )
    rows = [
        _route_row("matrix_trace", check.matrix_trace.value, check.matrix_trace.error),
        _route_row("ssf_integral", check.ssf_integral.value, check.ssf_integral.error),
        _route_row("boundary_integral", check.boundary_integral.value, check.boundary_integral.error),
        _route_row("disk_integral", check.disk_integral.value, check.disk_integral.error),
    ]
    vals = list(check.values().values())
    result = check.to_json() | {"function": phi.to_json(), "spread": max(vals) - min(vals)}
    return Outcome(result, rows, ["route", "value", "error"], EXIT_OK if check.agreement else EXIT_DISAGREE,
                   f"spread {max(vals) - min(vals):.3g} (tolerance {check.tolerance:.3g})")


def cmd_dump(job: JobSpec, f: FourierSymbol) -> Outcome:
    N = job.size or 64
    which = job.params.get("which", "toeplitz")
    if which == "toeplitz":
        M = toeplitz_section(f.truncated() if f.evaluator is not None else f, N).entries
    else:
        pair = product_sections(f, N)
        M = {"A": pair.A, "B": pair.B, "difference": pair.difference}[which]
    fmt = job.params.get("matrix_format") or ("npy" if job.out and job.out.endswith(".npy") else "csv")
    result = {"which": which, "size": N, "shape": list(M.shape), "matrix_format": fmt}
    if job.out:
        result["path"] = str(dump_matrix(M, job.out, fmt))
        return Outcome(result, [result], list(result), raw_text=None)
    if fmt != "csv":
        raise JobError("binary matrix dumps need --out")
    inter = np.empty((M.shape[0], 2 * M.shape[1]))
    inter[:, 0::2] = np.real(M)
    inter[:, 1::2] = np.imag(M)
    text = "\n".join(",".join(f"{v:.17g}" for v in row) for row in inter) + "\n"
    return Outcome(result, [], [], raw_text=text)


# reproduction of the worked examples

def _check_row(quantity: str, computed, reference, tol: float) -> dict:
    diff = abs(complex(computed) - complex(reference))
    return {
        "quantity": quantity,
        "computed": computed,
        "reference": reference,
        "abs_diff": diff,
        "tolerance": tol,
        "verdict": "PASS" if diff <= tol else "FAIL",
    }


def _trace_rows(f: FourierSymbol, q: float, reference: float, tol: float, N: int, nodes: int) -> list[dict]:
    phi = ScalarFunction.power(q)
    matrix = matrix_trace(f, phi, N)
    boundary = boundary_trace_integral(f, phi, nodes)
    return [
        _check_row("matrix_trace", matrix.value, reference, tol),
        _check_row("boundary_integral", boundary.value.real, reference, tol),
    ]


def _repro_gamma(job, params):
    p = float(params.get("p", 2))
    tol = 1e-6 if p >= 2 else 1e-4
    f = from_coefficients({0: 1, 1: 1})
    return {"p": p}, _trace_rows(f, p / 2, indices.closed_forms("gamma", p=p), tol, job.size or 512,
                                 job.setting("circle_nodes"))


def _repro_elliptic(example_id: str, default_a: float):
    def run(job, params):
        a = float(params.get("a", default_a))
        ref = indices.closed_forms(example_id, a=a)
        f = from_coefficients({0: a, 1: 1})
        return {"a": a}, _trace_rows(f, 0.5, ref, 1e-3, job.size or 512, job.setting("circle_nodes"))

    return run


def _repro_shift_sum(example_id: str, default_n: int):
    def run(job, params):
        n = int(params.get("n", default_n))
        ref = indices.closed_forms(example_id, n=n)
        f = from_family(ShiftSum(n), max(n - 1, 1)).truncated()
        return {"n": n}, _trace_rows(f, 0.5, ref, 1e-3, job.size or 512, job.setting("circle_nodes"))

    return run


def _witten_rows(job, f: FourierSymbol, reference: float) -> list[dict]:
    report = indices.witten_index(
        f, N=job.size or 1024, eps0_fraction=job.setting("eps0_fraction"),
        levels=job.setting("pv_levels"), nodes=job.setting("circle_nodes"),
    )
    return [
        _check_row("pv_integral", report.route("pv_integral").value, reference, 1e-8),
        _check_row("heat_limit", report.route("heat_limit").value, reference, 2e-2),
    ]


def _repro_anyv(job, params):
    n, alpha = int(params.get("n", 0)), float(params.get("alpha", 1.0))
    f = from_family(TwistedPower(n, alpha), job.degree)
    return {"n": n, "alpha": alpha}, _witten_rows(job, f, indices.closed_forms("anyv", n=n, alpha=alpha))


DEFAULT_RATIONAL = "(z-0.5)*(z+1)/(z-2)"


def _repro_rational(job, params):
    text = job.symbol if job.symbol is not None else DEFAULT_RATIONAL
    f = load_symbol(text, job.degree)
    family = f.family if f.evaluator is not None else polynomial_model(f)
    if not isinstance(family, Rational):
        raise JobError("reproduce rational needs a rational symbol")
    ref = indices.closed_forms("rational", zeros=family.zeros, poles=family.poles)
    label = text if isinstance(text, str) else json.dumps(text, sort_keys=True)
    return {"symbol": label}, _witten_rows(job, f, ref)


def _repro_helton_howe(job, params):
    m, n = int(params.get("m", 3)), int(params.get("n", 2))
    h_text = params.get("h", "coeffs{1:1}")
    h = load_symbol(h_text, job.degree)
    if h.evaluator is not None:
        h = h.truncated()
    ref = indices.closed_forms("helton_howe_monomials", m=m, n=n, h=h)
    computed = monomial_commutator_trace(h, m, n)
    return {"m": m, "n": n, "h": h_text}, [_check_row("commutator_trace", computed, ref, 1e-10)]


REPRODUCTIONS = {
    "gamma": _repro_gamma,
    "elliptic_small_a": _repro_elliptic("elliptic_small_a", 0.5),
    "elliptic_large_a": _repro_elliptic("elliptic_large_a", 2.0),
    "shift_sum_even": _repro_shift_sum("shift_sum_even", 4),
    "shift_sum_odd": _repro_shift_sum("shift_sum_odd", 3),
    "anyv": _repro_anyv,
    "rational": _repro_rational,
    "helton_howe_monomials": _repro_helton_howe,
}


def reproduce(job: JobSpec) -> Outcome:
    example_id = job.params["id"]
    if example_id not in REPRODUCTIONS:
        raise JobError(f"unknown example id {example_id!r}; known: {', '.join(sorted(REPRODUCTIONS))}")
    params = {k: v for k, v in job.params.items() if k != "id"}
    try:
        used, rows = REPRODUCTIONS[example_id](job, params)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, (SymbolError, JobError)):
            raise
        raise JobError(f"bad parameters for {example_id}: {exc}") from None
    passed = all(r["verdict"] == "PASS" for r in rows)
    result = {"id": example_id, "params": used, "checks": rows, "verdict": "PASS" if passed else "FAIL"}
    columns = ["quantity", "computed", "reference", "abs_diff", "tolerance", "verdict"]
    return Outcome(result, rows, columns, EXIT_OK if passed else EXIT_DISAGREE,
                   f"{example_id}: {'PASS' if passed else 'FAIL'}")


HANDLERS = {
    "index": cmd_index,
    "witten": cmd_witten,
    "trace": cmd_trace,
    "heat": cmd_heat,
    "ssf": cmd_ssf,
    "besov": cmd_besov,
    "krein-check": cmd_krein,
    "dump-matrix": cmd_dump,
}

INPUT_ERRORS = (JobError, SymbolError, DomainError, KeyError, FileNotFoundError)
NUMERICAL_ERRORS = (DisagreementError, indices.IndexError_, QuadratureError)


def execute(job: JobSpec) -> Outcome:
    """Run a validated job; raises the input and numerical errors listed above."""
    job.validate()
    if job.command == "reproduce":
        return reproduce(job)
    f = load_symbol(job.symbol, job.degree)
    return HANDLERS[job.command](job, f)

