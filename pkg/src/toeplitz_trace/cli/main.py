"""Argument parsing and the process entry point."""

from __future__ import annotations

import argparse
import json
import os
import sys
from contextlib import nullcontext
from pathlib import Path

from threadpoolctl import threadpool_limits

from . import output
from .jobs import (
    COMMANDS,
    EXIT_DISAGREE,
    EXIT_INPUT,
    FORMATS,
    INPUT_ERRORS,
    MATRICES,
    NUMERICAL_ERRORS,
    REPRODUCTIONS,
    SSF_ROUTES,
    JobError,
    JobSpec,
    execute,
)

THREADS_ENV = "TOEPLITZ_TRACE_THREADS"


def _global_flags() -> argparse.ArgumentParser:
    # SUPPRESS keeps absent flags out of the namespace so config values survive
    p = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS, allow_abbrev=False)
    g = p.add_argument_group("global options")
    g.add_argument("--symbol", help="expression, inline JSON or path to a JSON symbol file")
    g.add_argument("--degree", type=int, help="truncation degree for symbol families")
    g.add_argument("--nodes", type=int, help="circle quadrature nodes")
    g.add_argument("--size", type=int, help="finite-section size N")
    g.add_argument("--format", choices=FORMATS, help="output format (default json)")
    g.add_argument("--out", help="write the output to this file")
    g.add_argument("--seed", type=int, help="seed recorded with the job for randomized runs")
    g.add_argument("--config", help="JSON job file; command-line flags override it")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _global_flags()
    parser = argparse.ArgumentParser(
        prog="toeplitz-trace",
        description="Trace formulas, indices and spectral shift functions for Toeplitz operators.",
        parents=[common],
        allow_abbrev=False,
    )
    sub = parser.add_subparsers(dest="command", metavar="command")

    def add(name, help_text):
        return sub.add_parser(name, help=help_text, parents=[common],
                              argument_default=argparse.SUPPRESS, allow_abbrev=False)

    add("index", "winding number and Fredholm index")
    w = add("witten", "Witten index by every available route")
    w.add_argument("--no-heat", dest="heat", action="store_false", help="skip the heat-limit route")
    t = add("trace", "Tr(phi(T*T) - phi(TT*)) by sections and by the boundary integral")
    t.add_argument("--phi", required=True, help="power:q, schatten:p, exp_heat:s, poly:c0,c1,..., resolvent:l or JSON")
    t.add_argument("--tol", type=float)
    h = add("heat", "Tr(exp(-sTT*) - exp(-sT*T)) by sections and by the boundary integral")
    h.add_argument("--s", type=float, required=True)
    h.add_argument("--tol", type=float)
    s = add("ssf", "spectral shift function on a grid")
    s.add_argument("--grid", type=int, help="number of grid points (default 64)")
    s.add_argument("--route", choices=SSF_ROUTES)
    b = add("besov", "analytic Besov-type integral and its finiteness verdict")
    b.add_argument("--p", type=float, required=True)
    b.add_argument("--n", type=int)
    k = add("krein-check", "matrix, spectral-shift, boundary and disk sides of the trace formula")
    k.add_argument("--phi", required=True)
    k.add_argument("--tol", type=float)
    r = add("reproduce", "recompute a worked example and compare with its reference value")
    r.add_argument("id", choices=sorted(REPRODUCTIONS))
    for name, kind in (("--p", float), ("--a", float), ("--n", int), ("--m", int), ("--alpha", float)):
        r.add_argument(name, type=kind)
    r.add_argument("--h", help="symbol expression for the monomial commutator check")
    d = add("dump-matrix", "write a finite section to CSV or .npy")
    d.add_argument("--which", choices=MATRICES)
    d.add_argument("--matrix-format", dest="matrix_format", choices=("csv", "npy"))
    return parser


_GLOBAL_KEYS = {"symbol", "degree", "size", "format", "out", "seed"}


def job_from_args(ns: argparse.Namespace) -> JobSpec:
    args = vars(ns)
    base: dict = {}
    if "config" in args:
        path = Path(args.pop("config"))
        try:
            base = json.loads(path.read_text())
        except FileNotFoundError:
            raise JobError(f"config file {path} does not exist") from None
        except json.JSONDecodeError as exc:
            raise JobError(f"config file {path} is not valid JSON: {exc}") from None
        if not isinstance(base, dict):
            raise JobError("the config file must hold a JSON object")
    command = args.pop("command", None) or base.get("command")
    if command is None:
        raise JobError("no command given")
    data = dict(base)
    data["command"] = command
    data["quadrature"] = dict(base.get("quadrature", {}))
    data["params"] = dict(base.get("params", {}))
    if "nodes" in args:
        data["quadrature"]["circle_nodes"] = args.pop("nodes")
    if "phi" in args:
        data["function"] = args.pop("phi")
    for key in list(args):
        if key in _GLOBAL_KEYS:
            data[key] = args.pop(key)
    data["params"].update(args)
    return JobSpec.from_json(data)


def _render(job: JobSpec, outcome) -> str:
    if outcome.raw_text is not None:
        return outcome.raw_text
    if job.format == "csv":
        return output.to_csv(outcome.rows, outcome.columns)
    if job.format == "table":
        return output.to_table(outcome.rows, outcome.columns, outcome.title)
    payload = {"command": job.command, "job": job.to_json(), "result": outcome.result, "exit_code": outcome.status}
    return output.to_json(payload)


def _thread_limit():
    value = os.environ.get(THREADS_ENV)
    if not value:
        return nullcontext()
    try:
        n = int(value)
    except ValueError:
        raise JobError(f"{THREADS_ENV} must be an integer, got {value!r}") from None
    if n < 1:
        raise JobError(f"{THREADS_ENV} must be positive")
    return threadpool_limits(limits=n)


def run(job: JobSpec, stdout=None, stderr=None) -> int:
    """Execute a job and write its output; returns the process exit code."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        with _thread_limit():
            outcome = execute(job)
    except NUMERICAL_ERRORS as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_DISAGREE
    except (*INPUT_ERRORS, ValueError) as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_INPUT
    text = _render(job, outcome)
    if job.out and job.command != "dump-matrix":
        Path(job.out).write_text(text)
    else:
        stdout.write(text)
    return outcome.status


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on bad usage; usage errors are input errors here
        return EXIT_INPUT if exc.code else 0
    try:
        job = job_from_args(ns)
    except (*INPUT_ERRORS, ValueError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return run(job)


__all__ = ["COMMANDS", "build_parser", "job_from_args", "main", "run"]
