"""Command-line interface."""

import sys

from .expr import ParseError, parse_symbol_expression
from .jobs import JobError, JobSpec, Outcome, execute, load_symbol, parse_function
from .main import build_parser, run
from .main import main as _main


def main(argv=None) -> int:
    code = _main(argv)
    if argv is None:
        sys.exit(code)
    return code


__all__ = [
    "JobError", "JobSpec", "Outcome", "ParseError", "build_parser", "execute", "load_symbol", "main",
    "parse_function", "parse_symbol_expression", "run",
]
