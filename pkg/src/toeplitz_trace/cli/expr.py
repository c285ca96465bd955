"""Symbol expressions such as ``z^2*(1+z)^1.5``, ``(z-0.5)/(z-2)`` or ``coeffs{-1:1, 1:1}``.

Grammar::

    expr    := ["+"|"-"] product (("+"|"-") product)*
    product := factor (("*"|"/"|<juxtaposition>) factor)*
    factor  := atom ["^" signed-number]
    atom    := "z" | number | "psi" | "(" expr ")" | "coeffs{" pair ("," pair)* "}"
    pair    := integer ":" complex-number

``z`` stands for e^{it}. Laurent polynomials become explicit coefficient
symbols, quotients of polynomials become rational families, ``z^n (1+z)^a``
with non-integer ``a`` becomes a twisted power and ``psi^a`` the
logarithmic family.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import polynomial as P

from ..symbol import FourierSymbol, LogPower, Rational, SymbolError, TwistedPower, from_coefficients, multiply


class ParseError(SymbolError):
    """Malformed symbol expression; carries the offending position and what was expected."""

    def __init__(self, message: str, text: str, position: int, expected: str | None = None):
        self.text = text
        self.position = position
        self.expected = expected
        detail = f"{message} at position {position}"
        if expected:
            detail += f" (expected {expected})"
        pointer = f"\n  {text}\n  {' ' * position}^"
        super().__init__(detail + pointer)


_TOKEN = re.compile(
    r"\s*(?:(?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]+)|(?P<op>[-+*/^(){}:,]))"
)


@dataclass
class _Token:
    kind: str
    text: str
    pos: int


def _tokenize(text: str) -> list[_Token]:
    tokens, pos = [], 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ParseError(f"unexpected character {text[pos]!r}", text, pos)
        kind = m.lastgroup
        tokens.append(_Token(kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(_Token("end", "", len(text)))
    return tokens


# values produced while parsing

def _trim(p: np.ndarray) -> np.ndarray:
    p = np.trim_zeros(np.asarray(p, dtype=complex), "b")
    return p if p.size else np.zeros(1, dtype=complex)


@dataclass
class _Rat:
    """const * z^shift * prod p_k(z)^m_k with polynomials p_k having p_k(0) != 0."""

    const: complex = 1.0
    shift: int = 0
    factors: list = field(default_factory=list)  # (ascending coefficients, multiplicity)

    @classmethod
    def polynomial(cls, coeffs) -> "_Rat":
        p = _trim(coeffs)
        if not np.any(p):
            return cls(0.0)
        low = int(np.flatnonzero(p)[0])
        p = p[low:]
        if p.size == 1:
            return cls(complex(p[0]), low)
        return cls(1.0, low, [(p, 1)])

    @property
    def is_laurent(self) -> bool:
        return all(m > 0 for _, m in self.factors)

    def laurent(self) -> dict[int, complex]:
        acc = np.array([self.const], dtype=complex)
        for p, m in self.factors:
            for _ in range(m):
                acc = P.polymul(acc, p)
        return {int(k) + self.shift: complex(c) for k, c in enumerate(acc) if c != 0}

    def split(self) -> tuple[np.ndarray, np.ndarray, int]:
        """Expanded numerator, denominator (ascending) and the z-shift."""
        num = np.array([self.const], dtype=complex)
        den = np.array([1.0], dtype=complex)
        for p, m in self.factors:
            for _ in range(abs(m)):
                if m > 0:
                    num = P.polymul(num, p)
                else:
                    den = P.polymul(den, p)
        return num, den, self.shift

    def times(self, other: "_Rat") -> "_Rat":
        return _Rat(self.const * other.const, self.shift + other.shift, self.factors + other.factors)

    def power(self, k: int) -> "_Rat":
        if self.const == 0 and k < 0:
            raise ZeroDivisionError
        return _Rat(self.const**k, self.shift * k, [(p, m * k) for p, m in self.factors])

    def is_one_plus_z(self) -> bool:
        return (self.const == 1 and self.shift == 0 and len(self.factors) == 1 and self.factors[0][1] == 1
                and np.allclose(self.factors[0][0], [1, 1], rtol=0, atol=0))

    def is_monomial(self) -> bool:
        return self.const == 1 and not self.factors


@dataclass
class _Twist:
    shift: int
    alpha: float


@dataclass
class _Psi:
    alpha: float


@dataclass
class _Explicit:
    symbol: FourierSymbol


def _sum(a, b, sign: int, text: str, pos: int):
    if isinstance(a, _Rat) and isinstance(b, _Rat):
        na, da, sa = a.split()
        nb, db, sb = b.split()
        low = min(sa, sb)
        left = P.polymul(np.concatenate([np.zeros(sa - low), na]), db)
        right = P.polymul(np.concatenate([np.zeros(sb - low), nb]), da)
        num = P.polyadd(left, sign * right)
        den = P.polymul(da, db)
        out = _Rat.polynomial(num)
        out.shift += low
        dpart = _Rat.polynomial(den)
        if dpart.const == 0:
            raise ParseError("division by zero", text, pos)
        return out.times(dpart.power(-1))
    if isinstance(a, (_Rat, _Explicit)) and isinstance(b, (_Rat, _Explicit)):
        fa, fb = _as_explicit(a, text, pos), _as_explicit(b, text, pos)
        d = max(fa.degree, fb.degree)
        ca = np.pad(fa.coeffs, d - fa.degree)
        cb = np.pad(fb.coeffs, d - fb.degree)
        return _Explicit(FourierSymbol(ca + sign * cb))
    raise ParseError("only polynomial and coefficient terms can be added", text, pos)


def _as_explicit(v, text: str, pos: int) -> FourierSymbol:
    if isinstance(v, _Explicit):
        return v.symbol
    if isinstance(v, _Rat) and v.is_laurent:
        lau = v.laurent()
        return from_coefficients(lau) if lau else from_coefficients({0: 0.0})
    raise ParseError("this term has no finite Fourier expansion", text, pos)


def _product(a, b, text: str, pos: int):
    if isinstance(a, _Rat) and isinstance(b, _Rat):
        return a.times(b)
    if isinstance(b, _Rat) and not isinstance(a, _Rat):
        a, b = b, a
    if isinstance(a, _Rat) and isinstance(b, _Twist):
        shift, alpha = b.shift + a.shift, b.alpha
        rest = []
        for p, m in a.factors:
            if np.array_equal(p, [1, 1]):
                alpha += m
            else:
                rest.append((p, m))
        if a.const != 1 or rest:
            raise ParseError("a twisted power can only be multiplied by z^n and (1+z)^k", text, pos)
        return _Twist(shift, alpha)
    if isinstance(a, _Twist) and isinstance(b, _Twist):
        return _Twist(a.shift + b.shift, a.alpha + b.alpha)
    if isinstance(a, _Rat) and isinstance(b, _Psi):
        if a.const == 1 and a.shift == 0 and not a.factors:
            return b
        raise ParseError("psi powers cannot be combined with other factors", text, pos)
    if isinstance(a, _Psi) and isinstance(b, _Psi):
        return _Psi(a.alpha + b.alpha)
    if isinstance(a, (_Rat, _Explicit)) and isinstance(b, (_Rat, _Explicit)):
        return _Explicit(multiply(_as_explicit(a, text, pos), _as_explicit(b, text, pos)))
    raise ParseError("unsupported product of factors", text, pos)


def _power(base, exponent: float, text: str, pos: int):
    integer = float(exponent).is_integer()
    if isinstance(base, _Rat):
        if integer:
            try:
                return base.power(int(exponent))
            except ZeroDivisionError:
                raise ParseError("zero raised to a negative power", text, pos) from None
        if base.is_one_plus_z():
            return _Twist(0, float(exponent))
        raise ParseError("non-integer powers are supported only for (1+z)", text, pos, "(1+z)^alpha")
    if isinstance(base, _Twist) and integer:
        return _Twist(base.shift * int(exponent), base.alpha * exponent)
    if isinstance(base, _Psi):
        return _Psi(base.alpha * exponent)
    if isinstance(base, _Explicit) and integer and exponent >= 1:
        out = base.symbol
        for _ in range(int(exponent) - 1):
            out = multiply(out, base.symbol)
        return _Explicit(out)
    raise ParseError("unsupported exponent for this factor", text, pos)


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    @property
    def tok(self) -> _Token:
        return self.tokens[self.i]

    def take(self, kind: str | None = None, text: str | None = None, expected: str | None = None) -> _Token:
        t = self.tok
        if (kind and t.kind != kind) or (text and t.text != text):
            found = t.text or "end of input"
            raise ParseError(f"unexpected {found!r}", self.text, t.pos, expected or text or kind)
        self.i += 1
        return t

    def at(self, text: str) -> bool:
        return self.tok.kind == "op" and self.tok.text == text

    def parse(self):
        value = self.expr()
        if self.tok.kind != "end":
            raise ParseError(f"unexpected {self.tok.text!r}", self.text, self.tok.pos, "an operator or end of input")
        return value

    def expr(self):
        sign = 1
        if self.at("+") or self.at("-"):
            sign = -1 if self.take().text == "-" else 1
        value = self.product()
        if sign < 0:
            value = _product(_Rat(-1.0), value, self.text, self.tok.pos)
        while self.at("+") or self.at("-"):
            op = self.take()
            rhs = self.product()
            value = _sum(value, rhs, 1 if op.text == "+" else -1, self.text, op.pos)
        return value

    def _starts_factor(self) -> bool:
        t = self.tok
        return t.kind in ("number", "name") or (t.kind == "op" and t.text == "(")

    def product(self):
        value = self.factor()
        while True:
            if self.at("*") or self.at("/"):
                op = self.take()
                rhs = self.factor()
                if op.text == "/":
                    rhs = _power(rhs, -1, self.text, op.pos)
                value = _product(value, rhs, self.text, op.pos)
            elif self._starts_factor():
                pos = self.tok.pos
                value = _product(value, self.factor(), self.text, pos)
            else:
                return value

    def factor(self):
        base = self.atom()
        if self.at("^"):
            op = self.take()
            sign = 1.0
            if self.at("-") or self.at("+"):
                sign = -1.0 if self.take().text == "-" else 1.0
            if self.at("("):
                self.take()
                num = self.take("number", expected="a number")
                self.take("op", ")")
            else:
                num = self.take("number", expected="a number")
            base = _power(base, sign * float(num.text), self.text, op.pos)
        return base

    def atom(self):
        t = self.tok
        if t.kind == "number":
            self.take()
            return _Rat(complex(float(t.text)))
        if t.kind == "name":
            self.take()
            if t.text == "z":
                return _Rat(1.0, 1)
            if t.text == "psi":
                return _Psi(1.0)
            if t.text == "coeffs":
                return self.coeffs(t)
            raise ParseError(f"unknown name {t.text!r}", self.text, t.pos, "z, psi or coeffs{...}")
        if self.at("("):
            self.take()
            value = self.expr()
            self.take("op", ")", expected="')'")
            return value
        found = t.text or "end of input"
        raise ParseError(f"unexpected {found!r}", self.text, t.pos, "z, a number, '(' or coeffs{...}")

    def coeffs(self, start: _Token):
        open_tok = self.take("op", "{", expected="'{'")
        close = self.text.find("}", open_tok.pos)
        if close < 0:
            raise ParseError("unterminated coefficient list", self.text, open_tok.pos, "'}'")
        body = self.text[open_tok.pos + 1 : close]
        entries: dict[int, complex] = {}
        offset = open_tok.pos + 1
        for chunk in body.split(","):
            where = offset + len(chunk) - len(chunk.lstrip())
            offset += len(chunk) + 1
            if not chunk.strip():
                raise ParseError("empty coefficient entry", self.text, where, "index:value")
            if ":" not in chunk:
                raise ParseError("coefficient entry without ':'", self.text, where, "index:value")
            key, val = chunk.split(":", 1)
            try:
                k = int(key.strip())
            except ValueError:
                raise ParseError(f"bad coefficient index {key.strip()!r}", self.text, where, "an integer") from None
            try:
                c = complex(val.strip().replace(" ", "").replace("i", "j"))
            except ValueError:
                raise ParseError(f"bad coefficient value {val.strip()!r}", self.text, where, "a number") from None
            entries[k] = entries.get(k, 0) + c
        # skip the tokens consumed by the raw scan
        while self.tok.kind != "end" and self.tok.pos <= close:
            self.i += 1
        if not entries:
            raise ParseError("empty coefficient list", self.text, start.pos, "index:value pairs")
        return _Explicit(from_coefficients(entries))


def _roots(p: np.ndarray) -> list[complex]:
    roots = np.roots(p[::-1]) if p.size > 1 else np.zeros(0)
    out = []
    for r in roots:
        r = complex(r)
        if r != 0 and abs(abs(r) - 1) < 1e-13:
            r /= abs(r)
        out.append(r)
    return out


def _to_rational(v: _Rat) -> Rational:
    c = complex(v.const)
    zeros, poles = [], []
    for p, m in v.factors:
        c *= complex(p[-1]) ** m
        target = zeros if m > 0 else poles
        target.extend((r, abs(m)) for r in _roots(p))
    if v.shift > 0:
        zeros.append((0j, v.shift))
    elif v.shift < 0:
        poles.append((0j, -v.shift))
    return Rational(c, tuple(zeros), tuple(poles))


def parse_symbol_expression(text: str):
    """Parse an expression into a symbol family or an explicit coefficient symbol."""
    if not text or not text.strip():
        raise ParseError("empty expression", text or "", 0, "a symbol expression")
    value = _Parser(text).parse()
    if isinstance(value, _Explicit):
        return value.symbol
    if isinstance(value, _Twist):
        if float(value.alpha).is_integer():
            return _as_explicit(_Rat(1.0, value.shift, [(np.array([1, 1], dtype=complex), int(value.alpha))]),
                                text, 0)
        return TwistedPower(value.shift, value.alpha)
    if isinstance(value, _Psi):
        return LogPower(value.alpha)
    if value.const == 0:
        raise ParseError("the symbol is identically zero", text, 0)
    if value.is_laurent:
        return _as_explicit(value, text, 0)
    if not math.isfinite(abs(value.const)):
        raise ParseError("coefficient overflow", text, 0)
    return _to_rational(value)
