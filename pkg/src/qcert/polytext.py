"""Reading and writing polynomials as text.

Grammar (whitespace-insensitive)::

    expr   := ['+'|'-'] term (('+'|'-') term)*
    term   := factor (['*'] factor)*
    factor := atom ['^' INT]
    atom   := NUMBER | VAR | '(' expr ')'
    VAR    := 'x0' | 'x1' | 'x2' | 'x3'

Juxtaposition means multiplication, so ``4x0x1`` parses.  The result must be
homogeneous; it is always embedded in the four variables x0..x3.
"""

from __future__ import annotations

import re
from collections import defaultdict

from .errors import InhomogeneousError, ParseError
from .polycore import Exponent, HomogPoly

NVARS = 4

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<var>[A-Za-z_]+[0-9]*)
  | (?P<op>[-+*^()])
    """,
    re.VERBOSE,
)

Sparse = dict[Exponent, float]


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    out = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", pos, text)
        kind = m.lastgroup
        if kind != "ws":
            out.append((kind, m.group(), pos))
        pos = m.end()
    out.append(("end", "", len(text)))
    return out


def _add(a: Sparse, b: Sparse, sign: float = 1.0) -> Sparse:
    out = defaultdict(float, a)
    for e, c in b.items():
        out[e] += sign * c
    return dict(out)


def _mul(a: Sparse, b: Sparse) -> Sparse:
    out: dict[Exponent, float] = defaultdict(float)
    for ea, ca in a.items():
        for eb, cb in b.items():
            out[tuple(x + y for x, y in zip(ea, eb))] += ca * cb
    return dict(out)


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def error(self, message: str, tok) -> ParseError:
        return ParseError(message, tok[2], self.text)

    def parse(self) -> Sparse:
        if self.peek()[0] == "end":
            raise self.error("empty polynomial", self.peek())
        value = self.expr()
        tok = self.peek()
        if tok[0] != "end":
            raise self.error(f"unexpected {tok[1]!r}", tok)
        return value

    def expr(self) -> Sparse:
        sign = 1.0
        if self.peek()[1] in "+-" and self.peek()[0] == "op":
            sign = -1.0 if self.take()[1] == "-" else 1.0
        value = _add({}, self.term(), sign)
        while self.peek()[0] == "op" and self.peek()[1] in ("+", "-"):
            sign = -1.0 if self.take()[1] == "-" else 1.0
            value = _add(value, self.term(), sign)
        return value

    def term(self) -> Sparse:
        value = self.factor()
        while True:
            tok = self.peek()
            if tok[0] == "op" and tok[1] == "*":
                self.take()
                value = _mul(value, self.factor())
            elif tok[0] in ("num", "var") or (tok[0] == "op" and tok[1] == "("):
                value = _mul(value, self.factor())
            else:
                return value

    def factor(self) -> Sparse:
        base = self.atom()
        tok = self.peek()
        if tok[0] == "op" and tok[1] == "^":
            self.take()
            exp_tok = self.take()
            if exp_tok[0] != "num" or not exp_tok[1].isdigit():
                raise self.error("exponent must be a nonnegative integer", exp_tok)
            result: Sparse = {(0,) * NVARS: 1.0}
            for _ in range(int(exp_tok[1])):
                result = _mul(result, base)
            return result
        return base

    def atom(self) -> Sparse:
        tok = self.take()
        kind, text, pos = tok
        if kind == "num":
            return {(0,) * NVARS: float(text)}
        if kind == "var":
            m = re.fullmatch(r"x([0-9]+)", text)
            if m is None or int(m.group(1)) >= NVARS:
                raise self.error(f"unknown variable {text!r} (expected x0..x{NVARS - 1})", tok)
            e = [0] * NVARS
            e[int(m.group(1))] = 1
            return {tuple(e): 1.0}
        if kind == "op" and text == "(":
            inner = self.expr()
            close = self.take()
            if close[1] != ")":
                raise self.error("expected ')'", close)
            return inner
        if kind == "end":
            raise self.error("unexpected end of input", tok)
        raise self.error(f"unexpected {text!r}", tok)


def parse_poly(text: str) -> HomogPoly:
    """Parse ``text`` into a homogeneous polynomial in x0..x3."""
    terms = {e: c for e, c in _Parser(text).parse().items() if c != 0.0}
    degrees = {sum(e) for e in terms}
    if len(degrees) > 1:
        raise InhomogeneousError(degrees)
    if not terms:
        raise ParseError("polynomial is identically zero; its degree is undefined")
    degree = degrees.pop()
    return HomogPoly.from_terms(NVARS, degree, terms)


def format_poly(f: HomogPoly) -> str:
    """Text form that :func:`parse_poly` reads back bit-exactly (for nvars <= 4)."""
    pieces = []
    for e, c in f.terms():
        mono = "*".join(f"x{i}" if v == 1 else f"x{i}^{v}" for i, v in enumerate(e) if v)
        mag = repr(abs(c))
        body = f"{mag}*{mono}" if mono else mag
        sign = "-" if c < 0 else "+"
        pieces.append((sign, body))
    if not pieces:
        return "0"
    first_sign, first = pieces[0]
    out = ("-" if first_sign == "-" else "") + first
    for sign, body in pieces[1:]:
        out += f" {sign} {body}"
    return out
