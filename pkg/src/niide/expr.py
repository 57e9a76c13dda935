"""A small, closed expression language for user-defined problem data.

Grammar (``^`` and ``**`` are right-associative and bind tighter than unary minus)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := ('-' | '+') unary | power
    power  := atom (('^' | '**') unary)?
    atom   := NUMBER | NAME | FUNC '(' expr ')' | '(' expr ')'

Functions: sin, cos, exp, tanh, abs, sqrt.  Constant: pi.  Variables are
restricted per field by the caller.  Compiled expressions are numpy
closures; nothing is passed to ``eval``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

FUNCTIONS: dict[str, Callable] = {
    "sin": np.sin,
    "cos": np.cos,
    "exp": np.exp,
    "tanh": np.tanh,
    "abs": np.abs,
    "sqrt": np.sqrt,
}
CONSTANTS = {"pi": math.pi}

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>\*\*|[-+*/^()]))"
)


class ExpressionError(ValueError):
    def __init__(self, message: str, source: str, position: int):
        self.source = source
        self.position = position
        super().__init__(f"{message} at position {position} in {source!r}")


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    pos: int


def tokenize(source: str) -> list[_Tok]:
    toks = []
    pos = 0
    while pos < len(source):
        if source[pos:].strip() == "":
            break
        m = _TOKEN.match(source, pos)
        if m is None:
            bad = pos + len(source[pos:]) - len(source[pos:].lstrip())
            raise ExpressionError(f"unexpected character {source[bad]!r}", source, bad)
        kind = m.lastgroup
        toks.append(_Tok(kind, m.group(kind), m.start(kind)))
        pos = m.end()
    toks.append(_Tok("end", "", len(source)))
    return toks


class _Parser:
    def __init__(self, source: str, allowed: frozenset[str]):
        self.source = source
        self.allowed = allowed
        self.toks = tokenize(source)
        self.k = 0
        self.used: set[str] = set()

    def peek(self) -> _Tok:
        return self.toks[self.k]

    def take(self) -> _Tok:
        tok = self.toks[self.k]
        self.k += 1
        return tok

    def fail(self, msg, tok=None):
        tok = self.peek() if tok is None else tok
        raise ExpressionError(msg, self.source, tok.pos)

    def expect(self, text):
        tok = self.take()
        if tok.text != text:
            self.fail(f"expected {text!r}, found {tok.text or 'end of input'!r}", tok)

    def parse(self):
        node = self.expr()
        if self.peek().kind != "end":
            self.fail(f"unexpected {self.peek().text!r}")
        return node

    def expr(self):
        node = self.term()
        while self.peek().text in ("+", "-"):
            op = self.take().text
            rhs = self.term()
            node = _binary(op, node, rhs)
        return node

    def term(self):
        node = self.unary()
        while self.peek().text in ("*", "/"):
            op = self.take().text
            rhs = self.unary()
            node = _binary(op, node, rhs)
        return node

    def unary(self):
        if self.peek().text in ("-", "+"):
            op = self.take().text
            inner = self.unary()
            return (lambda env, f=inner: -f(env)) if op == "-" else inner
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek().text in ("^", "**"):
            self.take()
            exponent = self.unary()
            return lambda env, b=base, e=exponent: np.power(b(env), e(env))
        return base

    def atom(self):
        tok = self.take()
        if tok.kind == "num":
            value = float(tok.text)
            return lambda env: value
        if tok.kind == "name":
            if tok.text in FUNCTIONS:
                fn = FUNCTIONS[tok.text]
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return lambda env, g=arg: fn(g(env))
            if tok.text in CONSTANTS:
                value = CONSTANTS[tok.text]
                return lambda env: value
            if tok.text in self.allowed:
                self.used.add(tok.text)
                name = tok.text
                return lambda env: env[name]
            allowed = ", ".join(sorted(self.allowed)) or "none"
            self.fail(f"unknown name {tok.text!r} (allowed variables: {allowed})", tok)
        if tok.text == "(":
            node = self.expr()
            self.expect(")")
            return node
        self.fail(f"unexpected {tok.text or 'end of input'!r}", tok)


def _binary(op, lhs, rhs):
    if op == "+":
        return lambda env: lhs(env) + rhs(env)
    if op == "-":
        return lambda env: lhs(env) - rhs(env)
    if op == "*":
        return lambda env: lhs(env) * rhs(env)
    return lambda env: lhs(env) / rhs(env)


@dataclass(frozen=True)
class Expression:
    """Parsed expression; call with keyword variables."""

    source: str
    allowed: frozenset[str]
    variables: frozenset[str] = field(init=False)
    _fn: Callable = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not isinstance(self.source, str):
            raise ExpressionError("expression must be a string", str(self.source), 0)
        object.__setattr__(self, "allowed", frozenset(self.allowed))
        parser = _Parser(self.source, self.allowed)
        fn = parser.parse()
        object.__setattr__(self, "_fn", fn)
        object.__setattr__(self, "variables", frozenset(parser.used))

    def __call__(self, **env):
        missing = self.variables - env.keys()
        if missing:
            raise KeyError(f"missing variables {sorted(missing)} for {self.source!r}")
        with np.errstate(all="ignore"):
            return self._fn(env)


def parse(source: str, variables=("t", "xi", "u", "i")) -> Expression:
    return Expression(source, frozenset(variables))
