"""Pratt parser for density expressions in the single variable ``x``.

Grammar: numeric literals, ``x``, ``pi``, binary ``+ - * / ^`` (``^`` is
right associative and binds tighter than unary minus), parentheses and the
functions exp, log, sin, cos, sqrt. Parsing produces a closure that
evaluates element-wise on numpy arrays.
"""

from __future__ import annotations

import re
from typing import Callable

import numpy as np

Evaluator = Callable[[np.ndarray], np.ndarray]

FUNCTIONS = {
    "exp": np.exp,
    "log": np.log,
    "sin": np.sin,
    "cos": np.cos,
    "sqrt": np.sqrt,
}

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*/^()]))"
)

# left binding powers
_BP = {"+": 10, "-": 10, "*": 20, "/": 20, "^": 40}
_UNARY_BP = 30


class ExpressionError(ValueError):
    def __init__(self, message: str, position: int, text: str):
        super().__init__(f"{message} at position {position}: {text!r}")
        self.position = position


class _Token:
    __slots__ = ("kind", "value", "pos")

    def __init__(self, kind: str, value, pos: int):
        self.kind, self.value, self.pos = kind, value, pos


def tokenize(text: str) -> list[_Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            bad = pos + len(text[pos:]) - len(text[pos:].lstrip())
            raise ExpressionError(f"unexpected character {text[bad]!r}", bad, text)
        start = m.start(m.lastgroup)
        if m.group("num") is not None:
            tokens.append(_Token("num", float(m.group("num")), start))
        elif m.group("name") is not None:
            tokens.append(_Token("name", m.group("name"), start))
        else:
            tokens.append(_Token("op", m.group("op"), start))
        pos = m.end()
    tokens.append(_Token("end", None, len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = tokenize(text)
        self.i = 0

    def peek(self) -> _Token:
        return self.tokens[self.i]

    def advance(self) -> _Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, op: str) -> None:
        tok = self.advance()
        if tok.kind != "op" or tok.value != op:
            raise ExpressionError(f"expected {op!r}", tok.pos, self.text)

    def expression(self, rbp: int = 0) -> Evaluator:
        left = self.nud(self.advance())
        while True:
            tok = self.peek()
            if tok.kind != "op" or tok.value not in _BP or _BP[tok.value] <= rbp:
                break
            self.advance()
            left = self.led(tok, left)
        return left

    def nud(self, tok: _Token) -> Evaluator:
        if tok.kind == "num":
            value = tok.value
            return lambda x: np.full_like(x, value, dtype=float)
        if tok.kind == "name":
            name = tok.value
            if name == "x":
                return lambda x: np.asarray(x, float)
            if name == "pi":
                return lambda x: np.full_like(x, np.pi, dtype=float)
            if name in FUNCTIONS:
                fn = FUNCTIONS[name]
                nxt = self.peek()
                if nxt.kind != "op" or nxt.value != "(":
                    raise ExpressionError(f"function {name!r} needs an argument list", nxt.pos, self.text)
                self.advance()
                arg = self.expression()
                self.expect(")")
                return lambda x: fn(arg(x))
            raise ExpressionError(f"unknown name {name!r}", tok.pos, self.text)
        if tok.kind == "op":
            if tok.value == "(":
                inner = self.expression()
                self.expect(")")
                return inner
            if tok.value == "-":
                operand = self.expression(_UNARY_BP)
                return lambda x: -operand(x)
            if tok.value == "+":
                return self.expression(_UNARY_BP)
        if tok.kind == "end":
            raise ExpressionError("unexpected end of expression", tok.pos, self.text)
        raise ExpressionError(f"unexpected token {tok.value!r}", tok.pos, self.text)

    def led(self, tok: _Token, left: Evaluator) -> Evaluator:
        op = tok.value
        if op == "^":
            right = self.expression(_BP[op] - 1)
            return lambda x: np.power(left(x), right(x))
        right = self.expression(_BP[op])
        if op == "+":
            return lambda x: left(x) + right(x)
        if op == "-":
            return lambda x: left(x) - right(x)
        if op == "*":
            return lambda x: left(x) * right(x)
        return lambda x: left(x) / right(x)


def parse(text: str) -> Evaluator:
    """Compile ``text`` into a vectorised function of x.

    >>> float(parse("(1+0.5*x)^2")(0.0))
    1.0
    """
    p = _Parser(text)
    fn = p.expression()
    tail = p.peek()
    if tail.kind != "end":
        raise ExpressionError(f"unexpected token {tail.value!r}", tail.pos, text)

    def evaluate(x):
        with np.errstate(all="ignore"):
            return fn(np.asarray(x, float))

    return evaluate
