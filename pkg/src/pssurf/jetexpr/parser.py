"""Recursive-descent parser for the jet-expression DSL.

Grammar::

    expr  := term (('+' | '-') term)*
    term  := unary (('*' | '/') unary)*
    unary := '-' unary | power
    power := atom ('^' ['-'|'+'] number)?
    atom  := number | ident | func '(' expr ')' | '(' expr ')'

A minus sign directly in front of a numeric literal (not raised to a power)
produces a negative constant rather than a negation node.
"""
from __future__ import annotations

import math
import re

from ..errors import JetOrderError, JetSyntaxError, UnknownIdentifierError
from .nodes import (
    FUNCTIONS,
    INDEPENDENT,
    PARAMETERS,
    Add,
    Div,
    Expr,
    Fn,
    Mul,
    Neg,
    Num,
    Par,
    Pow,
    Sub,
    Var,
    jet_index,
)

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>[-+*/^()]))"
)

CONSTANTS = {"pi": math.pi}


def tokenize(source: str):
    tokens = []
    pos = 0
    n = len(source)
    while pos < n:
        if source[pos:].strip() == "":
            break
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise JetSyntaxError(f"unexpected character {source[pos]!r}", pos, source)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", n))
    return tokens


class _Parser:
    def __init__(self, source: str, params: frozenset):
        self.source = source
        self.tokens = tokenize(source)
        self.i = 0
        self.params = params

    def peek(self, offset=0):
        return self.tokens[min(self.i + offset, len(self.tokens) - 1)]

    def next(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def error(self, message, tok=None):
        tok = tok or self.peek()
        raise JetSyntaxError(message, tok[2], self.source)

    def expect(self, value):
        tok = self.next()
        if tok[1] != value:
            self.error(f"expected {value!r}, found {tok[1] or 'end of input'!r}", tok)
        return tok

    def parse(self) -> Expr:
        if self.peek()[0] == "end":
            self.error("empty expression")
        e = self.expr()
        if self.peek()[0] != "end":
            self.error(f"unexpected token {self.peek()[1]!r}")
        return e

    def expr(self):
        e = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.next()[1]
            rhs = self.term()
            e = Add(e, rhs) if op == "+" else Sub(e, rhs)
        return e

    def term(self):
        e = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.next()[1]
            rhs = self.unary()
            e = Mul(e, rhs) if op == "*" else Div(e, rhs)
        return e

    def unary(self):
        if self.peek()[1] == "-":
            self.next()
            if self.peek()[0] == "num" and self.peek(1)[1] != "^":
                return Num(-float(self.next()[1]))
            return Neg(self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[1] == "^":
            self.next()
            sign = 1.0
            if self.peek()[1] in ("-", "+"):
                sign = -1.0 if self.next()[1] == "-" else 1.0
            tok = self.next()
            if tok[0] != "num":
                self.error("exponent must be a numeric constant", tok)
            return Pow(base, sign * float(tok[1]))
        return base

    def atom(self):
        tok = self.next()
        kind, text, pos = tok
        if kind == "num":
            return Num(float(text))
        if kind == "ident":
            if text in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Fn(text, arg)
            if self.peek()[1] == "(":
                raise UnknownIdentifierError(f"unknown function {text!r}", pos, self.source)
            if text in INDEPENDENT:
                return Var(text)
            if text in self.params:
                return Par(text)
            if text in CONSTANTS:
                return Num(CONSTANTS[text])
            try:
                idx = jet_index(text)
            except JetOrderError as exc:
                raise JetSyntaxError(str(exc), pos, self.source) from exc
            if idx is not None:
                return Var(text)
            raise UnknownIdentifierError(f"unknown identifier {text!r}", pos, self.source)
        if text == "(":
            e = self.expr()
            self.expect(")")
            return e
        self.error(f"unexpected token {text or 'end of input'!r}", tok)


def parse(source: str, extra_params=()) -> Expr:
    """Parse DSL text into an expression tree.

    ``extra_params`` adds parameter names beyond the built-in set
    (lambda, m1, m2, alpha, beta, eta).
    """
    return _Parser(source, frozenset(PARAMETERS) | frozenset(extra_params)).parse()
