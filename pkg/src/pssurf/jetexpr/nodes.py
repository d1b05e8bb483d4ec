"""Immutable expression trees over jet coordinates.

Leaves are numbers, named parameters and jet variables (``x``, ``t``, ``z``,
``z_x``, ``z_xt``, ...).  Nodes are hash-consed lazily: the structural hash is
computed once and cached, so trees can be used as dictionary keys cheaply.

The module-level helpers :func:`add`, :func:`mul`, ... perform light constant
folding; the node constructors themselves never rewrite anything, which is what
the parser relies on for ``parse(print(e)) == e``.
"""
from __future__ import annotations

import math
import re
from numbers import Real

from ..errors import JetOrderError

MAX_ORDER = 4
PARAMETERS = ("lambda", "m1", "m2", "alpha", "beta", "eta")
FUNCTIONS = ("sin", "cos", "tan", "exp", "ln", "sqrt", "arctan")
INDEPENDENT = ("x", "t")

_JET_RE = re.compile(r"^z(?:_([xt]+))?$")


def jet_name(i: int, j: int) -> str:
    """Canonical name of the jet coordinate d^(i+j) z / dx^i dt^j."""
    if i < 0 or j < 0:
        raise ValueError("jet indices must be non-negative")
    if i + j > MAX_ORDER:
        raise JetOrderError(f"jet order {i + j} exceeds cap {MAX_ORDER}")
    if i + j == 0:
        return "z"
    return "z_" + "x" * i + "t" * j


def jet_index(name: str):
    """Return ``(i, j)`` for a jet name, or ``None`` for anything else.

    Suffix letters may come in any order (``z_tx`` is ``z_xt``); the order cap
    is enforced here.
    """
    m = _JET_RE.match(name)
    if m is None:
        return None
    suffix = m.group(1) or ""
    i, j = suffix.count("x"), suffix.count("t")
    if i + j > MAX_ORDER:
        raise JetOrderError(f"jet order {i + j} of '{name}' exceeds cap {MAX_ORDER}")
    return i, j


def canonical_name(name: str) -> str:
    idx = jet_index(name)
    if idx is None:
        return name
    return jet_name(*idx)


class Expr:
    """Base class of all expression nodes."""

    __slots__ = ("_h", "_free")
    prec = 5

    def _key(self) -> tuple:
        raise NotImplementedError

    def children(self) -> tuple:
        return ()

    def __hash__(self):
        try:
            return self._h
        except AttributeError:
            h = hash((type(self).__name__,) + self._key())
            object.__setattr__(self, "_h", h)
            return h

    def __eq__(self, other):
        if self is other:
            return True
        if type(self) is not type(other):
            return False
        if hash(self) != hash(other):
            return False
        return self._key() == other._key()

    def __ne__(self, other):
        return not self == other

    def __setattr__(self, name, value):
        raise AttributeError("expressions are immutable")

    @property
    def free(self) -> frozenset:
        """Names of all parameters and variables occurring in the tree."""
        try:
            return self._free
        except AttributeError:
            out = frozenset().union(*(c.free for c in self.children()))
            object.__setattr__(self, "_free", out)
            return out

    @property
    def jets(self) -> frozenset:
        return frozenset(n for n in self.free if jet_index(n) is not None)

    def order(self) -> int:
        """Highest jet order present, -1 if no jet coordinate occurs."""
        return max((sum(jet_index(n)) for n in self.jets), default=-1)

    def __str__(self):
        from .printer import to_text

        return to_text(self)

    def __repr__(self):
        return f"JetExpr({str(self)!r})"

    # arithmetic sugar, always through the folding helpers
    def __add__(self, other):
        return add(self, as_expr(other))

    def __radd__(self, other):
        return add(as_expr(other), self)

    def __sub__(self, other):
        return sub(self, as_expr(other))

    def __rsub__(self, other):
        return sub(as_expr(other), self)

    def __mul__(self, other):
        return mul(self, as_expr(other))

    def __rmul__(self, other):
        return mul(as_expr(other), self)

    def __truediv__(self, other):
        return div(self, as_expr(other))

    def __rtruediv__(self, other):
        return div(as_expr(other), self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, exponent):
        if isinstance(exponent, Num):
            exponent = exponent.value
        return power(self, float(exponent))


def _init(obj, **fields):
    for k, v in fields.items():
        object.__setattr__(obj, k, v)


class Num(Expr):
    __slots__ = ("value",)

    def __init__(self, value):
        value = float(value)
        if not math.isfinite(value):
            raise ValueError("numeric constants must be finite")
        _init(self, value=value)

    def _key(self):
        return (self.value,)

    @property
    def free(self):
        return frozenset()


class Par(Expr):
    """Named symbolic parameter (lambda, m1, ...)."""

    __slots__ = ("name",)

    def __init__(self, name: str):
        _init(self, name=name)

    def _key(self):
        return (self.name,)

    @property
    def free(self):
        return frozenset((self.name,))


class Var(Expr):
    """Independent variable (x, t) or jet coordinate (z, z_x, ...)."""

    __slots__ = ("name",)

    def __init__(self, name: str):
        if name not in INDEPENDENT:
            idx = jet_index(name)
            if idx is None:
                raise ValueError(f"not a jet variable: {name!r}")
            name = jet_name(*idx)
        _init(self, name=name)

    @property
    def jet(self):
        return jet_index(self.name)

    def _key(self):
        return (self.name,)

    @property
    def free(self):
        return frozenset((self.name,))


class _Binary(Expr):
    __slots__ = ("left", "right")
    op = "?"

    def __init__(self, left: Expr, right: Expr):
        _init(self, left=left, right=right)

    def _key(self):
        return (self.left, self.right)

    def children(self):
        return (self.left, self.right)


class Add(_Binary):
    __slots__ = ()
    op, prec = "+", 1


class Sub(_Binary):
    __slots__ = ()
    op, prec = "-", 1


class Mul(_Binary):
    __slots__ = ()
    op, prec = "*", 2


class Div(_Binary):
    __slots__ = ()
    op, prec = "/", 2


class Neg(Expr):
    __slots__ = ("arg",)
    prec = 3

    def __init__(self, arg: Expr):
        _init(self, arg=arg)

    def _key(self):
        return (self.arg,)

    def children(self):
        return (self.arg,)


class Pow(Expr):
    """``base ^ exponent`` with a constant real exponent."""

    __slots__ = ("base", "exponent")
    prec = 4

    def __init__(self, base: Expr, exponent):
        exponent = float(exponent)
        if not math.isfinite(exponent):
            raise ValueError("exponent must be finite")
        _init(self, base=base, exponent=exponent)

    def _key(self):
        return (self.base, self.exponent)

    def children(self):
        return (self.base,)


class Fn(Expr):
    __slots__ = ("name", "arg")

    def __init__(self, name: str, arg: Expr):
        if name not in FUNCTIONS:
            raise ValueError(f"unknown function {name!r}")
        _init(self, name=name, arg=arg)

    def _key(self):
        return (self.name, self.arg)

    def children(self):
        return (self.arg,)


ZERO = Num(0.0)
ONE = Num(1.0)


def as_expr(value) -> Expr:
    if isinstance(value, Expr):
        return value
    if isinstance(value, Real):
        return Num(value)
    if isinstance(value, str):
        from .parser import parse

        return parse(value)
    raise TypeError(f"cannot convert {type(value).__name__} to an expression")


def var(name: str) -> Var:
    return Var(name)


def jet(i: int, j: int) -> Var:
    return Var(jet_name(i, j))


def par(name: str) -> Par:
    return Par(name)


def _is_num(e, value=None):
    return isinstance(e, Num) and (value is None or e.value == value)


def add(a: Expr, b: Expr) -> Expr:
    if _is_num(a, 0.0):
        return b
    if _is_num(b, 0.0):
        return a
    if _is_num(a) and _is_num(b):
        return Num(a.value + b.value)
    if isinstance(b, Neg):
        return sub(a, b.arg)
    return Add(a, b)


def sub(a: Expr, b: Expr) -> Expr:
    if _is_num(b, 0.0):
        return a
    if _is_num(a, 0.0):
        return neg(b)
    if _is_num(a) and _is_num(b):
        return Num(a.value - b.value)
    if a == b:
        return ZERO
    if isinstance(b, Neg):
        return add(a, b.arg)
    return Sub(a, b)


def mul(a: Expr, b: Expr) -> Expr:
    if _is_num(a, 0.0) or _is_num(b, 0.0):
        return ZERO
    if _is_num(a, 1.0):
        return b
    if _is_num(b, 1.0):
        return a
    if _is_num(a, -1.0):
        return neg(b)
    if _is_num(b, -1.0):
        return neg(a)
    if _is_num(a) and _is_num(b):
        return Num(a.value * b.value)
    if isinstance(a, Neg) and isinstance(b, Neg):
        return mul(a.arg, b.arg)
    if isinstance(a, Neg):
        return neg(mul(a.arg, b))
    if isinstance(b, Neg):
        return neg(mul(a, b.arg))
    # keep numeric factors on the left
    if _is_num(b):
        return Mul(b, a)
    return Mul(a, b)


def div(a: Expr, b: Expr) -> Expr:
    if _is_num(b, 1.0):
        return a
    if _is_num(a, 0.0) and not _is_num(b, 0.0):
        return ZERO
    if _is_num(a) and _is_num(b) and b.value != 0.0:
        return Num(a.value / b.value)
    if isinstance(a, Neg):
        return neg(div(a.arg, b))
    if isinstance(b, Neg):
        return neg(div(a, b.arg))
    return Div(a, b)


def neg(a: Expr) -> Expr:
    if _is_num(a):
        return Num(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def power(base: Expr, exponent: float) -> Expr:
    exponent = float(exponent)
    if exponent == 0.0:
        return ONE
    if exponent == 1.0:
        return base
    if _is_num(base):
        try:
            value = base.value ** exponent
        except (ZeroDivisionError, OverflowError):
            return Pow(base, exponent)
        if isinstance(value, float) and math.isfinite(value):
            return Num(value)
    if isinstance(base, Pow) and float(exponent).is_integer() and base.exponent.is_integer():
        return power(base.base, base.exponent * exponent)
    return Pow(base, exponent)


def fn(name: str, arg: Expr) -> Expr:
    if _is_num(arg):
        from .evaluate import evaluate

        try:
            return Num(evaluate(Fn(name, arg), {}))
        except Exception:
            pass
    return Fn(name, arg)


def sqrt(a):
    return fn("sqrt", as_expr(a))


def sin(a):
    return fn("sin", as_expr(a))


def cos(a):
    return fn("cos", as_expr(a))


def tan(a):
    return fn("tan", as_expr(a))


def exp(a):
    return fn("exp", as_expr(a))


def ln(a):
    return fn("ln", as_expr(a))


def arctan(a):
    return fn("arctan", as_expr(a))


def walk(e: Expr):
    """Yield every distinct node of ``e`` once (post-order)."""
    seen = set()
    stack = [(e, False)]
    while stack:
        node, done = stack.pop()
        if done:
            yield node
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for c in reversed(node.children()):
            stack.append((c, False))
