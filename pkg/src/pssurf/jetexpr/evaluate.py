"""Numeric evaluation of expression trees.

:func:`evaluate` is the strict scalar evaluator: it raises on domain
violations and names the offending subexpression.  :func:`evaluate_array`
works on numpy arrays, never raises on domain problems (non-finite entries
mark them) and can also report the largest magnitude of any node, which the
identity tester uses as a rounding-error scale.
"""
from __future__ import annotations

import math
from collections.abc import Mapping
from dataclasses import dataclass, field

import numpy as np

from ..errors import JetDomainError, MissingValueError
from .nodes import Add, Div, Expr, Fn, Mul, Neg, Num, Par, Pow, Sub, Var


@dataclass(frozen=True)
class JetPoint:
    """A point of jet space plus parameter values."""

    jets: Mapping[str, float] = field(default_factory=dict)
    params: Mapping[str, float] = field(default_factory=dict)

    def env(self) -> dict:
        out = dict(self.params)
        out.update(self.jets)
        return out


def _env(point) -> Mapping:
    if isinstance(point, JetPoint):
        return point.env()
    return point


def _lookup(env, name, node):
    try:
        return env[name]
    except KeyError:
        raise MissingValueError(f"no value assigned to {name!r}") from None


def _scalar_fn(name, u, node):
    if name == "sin":
        return math.sin(u)
    if name == "cos":
        return math.cos(u)
    if name == "tan":
        if math.cos(u) == 0.0:
            raise JetDomainError("tangent pole", node)
        return math.tan(u)
    if name == "exp":
        try:
            return math.exp(u)
        except OverflowError:
            raise JetDomainError("exponential overflow", node) from None
    if name == "ln":
        if u <= 0.0:
            raise JetDomainError("logarithm of non-positive value", node)
        return math.log(u)
    if name == "sqrt":
        if u < 0.0:
            raise JetDomainError("square root of negative value", node)
        return math.sqrt(u)
    if name == "arctan":
        return math.atan(u)
    raise ValueError(name)  # pragma: no cover


def evaluate(e: Expr, point) -> float:
    """Evaluate ``e`` at a :class:`JetPoint` (or a plain name -> value mapping)."""
    env = _env(point)
    memo: dict[int, float] = {}

    def go(node):
        key = id(node)
        if key in memo:
            return memo[key]
        if isinstance(node, Num):
            v = node.value
        elif isinstance(node, (Var, Par)):
            v = float(_lookup(env, node.name, node))
        elif isinstance(node, Add):
            v = go(node.left) + go(node.right)
        elif isinstance(node, Sub):
            v = go(node.left) - go(node.right)
        elif isinstance(node, Mul):
            v = go(node.left) * go(node.right)
        elif isinstance(node, Div):
            den = go(node.right)
            if den == 0.0:
                raise JetDomainError("division by zero", node)
            v = go(node.left) / den
        elif isinstance(node, Neg):
            v = -go(node.arg)
        elif isinstance(node, Pow):
            b = go(node.base)
            p = node.exponent
            if b == 0.0 and p < 0:
                raise JetDomainError("division by zero", node)
            if b < 0.0 and not p.is_integer():
                raise JetDomainError("fractional power of negative value", node)
            try:
                v = b**p
            except OverflowError:
                raise JetDomainError("power overflow", node) from None
        elif isinstance(node, Fn):
            v = _scalar_fn(node.name, go(node.arg), node)
        else:  # pragma: no cover
            raise TypeError(type(node))
        if not math.isfinite(v):
            raise JetDomainError("non-finite value", node)
        memo[key] = v
        return v

    return go(e)


_NP_FN = {
    "sin": np.sin,
    "cos": np.cos,
    "tan": np.tan,
    "exp": np.exp,
    "ln": np.log,
    "sqrt": np.sqrt,
    "arctan": np.arctan,
}


def evaluate_array(e: Expr, env: Mapping, with_scale: bool = False):
    """Vectorised evaluation over numpy arrays in ``env``.

    Returns the value array, or ``(value, scale)`` where ``scale`` is the
    elementwise maximum of ``|node value|`` over every node of the tree.
    Entries outside the domain come back as nan/inf.
    """
    memo: dict[int, np.ndarray] = {}
    scale = [None]

    def go(node):
        key = id(node)
        if key in memo:
            return memo[key]
        if isinstance(node, Num):
            v = np.float64(node.value)
        elif isinstance(node, (Var, Par)):
            v = np.asarray(_lookup(env, node.name, node), dtype=float)
        elif isinstance(node, Add):
            v = go(node.left) + go(node.right)
        elif isinstance(node, Sub):
            v = go(node.left) - go(node.right)
        elif isinstance(node, Mul):
            v = go(node.left) * go(node.right)
        elif isinstance(node, Div):
            v = go(node.left) / go(node.right)
        elif isinstance(node, Neg):
            v = -go(node.arg)
        elif isinstance(node, Pow):
            b = go(node.base)
            p = node.exponent
            if p == 2.0:
                v = b * b
            elif p == 0.5:
                v = np.sqrt(b)
            else:
                v = np.power(b, p)
        elif isinstance(node, Fn):
            v = _NP_FN[node.name](go(node.arg))
        else:  # pragma: no cover
            raise TypeError(type(node))
        if with_scale:
            a = np.abs(v)
            scale[0] = a if scale[0] is None else np.maximum(scale[0], a)
        memo[key] = v
        return v

    with np.errstate(all="ignore"):
        value = go(e)
    if with_scale:
        return value, scale[0]
    return value
