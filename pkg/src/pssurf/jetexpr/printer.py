"""Text rendering of expressions in the DSL; output re-parses to the same tree."""
from __future__ import annotations

from .nodes import Expr, Fn, Neg, Num, Par, Pow, Var, _Binary


def format_number(value: float) -> str:
    if value.is_integer() and abs(value) < 1e15:
        return str(int(value))
    return repr(value)


def _wrap(text: str) -> str:
    return f"({text})"


def to_text(e: Expr) -> str:
    memo: dict[int, str] = {}

    def go(node: Expr) -> str:
        key = id(node)
        if key in memo:
            return memo[key]
        if isinstance(node, Num):
            out = format_number(node.value)
        elif isinstance(node, (Par, Var)):
            out = node.name
        elif isinstance(node, Fn):
            out = f"{node.name}({go(node.arg)})"
        elif isinstance(node, Pow):
            base = go(node.base)
            if node.base.prec < 5 or (isinstance(node.base, Num) and node.base.value < 0):
                base = _wrap(base)
            out = f"{base}^{format_number(node.exponent)}"
        elif isinstance(node, Neg):
            arg = go(node.arg)
            # a bare literal after '-' would be read back as a negative constant
            if node.arg.prec < 4 or isinstance(node.arg, Num):
                arg = _wrap(arg)
            out = "-" + arg
        elif isinstance(node, _Binary):
            left, right = go(node.left), go(node.right)
            if node.left.prec < node.prec:
                left = _wrap(left)
            if node.right.prec <= node.prec:
                right = _wrap(right)
            out = f"{left} {node.op} {right}"
        else:  # pragma: no cover
            raise TypeError(type(node))
        memo[key] = out
        return out

    return go(e)
