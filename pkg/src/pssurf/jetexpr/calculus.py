"""Symbolic differentiation on jet space and reduction modulo an equation."""
from __future__ import annotations

from dataclasses import dataclass

from ..errors import JetOrderError, SubstitutionError
from .nodes import (
    MAX_ORDER,
    ONE,
    ZERO,
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
    add,
    as_expr,
    canonical_name,
    cos,
    div,
    fn,
    jet,
    jet_index,
    mul,
    neg,
    power,
    sin,
    sub,
)


def partial(e: Expr, v) -> Expr:
    """Partial derivative with respect to one coordinate or parameter.

    ``v`` is a name (``"z_x"``, ``"m1"``) or a :class:`Var`/:class:`Par`
    leaf.  All other jet coordinates are held fixed.
    """
    if isinstance(v, (Var, Par)):
        v = v.name
    v = canonical_name(v)
    memo: dict[int, Expr] = {}

    def d(node):
        if v not in node.free:
            return ZERO
        key = id(node)
        if key in memo:
            return memo[key]
        if isinstance(node, (Var, Par)):
            out = ONE
        elif isinstance(node, Add):
            out = add(d(node.left), d(node.right))
        elif isinstance(node, Sub):
            out = sub(d(node.left), d(node.right))
        elif isinstance(node, Mul):
            a, b = node.left, node.right
            out = add(mul(d(a), b), mul(a, d(b)))
        elif isinstance(node, Div):
            a, b = node.left, node.right
            da, db = d(a), d(b)
            out = sub(div(da, b), div(mul(a, db), power(b, 2)))
        elif isinstance(node, Neg):
            out = neg(d(node.arg))
        elif isinstance(node, Pow):
            n = node.exponent
            out = mul(mul(Num(n), power(node.base, n - 1.0)), d(node.base))
        elif isinstance(node, Fn):
            out = mul(_outer_derivative(node), d(node.arg))
        else:  # pragma: no cover
            raise TypeError(type(node))
        memo[key] = out
        return out

    return d(as_expr(e))


def _outer_derivative(node: Fn) -> Expr:
    u = node.arg
    name = node.name
    if name == "sin":
        return cos(u)
    if name == "cos":
        return neg(sin(u))
    if name == "tan":
        return add(ONE, power(node, 2))
    if name == "exp":
        return node
    if name == "ln":
        return div(ONE, u)
    if name == "sqrt":
        return div(ONE, mul(Num(2.0), node))
    if name == "arctan":
        return div(ONE, add(ONE, power(u, 2)))
    raise ValueError(name)  # pragma: no cover


def total_derivative(e: Expr, direction: str) -> Expr:
    """D_x or D_t: explicit derivative plus the contact-chain sum over jets."""
    if direction not in ("x", "t"):
        raise ValueError("direction must be 'x' or 't'")
    e = as_expr(e)
    out = partial(e, direction)
    for name in sorted(e.jets):
        i, j = jet_index(name)
        if i + j >= MAX_ORDER:
            raise JetOrderError(
                f"total derivative of an expression containing {name} exceeds order cap {MAX_ORDER}"
            )
        d = partial(e, name)
        if d == ZERO:
            continue
        nxt = jet(i + 1, j) if direction == "x" else jet(i, j + 1)
        out = add(out, mul(d, nxt))
    return out


def substitute(e: Expr, mapping: dict) -> Expr:
    """Replace variables/parameters by expressions (names as keys)."""
    mapping = {canonical_name(k): as_expr(v) for k, v in mapping.items()}
    keys = frozenset(mapping)
    memo: dict[int, Expr] = {}

    def go(node):
        if not (node.free & keys):
            return node
        key = id(node)
        if key in memo:
            return memo[key]
        if isinstance(node, (Var, Par)):
            out = mapping[node.name]
        elif isinstance(node, Add):
            out = add(go(node.left), go(node.right))
        elif isinstance(node, Sub):
            out = sub(go(node.left), go(node.right))
        elif isinstance(node, Mul):
            out = mul(go(node.left), go(node.right))
        elif isinstance(node, Div):
            out = div(go(node.left), go(node.right))
        elif isinstance(node, Neg):
            out = neg(go(node.arg))
        elif isinstance(node, Pow):
            out = power(go(node.base), node.exponent)
        elif isinstance(node, Fn):
            out = fn(node.name, go(node.arg))
        else:  # pragma: no cover
            raise TypeError(type(node))
        memo[key] = out
        return out

    return go(as_expr(e))


@dataclass(frozen=True)
class EquationRule:
    """An equation solved for one mixed derivative, ``target = rhs``."""

    rhs: Expr
    target: str = "z_xt"

    def __post_init__(self):
        object.__setattr__(self, "rhs", as_expr(self.rhs))
        object.__setattr__(self, "target", canonical_name(self.target))
        ti, tj = self.target_index
        for name in self.rhs.jets:
            i, j = jet_index(name)
            if i >= ti and j >= tj:
                raise ValueError(f"rhs contains {name}, a derivative of the target {self.target}")
            if i + j > 2:
                raise ValueError(f"rhs must be second order at most, found {name}")

    @property
    def target_index(self):
        return jet_index(self.target)

    def is_consequence(self, name: str) -> bool:
        idx = jet_index(name)
        if idx is None:
            return False
        ti, tj = self.target_index
        return idx[0] >= ti and idx[1] >= tj


def substitute_equation(e: Expr, rule: EquationRule) -> Expr:
    """Eliminate the rule's target and all its differential consequences.

    ``z_xxt`` becomes D_x(rhs), ``z_xtt`` becomes D_t(rhs), and so on, each
    consequence itself reduced before use.  Raises :class:`SubstitutionError`
    when the consequences are implicitly coupled (e.g. rhs containing both
    ``z_xx`` and ``z_tt`` asked to eliminate third-order mixed terms).
    """
    ti, tj = rule.target_index
    done: dict[tuple, Expr] = {}
    active: set = set()

    def consequence(i, j):
        if (i, j) in done:
            return done[(i, j)]
        if (i, j) in active:
            raise SubstitutionError(
                f"differential consequences of {rule.target} are coupled at {jet(i, j).name}"
            )
        active.add((i, j))
        if (i, j) == (ti, tj):
            r = rule.rhs
        elif i > ti:
            r = reduce(total_derivative(consequence(i - 1, j), "x"))
        else:
            r = reduce(total_derivative(consequence(i, j - 1), "t"))
        active.discard((i, j))
        done[(i, j)] = r
        return r

    def reduce(expr):
        names = [n for n in expr.jets if rule.is_consequence(n)]
        if not names:
            return expr
        return substitute(expr, {n: consequence(*jet_index(n)) for n in names})

    return reduce(as_expr(e))
