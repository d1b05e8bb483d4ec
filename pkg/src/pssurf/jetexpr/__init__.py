"""Expression DSL over jet coordinates (x, t, z and derivatives of z)."""
from .calculus import EquationRule, partial, substitute, substitute_equation, total_derivative
from .evaluate import JetPoint, evaluate, evaluate_array
from .nodes import (
    FUNCTIONS,
    MAX_ORDER,
    ONE,
    PARAMETERS,
    ZERO,
    Expr,
    Num,
    Par,
    Var,
    arctan,
    as_expr,
    cos,
    exp,
    jet,
    jet_index,
    jet_name,
    ln,
    par,
    sin,
    sqrt,
    tan,
    var,
    walk,
)
from .parser import parse
from .printer import to_text
from .sampling import (
    DEFAULT_SEED,
    Constraint,
    SamplerConfig,
    Verdict,
    draw_points,
    is_identically_zero,
)

JetExpr = Expr


def print_expr(e: Expr) -> str:
    return to_text(e)
