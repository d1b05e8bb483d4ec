"""Generators of pss equations from four functions of z, and related checks."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import HypothesisViolation, InvalidParameterError, PssError, SamplerExhaustedError
from ..jetexpr import (
    ZERO,
    Constraint,
    EquationRule,
    Expr,
    Num,
    Par,
    SamplerConfig,
    Var,
    as_expr,
    draw_points,
    evaluate_array,
    is_identically_zero,
    partial,
    sqrt,
    substitute,
    total_derivative,
    var,
)
from ..jetexpr import nodes as N
from .system import ImmersionData, OneForm, PssSystem, generic_constraint

z, z_x, z_t, z_xx, z_tt = (var(n) for n in ("z", "z_x", "z_t", "z_xx", "z_tt"))
lam, m1, m2 = Par("lambda"), Par("m1"), Par("m2")


def _only_z(e: Expr, what: str):
    extra = {n for n in e.free if n in N.INDEPENDENT or (N.jet_index(n) not in (None, (0, 0)))}
    if extra:
        raise HypothesisViolation(f"{what} must depend on z only, found {sorted(extra)}", what)


def _require_nonzero(e: Expr, config: SamplerConfig, which: str):
    try:
        verdict = is_identically_zero(e, config)
    except SamplerExhaustedError as exc:
        raise HypothesisViolation(f"{which}: no admissible sample points ({exc})", which) from exc
    if verdict.zero:
        raise HypothesisViolation(f"hypothesis violated: {which} is identically zero", which)


def _require_zero(e: Expr, config: SamplerConfig, which: str):
    verdict = is_identically_zero(e, config)
    if not verdict.zero:
        raise PssError(f"construction self-check failed: {which} (witness {verdict.witness})")


@dataclass(frozen=True)
class Prop1Input:
    psi21: Expr
    psi22: Expr
    psi31: Expr
    psi32: Expr
    parameters: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("psi21", "psi22", "psi31", "psi32"):
            e = as_expr(getattr(self, name))
            object.__setattr__(self, name, e)
            _only_z(e, name)


@dataclass
class Prop1Parts:
    """Intermediate quantities of the construction, kept for inspection."""

    delta0: Expr
    G: Expr
    G_z: Expr
    h: Expr
    ell: Expr
    A: Expr
    B: Expr
    C: Expr


def prop1_parts(inp: Prop1Input) -> Prop1Parts:
    p21, p22, p31, p32 = inp.psi21, inp.psi22, inp.psi31, inp.psi32
    d21, d22, d31, d32 = (partial(p, "z") for p in (p21, p22, p31, p32))
    delta0 = p32 * p21 - p31 * p22
    G = p21 * p22 - p31 * p32
    # (h, ell) = (1/delta0) M1 M2 (z_x, z_t)^T
    u = d21 * z_x - d22 * z_t
    w = d31 * z_x - d32 * z_t
    h = (-p21 * u + p31 * w) / delta0
    ell = (-p22 * u + p32 * w) / delta0
    A = partial(p22 * p22 - p32 * p32, "z") / 2
    B = partial(p21 * p21 - p31 * p31, "z") / 2
    C = delta0 * (partial(ell, "z") * z_t - partial(h, "z") * z_x + delta0)
    return Prop1Parts(delta0, G, partial(G, "z"), h, ell, A, B, C)


def generate_prop1(inp: Prop1Input, sampler: SamplerConfig | None = None, name="prop1") -> PssSystem:
    """Build the pss system determined by psi21, psi22, psi31, psi32.

    Checks the generator's hypotheses by sampling, and re-derives the four
    partial derivatives of h and ell that pin the matrix product.
    """
    base = (sampler or SamplerConfig()).with_params(inp.parameters)
    p21, p22, p31, p32 = inp.psi21, inp.psi22, inp.psi31, inp.psi32
    d21, d22, d31, d32 = (partial(p, "z") for p in (p21, p22, p31, p32))
    _require_nonzero(d31 * d31 + d32 * d32, base, "(psi31_z)^2 + (psi32_z)^2")
    parts = prop1_parts(inp)
    _require_nonzero(parts.delta0, base, "Delta0 = psi32 psi21 - psi31 psi22")
    _require_nonzero(parts.G_z, base, "G_z (G not constant)")

    checks = {
        "ell_zx": (-p22 * d21 + p32 * d31) / parts.delta0,
        "ell_zt": partial(p22 * p22 - p32 * p32, "z") / (2 * parts.delta0),
        "h_zx": -partial(p21 * p21 - p31 * p31, "z") / (2 * parts.delta0),
        "h_zt": (p21 * d22 - p31 * d32) / parts.delta0,
    }
    got = {
        "ell_zx": partial(parts.ell, "z_x"),
        "ell_zt": partial(parts.ell, "z_t"),
        "h_zx": partial(parts.h, "z_x"),
        "h_zt": partial(parts.h, "z_t"),
    }
    for key, expected in checks.items():
        _require_zero(got[key] - expected, base, key)

    rhs = (parts.A * z_tt + parts.B * z_xx + parts.C) / parts.G_z
    omega1 = OneForm(parts.ell, parts.h)
    omega2 = OneForm(p22, p21)
    omega3 = OneForm(p32, p31)
    admissibility = (
        Constraint(parts.delta0, "nonzero", "Delta0 != 0"),
        Constraint(parts.G_z, "nonzero", "G_z != 0"),
        generic_constraint(omega1, omega2),
    )
    return PssSystem(name, omega1, omega2, omega3, EquationRule(rhs), dict(inp.parameters), admissibility)


def _check_nonzero_param(name, value):
    if value is not None and float(value) == 0.0:
        raise InvalidParameterError(f"parameter {name} must be non-zero")


def cor1_forms(psi: Expr, lam_e=lam, m1_e=m1, m2_e=m2):
    """Forms, rule and a-coefficient of the one-function family, symbolically."""
    dpsi = partial(psi, "z")
    ddpsi = partial(dpsi, "z")
    s2 = 2 * m1_e * psi + m2_e
    s = sqrt(s2)
    rhs = (
        psi * z_xx
        - (ddpsi / dpsi - m1_e * dpsi / s2) * z_x * z_t
        + (psi * ddpsi / dpsi + dpsi * (m1_e * psi + m2_e) / s2) * z_x**2
        + s2 / dpsi
    )
    f = lam_e * dpsi / s * z_x
    omega1 = OneForm(f, f * psi)
    omega2 = OneForm(lam_e, lam_e * psi + m1_e / lam_e)
    omega3 = OneForm(ZERO, s)
    a = -2 * s / (dpsi * z_x)
    return rhs, (omega1, omega2, omega3), a, s2, dpsi


def generate_cor1(psi, m1_value=1.0, m2_value=0.0, lam_value=1.0, extra_params=None,
                  sampler: SamplerConfig | None = None, name="cor1"):
    """System and immersion of the family z_xt = psi z_xx + ... built from psi(z).

    Returns ``(PssSystem, ImmersionData)`` with a = -2 sqrt(2 m1 psi + m2) / (psi' z_x),
    b = 1, c = 0.
    """
    psi = as_expr(psi)
    _only_z(psi, "psi")
    _check_nonzero_param("m1", m1_value)
    _check_nonzero_param("lambda", lam_value)
    params = {"lambda": lam_value, "m1": m1_value, "m2": m2_value}
    params.update(extra_params or {})
    rhs, (omega1, omega2, omega3), a, s2, dpsi = cor1_forms(psi)
    admissibility = (
        Constraint(s2, "positive", "2 m1 psi + m2 > 0"),
        Constraint(dpsi, "nonzero", "psi' != 0"),
        Constraint(z_x, "nonzero", "z_x != 0"),
        generic_constraint(omega1, omega2),
    )
    sys = PssSystem(name, omega1, omega2, omega3, EquationRule(rhs), params, admissibility)
    base = (sampler or SamplerConfig()).with_params(params)
    _require_nonzero(m1 * dpsi, base, "m1 psi'")
    try:
        draw_points(sys.rule.rhs.free, sys.sampler(sampler))
    except SamplerExhaustedError as exc:
        raise HypothesisViolation(f"2 m1 psi + m2 > 0 fails on the sampling box ({exc})", "2 m1 psi + m2 > 0") from exc
    return sys, sys.immersion(a, Num(1.0), ZERO)


def prop1_input_for_cor1(psi, m1_value=1.0, m2_value=0.0, lam_value=1.0, extra_params=None) -> Prop1Input:
    """The four psi_ij that specialise the general generator to the one-function family."""
    psi = as_expr(psi)
    params = {"lambda": lam_value, "m1": m1_value, "m2": m2_value}
    params.update(extra_params or {})
    return Prop1Input(lam * psi + m1 / lam, lam, sqrt(2 * m1 * psi + m2), ZERO, params)


# --- reducibility -----------------------------------------------------------


@dataclass(frozen=True)
class ReducibilityInput:
    """Coefficients of z_xt = a1 z_xx + a2 z_x z_t + a3 z_x^2 + a4."""

    a1: Expr
    a2: Expr
    a3: Expr
    a4: Expr
    m1: float
    m2: float

    def __post_init__(self):
        for name in ("a1", "a2", "a3", "a4"):
            e = as_expr(getattr(self, name))
            object.__setattr__(self, name, e)
            _only_z(e, name)


@dataclass
class ReducibilityVerdict:
    status: str  # reducible | necessary_condition_fails | system_fails
    m1: float
    m2: float
    psi: Expr | None = None
    which: str | None = None
    witness: dict | None = None
    residuals: dict = field(default_factory=dict)

    @property
    def reducible(self):
        return self.status == "reducible"


def reducibility_residuals(inp: ReducibilityInput):
    a1, a2, a3, a4 = inp.a1, inp.a2, inp.a3, inp.a4
    M1, M2 = Num(inp.m1), Num(inp.m2)
    d1 = partial(a1, "z")
    dd1 = partial(d1, "z")
    s2 = 2 * M1 * a1 + M2
    necessary = a3 * a4 - (2 * M1 * a1 - a1 * a2 * a4 + M2)
    system = {
        "a2": a2 - (-dd1 / d1 + M1 * d1 / s2),
        "a3": a3 - (a1 * dd1 / d1 + d1 * (M1 * a1 + M2) / s2),
        "a4": a4 - s2 / d1,
    }
    return necessary, system


def check_reducibility(inp: ReducibilityInput, sampler: SamplerConfig | None = None) -> ReducibilityVerdict:
    """Can z_xt = a1 z_xx + a2 z_x z_t + a3 z_x^2 + a4 be mapped to the normal form by z -> a1(z)?

    Tests the necessary condition a3 a4 = 2 m1 a1 - a1 a2 a4 + m2 first, then
    the three defining equations of a2, a3, a4.
    """
    if inp.m1 == 0.0:
        raise InvalidParameterError("m1 must be non-zero")
    config = sampler or SamplerConfig()
    _require_nonzero(partial(inp.a1, "z"), config, "a1'")
    _require_nonzero(inp.a4, config, "a4")
    necessary, system = reducibility_residuals(inp)
    out = ReducibilityVerdict("reducible", inp.m1, inp.m2)
    v = is_identically_zero(necessary, config)
    out.residuals["necessary"] = v
    if not v.zero:
        out.status = "necessary_condition_fails"
        out.witness = v.witness
        out.which = "a3 a4 = 2 m1 a1 - a1 a2 a4 + m2"
        return out
    for key, e in system.items():
        v = is_identically_zero(e, config)
        out.residuals[key] = v
        if not v.zero and out.status == "reducible":
            out.status = "system_fails"
            out.which = key
            out.witness = v.witness
    if out.reducible:
        out.psi = inp.a1
    return out


def coefficients_of(rhs: Expr) -> tuple:
    """Split an rhs of the form a1 z_xx + a2 z_x z_t + a3 z_x^2 + a4 into (a1..a4).

    Works by differentiation, so rhs must be polynomial of that shape in the
    jets (checked).
    """
    a1 = partial(rhs, "z_xx")
    a2 = partial(partial(rhs, "z_t"), "z_x")
    a3 = partial(partial(rhs, "z_x"), "z_x") / 2
    zero = {"z_x": 0.0, "z_t": 0.0, "z_xx": 0.0, "z_tt": 0.0}
    a4 = substitute(rhs, zero)
    return a1, a2, a3, a4


# --- change of dependent variable -------------------------------------------


def invert(psi: Expr) -> Expr:
    """Symbolic inverse of an expression with a single occurrence of z.

    Returns phi with psi(phi(w)) = w, written in the variable z.  Principal
    branches are taken for powers and tan.
    """
    psi = as_expr(psi)
    w = var("z")

    def occurs(e):
        return "z" in e.free

    def go(e, target):
        if isinstance(e, Var) and e.name == "z":
            return target
        kids = [c for c in e.children() if occurs(c)]
        if len(kids) != 1:
            raise PssError(f"cannot invert {psi}: z occurs more than once or not at all")
        if isinstance(e, N.Add):
            return go(e.left, target - e.right) if occurs(e.left) else go(e.right, target - e.left)
        if isinstance(e, N.Sub):
            return go(e.left, target + e.right) if occurs(e.left) else go(e.right, e.left - target)
        if isinstance(e, N.Mul):
            return go(e.left, target / e.right) if occurs(e.left) else go(e.right, target / e.left)
        if isinstance(e, N.Div):
            return go(e.left, target * e.right) if occurs(e.left) else go(e.right, e.left / target)
        if isinstance(e, N.Neg):
            return go(e.arg, -target)
        if isinstance(e, N.Pow):
            return go(e.base, target ** (1.0 / e.exponent))
        if isinstance(e, N.Fn):
            inverse = {"exp": N.ln, "ln": N.exp, "sqrt": lambda u: u**2, "arctan": N.tan, "tan": N.arctan}
            if e.name not in inverse:
                raise PssError(f"cannot invert {e.name}; pass the inverse explicitly")
            return go(e.arg, inverse[e.name](target))
        raise PssError(f"cannot invert {psi}")

    if not occurs(psi):
        raise PssError(f"cannot invert {psi}: no z")
    return go(psi, w)


def change_of_variable(sys: PssSystem, psi, inverse=None, immersion: ImmersionData | None = None,
                       sampler: SamplerConfig | None = None):
    """Rewrite the system in the new dependent variable zbar = psi(z).

    The result uses the names z, z_x, ... for the new variable.  ``inverse``
    (z as a function of zbar) defaults to :func:`invert` of psi.  Returns the
    new system, or ``(system, immersion)`` when immersion data is given.
    """
    psi = as_expr(psi)
    _only_z(psi, "psi")
    phi = as_expr(inverse) if inverse is not None else invert(psi)
    config = sys.sampler(sampler)
    dpsi = partial(psi, "z")
    bare = SamplerConfig(n=config.n, seed=config.seed, params=config.params, tol=config.tol)
    pts = draw_points(dpsi.free | {"z"}, bare, require_finite=(dpsi,))
    values = np.broadcast_to(evaluate_array(dpsi, pts), (bare.n,))
    # the box is connected, so a sign change of psi' also means a zero inside it
    if np.any(np.abs(values) <= bare.margin) or (values.min() < 0 < values.max()):
        k = int(np.argmin(np.abs(values)))
        raise HypothesisViolation(
            "psi' vanishes on the sampling box", "psi' != 0", {n: float(a[k]) for n, a in pts.items()}
        )
    roundtrip = substitute(psi, {"z": phi}) - var("z")
    check = is_identically_zero(roundtrip, bare)
    if not check.zero:
        raise HypothesisViolation("inverse does not invert psi", "inverse", check.witness)

    Z = phi
    Zx = total_derivative(Z, "x")
    Zt = total_derivative(Z, "t")
    Zxx = total_derivative(Zx, "x")
    Ztt = total_derivative(Zt, "t")
    Zxt = total_derivative(Zx, "t")
    mapping = {"z": Z, "z_x": Zx, "z_t": Zt, "z_xx": Zxx, "z_tt": Ztt}

    def tr(e):
        return substitute(e, mapping)

    coeff = partial(Zxt, "z_xt")
    rest = substitute(Zxt, {"z_xt": 0.0})
    rhs = (tr(sys.rule.rhs) - rest) / coeff
    omega1, omega2, omega3 = (f.map(tr) for f in sys.forms)
    admissibility = tuple(Constraint(tr(c.expr), c.kind, c.label) for c in sys.admissibility)
    admissibility += (Constraint(coeff, "nonzero", "dz/dzbar != 0"),)
    new = PssSystem(
        f"{sys.name}|zbar={psi}", omega1, omega2, omega3, EquationRule(rhs), dict(sys.parameters), admissibility
    )
    if immersion is None:
        return new
    return new, new.immersion(tr(immersion.a), tr(immersion.b), tr(immersion.c))
