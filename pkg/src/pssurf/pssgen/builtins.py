"""Catalog of ready-made systems: sine-Gordon and the short pulse family."""
from __future__ import annotations

from ..errors import InvalidParameterError
from ..jetexpr import ZERO, Constraint, EquationRule, Num, Par, cos, sin, tan, total_derivative, var
from .system import OneForm, PssSystem, generic_constraint

z, z_x, z_xx = var("z"), var("z_x"), var("z_xx")
lam, m1, m2, alpha, beta, eta = (Par(n) for n in ("lambda", "m1", "m2", "alpha", "beta", "eta"))

CATALOG = {
    "sine_gordon": "z_xt = sin z with forms (1/eta) sin z dt, eta dx + (1/eta) cos z dt, z_x dx; "
    "params eta (!= 0), sign (+1/-1)",
    "short_pulse": "z_xt = z + (z^3)_xx / 6; param lambda (!= 0)",
    "family_sp": "z_xt = m1 [z + (z^3)_xx / 6] - m2/(2 m1) z_xx; params m1 (!= 0), m2, lambda",
    "example_4param": "four-parameter family in w = m1 alpha z + beta; params alpha, beta, m1, m2, lambda",
}

DEFAULTS = {
    "sine_gordon": {"eta": 1.0, "sign": 1.0},
    "short_pulse": {"lambda": 1.0},
    "family_sp": {"m1": 1.0, "m2": 0.0, "lambda": 1.0},
    "example_4param": {"alpha": 1.0, "beta": 0.0, "m1": 1.0, "m2": 0.0, "lambda": 1.0},
}


def _cubic_xx() -> object:
    """(z^3)_xx / 6 expanded on jet space."""
    return total_derivative(total_derivative(z**3, "x"), "x") / 6


def _nonzero(params, *names):
    for name in names:
        if float(params[name]) == 0.0:
            raise InvalidParameterError(f"parameter {name} must be non-zero")


def sine_gordon(eta_value=1.0, sign=1.0):
    if float(eta_value) == 0.0:
        raise InvalidParameterError("parameter eta must be non-zero")
    if sign not in (1, -1, 1.0, -1.0):
        raise InvalidParameterError("sign must be +1 or -1")
    s = float(sign)
    omega1 = OneForm(ZERO, sin(z) / eta)
    omega2 = OneForm(eta, cos(z) / eta)
    omega3 = OneForm(z_x, ZERO)
    sys = PssSystem(
        "sine_gordon",
        omega1,
        omega2,
        omega3,
        EquationRule(sin(z)),
        {"eta": float(eta_value)},
        (generic_constraint(omega1, omega2), Constraint(tan(z), "nonzero", "tan z != 0")),
    )
    return sys, sys.immersion(Num(2.0 * s) / tan(z), Num(-s), ZERO)


def _ex4_forms(w, alpha_e, lam_e=lam, m1_e=m1, m2_e=m2):
    psi = (w * w - m2_e) / (2 * m1_e)
    omega1 = OneForm(lam_e * alpha_e * z_x, lam_e * alpha_e * z_x * psi)
    omega2 = OneForm(lam_e, lam_e * psi + m1_e / lam_e)
    omega3 = OneForm(ZERO, w)
    return omega1, omega2, omega3


def example_4param(alpha_value=1.0, beta_value=0.0, m1_value=1.0, m2_value=0.0, lam_value=1.0):
    params = {"alpha": float(alpha_value), "beta": float(beta_value), "m1": float(m1_value),
              "m2": float(m2_value), "lambda": float(lam_value)}
    _nonzero(params, "alpha", "m1", "lambda")
    w = m1 * alpha * z + beta
    rhs = (w * w - m2) / (2 * m1) * z_xx + alpha * w * z_x**2 + w / alpha
    omega1, omega2, omega3 = _ex4_forms(w, alpha)
    sys = PssSystem(
        "example_4param",
        omega1,
        omega2,
        omega3,
        EquationRule(rhs),
        params,
        (Constraint(z_x, "nonzero", "z_x != 0"), generic_constraint(omega1, omega2)),
    )
    return sys, sys.immersion(-2 / (alpha * z_x), Num(1.0), ZERO)


def family_sp(m1_value=1.0, m2_value=0.0, lam_value=1.0):
    params = {"m1": float(m1_value), "m2": float(m2_value), "lambda": float(lam_value)}
    _nonzero(params, "m1", "lambda")
    rhs = m1 * (z + _cubic_xx()) - m2 / (2 * m1) * z_xx
    # the four-parameter forms with alpha = 1, beta = 0
    omega1, omega2, omega3 = _ex4_forms(m1 * z, Num(1.0))
    sys = PssSystem(
        "family_sp",
        omega1,
        omega2,
        omega3,
        EquationRule(rhs),
        params,
        (Constraint(z_x, "nonzero", "z_x != 0"), generic_constraint(omega1, omega2)),
    )
    return sys, sys.immersion(-2 / z_x, Num(1.0), ZERO)


def short_pulse(lam_value=1.0):
    params = {"lambda": float(lam_value)}
    _nonzero(params, "lambda")
    omega1 = OneForm(lam * z_x, lam / 2 * z_x * z**2)
    omega2 = OneForm(lam, lam / 2 * z**2 + 1 / lam)
    omega3 = OneForm(ZERO, z)
    sys = PssSystem(
        "short_pulse",
        omega1,
        omega2,
        omega3,
        EquationRule(z + _cubic_xx()),
        params,
        (Constraint(z_x, "nonzero", "z_x != 0"), generic_constraint(omega1, omega2)),
    )
    return sys, sys.immersion(-2 / z_x, Num(1.0), ZERO)


def builtin(name: str, **params):
    """Look up a catalog system by name; returns ``(PssSystem, ImmersionData)``."""
    if name not in CATALOG:
        raise KeyError(f"unknown builtin {name!r}; choose from {sorted(CATALOG)}")
    merged = dict(DEFAULTS[name])
    for key, value in params.items():
        key = "lambda" if key in ("lam", "lambda_") else key
        if key not in merged:
            raise InvalidParameterError(f"builtin {name} has no parameter {key!r}")
        merged[key] = float(value)
    if name == "sine_gordon":
        return sine_gordon(merged["eta"], merged["sign"])
    if name == "short_pulse":
        return short_pulse(merged["lambda"])
    if name == "family_sp":
        return family_sp(merged["m1"], merged["m2"], merged["lambda"])
    return example_4param(merged["alpha"], merged["beta"], merged["m1"], merged["m2"], merged["lambda"])
