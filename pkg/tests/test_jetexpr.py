import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pssurf.errors import (
    JetDomainError,
    JetOrderError,
    JetSyntaxError,
    MissingValueError,
    SamplerExhaustedError,
    InvalidParameterError,
    UnknownIdentifierError,
)
from pssurf.jetexpr import (
    Constraint,
    EquationRule,
    JetPoint,
    Num,
    Par,
    SamplerConfig,
    evaluate,
    evaluate_array,
    is_identically_zero,
    jet_index,
    jet_name,
    parse,
    partial,
    sin,
    sqrt,
    substitute_equation,
    to_text,
    total_derivative,
    var,
)
from pssurf.jetexpr import nodes as N

z, z_x, z_t, z_xx, z_tt = (var(n) for n in ("z", "z_x", "z_t", "z_xx", "z_tt"))
m1, m2 = Par("m1"), Par("m2")

JETS2 = ["z", "z_x", "z_t", "z_xx", "z_tt"]
ALL_JETS = ["x", "t"] + [jet_name(i, k - i) for k in range(5) for i in range(k + 1)]


# --- naming ------------------------------------------------------------------


def test_canonical_names():
    assert jet_name(0, 0) == "z"
    assert jet_name(1, 1) == "z_xt"
    assert jet_name(2, 2) == "z_xxtt"
    assert jet_index("z_xt") == (1, 1)
    assert jet_index("z_tx") == (1, 1)
    assert jet_index("x") is None
    with pytest.raises(JetOrderError):
        jet_index("z_xxxxx")


# --- parser ------------------------------------------------------------------


def test_parse_polynomial():
    e = parse("z*z_x^2 + z")
    assert e == N.Add(N.Mul(z, N.Pow(z_x, 2.0)), z)


def test_parse_sqrt_parameters():
    e = parse("sqrt(2*m1*z + m2)")
    assert isinstance(e, N.Fn) and e.name == "sqrt"
    assert {"m1", "m2"} <= e.free


@pytest.mark.parametrize("src", ["z_q", "foo", "q(z)", "zeta + 1"])
def test_parse_unknown_identifier(src):
    with pytest.raises(UnknownIdentifierError):
        parse(src)


def test_parse_order_cap_and_positions():
    with pytest.raises(JetSyntaxError):
        parse("z_xxxxx + 1")
    with pytest.raises(JetSyntaxError) as info:
        parse("z + * z_x")
    assert info.value.position == 4
    with pytest.raises(JetSyntaxError):
        parse("sin(z")
    with pytest.raises(JetSyntaxError):
        parse("z $ 2")


def test_parse_extra_params():
    e = parse("L * x", extra_params=("L",))
    assert "L" in e.free


def _leaf():
    return st.one_of(
        st.sampled_from(ALL_JETS).map(var),
        st.sampled_from(["lambda", "m1", "m2", "alpha", "beta", "eta"]).map(Par),
        st.floats(-1e6, 1e6, allow_nan=False).map(Num),
        st.sampled_from([0.0, 1.0, 2.0, 0.5, 1e-300, 1e20, 3.25]).map(Num),
    )


def _extend(children):
    binary = st.sampled_from([N.Add, N.Sub, N.Mul, N.Div])
    return st.one_of(
        st.tuples(binary, children, children).map(lambda t: t[0](t[1], t[2])),
        children.map(N.Neg),
        st.tuples(children, st.sampled_from([2.0, 3.0, -1.0, 0.5, -0.5, 1.5])).map(lambda t: N.Pow(*t)),
        st.tuples(st.sampled_from(list(N.FUNCTIONS)), children).map(lambda t: N.Fn(*t)),
    )


expressions = st.recursive(_leaf(), _extend, max_leaves=12)


@given(expressions)
def test_roundtrip_structural(e):
    assert parse(to_text(e)) == e


@given(expressions)
def test_printing_is_stable(e):
    assert to_text(parse(to_text(e))) == to_text(e)


# --- evaluation ----------------------------------------------------------------


def test_evaluate_examples():
    assert evaluate(parse("z*z_x^2 + z"), {"z": 2.0, "z_x": 1.0}) == 4.0
    assert evaluate(sqrt(2 * m1 * z + m2), JetPoint({"z": 2.0}, {"m1": 1.0, "m2": 0.0})) == 2.0


def test_evaluate_errors():
    with pytest.raises(JetDomainError) as info:
        evaluate(1 / z_x, {"z_x": 0.0})
    assert info.value.subexpression is not None
    with pytest.raises(JetDomainError):
        evaluate(parse("sqrt(z)"), {"z": -1.0})
    with pytest.raises(JetDomainError):
        evaluate(parse("ln(z)"), {"z": 0.0})
    with pytest.raises(MissingValueError):
        evaluate(z + z_x, {"z": 1.0})


def test_evaluate_array_matches_scalar(rng):
    e = parse("sin(z)*z_x^2 / (1 + z_t^2) + m1*exp(z_xx) - arctan(z)")
    env = {n: rng.uniform(-1, 1, 20) for n in JETS2}
    env["m1"] = 1.5
    vec = evaluate_array(e, env)
    for k in range(20):
        point = {n: (v[k] if isinstance(v, np.ndarray) else v) for n, v in env.items()}
        assert vec[k] == pytest.approx(evaluate(e, point), rel=1e-14)


# --- partial derivatives ----------------------------------------------------------


def test_partial_examples():
    p = partial(z * z_x**2, "z_x")
    assert is_identically_zero(p - 2 * z * z_x).zero
    p = partial(sqrt(2 * m1 * z + m2), "z")
    assert is_identically_zero(p - m1 / sqrt(2 * m1 * z + m2)).zero
    assert partial(z_xx, "z_x") == Num(0.0)
    assert is_identically_zero(partial(m1 * z**2, "m1") - z**2).zero


FD_CASES = [
    "z*z_x^2 + z",
    "sqrt(2*m1*z + m2)",
    "sin(z)*cos(z_x) + tan(0.3*z_t)",
    "exp(0.5*z)*ln(z) - arctan(z_xx*z_tt)",
    "(z^2/2 + 1)/(z_x^2 + 1) * z_t",
    "z^1.5 * z_x^-1 + x*t*z",
    "-(z - z_x)^3 / (m1 + z^2)",
]


@pytest.mark.parametrize("src", FD_CASES)
def test_partial_against_central_difference(src, rng):
    e = parse(src)
    h = 1e-5
    for _ in range(20):
        point = {n: rng.uniform(-2, 2) for n in ["x", "t"] + JETS2[1:]}
        point["z"] = rng.uniform(0.5, 2.0)
        if abs(point["z_x"]) < 0.1:
            point["z_x"] = 0.5
        point.update(m1=rng.uniform(0.5, 2), m2=rng.uniform(0, 1))
        for v in sorted(e.free & set(point)):
            exact = evaluate(partial(e, v), point)
            up, dn = dict(point), dict(point)
            up[v] += h
            dn[v] -= h
            fd = (evaluate(e, up) - evaluate(e, dn)) / (2 * h)
            scale = max(abs(exact), abs(evaluate(e, point)), 1.0)
            assert abs(exact - fd) <= 1e-6 * scale, (src, v, exact, fd)


# --- total derivatives ------------------------------------------------------------


def test_total_derivative_examples():
    assert total_derivative(z, "x") == z_x
    ell = parse("z*z_x + sin(z_t)")
    lhs = total_derivative(ell, "t")
    rhs = partial(ell, "z") * z_t + partial(ell, "z_x") * var("z_xt") + partial(ell, "z_t") * z_tt
    assert is_identically_zero(lhs - rhs).zero


def test_cubic_second_derivative():
    lhs = total_derivative(total_derivative(z**3 / 6, "x"), "x")
    rhs = z * z_x**2 + z**2 / 2 * z_xx
    assert is_identically_zero(lhs - rhs, SamplerConfig(n=20)).zero


def test_total_derivative_order_overflow():
    with pytest.raises(JetOrderError):
        total_derivative(var("z_xxtt"), "x")
    with pytest.raises(ValueError):
        total_derivative(z, "y")


ORDER1 = ["z*z_x", "sin(z)*z_t^2", "sqrt(z)*exp(z_x)", "x*z + t^2*z_t", "z_x/(1+z^2)"]
ORDER2 = ["z_xx*z_t + z^2", "sin(z_tt)*z_x", "z*z_xx - z_t*z_tt/(1+z^2)"]


@pytest.mark.parametrize("a", ORDER1)
@pytest.mark.parametrize("b", ORDER2)
@pytest.mark.parametrize("d", ["x", "t"])
def test_total_derivative_is_derivation(a, b, d):
    ea, eb = parse(a), parse(b)
    lhs = total_derivative(ea * eb, d)
    rhs = total_derivative(ea, d) * eb + ea * total_derivative(eb, d)
    assert is_identically_zero(lhs - rhs, SamplerConfig(tol=1e-10)).zero


@pytest.mark.parametrize("src", ORDER1 + ORDER2)
def test_total_derivatives_commute(src):
    e = parse(src)
    xt = total_derivative(total_derivative(e, "t"), "x")
    tx = total_derivative(total_derivative(e, "x"), "t")
    assert is_identically_zero(xt - tx, SamplerConfig(tol=1e-10)).zero


# --- equation substitution -------------------------------------------------------------


def test_substitute_equation_examples():
    rule = EquationRule(sin(z))
    assert substitute_equation(var("z_xt"), rule) == sin(z)
    assert substitute_equation(z_xx, rule) == z_xx
    F = z**2 * z_x + sin(z_x)
    got = substitute_equation(var("z_xxt"), EquationRule(F))
    want = partial(F, "z") * z_x + partial(F, "z_x") * z_xx
    assert is_identically_zero(got - want).zero


def test_target_alias_and_rule_validation():
    assert EquationRule(sin(z), "z_tx").target == "z_xt"
    with pytest.raises(ValueError):
        EquationRule(var("z_xxt"))
    with pytest.raises(ValueError):
        EquationRule(var("z_xxx"))


def test_substitution_removes_mixed_and_is_idempotent():
    rule = EquationRule(parse("z*z_xx + z_x*z_t/(2*z) + z_x^2/2 + 2*z"))
    e = total_derivative(total_derivative(z * z_x + z_t**2, "x"), "t") + var("z_xxt") * z
    once = substitute_equation(e, rule)
    assert not any(rule.is_consequence(n) for n in once.jets)
    twice = substitute_equation(once, rule)
    assert is_identically_zero(once - twice).zero


def test_order_four_consequences_stay_within_cap():
    # an order-2 rhs differentiated twice reaches order 4 at most
    rule = EquationRule(z_xx)
    assert substitute_equation(var("z_xxxt"), rule) == var("z_xxxx")
    got = substitute_equation(var("z_xxtt"), EquationRule(z * z_tt))
    assert max(sum(jet_index(n)) for n in got.jets) == 4


# --- identity test ------------------------------------------------------------------------


def test_identity_examples():
    assert is_identically_zero(z_x - z_x).zero
    v = is_identically_zero(z_x * 1e-3)
    assert not v.zero
    assert v.witness is not None and "z_x" in v.witness
    assert v.witness_value == pytest.approx(v.witness["z_x"] * 1e-3)


def test_identity_is_deterministic_and_seeded():
    e = parse("sin(z)^2 + cos(z)^2 - 1 + 1e-3*z_x*z")
    a, b = is_identically_zero(e), is_identically_zero(e)
    assert a.to_json() == b.to_json()
    c = is_identically_zero(e, SamplerConfig(seed=7))
    assert c.witness != a.witness


def test_sampler_respects_constraints():
    from pssurf.jetexpr import draw_points

    cfg = SamplerConfig(n=64).with_constraints([Constraint(z - 1.0, "positive", "z > 1")])
    pts = draw_points({"z", "z_x"}, cfg)
    assert np.all(pts["z"] > 1.0)
    assert np.all(np.abs(pts["z_x"]) >= 0.1)


def test_sampler_errors():
    with pytest.raises(InvalidParameterError):
        SamplerConfig(n=0)
    cfg = SamplerConfig(max_retries=50).with_constraints([Constraint(z - 10.0, "positive", "z > 10")])
    with pytest.raises(SamplerExhaustedError):
        is_identically_zero(z, cfg)


def test_relative_tolerance_scales_with_magnitude():
    big = Num(1e12) * z
    assert is_identically_zero((big + Num(1e-2)) - big).zero
    assert not is_identically_zero(Num(1e-6) * z).zero
    assert math.isclose(evaluate(big, {"z": 1.0}), 1e12)
