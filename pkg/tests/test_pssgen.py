import numpy as np
import pytest

from pssurf.errors import HypothesisViolation, InvalidParameterError
from pssurf.jetexpr import (
    ZERO,
    Constraint,
    Num,
    Par,
    SamplerConfig,
    draw_points,
    evaluate_array,
    exp,
    is_identically_zero,
    parse,
    partial,
    sqrt,
    var,
)
from pssurf.pssgen import (
    Prop1Input,
    builtin,
    change_of_variable,
    check_reducibility,
    coefficients_of,
    dumps,
    generate_cor1,
    generate_prop1,
    loads,
    prop1_input_for_cor1,
)
from pssurf.pssgen.generators import ReducibilityInput
from pssurf.verify import mean_curvature, structure_residuals, verify_pss

z, z_x, z_t, z_xx, z_tt = (var(n) for n in ("z", "z_x", "z_t", "z_xx", "z_tt"))
lam, m1, m2, alpha, beta = (Par(n) for n in ("lambda", "m1", "m2", "alpha", "beta"))


def change6(m1v, m2v):
    """Normal form reached by zbar = psi(z)."""
    s2 = 2 * m1v * z + m2v
    return z * z_xx + m1v / s2 * z_x * z_t + (m1v * z + m2v) / s2 * z_x**2 + s2


def same(a, b, sampler, tol=1e-10):
    """Valuewise equality on the sampler's admissible points."""
    cfg = SamplerConfig(n=sampler.n, tol=tol, seed=sampler.seed, params=sampler.params,
                        constraints=sampler.constraints)
    return is_identically_zero(a - b, cfg)


# --- Prop 1 generator ---------------------------------------------------------


def test_prop1_specialization_reduces_to_normal_form():
    params = {"lambda": 1.3, "m1": 1.0, "m2": 1.0}
    inp = Prop1Input(lam * z + m1 / lam, lam, sqrt(2 * m1 * z + m2), ZERO, params)
    sys = generate_prop1(inp)
    assert same(sys.rule.rhs, change6(1.0, 1.0), sys.sampler()).zero


def test_prop1_degenerate_input_rejected():
    with pytest.raises(HypothesisViolation) as info:
        generate_prop1(Prop1Input(z**2, Num(1.0), Num(1.0), ZERO))
    assert "psi31" in info.value.which


def test_prop1_inputs_must_depend_on_z_only():
    with pytest.raises(Exception):
        Prop1Input(z_x, Num(1.0), z, ZERO)


def test_prop1_polynomial_passes_and_splits():
    sys = generate_prop1(Prop1Input(z**2, Num(1.0), z, Num(0.5)))
    report = verify_pss(sys)
    assert report.passed, report.table()
    raw = structure_residuals(sys, substitute=False)
    cfg = sys.sampler()
    assert not is_identically_zero(raw[0], cfg).zero
    assert is_identically_zero(raw[1], cfg).zero
    assert is_identically_zero(raw[2], cfg).zero


def test_prop1_coefficient_order_and_generic_wedge():
    p21, p22, p31, p32 = z**2, z + 3, z, Num(0.5) * z**2
    sys = generate_prop1(Prop1Input(p21, p22, p31, p32))
    assert sys.omega2.dx == p22 and sys.omega2.dt == p21
    assert sys.omega3.dx == p32 and sys.omega3.dt == p31
    wedge = sys.omega1.wedge(sys.omega2)
    expected = -partial(p32, "z") * z_t + partial(p31, "z") * z_x
    assert same(wedge, expected, sys.sampler(), tol=1e-9).zero


# --- Cor 1 generator ---------------------------------------------------------------


def test_cor1_identity_psi():
    sys, imm = generate_cor1(z, 1.0, 0.0, 1.0)
    target = z * z_xx + z_x * z_t / (2 * z) + z_x**2 / 2 + 2 * z
    assert same(sys.rule.rhs, target, sys.sampler()).zero
    assert imm.b == Num(1.0) and imm.c == ZERO
    pts = draw_points(imm.a.free, sys.sampler())
    assert np.all(evaluate_array(imm.gauss(), pts) == 0.0)


def test_cor1_four_parameter_family():
    w = m1 * alpha * z + beta
    psi = ((w * w) - m2) / (2 * m1)
    params = {"alpha": 2.0, "beta": 1.0}
    sys, imm = generate_cor1(psi, 1.0, 1.0, 1.0, params)
    ex4 = (w * w - m2) / (2 * m1) * z_xx + alpha * w * z_x**2 + w / alpha
    cfg = sys.sampler()
    assert same(sys.rule.rhs, ex4, cfg, tol=1e-9).zero
    assert same(imm.a, -2 / (alpha * z_x), cfg).zero


@pytest.mark.parametrize("psi", ["z", "z^2/2", "exp(z)"])
@pytest.mark.parametrize("m", [(1.0, 0.0), (2.0, 1.0)])
def test_cross_generator_agreement(psi, m):
    sys_c, _ = generate_cor1(parse(psi), m[0], m[1], 1.0)
    sys_p = generate_prop1(prop1_input_for_cor1(parse(psi), m[0], m[1], 1.0))
    cfg = sys_c.sampler()
    assert same(sys_c.rule.rhs, sys_p.rule.rhs, cfg).zero
    for fc, fp in zip(sys_c.forms, sys_p.forms):
        assert same(fc.dx, fp.dx, cfg).zero
        assert same(fc.dt, fp.dt, cfg).zero


def test_cor1_hypotheses():
    with pytest.raises(HypothesisViolation):
        generate_cor1(Num(2.0), 1.0, 0.0, 1.0)
    with pytest.raises(HypothesisViolation):
        generate_cor1(-z, 1.0, 0.0, 1.0)  # 2 m1 psi + m2 < 0 on the whole box
    with pytest.raises(InvalidParameterError):
        generate_cor1(z, 0.0, 0.0, 1.0)
    with pytest.raises(InvalidParameterError):
        generate_cor1(z, 1.0, 0.0, 0.0)


def test_cor1_curvature_depends_on_first_jet():
    sys, imm = generate_cor1(z, 1.0, 0.0, 1.0)
    env = {"z": np.array([1.3, 1.3]), "z_x": np.array([1.0, 2.0]), **sys.param_env()}
    a = evaluate_array(imm.a, env)
    assert a[0] / a[1] == pytest.approx(2.0, abs=1e-12)
    H = evaluate_array(mean_curvature(imm), env)
    assert H[0] / H[1] == pytest.approx(2.0, abs=1e-12)


# --- reducibility ---------------------------------------------------------------------


def _normal_form_input(m1v, m2v):
    a = coefficients_of(change6(m1v, m2v))
    return ReducibilityInput(*a, m1v, m2v)


def test_reducibility_normal_form():
    verdict = check_reducibility(_normal_form_input(1.0, 0.0))
    assert verdict.reducible and verdict.psi == z
    assert verdict.residuals["necessary"].max_rel <= 1e-10


def test_reducibility_perturbed_a4():
    inp = _normal_form_input(1.0, 0.0)
    bad = ReducibilityInput(inp.a1, inp.a2, inp.a3, inp.a4 + 1, 1.0, 0.0)
    verdict = check_reducibility(bad)
    assert verdict.status == "necessary_condition_fails"
    assert verdict.witness is not None


def test_reducibility_short_pulse():
    rhs = z**2 / 2 * z_xx + z * z_x**2 + z
    verdict = check_reducibility(ReducibilityInput(*coefficients_of(rhs), 1.0, 0.0))
    assert verdict.reducible
    assert verdict.residuals["necessary"].max_rel <= 1e-10


def test_reducibility_system_failure_reports_equation():
    inp = _normal_form_input(1.0, 0.0)
    # keeps the necessary condition but breaks the a2 equation: scale a2, fix a3 to compensate
    a2 = inp.a2 + Num(0.1)
    a3 = (2 * inp.a1 - inp.a1 * a2 * inp.a4) / inp.a4
    verdict = check_reducibility(ReducibilityInput(inp.a1, a2, a3, inp.a4, 1.0, 0.0))
    assert verdict.status == "system_fails" and verdict.which == "a2"


def test_reducibility_hypotheses():
    with pytest.raises(HypothesisViolation):
        check_reducibility(ReducibilityInput(Num(1.0), ZERO, ZERO, Num(1.0), 1.0, 0.0))
    with pytest.raises(HypothesisViolation):
        check_reducibility(ReducibilityInput(z, ZERO, ZERO, ZERO, 1.0, 0.0))


# --- builtins ------------------------------------------------------------------------


def test_short_pulse_rule():
    sys, _ = builtin("short_pulse", **{"lambda": 1.0})
    target = z + z * z_x**2 + z**2 / 2 * z_xx
    assert same(sys.rule.rhs, target, sys.sampler()).zero


def test_family_sp_reduces_to_short_pulse():
    fam, fam_imm = builtin("family_sp", m1=1.0, m2=0.0)
    sp, sp_imm = builtin("short_pulse")
    cfg = fam.sampler()
    assert same(fam.rule.rhs, sp.rule.rhs, cfg).zero
    for a, b in zip(fam.forms, sp.forms):
        assert same(a.dx, b.dx, cfg).zero and same(a.dt, b.dt, cfg).zero
    assert same(fam_imm.a, sp_imm.a, cfg).zero


def test_builtin_errors():
    with pytest.raises(InvalidParameterError):
        builtin("sine_gordon", eta=0.0)
    with pytest.raises(InvalidParameterError):
        builtin("short_pulse", **{"lambda": 0.0})
    with pytest.raises(InvalidParameterError):
        builtin("family_sp", m1=0.0)
    with pytest.raises(InvalidParameterError):
        builtin("sine_gordon", sign=0.5)
    with pytest.raises(InvalidParameterError):
        builtin("short_pulse", colour=1.0)
    with pytest.raises(KeyError):
        builtin("kdv")


@pytest.mark.parametrize("sign", [1.0, -1.0])
def test_sine_gordon_immersion(sign):
    sys, imm = builtin("sine_gordon", eta=1.0, sign=sign)
    assert imm.b == Num(-sign)
    pts = draw_points(imm.gauss().free, sys.sampler())
    assert np.max(np.abs(evaluate_array(imm.gauss(), pts))) <= 1e-12
    H = mean_curvature(imm)
    assert same(H, sign / parse("tan(z)"), sys.sampler()).zero


def test_mean_curvature_of_cor1():
    sys, imm = generate_cor1(exp(z), 1.0, 1.0, 1.0)
    expected = -sqrt(2 * m1 * exp(z) + m2) / (exp(z) * z_x)
    assert same(mean_curvature(imm), expected, sys.sampler()).zero


def test_mean_curvature_trivial():
    sys, _ = builtin("short_pulse")
    imm = sys.immersion(ZERO, Num(1.0), ZERO)
    assert is_identically_zero(mean_curvature(imm)).zero


# --- change of variable -----------------------------------------------------------------


def test_change_of_variable_exp():
    sys, _ = generate_cor1(exp(z), 1.0, 1.0, 1.0)
    new = change_of_variable(sys, exp(z))
    assert same(new.rule.rhs, change6(1.0, 1.0), new.sampler(), tol=1e-9).zero
    assert verify_pss(new).passed


def test_change_of_variable_identity():
    sys, _ = builtin("short_pulse")
    new = change_of_variable(sys, z)
    cfg = sys.sampler()
    assert same(new.rule.rhs, sys.rule.rhs, cfg).zero
    for a, b in zip(new.forms, sys.forms):
        assert same(a.dx, b.dx, cfg).zero and same(a.dt, b.dt, cfg).zero


@pytest.mark.parametrize("a,b,m1v,m2v", [(2.0, 1.0, 1.0, 0.0), (2.0, 1.0, 2.0, 0.5), (0.5, -0.3, 1.5, 1.0)])
def test_gauge_four_parameter_to_family_sp(a, b, m1v, m2v):
    ex4, ex4_imm = builtin("example_4param", alpha=a, beta=b, m1=m1v, m2=m2v)
    fam, fam_imm = builtin("family_sp", m1=m1v, m2=m2v)
    # zbar = alpha z + beta / m1; equals m1 alpha z + beta when m1 = 1
    new, new_imm = change_of_variable(ex4, a * z + b / m1v, immersion=ex4_imm)
    cfg = new.sampler()
    assert same(new.rule.rhs, fam.rule.rhs, cfg, tol=1e-9).zero
    assert same(new_imm.a, fam_imm.a, cfg, tol=1e-9).zero


def test_change_of_variable_rejects_flat_psi():
    sys, _ = builtin("short_pulse")
    with pytest.raises(HypothesisViolation):
        change_of_variable(sys, (z - 1.25) ** 2, inverse=sqrt(z) + 1.25)


# --- serialization ----------------------------------------------------------------------


@pytest.mark.parametrize("name", ["sine_gordon", "short_pulse", "family_sp", "example_4param"])
def test_json_roundtrip(name):
    sys, imm = builtin(name)
    text = dumps(sys, imm)
    sys2, imm2 = loads(text)
    assert dumps(sys2, imm2) == text
    assert sys2.rule.rhs == sys.rule.rhs
    assert sys2.forms == sys.forms
    assert imm2.a == imm.a


def test_json_roundtrip_cor1_with_extra_params():
    sys, imm = generate_cor1(parse("alpha*z + beta"), 1.0, 0.0, 1.0, {"alpha": 2.0, "beta": 1.0})
    sys2, imm2 = loads(dumps(sys, imm))
    assert sys2.parameters == sys.parameters
    assert verify_pss(sys2, imm2).passed


def test_admissibility_carried_by_sampler():
    sys, _ = generate_cor1(z, 1.0, 0.0, 1.0)
    cfg = sys.sampler()
    assert any(isinstance(c, Constraint) and "psi" in c.label for c in cfg.constraints)
