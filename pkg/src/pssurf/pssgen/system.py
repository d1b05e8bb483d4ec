"""One-forms, pss systems, immersion data and their JSON documents."""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

from ..jetexpr import (
    ZERO,
    Constraint,
    EquationRule,
    Expr,
    SamplerConfig,
    as_expr,
    parse,
    substitute_equation,
    total_derivative,
)


@dataclass(frozen=True)
class OneForm:
    """``dx_coeff dx + dt_coeff dt``; always stored in (dx, dt) order."""

    dx: Expr
    dt: Expr

    def __post_init__(self):
        object.__setattr__(self, "dx", as_expr(self.dx))
        object.__setattr__(self, "dt", as_expr(self.dt))

    def d(self) -> Expr:
        """dx^dt coefficient of the exterior derivative: D_x(dt) - D_t(dx)."""
        return total_derivative(self.dt, "x") - total_derivative(self.dx, "t")

    def wedge(self, other: "OneForm") -> Expr:
        """dx^dt coefficient of ``self ^ other``."""
        return self.dx * other.dt - self.dt * other.dx

    def __add__(self, other):
        return OneForm(self.dx + other.dx, self.dt + other.dt)

    def __neg__(self):
        return OneForm(-self.dx, -self.dt)

    def scale(self, factor) -> "OneForm":
        factor = as_expr(factor)
        return OneForm(factor * self.dx, factor * self.dt)

    def map(self, func) -> "OneForm":
        return OneForm(func(self.dx), func(self.dt))

    def to_json(self):
        return {"dx": str(self.dx), "dt": str(self.dt)}

    @classmethod
    def from_json(cls, data, extra_params=()):
        return cls(parse(data["dx"], extra_params), parse(data["dt"], extra_params))


@dataclass(frozen=True)
class ImmersionData:
    """Second fundamental form data {a, b, c} with the derived 1-forms

    omega13 = a omega1 + b omega2,  omega23 = b omega1 + c omega2.
    """

    a: Expr
    b: Expr
    c: Expr
    omega13: OneForm
    omega23: OneForm

    @classmethod
    def from_abc(cls, a, b, c, omega1: OneForm, omega2: OneForm) -> "ImmersionData":
        a, b, c = as_expr(a), as_expr(b), as_expr(c)
        omega13 = omega1.scale(a) + omega2.scale(b)
        omega23 = omega1.scale(b) + omega2.scale(c)
        return cls(a, b, c, omega13, omega23)

    def gauss(self) -> Expr:
        """ac - b^2 + 1, zero when the Gauss equation holds."""
        return self.a * self.c - self.b * self.b + 1

    def mean_curvature(self) -> Expr:
        return (self.a + self.c) / 2

    def to_json(self):
        return {"a": str(self.a), "b": str(self.b), "c": str(self.c)}


@dataclass(frozen=True)
class PssSystem:
    name: str
    omega1: OneForm
    omega2: OneForm
    omega3: OneForm
    rule: EquationRule
    parameters: dict = field(default_factory=dict)
    admissibility: tuple = ()

    @property
    def forms(self):
        return (self.omega1, self.omega2, self.omega3)

    def reduce(self, e: Expr) -> Expr:
        return substitute_equation(e, self.rule)

    def sampler(self, base: SamplerConfig | None = None) -> SamplerConfig:
        """A sampler carrying this system's parameter values and constraints."""
        base = base or SamplerConfig()
        return base.with_params(self.parameters).with_constraints(self.admissibility)

    def param_env(self) -> dict:
        return {k: float(v) for k, v in self.parameters.items() if v is not None}

    def with_forms(self, omega1=None, omega2=None, omega3=None) -> "PssSystem":
        return replace(
            self,
            omega1=omega1 or self.omega1,
            omega2=omega2 or self.omega2,
            omega3=omega3 or self.omega3,
        )

    def immersion(self, a, b, c) -> ImmersionData:
        return ImmersionData.from_abc(a, b, c, self.omega1, self.omega2)


def generic_constraint(omega1: OneForm, omega2: OneForm) -> Constraint:
    return Constraint(omega1.wedge(omega2), "nonzero", "omega1^omega2 != 0")


def to_document(sys: PssSystem, imm: ImmersionData | None = None) -> dict:
    return {
        "name": sys.name,
        "parameters": dict(sys.parameters),
        "forms": {
            "omega1": sys.omega1.to_json(),
            "omega2": sys.omega2.to_json(),
            "omega3": sys.omega3.to_json(),
        },
        "rule": {"target": sys.rule.target, "rhs": str(sys.rule.rhs)},
        "immersion": imm.to_json() if imm is not None else None,
        "admissibility": [c.to_json() for c in sys.admissibility],
    }


def from_document(doc: dict):
    """Inverse of :func:`to_document`; returns ``(system, immersion or None)``."""
    params = doc.get("parameters", {})
    extra = tuple(params)
    forms = doc["forms"]
    omega1, omega2, omega3 = (OneForm.from_json(forms[k], extra) for k in ("omega1", "omega2", "omega3"))
    rule = EquationRule(parse(doc["rule"]["rhs"], extra), doc["rule"].get("target", "z_xt"))
    admissibility = tuple(
        Constraint(parse(c["expr"], extra), c.get("kind", "nonzero"), c.get("label", ""))
        for c in doc.get("admissibility", [])
    )
    sys = PssSystem(
        doc.get("name", "system"),
        omega1,
        omega2,
        omega3,
        rule,
        {k: (None if v is None else float(v)) for k, v in params.items()},
        admissibility,
    )
    imm = None
    if doc.get("immersion"):
        d = doc["immersion"]
        imm = sys.immersion(parse(d["a"], extra), parse(d["b"], extra), parse(d["c"], extra))
    return sys, imm


def dumps(sys: PssSystem, imm: ImmersionData | None = None) -> str:
    return json.dumps(to_document(sys, imm), indent=2)


def loads(text: str):
    return from_document(json.loads(text))


def load(path):
    with open(path) as fh:
        return loads(fh.read())


def save(path, sys: PssSystem, imm: ImmersionData | None = None):
    with open(path, "w") as fh:
        fh.write(dumps(sys, imm) + "\n")


__all__ = [
    "ImmersionData",
    "OneForm",
    "PssSystem",
    "ZERO",
    "dumps",
    "from_document",
    "generic_constraint",
    "load",
    "loads",
    "save",
    "to_document",
]
