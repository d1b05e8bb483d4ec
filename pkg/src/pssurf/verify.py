"""Residual engines: structure equations, Gauss-Codazzi, zero curvature."""
from __future__ import annotations

import json
from dataclasses import dataclass, field


from .errors import InvalidParameterError
from .jetexpr import (
    ZERO,
    EquationRule,
    Expr,
    SamplerConfig,
    Verdict,
    draw_points,
    is_identically_zero,
    substitute_equation,
    total_derivative,
)
from .pssgen.system import ImmersionData, PssSystem

STRUCTURE_NAMES = ("domega1 - omega3^omega2", "domega2 - omega1^omega3", "domega3 - omega1^omega2")
CODAZZI_NAMES = ("ac - b^2 + 1", "domega13 - omega12^omega23", "domega23 - omega21^omega13")


def structure_residuals(sys: PssSystem, substitute: bool = True) -> tuple:
    """dx^dt coefficients of the three structure equations.

    With ``substitute`` the equation and its consequences are eliminated;
    without it the residuals are the raw jet-space identities.
    """
    w1, w2, w3 = sys.forms
    raw = (w1.d() - w3.wedge(w2), w2.d() - w1.wedge(w3), w3.d() - w1.wedge(w2))
    if not substitute:
        return raw
    return tuple(sys.reduce(r) for r in raw)


def gauss_codazzi_residuals(sys: PssSystem, imm: ImmersionData, substitute: bool = True) -> tuple:
    """Gauss equation ac - b^2 + 1 and the two Codazzi dx^dt coefficients.

    omega12 = omega3 and omega21 = -omega3.
    """
    w3 = sys.omega3
    raw = (
        imm.gauss(),
        imm.omega13.d() - w3.wedge(imm.omega23),
        imm.omega23.d() + w3.wedge(imm.omega13),
    )
    if not substitute:
        return raw
    return tuple(sys.reduce(r) for r in raw)


def mean_curvature(imm: ImmersionData) -> Expr:
    """H = (a + c) / 2."""
    return imm.mean_curvature()


@dataclass(frozen=True)
class LaxPair:
    size: int
    X: tuple
    T: tuple

    def entries(self):
        for i in range(self.size):
            for j in range(self.size):
                yield i, j

    def perturbed(self, which: str, i: int, j: int, delta: float) -> "LaxPair":
        mats = {"X": [list(r) for r in self.X], "T": [list(r) for r in self.T]}
        mats[which][i][j] = mats[which][i][j] + delta
        return LaxPair(self.size, tuple(map(tuple, mats["X"])), tuple(map(tuple, mats["T"])))


def lax_pair(sys: PssSystem, size: int = 2) -> LaxPair:
    """X, T of the linear problem V_x = X V, V_t = T V built from the f_ij."""
    (f11, f12), (f21, f22), (f31, f32) = ((w.dx, w.dt) for w in sys.forms)
    if size == 2:
        X = ((f21 / 2, (f11 - f31) / 2), ((f11 + f31) / 2, -f21 / 2))
        T = ((f22 / 2, (f12 - f32) / 2), ((f12 + f32) / 2, -f22 / 2))
    elif size == 3:
        X = ((ZERO, f11, f21), (f11, ZERO, f31), (f21, -f31, ZERO))
        T = ((ZERO, f12, f22), (f12, ZERO, f32), (f22, -f32, ZERO))
    else:
        raise InvalidParameterError("Lax pair size must be 2 or 3")
    return LaxPair(size, X, T)


def _matmul(A, B, n):
    out = []
    for i in range(n):
        row = []
        for j in range(n):
            acc = ZERO
            for k in range(n):
                acc = acc + A[i][k] * B[k][j]
            row.append(acc)
        out.append(row)
    return out


def zero_curvature_matrix(pair: LaxPair, rule: EquationRule | None = None) -> tuple:
    """Entries of D_t X - D_x T + X T - T X, reduced modulo ``rule`` if given."""
    n = pair.size
    XT = _matmul(pair.X, pair.T, n)
    TX = _matmul(pair.T, pair.X, n)
    rows = []
    for i in range(n):
        row = []
        for j in range(n):
            e = (
                total_derivative(pair.X[i][j], "t")
                - total_derivative(pair.T[i][j], "x")
                + XT[i][j]
                - TX[i][j]
            )
            if rule is not None:
                e = substitute_equation(e, rule)
            row.append(e)
        rows.append(tuple(row))
    return tuple(rows)


def _combine(verdicts: list) -> Verdict:
    worst = max(verdicts, key=lambda v: v.max_rel)
    return Verdict(
        zero=all(v.zero for v in verdicts),
        max_abs=max(v.max_abs for v in verdicts),
        max_rel=worst.max_rel,
        n=worst.n,
        seed=worst.seed,
        witness=worst.witness,
        witness_value=worst.witness_value,
    )


def _shared_points(exprs, config: SamplerConfig):
    names = frozenset().union(*(e.free for e in exprs))
    return draw_points(names, config, require_finite=tuple(exprs))


def zero_curvature_residual(pair: LaxPair, rule: EquationRule | None, sampler: SamplerConfig | None = None):
    """Residual matrix and a combined verdict over all entries."""
    config = sampler or SamplerConfig()
    mat = zero_curvature_matrix(pair, rule)
    flat = [e for row in mat for e in row]
    pts = _shared_points(flat, config)
    return mat, _combine([is_identically_zero(e, config, pts) for e in flat])


@dataclass
class ResidualResult:
    name: str
    verdict: Verdict

    @property
    def passed(self):
        return self.verdict.zero

    def to_json(self):
        out = {"name": self.name}
        out.update(self.verdict.to_json())
        return out


@dataclass
class VerificationReport:
    system: str
    seed: int
    samples: int
    tol: float
    substituted: bool
    residuals: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.residuals)

    def __getitem__(self, name) -> ResidualResult:
        for r in self.residuals:
            if r.name == name:
                return r
        raise KeyError(name)

    def to_json(self) -> dict:
        return {
            "system": self.system,
            "passed": self.passed,
            "seed": self.seed,
            "samples": self.samples,
            "tol": self.tol,
            "substituted": self.substituted,
            "residuals": [r.to_json() for r in self.residuals],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2)

    def table(self) -> str:
        lines = [f"system {self.system}  seed {self.seed:#x}  samples {self.samples}  tol {self.tol:g}"]
        for r in self.residuals:
            flag = "PASS" if r.passed else "FAIL"
            lines.append(f"  {flag}  {r.name:<32} max|r|={r.verdict.max_abs:.3e}  rel={r.verdict.max_rel:.3e}")
        return "\n".join(lines)


def verify_pss(
    sys: PssSystem,
    imm: ImmersionData | None = None,
    sampler: SamplerConfig | None = None,
    substitute: bool = True,
    lax_sizes=(2, 3),
) -> VerificationReport:
    """Run every residual engine on a system and collect the verdicts."""
    config = sys.sampler(sampler)
    report = VerificationReport(sys.name, config.seed, config.n, config.tol, substitute)
    rule = sys.rule if substitute else None

    named = list(zip(STRUCTURE_NAMES, structure_residuals(sys, substitute)))
    if imm is not None:
        named += list(zip(CODAZZI_NAMES, gauss_codazzi_residuals(sys, imm, substitute)))
    pts = _shared_points([e for _, e in named], config)
    for name, e in named:
        report.residuals.append(ResidualResult(name, is_identically_zero(e, config, pts)))
    for size in lax_sizes:
        _, verdict = zero_curvature_residual(lax_pair(sys, size), rule, config)
        report.residuals.append(ResidualResult(f"zero curvature {size}x{size}", verdict))
    return report


def curvature_ratio(imm: ImmersionData, point: dict, which: str = "a", jet: str = "z_x", values=(1.0, 2.0)):
    """Evaluate a (or H) at two points differing only in one jet coordinate."""
    from .jetexpr import evaluate

    e = imm.a if which == "a" else mean_curvature(imm)
    out = []
    for v in values:
        p = dict(point)
        p[jet] = v
        out.append(evaluate(e, p))
    return tuple(out)


__all__ = [
    "LaxPair",
    "ResidualResult",
    "VerificationReport",
    "curvature_ratio",
    "gauss_codazzi_residuals",
    "lax_pair",
    "mean_curvature",
    "structure_residuals",
    "verify_pss",
    "zero_curvature_matrix",
    "zero_curvature_residual",
]
