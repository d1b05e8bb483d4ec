"""Random admissible jet points and the probabilistic zero test.

Every sample index ``k`` draws from its own generator seeded with
``(seed, k)``, so a point never depends on how many retries other samples
needed or on evaluation order.
"""
from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass, field, replace
from types import MappingProxyType

import numpy as np

from ..errors import InvalidParameterError, MissingValueError, SamplerExhaustedError
from .evaluate import evaluate_array
from .nodes import INDEPENDENT, PARAMETERS, Expr, as_expr, jet_index

DEFAULT_SEED = 0x5EED

DEFAULT_BOX = MappingProxyType(
    {
        "x": (-1.0, 1.0),
        "t": (-1.0, 1.0),
        "z": (0.5, 2.0),
        "z_x": (-2.0, 2.0),
        "z_t": (-2.0, 2.0),
        "z_xx": (-2.0, 2.0),
        "z_xt": (-2.0, 2.0),
        "z_tt": (-2.0, 2.0),
    }
)
JET_DEFAULT_RANGE = (-2.0, 2.0)
DEFAULT_MIN_ABS = MappingProxyType({"z_x": 0.1})
DEFAULT_PARAM_BOX = MappingProxyType(
    {
        "lambda": (0.5, 2.0),
        "m1": (0.5, 2.0),
        "m2": (0.0, 1.0),
        "alpha": (0.5, 2.0),
        "beta": (0.0, 1.0),
        "eta": (0.5, 2.0),
    }
)


@dataclass(frozen=True)
class Constraint:
    """Admissibility condition ``expr > 0`` or ``expr != 0``."""

    expr: Expr
    kind: str = "nonzero"
    label: str = ""

    def __post_init__(self):
        if self.kind not in ("positive", "nonzero"):
            raise ValueError(f"unknown constraint kind {self.kind!r}")
        object.__setattr__(self, "expr", as_expr(self.expr))

    def holds(self, values, margin):
        with np.errstate(invalid="ignore"):
            if self.kind == "positive":
                return np.isfinite(values) & (values > margin)
            return np.isfinite(values) & (np.abs(values) > margin)

    def to_json(self):
        return {"expr": str(self.expr), "kind": self.kind, "label": self.label}

    @classmethod
    def from_json(cls, data):
        return cls(as_expr(data["expr"]), data.get("kind", "nonzero"), data.get("label", ""))


@dataclass(frozen=True)
class SamplerConfig:
    n: int = 64
    tol: float = 1e-9
    seed: int = DEFAULT_SEED
    box: Mapping = field(default_factory=dict)
    min_abs: Mapping = DEFAULT_MIN_ABS
    params: Mapping = field(default_factory=dict)
    constraints: tuple = ()
    max_retries: int = 10_000
    margin: float = 1e-3

    def __post_init__(self):
        if self.n < 1:
            raise InvalidParameterError("sampler needs at least one point")

    def range_of(self, name):
        if name in self.box:
            return self.box[name]
        if name in DEFAULT_BOX:
            return DEFAULT_BOX[name]
        if name in self.params and self.params[name] is not None:
            value = self.params[name]
            return value if isinstance(value, tuple) else (float(value), float(value))
        if name in DEFAULT_PARAM_BOX:
            return DEFAULT_PARAM_BOX[name]
        if name in INDEPENDENT or jet_index(name) is not None:
            return JET_DEFAULT_RANGE
        raise MissingValueError(f"no sampling range or value for {name!r}")

    def with_constraints(self, constraints) -> "SamplerConfig":
        return replace(self, constraints=tuple(self.constraints) + tuple(constraints))

    def with_params(self, params: Mapping) -> "SamplerConfig":
        merged = {k: v for k, v in params.items() if v is not None}
        merged.update(self.params)
        return replace(self, params=merged)


def draw_points(names, config: SamplerConfig, require_finite=()) -> dict:
    """Draw ``config.n`` admissible points for the given variable names.

    A point is admissible when it satisfies the ``min_abs`` floors, every
    constraint of ``config`` and leaves all ``require_finite`` expressions
    finite.  Returns name -> array of length n.
    """
    needed = set(names)
    for c in config.constraints:
        needed |= c.expr.free
    for e in require_finite:
        needed |= e.free
    names = sorted(needed)
    lo = np.array([config.range_of(n)[0] for n in names], dtype=float)
    hi = np.array([config.range_of(n)[1] for n in names], dtype=float)
    floors = [(c, config.min_abs[n]) for c, n in enumerate(names) if n in config.min_abs]

    n = config.n
    rngs = [np.random.default_rng([config.seed & 0xFFFFFFFFFFFFFFFF, k]) for k in range(n)]
    pts = np.empty((n, len(names)))
    pending = np.arange(n)
    tries = 0
    while pending.size:
        if tries >= config.max_retries:
            raise SamplerExhaustedError(
                f"{pending.size} of {n} samples found no admissible point after {tries} tries"
            )
        tries += 1
        for k in pending:
            pts[k] = rngs[k].uniform(lo, hi)
        block = pts[pending]
        env = {name: block[:, c] for c, name in enumerate(names)}
        ok = np.ones(pending.size, dtype=bool)
        for c, floor in floors:
            ok &= np.abs(block[:, c]) >= floor
        for con in config.constraints:
            ok &= con.holds(np.broadcast_to(evaluate_array(con.expr, env), ok.shape), config.margin)
        for e in require_finite:
            ok &= np.isfinite(np.broadcast_to(evaluate_array(e, env), ok.shape))
        pending = pending[~ok]
    return {name: pts[:, c].copy() for c, name in enumerate(names)}


@dataclass
class Verdict:
    zero: bool
    max_abs: float
    max_rel: float
    n: int
    seed: int
    witness: dict | None = None
    witness_value: float | None = None

    def __bool__(self):
        return self.zero

    def to_json(self):
        return {
            "verdict": "zero" if self.zero else "nonzero",
            "max_abs": self.max_abs,
            "max_rel": self.max_rel,
            "samples": self.n,
            "seed": self.seed,
            "witness": self.witness,
            "witness_value": self.witness_value,
        }


def residual_samples(e: Expr, config: SamplerConfig, points=None):
    """Values, scales and points of ``e`` over the sampler's admissible set."""
    e = as_expr(e)
    if points is None:
        points = draw_points(e.free, config, require_finite=(e,))
    value, scale = evaluate_array(e, points, with_scale=True)
    value = np.broadcast_to(value, (config.n,)).astype(float)
    scale = np.broadcast_to(scale, (config.n,)).astype(float)
    return value, scale, points


def is_identically_zero(e, sampler: SamplerConfig | None = None, points=None) -> Verdict:
    """Decide ``e == 0`` by sampling.

    Zero iff ``|e(p)| <= tol * (1 + s(p))`` at every sample, where ``s(p)`` is
    the largest magnitude of any subexpression at ``p``.  Otherwise the
    verdict carries the worst point as witness.
    """
    config = sampler or SamplerConfig()
    value, scale, points = residual_samples(e, config, points)
    absval = np.abs(value)
    rel = absval / (1.0 + scale)
    k = int(np.argmax(rel))
    zero = bool(np.all(rel <= config.tol))
    verdict = Verdict(
        zero=zero,
        max_abs=float(absval.max()),
        max_rel=float(rel.max()),
        n=config.n,
        seed=config.seed,
    )
    if not zero:
        verdict.witness = {name: float(arr[k]) for name, arr in points.items()}
        verdict.witness_value = float(value[k])
    return verdict


__all__ = [
    "Constraint",
    "DEFAULT_PARAM_BOX",
    "DEFAULT_SEED",
    "PARAMETERS",
    "SamplerConfig",
    "Verdict",
    "draw_points",
    "is_identically_zero",
    "residual_samples",
]
