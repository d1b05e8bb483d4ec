"""Reconstruct the immersed surface in E^3 by integrating the moving frame.

Along a coordinate line with parameter s the frame equations read

    P' = w1 e1 + w2 e2
    e1' =          w12 e2 + w13 e3
    e2' = -w12 e1          + w23 e3
    e3' = -w13 e1 - w23 e2

where each w is the dx- (or dt-) coefficient of the corresponding 1-form and
w12 = omega3.  Lines are integrated with RK4, coefficients interpolated
linearly between nodes.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import DisconnectedRegionError, EmptyRegionError, FrameDriftError
from .jetexpr import evaluate_array
from .mesh import SurfaceMesh, discrete_gauss_curvature, grid_mesh
from .pssgen.system import ImmersionData, PssSystem
from .solver import SolutionField, jet_grid

log = logging.getLogger(__name__)

DRIFT_LIMIT = 1e-3
RENORM_EVERY = 16
_COEFFS = ("w1", "w2", "w12", "w13", "w23")


@dataclass
class FrameField:
    """Positions and frames on the reached nodes of the interior jet grid."""

    x: np.ndarray
    t: np.ndarray
    P: np.ndarray  # (nt, nx, 3), nan where unreached
    E: np.ndarray  # (nt, nx, 3, 3), rows e1, e2, e3
    reached: np.ndarray
    region: np.ndarray
    anchor: tuple
    coeffs: dict  # "x"/"t" -> {name: (nt, nx) array}
    z_x: np.ndarray
    max_drift: float = 0.0
    drift_rate: float = 0.0


def _form_coefficients(sys: PssSystem, imm: ImmersionData, env, shape):
    forms = {"w1": sys.omega1, "w2": sys.omega2, "w12": sys.omega3, "w13": imm.omega13, "w23": imm.omega23}
    out = {"x": {}, "t": {}}
    for name, form in forms.items():
        for d, e in (("x", form.dx), ("t", form.dt)):
            out[d][name] = np.broadcast_to(np.asarray(evaluate_array(e, env), dtype=float), shape).copy()
    return out


def admissible_mask(sys: PssSystem, imm: ImmersionData, field_: SolutionField, mask_eps=None, method="fd"):
    jets = jet_grid(field_, method)
    env = jets.env(sys.param_env())
    zx = jets.arrays["z_x"]
    shape = zx.shape
    coeffs = _form_coefficients(sys, imm, env, shape)
    if mask_eps is None:
        mask_eps = 0.1 * float(np.max(np.abs(zx)))
    region = np.abs(zx) >= mask_eps
    for d in coeffs.values():
        for arr in d.values():
            region &= np.isfinite(arr)
    config = sys.sampler()
    for con in sys.admissibility:
        vals = np.broadcast_to(evaluate_array(con.expr, env), shape)
        region &= con.holds(vals, config.margin)
    return region, coeffs, jets, zx, mask_eps


def _rhs(P, E, c):
    """Derivatives of position and frame; c maps coefficient names to (m,) arrays."""
    e1, e2, e3 = E[:, 0], E[:, 1], E[:, 2]
    w1, w2, w12, w13, w23 = (c[k][:, None] for k in _COEFFS)
    dP = w1 * e1 + w2 * e2
    de1 = w12 * e2 + w13 * e3
    de2 = -w12 * e1 + w23 * e3
    de3 = -w13 * e1 - w23 * e2
    return dP, np.stack([de1, de2, de3], axis=1)


def _rk4(P, E, c0, c1, h):
    cm = {k: 0.5 * (c0[k] + c1[k]) for k in _COEFFS}
    k1P, k1E = _rhs(P, E, c0)
    k2P, k2E = _rhs(P + 0.5 * h * k1P, E + 0.5 * h * k1E, cm)
    k3P, k3E = _rhs(P + 0.5 * h * k2P, E + 0.5 * h * k2E, cm)
    k4P, k4E = _rhs(P + h * k3P, E + h * k3E, c1)
    return P + h / 6 * (k1P + 2 * k2P + 2 * k3P + k4P), E + h / 6 * (k1E + 2 * k2E + 2 * k3E + k4E)


def orthonormality_defect(E) -> np.ndarray:
    G = np.einsum("...ij,...kj->...ik", E, E)
    return np.abs(G - np.eye(3)).max(axis=(-2, -1))


def gram_schmidt(E):
    e1 = E[:, 0] / np.linalg.norm(E[:, 0], axis=1)[:, None]
    e2 = E[:, 1] - np.einsum("ij,ij->i", E[:, 1], e1)[:, None] * e1
    e2 /= np.linalg.norm(e2, axis=1)[:, None]
    e3 = np.cross(e1, e2)
    return np.stack([e1, e2, e3], axis=1)


class _Integrator:
    def __init__(self, coeffs, region, hx, ht, renorm_every, drift_limit):
        self.coeffs = coeffs
        self.region = region
        self.h = {"x": hx, "t": ht}
        self.renorm_every = renorm_every
        self.drift_limit = drift_limit
        self.max_drift = 0.0
        self.drift_rate = 0.0

    def sweep(self, P, E, reached, axis, starts, direction):
        """Integrate lines along ``axis`` ('x' = columns) from ``starts`` nodes.

        ``starts`` is a list of (r, c) nodes already holding P, E.  All lines
        advance together; a line stops at the first node outside the region
        or already reached.
        """
        if not starts:
            return
        rows = np.array([s[0] for s in starts])
        cols = np.array([s[1] for s in starts])
        Pc = P[rows, cols].copy()
        Ec = E[rows, cols].copy()
        active = np.ones(len(starts), dtype=bool)
        nt, nx = self.region.shape
        coeffs = self.coeffs[axis]
        h = self.h[axis] * direction
        steps = 0
        while active.any():
            nr = rows + (direction if axis == "t" else 0)
            nc = cols + (direction if axis == "x" else 0)
            inside = (nr >= 0) & (nr < nt) & (nc >= 0) & (nc < nx)
            active &= inside
            idx = np.flatnonzero(active)
            if idx.size == 0:
                break
            ok = self.region[nr[idx], nc[idx]] & ~reached[nr[idx], nc[idx]]
            active[idx[~ok]] = False
            idx = idx[ok]
            if idx.size == 0:
                break
            c0 = {k: coeffs[k][rows[idx], cols[idx]] for k in _COEFFS}
            c1 = {k: coeffs[k][nr[idx], nc[idx]] for k in _COEFFS}
            Pn, En = _rk4(Pc[idx], Ec[idx], c0, c1, h)
            steps += 1
            if steps % self.renorm_every == 0:
                drift = float(orthonormality_defect(En).max())
                self.max_drift = max(self.max_drift, drift)
                self.drift_rate = max(self.drift_rate, drift / (self.renorm_every * abs(h)))
                if drift > self.drift_limit:
                    raise FrameDriftError(f"frame drift {drift:.3e} exceeds {self.drift_limit:g}", drift)
                En = gram_schmidt(En)
            Pc[idx], Ec[idx] = Pn, En
            rows[idx], cols[idx] = nr[idx], nc[idx]
            P[rows[idx], cols[idx]] = Pn
            E[rows[idx], cols[idx]] = En
            reached[rows[idx], cols[idx]] = True
        # final drift of the unnormalized tail
        tail = orthonormality_defect(Ec).max() if len(Ec) else 0.0
        self.max_drift = max(self.max_drift, float(tail))


def _frontier(reached, region, axis, direction):
    """Reached nodes whose next node along ``axis`` is in the region but unreached."""
    shift = (direction, 0) if axis == "t" else (0, direction)
    nxt_region = np.zeros_like(region)
    nxt_reached = np.ones_like(reached)
    nt, nx = region.shape
    rs = slice(max(shift[0], 0), nt + min(shift[0], 0))
    cs = slice(max(shift[1], 0), nx + min(shift[1], 0))
    rd = slice(max(-shift[0], 0), nt + min(-shift[0], 0))
    cd = slice(max(-shift[1], 0), nx + min(-shift[1], 0))
    nxt_region[rd, cd] = region[rs, cs]
    nxt_reached[rd, cd] = reached[rs, cs]
    return list(zip(*np.nonzero(reached & nxt_region & ~nxt_reached)))


def integrate_frame(sys: PssSystem, imm: ImmersionData, field_: SolutionField, mask_eps=None,
                    order: str = "tx", anchor=None, renorm_every: int = RENORM_EVERY,
                    drift_limit: float = DRIFT_LIMIT, allow_disconnected: bool = False,
                    method: str = "fd") -> FrameField:
    """Integrate P and (e1, e2, e3) over the admissible region of a solution field.

    ``order='tx'`` runs the anchor t-line first and then every x-line from
    it; ``'xt'`` does the opposite.  Further alternating sweeps fill
    non-rectangular regions.  P = 0 and the standard basis at the
    anchor (default: region node nearest its centroid).
    """
    if order not in ("tx", "xt"):
        raise ValueError("order must be 'tx' or 'xt'")
    region, coeffs, jets, zx, mask_eps = admissible_mask(sys, imm, field_, mask_eps, method)
    if not region.any():
        raise EmptyRegionError(f"no node with |z_x| >= {mask_eps:g} satisfies the admissibility constraints")
    labels, ncomp = ndimage.label(region)
    if ncomp > 1:
        sizes = ndimage.sum(region, labels, index=range(1, ncomp + 1))
        comps = [int(s) for s in sizes]
        if not allow_disconnected:
            raise DisconnectedRegionError(f"admissible region has {ncomp} components", comps)
        keep = 1 + int(np.argmax(sizes))
        region = labels == keep
        log.info("admissible region has %d components, keeping the largest (%d nodes)", ncomp, max(comps))
    if anchor is None:
        rr, cc = np.nonzero(region)
        cr, ccen = rr.mean(), cc.mean()
        k = int(np.argmin((rr - cr) ** 2 + (cc - ccen) ** 2))
        anchor = (int(rr[k]), int(cc[k]))
    elif not region[anchor]:
        raise EmptyRegionError(f"anchor {anchor} is outside the admissible region")

    x = field_.x[jets.ix]
    t = field_.t[jets.it]
    nt, nx = region.shape
    P = np.full((nt, nx, 3), np.nan)
    E = np.full((nt, nx, 3, 3), np.nan)
    reached = np.zeros((nt, nx), dtype=bool)
    P[anchor] = 0.0
    E[anchor] = np.eye(3)
    reached[anchor] = True
    integ = _Integrator(coeffs, region, field_.hx, field_.ht, renorm_every, drift_limit)

    first, second = ("t", "x") if order == "tx" else ("x", "t")
    for direction in (1, -1):
        integ.sweep(P, E, reached, first, [anchor], direction)
    # alternate sweeps from the reached set until the region is covered;
    # on a rectangle the first pass of ``second`` lines already covers it
    axes = [second, first]
    stalled = 0
    while stalled < 2:
        axis = axes[0]
        before = int(reached.sum())
        for direction in (1, -1):
            integ.sweep(P, E, reached, axis, _frontier(reached, region, axis, direction), direction)
        stalled = stalled + 1 if int(reached.sum()) == before else 0
        axes.reverse()

    log.info("frame integration: max drift %.3e (%.3e per unit length)", integ.max_drift, integ.drift_rate)
    return FrameField(x, t, P, E, reached, region, anchor, coeffs, zx, integ.max_drift, integ.drift_rate)


def path_gap(ff_a: FrameField, ff_b: FrameField, corners_only: bool = True) -> float:
    """Largest position difference between two integrations of the same surface."""
    both = ff_a.reached & ff_b.reached
    if corners_only:
        rr, cc = np.nonzero(both)
        pick = np.zeros_like(both)
        for r in (rr.min(), rr.max()):
            for c in (cc.min(), cc.max()):
                if both[r, c]:
                    pick[r, c] = True
        both = pick
    if not both.any():
        return 0.0
    return float(np.max(np.linalg.norm(ff_a.P[both] - ff_b.P[both], axis=-1)))


def induced_form_errors(ff: FrameField) -> dict:
    """Compare finite differences of P and e3 with the prescribed forms.

    first_form: dP vs w1 e1 + w2 e2; second_form: de3 vs -w13 e1 - w23 e2;
    metric: E, F, G of dP vs the omega1^2 + omega2^2 coefficients.  Values are
    max errors relative to the largest expected magnitude.
    """
    hx = float(ff.x[1] - ff.x[0]) if len(ff.x) > 1 else 1.0
    ht = float(ff.t[1] - ff.t[0]) if len(ff.t) > 1 else 1.0
    R = ff.reached
    inner = np.zeros_like(R)
    inner[1:-1, 1:-1] = R[1:-1, 1:-1] & R[2:, 1:-1] & R[:-2, 1:-1] & R[1:-1, 2:] & R[1:-1, :-2]
    if not inner.any():
        return {}
    sl = inner[1:-1, 1:-1]
    e1, e2, e3 = ff.E[..., 0, :], ff.E[..., 1, :], ff.E[..., 2, :]
    Px = ((ff.P[1:-1, 2:] - ff.P[1:-1, :-2]) / (2 * hx))[sl]
    Pt = ((ff.P[2:, 1:-1] - ff.P[:-2, 1:-1]) / (2 * ht))[sl]
    e3x = ((e3[1:-1, 2:] - e3[1:-1, :-2]) / (2 * hx))[sl]
    e3t = ((e3[2:, 1:-1] - e3[:-2, 1:-1]) / (2 * ht))[sl]
    c = {d: {k: v[inner][:, None] for k, v in ff.coeffs[d].items()} for d in ("x", "t")}
    E1, E2 = e1[inner], e2[inner]

    def rel(got, want):
        return float(np.max(np.abs(got - want)) / max(np.max(np.abs(want)), 1e-300))

    first = max(
        rel(Px, c["x"]["w1"] * E1 + c["x"]["w2"] * E2),
        rel(Pt, c["t"]["w1"] * E1 + c["t"]["w2"] * E2),
    )
    second = max(
        rel(e3x, -c["x"]["w13"] * E1 - c["x"]["w23"] * E2),
        rel(e3t, -c["t"]["w13"] * E1 - c["t"]["w23"] * E2),
    )
    f1, f2, g1, g2 = c["x"]["w1"][:, 0], c["x"]["w2"][:, 0], c["t"]["w1"][:, 0], c["t"]["w2"][:, 0]
    metric_want = np.stack([f1 * f1 + f2 * f2, f1 * g1 + f2 * g2, g1 * g1 + g2 * g2])
    metric_got = np.stack([np.sum(Px * Px, 1), np.sum(Px * Pt, 1), np.sum(Pt * Pt, 1)])
    return {
        "first_form": first,
        "second_form": second,
        "metric": rel(metric_got, metric_want),
        "nodes": int(inner.sum()),
    }


def surface_mesh(ff: FrameField) -> SurfaceMesh:
    """Triangulated surface over the reached nodes, with |z_x| and curvature attributes."""
    mesh = grid_mesh(ff.P, ff.reached, {"abs_z_x": np.abs(ff.z_x)})
    mesh.attributes["K"] = discrete_gauss_curvature(mesh)
    return mesh
