"""Numerical solutions and finite-difference jets of sampled fields.

The generalized short pulse equation

    z_xt = m1 [z + (z^3)_xx / 6] - m2/(2 m1) z_xx

is integrated on a periodic interval in its nonlocal evolution form

    z_t = m1 d_x^{-1} z + (m1/6) (z^3)_x - m2/(2 m1) z_x,

pseudo-spectrally in x and with classical RK4 in t.  The zero Fourier mode
must vanish (integrate the equation over a period), so d_x^{-1} is taken
with the zero mode set to zero and the mean is projected out every step.
"""
from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import BlowUpError, InvalidParameterError, NonZeroMeanError, StencilError
from .jetexpr import evaluate_array
from .pssgen.system import PssSystem

log = logging.getLogger(__name__)

BLOWUP_THRESHOLD = 1e3


@dataclass(frozen=True)
class Grid:
    N: int
    L: float = 2 * math.pi
    dt: float = 1e-3
    T: float = 1.0
    x0: float = 0.0

    def __post_init__(self):
        if self.N < 16 or self.N & (self.N - 1):
            raise InvalidParameterError("N must be a power of two and at least 16")
        if self.L <= 0:
            raise InvalidParameterError("L must be positive")
        if self.dt <= 0:
            raise InvalidParameterError("dt must be positive")
        if self.T < 0:
            raise InvalidParameterError("T must be non-negative")

    @property
    def x(self) -> np.ndarray:
        return self.x0 + self.L * np.arange(self.N) / self.N

    @property
    def h(self) -> float:
        return self.L / self.N

    @property
    def nsteps(self) -> int:
        n = round(self.T / self.dt)
        if not math.isclose(n * self.dt, self.T, rel_tol=1e-9, abs_tol=1e-12):
            raise InvalidParameterError("T must be an integer multiple of dt")
        return n

    def to_json(self):
        return {"N": self.N, "L": self.L, "dt": self.dt, "T": self.T, "x0": self.x0}


@dataclass
class SolutionField:
    """z sampled on a rectangular (x, t) grid; ``values[it, ix]``."""

    x: np.ndarray
    t: np.ndarray
    values: np.ndarray
    periodic: bool = False
    metadata: dict = field(default_factory=dict)
    grid: Grid | None = None

    @property
    def hx(self) -> float:
        return float(self.x[1] - self.x[0])

    @property
    def ht(self) -> float:
        return float(self.t[1] - self.t[0])

    @property
    def L(self) -> float:
        return self.grid.L if self.grid is not None else float(self.x[-1] - self.x[0] + self.hx)

    def to_csv(self, path):
        """Write values as CSV (first row: x nodes) plus a JSON metadata sidecar."""
        path = Path(path)
        lines = ["t\\x," + ",".join(f"{v:.17g}" for v in self.x)]
        for tk, row in zip(self.t, self.values):
            lines.append(f"{tk:.17g}," + ",".join(f"{v:.17g}" for v in row))
        path.write_text("\n".join(lines) + "\n")
        meta = dict(self.metadata)
        meta["periodic"] = self.periodic
        if self.grid is not None:
            meta["grid"] = self.grid.to_json()
        sidecar(path).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")

    @classmethod
    def from_csv(cls, path) -> "SolutionField":
        path = Path(path)
        rows = [line.split(",") for line in path.read_text().strip().splitlines()]
        x = np.array([float(v) for v in rows[0][1:]])
        t = np.array([float(r[0]) for r in rows[1:]])
        values = np.array([[float(v) for v in r[1:]] for r in rows[1:]])
        meta = {}
        if sidecar(path).exists():
            meta = json.loads(sidecar(path).read_text())
        grid = Grid(**meta["grid"]) if "grid" in meta else None
        periodic = bool(meta.pop("periodic", False))
        meta.pop("grid", None)
        return cls(x, t, values, periodic, meta, grid)


def sidecar(path) -> Path:
    path = Path(path)
    return path.with_suffix(".json")


class _Spectral:
    def __init__(self, N, L):
        j = np.arange(N // 2 + 1)
        k = 2 * np.pi * j / L
        self.ik = 1j * k
        self.ik[-1] = 0.0  # Nyquist mode carries no odd derivative
        self.inv_ik = np.zeros_like(self.ik)
        self.inv_ik[1:-1] = 1.0 / self.ik[1:-1]
        self.dealias = j <= N // 3
        self.N = N

    def dx(self, u):
        return np.fft.irfft(self.ik * np.fft.rfft(u), self.N)


def _tail(uh, sp: _Spectral) -> float:
    """Largest Fourier amplitude in the upper third of the retained band, relative to the peak."""
    j = np.arange(uh.size)
    band = (j > 2 * (sp.N // 3) // 3) & sp.dealias
    return float(np.abs(uh[band]).max(initial=0.0) / max(np.abs(uh).max(), 1e-300))


def solve_family_sp(m1, m2, z0, grid: Grid, store_every: int = 1,
                    blowup: float = BLOWUP_THRESHOLD) -> SolutionField:
    """Integrate the generalized short pulse equation from nodal data ``z0``."""
    if m1 == 0:
        raise InvalidParameterError("m1 must be non-zero")
    z0 = np.asarray(z0, dtype=float)
    if z0.shape != (grid.N,):
        raise InvalidParameterError(f"z0 must have {grid.N} nodal values")
    mean = float(np.mean(z0))
    if abs(mean) > 1e-10 * max(1.0, float(np.max(np.abs(z0)))):
        raise NonZeroMeanError(f"initial data must have zero spatial mean (mean = {mean:.3e})")
    sp = _Spectral(grid.N, grid.L)
    zh = np.fft.rfft(z0)
    zh[0] = 0.0
    tail = _tail(zh, sp)
    if tail > 1e-10:
        log.warning("initial data not resolved: spectral tail %.2e", tail)

    a = m1
    b = m1 / 6.0
    c = -m2 / (2.0 * m1)

    def rhs(uh):
        u = np.fft.irfft(uh, grid.N)
        cube = np.fft.rfft(u**3)
        cube[~sp.dealias] = 0.0
        return a * sp.inv_ik * uh + b * sp.ik * cube + c * sp.ik * uh

    nsteps = grid.nsteps
    dt = grid.dt
    stored_t = [0.0]
    stored = [np.fft.irfft(zh, grid.N)]
    max_drift = 0.0
    for n in range(1, nsteps + 1):
        k1 = rhs(zh)
        k2 = rhs(zh + 0.5 * dt * k1)
        k3 = rhs(zh + 0.5 * dt * k2)
        k4 = rhs(zh + dt * k3)
        zh = zh + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        max_drift = max(max_drift, abs(zh[0]) / grid.N)
        zh[0] = 0.0
        u = np.fft.irfft(zh, grid.N)
        umax = np.max(np.abs(u))
        uxmax = np.max(np.abs(np.fft.irfft(sp.ik * zh, grid.N)))
        if not (umax <= blowup and uxmax <= blowup):
            raise BlowUpError(f"|z| or |z_x| exceeded {blowup:g} at t = {n * dt:.6g}", n * dt)
        if n % store_every == 0:
            stored.append(u)
            stored_t.append(n * dt)
    log.info("family_sp: %d steps, max pre-projection mean drift %.3e", nsteps, max_drift)
    final_tail = _tail(zh, sp)
    if final_tail > 1e-6:
        log.warning("solution under-resolved at T (spectral tail %.2e); wave breaking likely", final_tail)
    meta = {
        "equation": "family_sp",
        "parameters": {"m1": m1, "m2": m2},
        "store_every": store_every,
        "max_mean_drift": max_drift,
        "spectral_tail": final_tail,
    }
    return SolutionField(grid.x, np.array(stored_t), np.array(stored), True, meta, grid)


def sine_gordon_kink(eta: float = 1.0, x_range=(-3.0, 3.0), t_range=(-3.0, 3.0),
                     nx: int = 601, nt: int = 601) -> SolutionField:
    """The kink z = 4 arctan(exp(eta x + t / eta)) of z_xt = sin z on a rectangle."""
    if eta == 0:
        raise InvalidParameterError("eta must be non-zero")
    x = np.linspace(*x_range, nx)
    t = np.linspace(*t_range, nt)
    theta = eta * x[None, :] + t[:, None] / eta
    values = 4.0 * np.arctan(np.exp(theta))
    meta = {"equation": "sine_gordon", "parameters": {"eta": eta}, "solution": "kink"}
    return SolutionField(x, t, values, False, meta)


# --- numerical jets -----------------------------------------------------------


@dataclass
class JetGrid:
    """Jets up to order two on the nodes where every stencil is available."""

    it: slice
    ix: slice
    arrays: dict

    def env(self, params=None) -> dict:
        out = dict(params or {})
        out.update(self.arrays)
        return out


def _dx_fd(z, h, periodic):
    if periodic:
        return (np.roll(z, -1, axis=1) - np.roll(z, 1, axis=1)) / (2 * h)
    out = np.full_like(z, np.nan)
    out[:, 1:-1] = (z[:, 2:] - z[:, :-2]) / (2 * h)
    return out


def _dxx_fd(z, h, periodic):
    if periodic:
        return (np.roll(z, -1, axis=1) - 2 * z + np.roll(z, 1, axis=1)) / h**2
    out = np.full_like(z, np.nan)
    out[:, 1:-1] = (z[:, 2:] - 2 * z[:, 1:-1] + z[:, :-2]) / h**2
    return out


def jet_grid(field: SolutionField, method: str = "fd") -> JetGrid:
    """z, z_x, z_t, z_xx, z_xt, z_tt at interior nodes by central differences.

    ``method='spectral'`` takes x-derivatives by FFT on periodic fields.
    """
    z = field.values
    hx, ht = field.hx, field.ht
    if method == "spectral":
        if not field.periodic:
            raise InvalidParameterError("spectral x-derivatives need a periodic field")
        sp = _Spectral(z.shape[1], field.L)
        zh = np.fft.rfft(z, axis=1)
        ik = 1j * 2 * np.pi * np.arange(z.shape[1] // 2 + 1) / field.L
        zx = np.fft.irfft(sp.ik * zh, z.shape[1], axis=1)
        zxx = np.fft.irfft(ik**2 * zh, z.shape[1], axis=1)
    elif method == "fd":
        zx = _dx_fd(z, hx, field.periodic)
        zxx = _dxx_fd(z, hx, field.periodic)
    else:
        raise InvalidParameterError(f"unknown method {method!r}")
    it = slice(1, z.shape[0] - 1)
    ix = slice(None) if field.periodic else slice(1, z.shape[1] - 1)
    zt = (z[2:] - z[:-2]) / (2 * ht)
    ztt = (z[2:] - 2 * z[1:-1] + z[:-2]) / ht**2
    zxt = (zx[2:] - zx[:-2]) / (2 * ht)
    arrays = {
        "z": z[it, ix],
        "z_x": zx[it, ix],
        "z_t": zt[:, ix],
        "z_xx": zxx[it, ix],
        "z_xt": zxt[:, ix],
        "z_tt": ztt[:, ix],
        "x": np.broadcast_to(field.x[ix][None, :], z[it, ix].shape),
        "t": np.broadcast_to(field.t[it][:, None], z[it, ix].shape),
    }
    return JetGrid(it, ix, arrays)


def numerical_jet(field: SolutionField, i: int, j: int, node) -> float:
    """d^(i+j) z / dx^i dt^j at ``node = (it, ix)`` by O(h^2) central differences."""
    if i < 0 or j < 0 or i + j > 2:
        raise InvalidParameterError("numerical jets are available up to order two")
    it, ix = node
    z = field.values
    nt, nx = z.shape
    if (i, j) == (0, 0):
        return float(z[it, ix])
    if j > 0 and not 1 <= it <= nt - 2:
        raise StencilError(f"time index {it} has no central stencil")
    if i > 0 and not field.periodic and not 1 <= ix <= nx - 2:
        raise StencilError(f"space index {ix} has no central stencil")

    def at(a, b):
        return z[a, (ix + b) % nx] if field.periodic else z[a, ix + b]

    hx, ht = field.hx, field.ht
    if (i, j) == (1, 0):
        return float((at(it, 1) - at(it, -1)) / (2 * hx))
    if (i, j) == (2, 0):
        return float((at(it, 1) - 2 * at(it, 0) + at(it, -1)) / hx**2)
    if (i, j) == (0, 1):
        return float((at(it + 1, 0) - at(it - 1, 0)) / (2 * ht))
    if (i, j) == (0, 2):
        return float((at(it + 1, 0) - 2 * at(it, 0) + at(it - 1, 0)) / ht**2)
    return float(
        (at(it + 1, 1) - at(it + 1, -1) - at(it - 1, 1) + at(it - 1, -1)) / (4 * hx * ht)
    )


@dataclass
class PdeResidual:
    residual: np.ndarray
    max_norm: float
    jets: JetGrid


def pde_residual(field: SolutionField, sys: PssSystem, method: str = "fd", mask=None) -> PdeResidual:
    """z_xt - rhs(jets) on interior nodes, with the system's parameter values."""
    jets = jet_grid(field, method)
    env = jets.env(sys.param_env())
    rhs = np.broadcast_to(evaluate_array(sys.rule.rhs, env), jets.arrays["z"].shape)
    res = jets.arrays["z_xt"] - rhs
    sel = res if mask is None else res[mask]
    return PdeResidual(res, float(np.max(np.abs(sel))) if sel.size else 0.0, jets)


def field_structure_residuals(field: SolutionField, sys: PssSystem, min_abs_zx: float = 0.05,
                              method: str = "fd"):
    """Unreduced structure residuals evaluated on numerical jets of a field.

    Nodes with |z_x| < ``min_abs_zx`` are dropped.  Returns the list of
    three max-norms.
    """
    from .verify import structure_residuals

    jets = jet_grid(field, method)
    env = jets.env(sys.param_env())
    mask = np.abs(jets.arrays["z_x"]) >= min_abs_zx
    out = []
    for r in structure_residuals(sys, substitute=False):
        vals = np.broadcast_to(evaluate_array(r, env), mask.shape)[mask]
        out.append(float(np.max(np.abs(vals))) if vals.size else 0.0)
    return out


def arc_length(field: SolutionField, index: int = -1) -> float:
    """Integral over one period of sqrt(1 + z_x^2), z_x spectral, periodic rectangle rule."""
    if not field.periodic:
        raise InvalidParameterError("arc length functional needs a periodic field")
    u = field.values[index]
    sp = _Spectral(u.size, field.L)
    ux = sp.dx(u)
    return float(np.sum(np.sqrt(1.0 + ux**2)) * field.L / u.size)


def initial_data(expr, grid: Grid) -> np.ndarray:
    """Evaluate a DSL expression in x (and parameter L) at the grid nodes."""
    from .jetexpr import as_expr, parse

    e = parse(expr, extra_params=("L",)) if isinstance(expr, str) else as_expr(expr)
    vals = evaluate_array(e, {"x": grid.x, "L": grid.L})
    return np.broadcast_to(np.asarray(vals, dtype=float), (grid.N,)).copy()
