"""Command-line front end: generate, verify, lax, solve, immerse, builtin.

Machine output is JSON on standard output; human tables go to standard
error.  Exit codes: 0 success, 1 verification failure, 2 usage or input
error, 3 numerical breakdown.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import (
    BlowUpError,
    DisconnectedRegionError,
    EmptyRegionError,
    FrameDriftError,
    PssError,
)
from .jetexpr import DEFAULT_SEED, SamplerConfig, parse
from .pssgen import (
    CATALOG,
    DEFAULTS,
    Prop1Input,
    builtin,
    dumps,
    generate_cor1,
    generate_prop1,
    load,
)
from .verify import lax_pair, verify_pss, zero_curvature_residual

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3
NUMERICAL_ERRORS = (BlowUpError, FrameDriftError, EmptyRegionError, DisconnectedRegionError)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _seed(text):
    return int(text, 0)


def _emit(obj, out=None):
    text = json.dumps(obj, indent=2, sort_keys=False) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _note(msg):
    print(msg, file=sys.stderr)


def _sampler(args) -> SamplerConfig:
    seed = args.seed
    if seed is None:
        env = os.environ.get("PSS_SEED")
        seed = int(env, 0) if env else DEFAULT_SEED
    return SamplerConfig(n=args.samples, seed=seed)


def _params(pairs) -> dict:
    out = {}
    for item in pairs or ():
        key, sep, value = item.partition("=")
        if not sep:
            raise UsageError(f"parameter override {item!r} is not KEY=VALUE")
        try:
            out[key.strip()] = float(value)
        except ValueError:
            raise UsageError(f"parameter {key!r} needs a numeric value") from None
    return out


# subcommands -------------------------------------------------------------

def cmd_generate(args) -> int:
    if args.prop1:
        doc = json.loads(Path(args.prop1).read_text())
        unknown = set(doc) - {"psi21", "psi22", "psi31", "psi32", "parameters", "name"}
        if unknown:
            raise UsageError(f"unknown keys in Prop1 spec: {sorted(unknown)}")
        params = {k: float(v) for k, v in doc.get("parameters", {}).items()}
        extra = tuple(params)
        inp = Prop1Input(*(parse(doc[k], extra) for k in ("psi21", "psi22", "psi31", "psi32")), params)
        system = generate_prop1(inp, name=doc.get("name", "prop1"))
        imm = None
    else:
        if args.psi is None:
            raise UsageError("generate --cor1 needs --psi")
        extra = _params(args.param)
        psi = parse(args.psi, tuple(extra))
        system, imm = generate_cor1(psi, args.m1, args.m2, args.lam, extra or None)
    text = dumps(system, imm) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _load_system(args):
    system, imm = load(args.system)
    return system, imm


def cmd_verify(args) -> int:
    system, imm = _load_system(args)
    if args.immersion is None:
        imm = None
    elif args.immersion is not True:
        d = json.loads(Path(args.immersion).read_text())
        extra = tuple(system.parameters)
        imm = system.immersion(*(parse(d[k], extra) for k in ("a", "b", "c")))
    elif imm is None:
        raise UsageError("system document carries no immersion data")
    report = verify_pss(system, imm, _sampler(args), substitute=not args.no_subst)
    _note(report.table())
    _emit(report.to_json(), args.out)
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_lax(args) -> int:
    system, _ = _load_system(args)
    rule = None if args.no_subst else system.rule
    mat, verdict = zero_curvature_residual(lax_pair(system, args.size), rule, system.sampler(_sampler(args)))
    flag = "PASS" if verdict.zero else "FAIL"
    _note(f"{flag}  zero curvature {args.size}x{args.size}  max|r|={verdict.max_abs:.3e}  rel={verdict.max_rel:.3e}")
    out = {"system": system.name, "size": args.size, "passed": bool(verdict.zero)}
    out.update(verdict.to_json())
    out["matrix"] = [[str(e) for e in row] for row in mat]
    _emit(out, args.out)
    return EXIT_OK if verdict.zero else EXIT_FAIL


def cmd_solve(args) -> int:
    from .solver import Grid, arc_length, initial_data, sine_gordon_kink, solve_family_sp

    if args.builtin == "family_sp":
        grid = Grid(args.N, args.L, args.dt, args.T)
        z0 = initial_data(args.z0, grid)
        field = solve_family_sp(args.m1, args.m2, z0, grid, store_every=args.store_every)
        field.metadata["z0"] = args.z0
        summary = {
            "equation": "family_sp",
            "m1": args.m1,
            "m2": args.m2,
            "grid": grid.to_json(),
            "stored_times": len(field.t),
            "max_mean_drift": field.metadata["max_mean_drift"],
            "arc_length_drift": abs(arc_length(field, -1) - arc_length(field, 0)),
        }
    else:
        field = sine_gordon_kink(args.eta, (args.xmin, args.xmax), (args.tmin, args.tmax), args.nx, args.nt)
        summary = {"equation": "sine_gordon", "eta": args.eta, "nx": args.nx, "nt": args.nt}
    field.to_csv(args.out)
    summary["field"] = str(args.out)
    _note(f"wrote {args.out} ({len(field.t)} x {len(field.x)})")
    _emit(summary)
    return EXIT_OK


def cmd_immerse(args) -> int:
    from .immerse import induced_form_errors, integrate_frame, path_gap, surface_mesh
    from .mesh import curvature_path, export_mesh
    from .solver import SolutionField

    system, imm = _load_system(args)
    if imm is None:
        raise UsageError("system document carries no immersion data")
    field = SolutionField.from_csv(args.field)
    ff = integrate_frame(system, imm, field, args.mask_eps, allow_disconnected=args.largest_component)
    other = integrate_frame(system, imm, field, args.mask_eps, order="xt",
                            allow_disconnected=args.largest_component)
    mesh = surface_mesh(ff)
    K = mesh.attributes["K"]
    export_mesh(mesh, args.out, curvature=K, mask=np.isfinite(K))
    finite = K[np.isfinite(K)]
    summary = {
        "mesh": str(args.out),
        "curvature_csv": str(curvature_path(args.out)),
        "vertices": int(len(mesh.vertices)),
        "faces": int(len(mesh.faces)),
        "anchor": [int(v) for v in ff.anchor],
        "max_drift": ff.max_drift,
        "path_gap": path_gap(ff, other),
        "form_errors": induced_form_errors(ff),
        "K_median": float(np.median(finite)) if finite.size else None,
    }
    _note(f"wrote {args.out}: {summary['vertices']} vertices, drift {ff.max_drift:.2e}")
    _emit(summary)
    return EXIT_OK


def cmd_builtin(args) -> int:
    if args.list or not args.name:
        _emit({name: {"description": CATALOG[name], "defaults": DEFAULTS[name]} for name in sorted(CATALOG)})
        return EXIT_OK
    system, imm = builtin(args.name, **_params(args.param))
    text = dumps(system, imm) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


# parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--json", action="store_true", default=argparse.SUPPRESS,
                        help="report errors as JSON on standard output")
    sampling = _Parser(add_help=False)
    sampling.add_argument("--samples", type=int, default=64, help="number of sample points (default 64)")
    sampling.add_argument("--seed", type=_seed, default=None,
                          help="sampler seed; falls back to $PSS_SEED, then 0x5EED")
    sampling.add_argument("--no-subst", action="store_true", help="skip substitution of the equation")

    p = _Parser(prog="pssurf", description="Pseudospherical surface toolkit.")
    p.add_argument("--version", action="version", version=f"pssurf {__version__}")
    p.add_argument("--json", action="store_true", help="report errors as JSON on standard output")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to standard error")
    sub = p.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)

    g = sub.add_parser("generate", parents=[common], help="build a system from generator data")
    src = g.add_mutually_exclusive_group(required=True)
    src.add_argument("--prop1", metavar="SPEC.json", help="four psi_ij functions of z as JSON")
    src.add_argument("--cor1", action="store_true", help="one-function family built from --psi")
    g.add_argument("--psi", help="psi(z) in the expression language")
    g.add_argument("--m1", type=float, default=1.0, help="parameter m1 (default 1)")
    g.add_argument("--m2", type=float, default=0.0, help="parameter m2 (default 0)")
    g.add_argument("--lambda", dest="lam", metavar="LAMBDA", type=float, default=1.0, help="parameter lambda (default 1)")
    g.add_argument("--param", action="append", metavar="KEY=VALUE", help="extra parameter used in psi")
    g.add_argument("--out", help="write the system JSON here instead of standard output")
    g.set_defaults(func=cmd_generate)

    v = sub.add_parser("verify", parents=[common, sampling], help="run all residual engines")
    v.add_argument("--system", required=True, metavar="S.json", help="system document")
    v.add_argument("--immersion", nargs="?", const=True, default=None, metavar="ABC.json",
                   help="also check Gauss-Codazzi (embedded data, or a JSON with a, b, c)")
    v.add_argument("--out", help="write the report here instead of standard output")
    v.set_defaults(func=cmd_verify)

    lx = sub.add_parser("lax", parents=[common, sampling], help="zero-curvature check of a Lax pair")
    lx.add_argument("--system", required=True, metavar="S.json", help="system document")
    lx.add_argument("--size", type=int, choices=(2, 3), default=2, help="matrix size (default 2)")
    lx.add_argument("--out", help="write the verdict here instead of standard output")
    lx.set_defaults(func=cmd_lax)

    s = sub.add_parser("solve", parents=[common], help="solve a builtin equation on a grid")
    s.add_argument("--builtin", choices=("family_sp", "sine_gordon"), default="family_sp",
                   help="family_sp: pseudo-spectral RK4; sine_gordon: sampled kink")
    s.add_argument("--m1", type=float, default=1.0, help="family_sp parameter m1 (default 1)")
    s.add_argument("--m2", type=float, default=0.0, help="family_sp parameter m2 (default 0)")
    s.add_argument("--N", type=int, default=256, help="grid points, power of two (default 256)")
    s.add_argument("--L", type=float, default=2 * np.pi, help="period (default 2 pi)")
    s.add_argument("--dt", type=float, default=1e-3, help="time step (default 1e-3)")
    s.add_argument("--T", type=float, default=1.0, help="final time (default 1)")
    s.add_argument("--z0", default="0.1*sin(x)", help="initial data in x (and L), default 0.1*sin(x)")
    s.add_argument("--store-every", type=int, default=1, help="store every k-th step (default 1)")
    s.add_argument("--eta", type=float, default=1.0, help="sine_gordon kink parameter (default 1)")
    s.add_argument("--xmin", type=float, default=0.2, help="sine_gordon x range start (default 0.2)")
    s.add_argument("--xmax", type=float, default=1.2, help="sine_gordon x range end (default 1.2)")
    s.add_argument("--tmin", type=float, default=0.2, help="sine_gordon t range start (default 0.2)")
    s.add_argument("--tmax", type=float, default=1.2, help="sine_gordon t range end (default 1.2)")
    s.add_argument("--nx", type=int, default=201, help="sine_gordon x nodes (default 201)")
    s.add_argument("--nt", type=int, default=201, help="sine_gordon t nodes (default 201)")
    s.add_argument("--out", required=True, metavar="F.csv", help="field CSV (metadata in F.json)")
    s.set_defaults(func=cmd_solve)

    im = sub.add_parser("immerse", parents=[common], help="integrate the frame and export a mesh")
    im.add_argument("--system", required=True, metavar="S.json", help="system document with immersion")
    im.add_argument("--field", required=True, metavar="F.csv", help="solution field CSV")
    im.add_argument("--mask-eps", type=float, default=None,
                    help="exclude nodes with |z_x| below this (default 0.1 max|z_x|)")
    im.add_argument("--largest-component", action="store_true",
                    help="keep the largest admissible component instead of failing")
    im.add_argument("--out", required=True, metavar="M.obj", help="OBJ path; curvature goes to M_curvature.csv")
    im.set_defaults(func=cmd_immerse)

    b = sub.add_parser("builtin", parents=[common], help="list or emit catalog systems")
    b.add_argument("name", nargs="?", choices=sorted(CATALOG), help="catalog entry")
    b.add_argument("--list", action="store_true", help="print the catalog")
    b.add_argument("--param", action="append", metavar="KEY=VALUE", help="parameter override")
    b.add_argument("--out", help="write the system JSON here instead of standard output")
    b.set_defaults(func=cmd_builtin)
    return p


def _fail(code, exc, as_json):
    payload = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    for attr in ("which", "witness", "position", "components", "drift", "time"):
        value = getattr(exc, attr, None)
        if value is not None:
            payload[attr] = value
    if as_json:
        sys.stdout.write(json.dumps(payload, indent=2, default=str) + "\n")
    _note(f"error: {exc}")
    return code


def run(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    as_json = "--json" in argv
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        return _fail(EXIT_USAGE, exc, as_json)
    if args.command is None:
        build_parser().print_usage(sys.stderr)
        return _fail(EXIT_USAGE, UsageError("a subcommand is required"), as_json)
    if args.verbose:
        logging.basicConfig(level=logging.INFO, stream=sys.stderr, format="%(name)s: %(message)s")
    try:
        return args.func(args)
    except NUMERICAL_ERRORS as exc:
        return _fail(EXIT_NUMERIC, exc, as_json)
    except (UsageError, PssError, KeyError, OSError, ValueError, json.JSONDecodeError) as exc:
        return _fail(EXIT_USAGE, exc, as_json)


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
