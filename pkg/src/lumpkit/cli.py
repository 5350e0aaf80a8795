"""Command-line front end.

Every subcommand prints (or writes with ``-o``) a deterministic report:
JSON with sorted keys that embeds the effective configuration, or CSV for
``eval-grid``.  Exit codes: 0 success, 1 verification failed, 2 usage or
parse error, 3 numerically inconclusive.
"""
from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

SCHEMA_VERSION = 1

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_INCONCLUSIVE = 0, 1, 2, 3


class UsageError(Exception):
    pass


class Inconclusive(Exception):
    pass


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------

def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, complex):
        return [x.real, x.imag]
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, Path):
        return str(x)
    return x


def _config_of(args) -> dict:
    skip = {"func", "config", "output", "command"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _emit(args, report: dict) -> None:
    doc = {"schema_version": SCHEMA_VERSION, "command": args.command, "config": _config_of(args)}
    doc.update(report)
    text = json.dumps(_jsonable(doc), sort_keys=True, indent=2) + "\n"
    _write(args, text)


def _write(args, text: str) -> None:
    if getattr(args, "output", None):
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)


def _load_poly(spec: str):
    """A catalog name, a path to a file with polynomial text, or the text itself."""
    from .catalog import TAU_FAMILIES
    from .polyring import parse_poly

    if spec in TAU_FAMILIES:
        return TAU_FAMILIES[spec]()
    path = Path(spec)
    if path.is_file():
        return parse_poly(path.read_text().strip())
    return parse_poly(spec)


def _param(text):
    """Number or symbol for A, B: integers and fractions stay exact."""
    if text is None:
        return None
    if isinstance(text, (int, float)):
        return text
    try:
        return Fraction(text)
    except ValueError:
        pass
    if not str(text).isidentifier():
        raise UsageError(f"parameter must be a number or a symbol name, got {text!r}")
    return str(text)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_verify(args) -> int:
    from .hirota import BILINEAR_BOUSSINESQ, apply_op, parse_op

    tau = _load_poly(args.target).to_zz()
    op = parse_op(args.op) if args.op else BILINEAR_BOUSSINESQ
    res = apply_op(op, tau, tau).to_xy()
    zero = res.is_zero()
    _emit(args, {"operator": str(op), "zero": zero,
                 "residual": "0" if zero else res.canonical(),
                 "nonzero_terms": len(res.terms)})
    return EXIT_OK if zero else EXIT_FAIL


def cmd_backlund(args) -> int:
    from .backlund import BacklundSystem, chain_step

    systems = {"back2+": lambda: BacklundSystem.back2(1), "back2-": lambda: BacklundSystem.back2(-1),
               "gh": BacklundSystem.gh}
    f = _load_poly(args.source)
    res = chain_step(f, systems[args.system](), args.j, free_names=args.free_names or None)
    g = res.transforms[0]
    _emit(args, {
        "polynomial": g.to_xy().canonical(),
        "polynomial_zz": g.canonical(),
        "free_parameters": [{"degree": d, "exponent_z_zbar": list(e), "name": s}
                            for d, e, s in res.free_parameters],
        "leading": [{"j": j, "degree": m, "exponent_z_zbar": list(e)} for j, m, e in res.leading],
    })
    return EXIT_OK


def cmd_realize(args) -> int:
    from .catalog import pretty, realize_hAB

    p = realize_hAB(_param(args.A), _param(args.B))
    if args.json:
        _emit(args, {"canonical": p.canonical(), "pretty": pretty(p)})
    else:
        _write(args, p.canonical() + "\n" + pretty(p) + "\n")
    return EXIT_OK


def cmd_eval_grid(args) -> int:
    from .catalog import lump_U_float
    from .spectral import Family

    fam = Family(args.family, args.A, args.B)
    u = lump_U_float if args.family == "U" else fam.potential()
    xs = np.linspace(-args.extent, args.extent, args.n)
    X, Y = np.meshgrid(xs, xs, indexing="ij")
    U = u(X, Y)
    lines = ["x,y,u"]
    for x, y, v in zip(X.ravel(), Y.ravel(), U.ravel()):
        lines.append(f"{x:.12g},{y:.12g},{v:.17g}")
    _write(args, "\n".join(lines) + "\n")
    return EXIT_OK


def _peak_report(B: float, with_sup: bool = True) -> dict:
    from .catalog import peaks, sup_error

    pk = peaks(B)
    g2 = pk.gamma ** 2
    rep = {"B": B, "gamma": pk.gamma, "peaks": [list(p) for p in pk.points],
           "eta_values": [-179 * g2 + 1848, 271 * g2 + 1848, 271 * g2 + 1848]}
    if with_sup:
        rep["sup_error"] = sup_error(B)
    return rep


def cmd_peaks(args) -> int:
    from .catalog import eta_error, peak_residuals

    if args.B is None or args.B <= 0:
        raise UsageError("--B must be given and positive")
    rep = _peak_report(args.B, not args.no_sup)
    _, vals = eta_error()
    rep["eta_values_symbolic"] = [str(v) for v in vals]
    rep["peak_residuals_zero"] = all(a.is_zero() and b.is_zero() for a, b in peak_residuals())
    _emit(args, rep)
    return EXIT_OK if rep["peak_residuals_zero"] else EXIT_FAIL


def cmd_asym(args) -> int:
    Bs = sorted(args.B)
    if any(b <= 0 for b in Bs):
        raise UsageError("B must be positive")
    reports = [_peak_report(b) for b in Bs]
    errs = [r["sup_error"] for r in reports]
    mono = all(a > b for a, b in zip(errs, errs[1:]))
    _emit(args, {"reports": reports, "sup_errors": errs, "monotone_decreasing": mono})
    return EXIT_OK if mono else EXIT_FAIL


def cmd_balance(args) -> int:
    from . import balance as bl

    if args.check == "reference":
        rep = bl.reference_kernel()
        F = bl.F_map(bl.reference_configuration())
        ok = rep.matches and all(f.is_zero() for f in F)
        _emit(args, {"F_zero": all(f.is_zero() for f in F), "rank": rep.rank,
                     "nullity": rep.nullity, "basis_matches": rep.matches})
        return EXIT_OK if ok else EXIT_FAIL
    if args.check == "newton":
        ref = bl.reference_configuration().as_complex()
        rng = np.random.default_rng(args.seed)
        z0 = ref + args.perturb * (rng.standard_normal(3) + 1j * rng.standard_normal(3))
        rep = bl.newton_refine(bl.Configuration(tuple(complex(z) for z in z0)))
        _emit(args, {"converged": rep.converged, "iterations": rep.iterations,
                     "residual": rep.residual, "orbit_distance": rep.orbit_distance,
                     "z": [complex(z) for z in rep.config.as_complex()]})
        return EXIT_OK if rep.converged else EXIT_INCONCLUSIVE
    B = args.B if args.B is not None else 2.0 * args.gamma ** 3
    if args.check == "projection":
        rep = bl.projection_check(B)
    else:
        pairs = None
        if args.offdiag_only:
            pairs = [(j, k, a, b) for j in range(3) for k in range(3) if j != k
                     for a, b in (("x", "x"), ("x", "y"), ("y", "y"))]
        rep = bl.pairing_check(B, pairs=pairs, centres=args.centres)
    rows = rep["rows"]
    _emit(args, {
        "gamma": rep.get("gamma"), "rows": rows,
        "lhs": [r["lhs"] for r in rows], "rhs": [r["rhs"] for r in rows],
        "rel_error": [r["rel_error"] for r in rows],
        "refinement_history": [r.get("refinement_history") for r in rows],
    })
    return EXIT_OK


def cmd_constants(args) -> int:
    from .balance import interaction_constants

    c = interaction_constants(args.rtol)
    ok = abs(c.bstar) < 1e-8
    _emit(args, {"dstar": c.dstar, "astar": c.astar, "bstar": c.bstar, "cstar": c.cstar,
                 "errors": c.errors,
                 "refinement_history": {name: h for name, h in c.history}})
    return EXIT_OK if ok else EXIT_FAIL


def cmd_spectrum(args) -> int:
    from .spectral import Family, SpectralGrid, default_cache_dir, kernel_count, morse_index

    fam = Family(args.family, args.A, args.B)
    Lx = args.Lx if args.Lx is not None else args.L
    Ly = args.Ly if args.Ly is not None else args.L
    Nx = args.Nx if args.Nx is not None else args.N
    Ny = args.Ny if args.Ny is not None else args.N
    grid = SpectralGrid(Lx, Ly, Nx, Ny)
    cache = None if args.no_cache else Path(args.cache_dir) if args.cache_dir else default_cache_dir()
    mr = morse_index(fam, grid, args.delta_neg, m=args.m, check_stability=not args.no_stability,
                     cache_dir=cache)
    kr = kernel_count(fam, grid, args.delta_zero, args.delta_neg, m=args.m, cache_dir=cache)
    w = np.asarray(kr.eigenvalues)
    if args.convention == "paper":
        # eigenvalues of -S; the index counts its positive eigenvalues
        w = -w
    status = "ok" if mr.status == "ok" and kr.status == "ok" else "inconclusive"
    _emit(args, {
        "family": fam.name, "A": fam.A, "B": fam.B, "Lx": Lx, "Ly": Ly, "Nx": Nx, "Ny": Ny,
        "delta_neg": args.delta_neg, "delta_zero": kr.delta_zero, "eigenvalues": w,
        "morse_index": mr.count, "kernel_count": kr.count, "gap_ratio": kr.gap_ratio,
        "kernel_defects": kr.defects, "convention": args.convention, "status": status,
        "stability_runs": [{"Lx": g.Lx, "Ly": g.Ly, "Nx": g.Nx, "Ny": g.Ny, "morse_index": c}
                           for g, c, _ in mr.runs],
        "messages": [m for m in (mr.message, kr.message) if m],
    })
    return EXIT_OK if status == "ok" else EXIT_INCONCLUSIVE


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lumpkit", description=__doc__.splitlines()[0])
    p.add_argument("--config", help="JSON file whose keys mirror the subcommand flags")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        sp = sub.add_parser(name, help=help_, description=help_)
        sp.add_argument("-o", "--output", help="write the report here instead of stdout")
        sp.set_defaults(func=func)
        return sp

    sp = add("verify", cmd_verify, "check that a bilinear operator annihilates tau.tau exactly")
    sp.add_argument("target", help="catalog name (tau2, g4, h6, ...), polynomial file, or text")
    sp.add_argument("--op", help='operator text, default "D_x^4 - D_x^2 - D_y^2"')

    sp = add("backlund", cmd_backlund, "solve for a Backlund transform degree by degree")
    sp.add_argument("--from", dest="source", default="tau2", help="input tau (default tau2)")
    sp.add_argument("--system", choices=["back2+", "back2-", "gh"], default="back2+")
    sp.add_argument("--j", type=int, default=3, help="leading index j (default 3)")
    sp.add_argument("--free-names", nargs="*", default=[], help="names for the free symbols")

    sp = add("realize", cmd_realize, "print h_{A,B} (canonical and conventional form)")
    sp.add_argument("--A", default="A", help="number or symbol (default symbolic A)")
    sp.add_argument("--B", default="B", help="number or symbol (default symbolic B)")
    sp.add_argument("--json", action="store_true", help="emit a JSON report")

    sp = add("eval-grid", cmd_eval_grid, "sample u on a square grid as CSV x,y,u")
    sp.add_argument("--family", choices=["U", "hAB"], default="hAB")
    sp.add_argument("--A", type=float, default=0.0)
    sp.add_argument("--B", type=float, default=0.0)
    sp.add_argument("--extent", type=float, default=10.0)
    sp.add_argument("--n", type=int, default=101)

    sp = add("peaks", cmd_peaks, "peak locations, eta values and sup error for u_{0,B}")
    sp.add_argument("--B", type=float, help="required")
    sp.add_argument("--no-sup", action="store_true", help="skip the sup-error grid")

    sp = add("asym", cmd_asym, "sup-error trend of u_{0,B} against three lumps")
    sp.add_argument("--B", type=float, nargs="+", default=[1e3, 1e4, 1e5])

    sp = add("balance", cmd_balance, "balancing configuration and interaction checks")
    sp.add_argument("--check", choices=["reference", "newton", "projection", "pairing"],
                    default="projection")
    g = sp.add_mutually_exclusive_group()
    g.add_argument("--gamma", type=float, default=25.0)
    g.add_argument("--B", type=float)
    sp.add_argument("--centres", choices=["peaks", "fitted"], default="peaks")
    sp.add_argument("--offdiag-only", action="store_true")
    sp.add_argument("--perturb", type=float, default=1e-2, help="newton start perturbation")
    sp.add_argument("--seed", type=int, default=0)

    sp = add("constants", cmd_constants, "interaction constants d*, a*, b*, c*")
    sp.add_argument("--rtol", type=float, default=1e-9)

    sp = add("spectrum", cmd_spectrum, "Morse index and kernel dimension by Fourier collocation")
    sp.add_argument("--family", choices=["U", "hAB"], default="hAB")
    sp.add_argument("--A", type=float, default=0.0)
    sp.add_argument("--B", type=float, default=0.0)
    sp.add_argument("--L", type=float, default=30.0, help="box half-length (both directions)")
    sp.add_argument("--N", type=int, default=128, help="points per direction")
    sp.add_argument("--Lx", type=float)
    sp.add_argument("--Ly", type=float)
    sp.add_argument("--Nx", type=int)
    sp.add_argument("--Ny", type=int)
    sp.add_argument("--m", type=int, default=12, help="number of eigenvalues")
    sp.add_argument("--delta-neg", type=float, default=1e-2)
    sp.add_argument("--delta-zero", type=float, help="default: chosen at the largest gap")
    sp.add_argument("--convention", choices=["S", "paper"], default="S")
    sp.add_argument("--no-stability", action="store_true", help="skip the refinement runs")
    sp.add_argument("--cache-dir", help="default $HLL_CACHE_DIR or ~/.cache/lumpkit")
    sp.add_argument("--no-cache", action="store_true")
    return p


def _subparser(parser, name):
    for act in parser._subparsers._group_actions:
        if isinstance(act, argparse._SubParsersAction):
            return act.choices[name]
    raise KeyError(name)


def parse_args(argv=None, parser=None):
    """Parse argv; values from ``--config`` become subcommand defaults, so flags win."""
    parser = parser or build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    ns, rest = pre.parse_known_args(argv)
    if ns.config:
        try:
            cfg = json.loads(Path(ns.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            parser.error(f"cannot read config {ns.config}: {exc}")
        if not isinstance(cfg, dict):
            parser.error("config must be a JSON object")
        cfg = {k.replace("-", "_"): v for k, v in cfg.items()}
        command = next((t for t in rest if not t.startswith("-")), cfg.pop("command", None))
        if command is None:
            parser.error("no subcommand given")
        cfg.pop("command", None)
        try:
            sp = _subparser(parser, command)
        except KeyError:
            parser.error(f"unknown subcommand {command!r}")
        known = {a.dest for a in sp._actions}
        unknown = sorted(set(cfg) - known)
        if unknown:
            parser.error(f"unknown config keys for {command}: {', '.join(unknown)}")
        sp.set_defaults(**cfg)
        if command not in rest:
            argv = argv + [command]
    return parser.parse_args(argv)


def main(argv=None) -> int:
    from .backlund import BacklundError
    from .balance import QuadratureError
    from .polyring import CyclicBindingError, PolyParseError
    from .spectral import SpectralError

    try:
        args = parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except BacklundError as exc:
        lvl = f" (degree {exc.level})" if exc.level is not None else ""
        print(f"lumpkit {args.command}: {exc}{lvl}", file=sys.stderr)
        return EXIT_FAIL
    except (UsageError, PolyParseError, CyclicBindingError, ValueError) as exc:
        print(f"lumpkit {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SpectralError, QuadratureError, Inconclusive) as exc:
        print(f"lumpkit {args.command}: inconclusive: {exc}", file=sys.stderr)
        return EXIT_INCONCLUSIVE


if __name__ == "__main__":
    sys.exit(main())
