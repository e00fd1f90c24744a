"""Batch command line for the liberation engine.

Every command writes its main output to ``--out`` (CSV or JSON, first line a
provenance record) and a status JSON ``{"ok": ..., "warnings": [...]}`` next
to it.  Exit codes: 0 success, 2 invalid input, 3 solver did not converge.
"""
from __future__ import annotations

import argparse
import json
import math
import shlex
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import LiberationError, NoConvergence, ParseError
from .measures import (
    PRESETS,
    SpectralMeasure,
    TraceParams,
    chebyshev_nodes,
    from_json,
    moments,
    preset,
)

EXIT_OK, EXIT_INVALID, EXIT_NOCONV = 0, 2, 3


# ---------------------------------------------------------------------------
# measure specs


def _parse_numbers(text: str, offset: int):
    vals = []
    pos = offset
    for tok in text.split(","):
        try:
            vals.append(float(tok))
        except ValueError:
            raise ParseError(f"not a number: {tok!r}", pos) from None
        pos += len(tok) + 1
    return vals


def parse_measure_spec(text: str, p: TraceParams | None = None, level: str = "mu") -> SpectralMeasure:
    """Preset name with optional ``:a,b,...`` parameters, or ``file:path.json``."""
    p = p or TraceParams()
    text = text.strip()
    if not text:
        raise ParseError("empty measure spec", 0)
    name, sep, rest = text.partition(":")
    if name == "file":
        if not rest:
            raise ParseError("missing path after 'file:'", len(name) + 1)
        try:
            return from_json(Path(rest).read_text())
        except OSError as exc:
            raise ParseError(f"cannot read {rest!r}: {exc.strerror}", len(name) + 1) from None
        except json.JSONDecodeError as exc:
            raise ParseError(f"bad JSON in {rest!r}: {exc.msg}", len(name) + 1) from None
    if name not in PRESETS:
        raise ParseError(f"unknown measure {name!r}; expected one of {PRESETS} or file:", 0)
    if sep and not rest:
        raise ParseError("missing parameters after ':'", len(name) + 1)
    extra = _parse_numbers(rest, len(name) + 1) if rest else []
    try:
        return preset(name, p, extra, level)
    except LiberationError as exc:
        raise ParseError(str(exc), len(name) + 1) from None


def parse_times(text: str) -> np.ndarray:
    """``t`` or ``start:step:stop`` (inclusive) or ``a,b,c``."""
    try:
        if ":" in text:
            start, step, stop = (float(v) for v in text.split(":"))
            if step <= 0 or stop < start:
                raise ValueError
            n = int(math.floor((stop - start) / step + 1e-9)) + 1
            return start + step * np.arange(n)
        return np.array([float(v) for v in text.split(",")])
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad time grid {text!r}") from None


def read_config(path) -> dict:
    """key=value lines; '#' starts a comment; keys may use - or _."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"{path}:{lineno}: expected key=value", 0)
        key, val = line.split("=", 1)
        out[key.strip().replace("-", "_")] = val.strip()
    return out


# ---------------------------------------------------------------------------
# output helpers


def fmt(x) -> str:
    return f"{float(x):.17g}"


def provenance(args) -> str:
    flags = " ".join(shlex.quote(a) for a in getattr(args, "argv", [])[1:])
    return f"liberation {__version__} command={args.command} flags: {flags}".rstrip()


def write_status(args, ok: bool, warnings: list, error: str | None = None):
    path = args.status or (str(args.out) + ".status.json" if args.out else None)
    if not path:
        return
    payload = {"ok": ok, "warnings": warnings}
    if error:
        payload["error"] = error
    Path(path).write_text(json.dumps(payload, indent=2))


def write_csv(path, header, rows, prov):
    with open(path, "w") as fh:
        fh.write(f"# {prov}\n")
        fh.write(",".join(header) + "\n")
        for r in rows:
            fh.write(",".join(v if isinstance(v, str) else fmt(v) for v in r) + "\n")


def write_json(path, payload, prov):
    Path(path).write_text(json.dumps({"provenance": prov, **payload}, indent=2,
                                     default=lambda o: float(o)))


def _params(args) -> TraceParams:
    return TraceParams(float(args.alpha), float(args.beta))


def _require_half(p: TraceParams, what: str):
    if not p.trace_half:
        raise _Invalid(f"{what} is only available for alpha = beta = 1/2")


class _Invalid(Exception):
    pass


# ---------------------------------------------------------------------------
# commands


def cmd_evolve(args, warnings):
    from .moments import evolve_many

    p = _params(args)
    mu = parse_measure_spec(args.init, p, "mu")
    g = moments(mu, args.order, p)
    times = args.t
    rows = []
    for t, mv in zip(times, evolve_many(g, times, p, args.tol)):
        rows.append([t, *mv.g])
    header = ["t"] + [f"g{n}" for n in range(1, args.order + 1)]
    write_csv(args.out, header, rows, provenance(args))


def cmd_density(args, warnings):
    from .subordination import SubordinationProblem, solve_many

    p = _params(args)
    _require_half(p, "density")
    nu0 = parse_measure_spec(args.init, p, "nu")
    x = chebyshev_nodes(args.nodes)
    rows = []
    ok_all = True
    for t in args.t:
        if t <= 0:
            raise _Invalid("density needs t > 0")
        prob = SubordinationProblem(nu0, float(t))
        f, H, conv, *_ = solve_many(prob, x + 0j, args.tol, raise_on_failure=False)
        rho = np.maximum(H.real, 0) / (np.pi * np.sqrt(x * (1 - x)))
        ok_all &= bool(conv.all())
        for xi, r, h, c in zip(x, rho, H, conv):
            row = [xi, r, h.real, h.imag, "1" if c else "0"]
            rows.append(([t] if len(args.t) > 1 else []) + row)
    header = (["t"] if len(args.t) > 1 else []) + ["x", "rho_t", "re_H", "im_H", "converged"]
    write_csv(args.out, header, rows, provenance(args))
    if not ok_all:
        raise NoConvergence("some boundary points did not converge (flagged in output)")


def cmd_jacobi(args, warnings):
    from .transform import jacobi_density, jacobi_edges, jacobi_limit

    mu = jacobi_limit(float(args.alpha), float(args.beta))
    rm, rp = jacobi_edges(float(args.alpha), float(args.beta))
    x = np.linspace(0, 1, args.nodes + 2)[1:-1]
    rho = jacobi_density(float(args.alpha), float(args.beta), x)
    write_csv(args.out, ["x", "rho"], zip(x, rho), provenance(args))
    side = {"atoms": [{"x": a.location, "m": a.mass} for a in mu.atoms],
            "r_minus": rm, "r_plus": rp}
    write_json(str(args.out) + ".atoms.json", side, provenance(args))


def cmd_entropy(args, warnings):
    from .entropy import FlowEntropy
    from .subordination import SubordinationProblem

    p = _params(args)
    _require_half(p, "entropy")
    nu0 = parse_measure_spec(args.init, p, "nu")
    flow = FlowEntropy(SubordinationProblem(nu0, 1.0), args.nodes, args.tol)
    prof = []
    for t in args.t:
        prof.append({"t": float(t), "phi": flow.phi(float(t)), "chi_proj": flow.chi(float(t))})
    if nu0.atoms and any(r["t"] == 0 for r in prof):
        warnings.append("nu_0 has atoms: chi_proj(0) is -inf")
    write_json(args.out, {"profile": prof}, provenance(args))


def cmd_unify(args, warnings):
    from .entropy import EntropyConfig, unification_report
    from .subordination import SubordinationProblem

    p = _params(args)
    _require_half(p, "unify")
    nu0 = parse_measure_spec(args.init, p, "nu")
    cfg = EntropyConfig(C_const=args.c_const, T_max=args.tmax, tail_model=args.tail,
                        t_min=args.tmin, nodes=args.nodes)
    rep = unification_report(SubordinationProblem(nu0, 1.0), cfg)
    warnings.extend(rep.pop("warnings"))
    write_json(args.out, rep, provenance(args))


def cmd_rmt(args, warnings):
    from .rmt import RngStream, histogram_measure, sample_angles, write_histogram

    p = _params(args)
    t = float(args.t[0])
    steps = args.steps if args.steps is not None else max(1, int(round(100 * t)))
    sample = sample_angles(args.d, p, t, steps, args.trials, args.coupling, RngStream(args.seed))
    _, counts, edges, atoms = histogram_measure(sample.eigenvalues, args.bins)
    write_histogram(args.out, counts, edges, atoms, provenance(args))


def cmd_crosscheck(args, warnings):
    from .moments import evolve_moments
    from .subordination import SubordinationProblem, solve_many
    from .transform import shifted_G_series, sqrt_z_zm1

    p = _params(args)
    _require_half(p, "crosscheck")
    nu0 = parse_measure_spec(args.init, p, "nu")
    t = float(args.t[0])
    if t <= 0:
        raise _Invalid("crosscheck needs t > 0")
    rng = np.random.default_rng(args.seed)
    z = (1.5 + 1.5 * rng.random(args.points)) * np.exp(1j * np.pi * (0.02 + 0.96 * rng.random(args.points)))
    _, H, *_ = solve_many(SubordinationProblem(nu0, t), z, args.tol)
    mv = evolve_moments(moments(nu0, args.order, p), t, p, 1e-12)
    ref = sqrt_z_zm1(z) * shifted_G_series(mv, p, z)
    diff = np.abs(H - ref)
    rows = [[zi.real, zi.imag, h.real, h.imag, r.real, r.imag, dd]
            for zi, h, r, dd in zip(z, H, ref, diff)]
    write_csv(args.out, ["re_z", "im_z", "re_H_sub", "im_H_sub", "re_H_series",
                         "im_H_series", "abs_diff"], rows, provenance(args))
    if diff.max() > args.check_tol:
        warnings.append(f"max |H_sub - H_series| = {diff.max():.3g} exceeds {args.check_tol:g}")


COMMANDS = {
    "evolve": cmd_evolve,
    "density": cmd_density,
    "jacobi": cmd_jacobi,
    "entropy": cmd_entropy,
    "unify": cmd_unify,
    "rmt": cmd_rmt,
    "crosscheck": cmd_crosscheck,
}


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="liberation", description=__doc__.splitlines()[0])
    top.add_argument("--version", action="version", version=f"liberation {__version__}")
    sub = top.add_subparsers(dest="command", required=True)

    def common(sp, init="bernoulli", t="1", out="out.csv"):
        sp.add_argument("--config", help="key=value file; explicit flags win")
        sp.add_argument("--alpha", type=float, default=0.5)
        sp.add_argument("--beta", type=float, default=0.5)
        sp.add_argument("--init", default=init, help="preset[:params] or file:path.json")
        sp.add_argument("--t", type=parse_times, default=t, help="t, a,b,c or start:step:stop")
        sp.add_argument("--tol", type=float, default=1e-12)
        sp.add_argument("--nodes", type=int, default=256)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out", default=out)
        sp.add_argument("--status", help="status JSON path (default: OUT.status.json)")

    sp = sub.add_parser("evolve", help="moment trajectories g_n(t)")
    common(sp, t="0:0.1:2")
    sp.add_argument("--order", type=int, default=64)
    sp.set_defaults(tol="1e-10")

    sp = sub.add_parser("density", help="boundary sweep of rho_t (trace 1/2)")
    common(sp, init="uniform")

    sp = sub.add_parser("jacobi", help="free Jacobi law (the t -> inf limit)")
    common(sp, out="jacobi.csv")

    sp = sub.add_parser("entropy", help="phi*(t) and chi_proj along the flow")
    common(sp, init="uniform", t="0,0.25,0.5,1,2", out="entropy.json")

    sp = sub.add_parser("unify", help="i* against the entropy difference")
    common(sp, init="uniform", out="report.json")
    sp.add_argument("--tmax", type=float, default=20.0)
    sp.add_argument("--tmin", type=float, default=0.0)
    sp.add_argument("--tail", choices=("exp_fit", "drop"), default="exp_fit")
    sp.add_argument("--c-const", dest="c_const", type=float, default=0.0)

    sp = sub.add_parser("rmt", help="Monte Carlo histogram of QP_tQ")
    common(sp, out="hist.csv")
    sp.add_argument("--d", type=int, default=256)
    sp.add_argument("--steps", type=int)
    sp.add_argument("--trials", type=int, default=20)
    sp.add_argument("--coupling", choices=("equal", "haar_free"), default="equal")
    sp.add_argument("--bins", type=int, default=200)

    sp = sub.add_parser("crosscheck", help="subordination vs moment series")
    common(sp, t="0.5", out="crosscheck.csv")
    sp.add_argument("--points", type=int, default=20)
    sp.add_argument("--order", type=int, default=64)
    sp.add_argument("--check-tol", dest="check_tol", type=float, default=1e-6)
    return top


def _validate(args):
    if not (0 < args.alpha <= 1 and 0 < args.beta <= 1):
        raise _Invalid("alpha and beta must lie in (0, 1]")
    if np.any(np.asarray(args.t) < 0):
        raise _Invalid("times must be nonnegative")
    if args.tol <= 0:
        raise _Invalid("tol must be positive")
    for key in ("order", "d", "trials", "bins", "points", "nodes"):
        if getattr(args, key, 1) is not None and getattr(args, key, 1) < 1:
            raise _Invalid(f"{key} must be >= 1")


def parse_args(argv):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        cfg = read_config(args.config)
        subparser = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest for a in subparser._actions}
        unknown = set(cfg) - known
        if unknown:
            raise _Invalid(f"unknown config keys: {sorted(unknown)}")
        subparser.set_defaults(**cfg)
        args = parser.parse_args(argv)
    args.argv = list(argv)
    return args


def run(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    warnings: list = []
    args = None
    try:
        args = parse_args(argv)
        _validate(args)
        COMMANDS[args.command](args, warnings)
    except SystemExit as exc:  # argparse errors and --help
        return EXIT_OK if exc.code in (0, None) else EXIT_INVALID
    except NoConvergence as exc:
        print(f"error: {exc}", file=sys.stderr)
        if args is not None:
            write_status(args, False, warnings, str(exc))
        return EXIT_NOCONV
    except (LiberationError, _Invalid, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        if args is not None:
            write_status(args, False, warnings, str(exc))
        return EXIT_INVALID
    write_status(args, True, warnings)
    for w in warnings:
        print(f"warning: {w}", file=sys.stderr)
    return EXIT_OK


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
