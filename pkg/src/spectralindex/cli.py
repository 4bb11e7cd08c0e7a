"""Command-line front end.

Every subcommand writes CSV (header row, 17 significant digits) to
``--output`` or to standard output.  Exit codes: 0 success, 1 failed checks,
2 invalid arguments, 3 quadrature non-convergence.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from . import checks, diffusion, feller, heat, transforms, yor
from ._io import text_output
from .transforms import ConvergenceError, TransformFamily

EXIT_OK, EXIT_CHECK_FAILED, EXIT_USAGE, EXIT_NO_CONVERGENCE = 0, 1, 2, 3


class UsageError(ValueError):
    """Invalid combination of command-line arguments."""


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise UsageError(f"{self.prog}: {message}")


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def _write_rows(target, header: Sequence[str], rows) -> None:
    with text_output(target) as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(header)
        for row in rows:
            wr.writerow([_fmt(v) for v in row])


def parse_grid(text: str) -> np.ndarray:
    """``"a,b,c"`` lists values; ``"lo:hi:n"`` is ``n`` equally spaced values."""
    text = text.strip()
    try:
        if ":" in text:
            parts = text.split(":")
            if len(parts) != 3:
                raise UsageError(f"range {text!r} must look like lo:hi:n")
            lo, hi, n = float(parts[0]), float(parts[1]), int(float(parts[2]))
            if n < 1:
                raise UsageError(f"range {text!r} needs n >= 1")
            return np.linspace(lo, hi, n)
        vals = np.array([float(p) for p in text.split(",") if p.strip()])
    except ValueError as exc:
        if isinstance(exc, UsageError):
            raise
        raise UsageError(f"cannot read numbers from {text!r}") from None
    if vals.size == 0:
        raise UsageError("empty list of values")
    return vals


@dataclass(frozen=True)
class RunConfig:
    """Validated arguments of one invocation."""

    command: str
    args: argparse.Namespace


def _family(args) -> TransformFamily:
    try:
        return transforms.family_from_name(args.family, alpha=args.alpha, mu=args.mu)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _in_domain(family: TransformFamily, values: np.ndarray, what: str) -> None:
    lo = family.domain[0]
    if np.any(values <= lo):
        raise UsageError(f"{what} must exceed {lo:g} for family {family.tag}")


def _add_family(p: argparse.ArgumentParser, choices=("kl", "iw", "mf"), default: Optional[str] = "kl") -> None:
    p.add_argument("--family", choices=choices, default=default, help="transform family")
    p.add_argument("--alpha", type=float, default=0.0, help="index Whittaker parameter (< 1/2)")
    p.add_argument("--mu", type=float, default=0.0, help="Mehler-Fock order in [0, 1)")


def _add_output(p: argparse.ArgumentParser) -> None:
    p.add_argument("--output", "-o", default=None, help="CSV destination (default: standard output)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="spectralindex", description="Index transforms, heat kernels, Yor integrals and checks.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("transform", help="forward or inverse index transform over a grid")
    _add_family(p)
    p.add_argument("--function", default=None, help="f(x) as an expression, e.g. 'x*exp(-x)'")
    p.add_argument("--input", default=None, help="two-column CSV (node, value) instead of --function")
    p.add_argument("--mode", choices=("forward", "inverse", "roundtrip", "parseval"), default="forward")
    p.add_argument("--taus", default="0.5:10:20", help="tau grid for forward mode")
    p.add_argument("--xs", default=None, help="points for inverse / roundtrip modes")
    _add_output(p)

    p = sub.add_parser("heatkernel", help="dump the heat kernel on a (t, x, y) grid")
    _add_family(p)
    p.add_argument("--t", default="0.5,1,2")
    p.add_argument("--x", default=None)
    p.add_argument("--y", default=None)
    p.add_argument("--measure", choices=("r", "lebesgue"), default="r")
    _add_output(p)

    p = sub.add_parser("yor", help="Yor integral surfaces")
    _add_family(p, choices=("theta", "kl", "iw", "mf"), default="theta")
    p.add_argument("--t", default="0.5,1,2")
    p.add_argument("--x", default=None)
    p.add_argument("--representation", choices=("spectral", "elementary"), default="spectral")
    p.add_argument("--both", action="store_true", help="emit both representations")
    _add_output(p)

    p = sub.add_parser("simulate", help="Monte Carlo runs against their spectral references")
    _add_family(p)
    p.add_argument("--experiment", choices=("feynman-kac", "bougerol", "conditional", "paths"),
                   default="feynman-kac")
    p.add_argument("--t", type=float, default=0.5)
    p.add_argument("--x0", type=float, default=None, help="starting point (x for bougerol/conditional)")
    p.add_argument("--y", type=float, default=1.0, help="end point of the conditional experiment")
    p.add_argument("--psi", default="exp(-x)", help="test function for feynman-kac")
    p.add_argument("--paths", type=float, default=100_000)
    p.add_argument("--steps", type=int, default=None)
    p.add_argument("--seed", type=int, default=diffusion.DEFAULT_SEED)
    p.add_argument("--max-paths", type=int, default=100, help="paths written by the paths experiment")
    _add_output(p)

    p = sub.add_parser("classify", help="Feller boundary classification")
    p.add_argument("--op", choices=("kl", "iw", "mf", "custom"), default="kl")
    p.add_argument("--alpha", type=float, default=0.0)
    p.add_argument("--mu", type=float, default=0.0)
    p.add_argument("--p", dest="p_expr", default=None, help="custom p(x)")
    p.add_argument("--q", dest="q_expr", default=None, help="custom q(x)")
    p.add_argument("--r", dest="r_expr", default=None, help="custom r(x)")
    p.add_argument("--a", default=None, help="left end of a custom interval")
    p.add_argument("--b", default=None, help="right end of a custom interval")
    p.add_argument("--anchor", type=float, default=None)
    p.add_argument("--endpoint", choices=("a", "b", "both"), default="both")
    p.add_argument("--threshold", type=float, default=1e8)
    _add_output(p)

    p = sub.add_parser("check", help="run a named verification suite")
    p.add_argument("suite", choices=tuple(checks.SUITES) + ("all",))
    p.add_argument("--family", choices=("kl", "iw", "mf"), default=None)
    p.add_argument("--paths", type=float, default=100_000)
    p.add_argument("--seed", type=int, default=diffusion.DEFAULT_SEED)
    _add_output(p)
    return parser


# ---------------------------------------------------------------------------
# subcommands


def _function_for(args, family: TransformFamily):
    if args.function and args.input:
        raise UsageError("give either --function or --input, not both")
    if args.input:
        return transforms.GridFunction.from_csv(args.input)
    text = args.function or ("exp(-x)" if family.tag == "mf" else "x*exp(-x)")
    try:
        return feller.parse_expression(text)
    except feller.ExpressionError as exc:
        raise UsageError(str(exc)) from None


def cmd_transform(args, out) -> int:
    fam = _family(args)
    f = _function_for(args, fam)
    if args.mode == "forward":
        taus = parse_grid(args.taus)
        if np.any(taus < 0):
            raise UsageError("tau values must be nonnegative")
        vals = [transforms.forward(fam, f, float(tau)) for tau in taus]
        _write_rows(out, ("tau", "value"), zip(taus, vals))
        return EXIT_OK
    spec = transforms.transform(fam, f)
    if args.mode == "parseval":
        lhs, rhs = transforms.parseval_gap(fam, f, spectrum=spec)
        _write_rows(out, ("lhs", "rhs", "gap"), [(lhs, rhs, abs(lhs - rhs))])
        return EXIT_OK
    xs = parse_grid(args.xs) if args.xs else checks.roundtrip_points(fam)
    _in_domain(fam, xs, "--xs")
    rec = np.atleast_1d(transforms.inverse(fam, spec, xs))
    if args.mode == "inverse":
        _write_rows(out, ("x", "value"), zip(xs, rec))
    else:
        ref = np.asarray(f(xs), dtype=float)
        _write_rows(out, ("x", "value", "reference", "abs_error"), zip(xs, rec, ref, np.abs(rec - ref)))
    return EXIT_OK


def _default_points(fam: TransformFamily) -> str:
    return "1.5,2,3" if fam.tag == "mf" else "0.5,1,2"


def cmd_heatkernel(args, out) -> int:
    fam = _family(args)
    ts = parse_grid(args.t)
    xs = parse_grid(args.x or _default_points(fam))
    ys = parse_grid(args.y or _default_points(fam))
    if np.any(ts <= 0):
        raise UsageError("--t values must be positive")
    _in_domain(fam, xs, "--x")
    _in_domain(fam, ys, "--y")
    heat.write_heat_csv(out, fam, ts, xs, ys, args.measure)
    return EXIT_OK


def cmd_yor(args, out) -> int:
    if args.family == "theta":
        target = yor.CLASSICAL_THETA
        xs = parse_grid(args.x or "0.5,1,2")
        if np.any(xs <= 0):
            raise UsageError("--x values must be positive")
    else:
        target = _family(args)
        xs = parse_grid(args.x or _default_points(target))
        _in_domain(target, xs, "--x")
    ts = parse_grid(args.t)
    if np.any(ts <= 0):
        raise UsageError("--t values must be positive")
    reps = ["spectral", "elementary"] if args.both else [args.representation]
    if "elementary" in reps and args.family == "iw":
        raise UsageError("no elementary representation exists for the index Whittaker family")
    yor.write_yor_csv(out, target, ts, xs, reps)
    return EXIT_OK


def cmd_simulate(args, out) -> int:
    n_paths = int(args.paths)
    if n_paths < 2 or n_paths != args.paths:
        raise UsageError("--paths must be an integer >= 2")
    if not args.t > 0:
        raise UsageError("--t must be positive")
    exp = args.experiment
    header = ("experiment", "family", "t", "x0", "y", "mc_mean", "std_error", "n_paths", "n_steps", "seed",
              "reference", "z_score")
    if exp in ("bougerol", "conditional"):
        x = 1.0 if args.x0 is None else args.x0
        if not x > 0 or not args.y > 0:
            raise UsageError("x0 and y must be positive")
        if exp == "bougerol":
            mc, ref, _ = diffusion.bougerol_check(args.t, x, n_paths, args.steps, args.seed)
            y = float("nan")
        else:
            mc, ref = diffusion.conditional_laplace_check(args.t, x, args.y, n_paths, args.seed, args.steps)
            y = args.y
        _write_rows(out, header, [(exp, "kl", args.t, x, y, mc.mean, mc.std_error, mc.n_paths, mc.n_steps,
                                   mc.seed, ref, mc.z_score(ref))])
        return EXIT_OK

    fam = _family(args)
    x0 = args.x0 if args.x0 is not None else (2.0 if fam.tag == "mf" else 1.0)
    _in_domain(fam, np.array([x0]), "--x0")
    if exp == "paths":
        n_steps = args.steps or max(1, int(round(diffusion.STEPS_PER_UNIT_TIME * args.t)))
        n_keep = min(n_paths, args.max_paths)
        if fam.tag == "mf":
            bundle = diffusion.simulate_legendre_paths(x0, args.t, n_steps, n_keep, args.seed)
        else:
            bundle = diffusion.simulate_gbm_paths(x0, args.t, n_steps, n_keep, args.seed)
        diffusion.write_paths_csv(out, bundle, args.max_paths)
        return EXIT_OK
    try:
        psi = feller.parse_expression(args.psi)
    except feller.ExpressionError as exc:
        raise UsageError(str(exc)) from None
    mc = diffusion.mc_feynman_kac(fam, psi, args.t, x0, n_paths, args.steps, args.seed)
    ref = diffusion.spectral_expectation(fam, psi, args.t, x0)
    _write_rows(out, header, [(exp, fam.tag, args.t, x0, float("nan"), mc.mean, mc.std_error, mc.n_paths,
                               mc.n_steps, mc.seed, ref, mc.z_score(ref))])
    return EXIT_OK


def _operator(args):
    if args.op == "custom":
        missing = [n for n in ("p_expr", "q_expr", "r_expr", "a", "b") if getattr(args, n) is None]
        if missing:
            names = ", ".join("--" + m.replace("_expr", "") for m in missing)
            raise UsageError(f"custom operators need {names}")
        try:
            return feller.operator_from_expressions(args.p_expr, args.q_expr, args.r_expr, args.a, args.b)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    if any(getattr(args, n) is not None for n in ("p_expr", "q_expr", "r_expr", "a", "b")):
        raise UsageError("--p/--q/--r/--a/--b are only valid with --op custom")
    name = {"kl": "kl", "iw": f"iw:{args.alpha!r}", "mf": f"mf:{args.mu!r}"}[args.op]
    try:
        return feller.builtin_operator(name)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _estimate_text(v) -> str:
    if v is None:
        return "undecided"
    if isinstance(v, feller.DivergedAbove):
        return "inf"
    return _fmt(float(v))


def cmd_classify(args, out_path) -> int:
    op = _operator(args)
    ends = ("a", "b") if args.endpoint == "both" else (args.endpoint,)
    settings = feller.ClassificationSettings(threshold=args.threshold)
    try:
        reports = [feller.classify(op, e, args.anchor, settings) for e in ends]
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    for rep in reports:
        print(rep.summary())
        print(f"  I = {rep.I_value if rep.I_value is not None else 'undecided'}")
        print(f"  J = {rep.J_value if rep.J_value is not None else 'undecided'}")
        print(f"  condition: {rep.condition or 'undetermined'}")
    if out_path is not None:
        rows = [(r.endpoint, feller._fmt_point(r.location), r.classification, _estimate_text(r.I_value),
                 _estimate_text(r.J_value), r.r_mass_finite, r.anchor, r.condition) for r in reports]
        _write_rows(out_path, ("endpoint", "location", "classification", "I", "J", "r_mass_finite", "anchor",
                               "condition"), rows)
    return EXIT_OK


def cmd_check(args, out_path) -> int:
    n_paths = int(args.paths)
    if n_paths < 2 or n_paths != args.paths:
        raise UsageError("--paths must be an integer >= 2")
    if args.family is not None and args.suite not in checks.FAMILY_AWARE + ("all",):
        raise UsageError(f"--family applies to the suites {', '.join(checks.FAMILY_AWARE)}")
    rows = checks.run_suite(args.suite, args.family, n_paths, args.seed)
    print(checks.format_table(rows))
    n_fail = sum(not r.passed for r in rows)
    print(f"{len(rows) - n_fail} passed, {n_fail} failed")
    if out_path is not None:
        with text_output(out_path) as fh:
            fh.write(checks.rows_to_csv(rows))
    return EXIT_OK if n_fail == 0 else EXIT_CHECK_FAILED


_COMMANDS: dict[str, Callable] = {
    "transform": cmd_transform,
    "heatkernel": cmd_heatkernel,
    "yor": cmd_yor,
    "simulate": cmd_simulate,
    "classify": cmd_classify,
    "check": cmd_check,
}


def parse_config(argv: Optional[Sequence[str]] = None) -> RunConfig:
    args = build_parser().parse_args(argv)
    return RunConfig(args.command, args)


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Execute one command line and return its exit code."""
    try:
        cfg = parse_config(argv)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    args = cfg.args
    try:
        if cfg.command in ("classify", "check"):
            return _COMMANDS[cfg.command](args, args.output)
        return _COMMANDS[cfg.command](args, args.output if args.output is not None else sys.stdout)
    except UsageError as exc:
        print(f"spectralindex {cfg.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConvergenceError as exc:
        print(f"spectralindex {cfg.command}: quadrature did not converge: {exc}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    except (ValueError, OSError) as exc:
        print(f"spectralindex {cfg.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
