"""Command-line front end.

Subcommands: residues, solve, periodic, compat, phase, measure, decay.
Human-readable tables go to stdout; ``--json`` switches to a versioned JSON
document.  Output is deterministic for a given configuration, every p-adic
quantity is printed with its exact norm as a "p^e" string, and no value is
ever rendered as a decimal approximation.

Exit codes: 0 success, 2 invalid configuration or precondition failure,
3 internal consistency failure.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
import traceback
from fractions import Fraction

from . import analysis, model, phase, solver
from .padic import (
    DomainError,
    PadicError,
    PadicNumber,
    PrecisionLossError,
    PrimeContext,
    from_rational,
    norm_str,
    to_json_dict,
)
from .tree import EnumerationBudgetError, TreeIndex

SCHEMA = "padic-ivm/1"

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_INCONSISTENT = 3

_POWER_RE = re.compile(r"^(\d+)\^(-?\d+)\*(-?\d+)$")
_RATIONAL_RE = re.compile(r"^(-?\d+)(?:/(-?\d+))?$")


class ConfigError(Exception):
    """Invalid run configuration; all problems reported in one message."""


def parse_padic_literal(text: str, ctx: PrimeContext) -> PadicNumber:
    """Parse "m/n" rationals or "p^e*u" power literals."""
    text = text.strip()
    m = _POWER_RE.match(text)
    if m:
        p, e, u = int(m.group(1)), int(m.group(2)), int(m.group(3))
        if p != ctx.p:
            raise ConfigError(f"literal {text!r} uses prime {p}, run uses {ctx.p}")
        if u == 0:
            return ctx.zero()
        if e >= 0:
            return from_rational(u * p ** e, 1, ctx)
        return from_rational(u, p ** (-e), ctx)
    m = _RATIONAL_RE.match(text)
    if m:
        num = int(m.group(1))
        den = int(m.group(2)) if m.group(2) else 1
        if den == 0:
            raise ConfigError(f"literal {text!r} has a zero denominator")
        return from_rational(num, den, ctx)
    raise ConfigError(f"cannot parse {text!r}: expected m/n or p^e*u")


def _build_context(args) -> PrimeContext:
    problems = []
    if args.precision < 4:
        problems.append(f"--precision must be >= 4, got {args.precision}")
    try:
        ctx = PrimeContext(args.p, max(args.precision, 4))
    except ValueError as exc:
        problems.append(str(exc))
        ctx = None
    if problems:
        raise ConfigError("; ".join(problems))
    return ctx


def _build_couplings(args, ctx: PrimeContext) -> model.CouplingParams:
    problems = []
    J = J1 = None
    try:
        J = parse_padic_literal(args.J, ctx)
    except ConfigError as exc:
        problems.append(f"--J: {exc}")
    try:
        J1 = parse_padic_literal(args.J1, ctx)
    except ConfigError as exc:
        problems.append(f"--J1: {exc}")
    if not problems:
        try:
            return model.CouplingParams.create(ctx, args.k, J, J1)
        except (ValueError, TypeError) as exc:
            problems.append(str(exc))
    raise ConfigError("; ".join(problems))


def _config_echo(args, extra: dict | None = None) -> dict:
    echo = {"command": args.command, "p": args.p, "precision": args.precision}
    for key in ("k", "J", "J1", "depth", "budget", "branch"):
        if hasattr(args, key) and getattr(args, key) is not None:
            echo[key] = getattr(args, key)
    if extra:
        echo.update(extra)
    return echo


def _emit(args, document: dict, human_lines: list[str]) -> None:
    if args.json:
        print(json.dumps({"schema": SCHEMA, **document}, sort_keys=True))
    else:
        for line in human_lines:
            print(line)


def _frac_str(f: Fraction, p: int) -> str:
    if f == 0:
        return "0"
    num, den, e = f.numerator, f.denominator, 0
    while den % p == 0:
        den //= p
        e -= 1
    while num % p == 0:
        num //= p
        e += 1
    return f"{p}^{e}"


# -- subcommands -----------------------------------------------------------


def cmd_residues(args) -> int:
    if args.p < 3:
        raise ConfigError(f"{args.p} is not an odd prime")
    try:
        count = analysis.kth_residue_count(args.k, args.p)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    residues = analysis.minus_one_residues(args.k, args.p)
    import math

    d = math.gcd(args.k, args.p - 1)
    ratio = (args.p - 1) // d
    qp = analysis.minus_one_kth_root_exists_Qp(args.k, args.p)
    doc = {
        "config": _config_echo(args),
        "count": count,
        "residues": residues,
        "gcd_k_p_minus_1": d,
        "ratio": ratio,
        "ratio_even": ratio % 2 == 0,
        "exists_in_Qp": qp,
    }
    lines = [
        f"solutions of x^{args.k} = -1 over F_{args.p}",
        f"  gcd(k, p-1) = {d}, (p-1)/gcd = {ratio} ({'even' if ratio % 2 == 0 else 'odd'})",
        f"  count = {count}",
        f"  residues = {residues}",
        f"  k-th root of -1 exists in Q_p: {qp}",
    ]
    _emit(args, doc, lines)
    return EXIT_OK


def cmd_solve(args) -> int:
    ctx = _build_context(args)
    cp = _build_couplings(args, ctx)
    certs = solver.solve_translation_invariant(cp)
    doc = {
        "config": _config_echo(args),
        "certificates": [c.to_json_dict() for c in certs],
    }
    lines = [f"translation-invariant solutions at p={ctx.p}, k={cp.k}, N={ctx.precision}"]
    for c in certs:
        lines.append(
            f"  branch={c.branch:8s} seed={c.seed_residue} "
            f"residual={_frac_str(c.residual_norm, ctx.p)} "
            f"u=({c.value.u1}; {c.value.u2}; {c.value.u3})"
        )
    _emit(args, doc, lines)
    return EXIT_OK


def cmd_periodic(args) -> int:
    ctx = _build_context(args)
    cp = _build_couplings(args, ctx)
    result = solver.solve_two_periodic(cp)
    doc = {
        "config": _config_echo(args),
        "certificates": [c.to_json_dict() for c in result.certificates],
        "reason": result.reason,
        "discriminant": to_json_dict(result.discriminant),
        "discriminant_mod_p": result.discriminant.unit % ctx.p
        if not result.discriminant.is_zero
        else 0,
    }
    lines = [f"2-periodic solutions at p={ctx.p}, k={cp.k}, N={ctx.precision}"]
    if result.reason:
        lines.append(f"  none: {result.reason} (p = {ctx.p} = 3 mod 4)")
    for c in result.certificates:
        lines.append(
            f"  seed={c.seed_residue} residual(f(f(u))-u)={_frac_str(c.residual_norm, ctx.p)} "
            f"u={c.value.u1}"
        )
    _emit(args, doc, lines)
    return EXIT_OK


def _pick_branch(cp, branch: str):
    certs = solver.solve_translation_invariant(cp)
    if branch == "Ep":
        return certs[0]
    m = re.match(r"^minus:(\d+)$", branch)
    if m:
        minus = [c for c in certs if c.branch == "MinusEp"]
        i = int(m.group(1))
        if i >= len(minus):
            raise ConfigError(f"branch minus:{i} out of range ({len(minus)} available)")
        return minus[i]
    m = re.match(r"^periodic:(\d+)$", branch)
    if m:
        res = solver.solve_two_periodic(cp)
        i = int(m.group(1))
        if i >= len(res.certificates):
            raise ConfigError(f"branch periodic:{i} out of range")
        return res.certificates[i]
    raise ConfigError(f"unknown branch {branch!r}: use Ep, minus:I, or periodic:I")


def cmd_compat(args) -> int:
    ctx = _build_context(args)
    cp = _build_couplings(args, ctx)
    if args.depth < 2:
        raise ConfigError("--depth must be >= 2 for the compatibility check")
    cert = _pick_branch(cp, args.branch)
    t = TreeIndex.build(cp.k, args.depth, spin_budget=args.budget)
    report = model.compatibility_check(cert.value, t, cp, spin_budget=args.budget)
    doc = {
        "config": _config_echo(args),
        "branch": cert.branch,
        "seed_residue": cert.seed_residue,
        "report": json.loads(report.to_json()),
    }
    lines = [
        f"compatibility oracle at p={ctx.p}, k={cp.k}, n={args.depth}, "
        f"branch={cert.branch} (seed {cert.seed_residue})",
        f"  max residual norm = {_frac_str(report.max_residual_norm, ctx.p)}",
        f"  threshold         = {_frac_str(report.threshold, ctx.p)}",
        f"  passed            = {report.passed}",
    ]
    _emit(args, doc, lines)
    return EXIT_OK


def cmd_phase(args) -> int:
    ctx = _build_context(args)
    cp = _build_couplings(args, ctx)
    report = phase.detect_phase_transition(cp)
    depth = args.depth if args.depth else 6
    exponents = {}
    for cert, cls in report.entries:
        key = f"{cert.branch}:{cert.seed_residue}"
        exponents[key] = [cls.Z_norm_exponent(n) for n in range(1, depth + 1)]
    doc = {
        "config": _config_echo(args),
        "report": report.to_json_dict(),
        "Z_valuations_by_depth": exponents,
    }
    lines = [f"phase analysis at p={ctx.p}, k={cp.k}, N={ctx.precision}"]
    lines.append(f"  verdict: {report.verdict}")
    for cert, cls in report.entries:
        vals = exponents[f"{cert.branch}:{cert.seed_residue}"]
        lines.append(
            f"  branch={cert.branch:8s} seed={cert.seed_residue} "
            f"class={cls.branch:14s} val(Z_n) for n=1..{depth}: {vals}"
        )
    for key, val in report.criterion_trace.items():
        lines.append(f"  trace {key} = {val}")
    _emit(args, doc, lines)
    return EXIT_OK


def cmd_measure(args) -> int:
    ctx = _build_context(args)
    cp = _build_couplings(args, ctx)
    cert = _pick_branch(cp, args.branch)
    t = TreeIndex.build(cp.k, args.depth, spin_budget=args.budget)
    table = model.measure_table_from_u(
        cert.value, t, cp, materialize=True, spin_budget=args.budget
    )
    doc = {
        "config": _config_echo(args),
        "branch": cert.branch,
        "table": json.loads(table.to_json()),
    }
    if args.json:
        _emit(args, doc, [])
    else:
        print(table.to_json())
    return EXIT_OK


def cmd_decay(args) -> int:
    ctx = _build_context(args)
    cp = _build_couplings(args, ctx)
    problems = []
    comps = []
    for name in ("u1", "u2", "u3"):
        try:
            comps.append(parse_padic_literal(getattr(args, name), ctx))
        except ConfigError as exc:
            problems.append(str(exc))
    if problems:
        raise ConfigError("; ".join(problems))
    triple = model.UTriple(*comps)
    report = phase.strong_decay_check(triple, args.depth, cp)
    doc = {"config": _config_echo(args), "report": report.to_json_dict()}
    lines = [
        f"norm decay for |u1|_p = {ctx.p}^{-report.u1_valuation} "
        f"(level gap {report.level_gap}) up to n = {args.depth}"
    ]
    for r in report.rows:
        lines.append(
            f"  n={r.n:2d} |W_n|={r.boundary_size:6d} |V_n|={r.volume_size:7d} "
            f"|mu| = {ctx.p}^{-r.mu_valuation}  bound {ctx.p}^{-r.bound_valuation}  "
            f"holds={r.bound_holds}"
        )
    _emit(args, doc, lines)
    return EXIT_OK


# -- plumbing ---------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="padic-ivm",
        description="Exact p-adic Gibbs-measure computations on Cayley trees",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp, couplings=True, depth=None):
        sp.add_argument("--p", type=int, required=True, help="odd prime")
        sp.add_argument("--precision", type=int, default=8, help="working digits N (>= 4)")
        sp.add_argument("--json", action="store_true", help="emit JSON instead of a table")
        if couplings:
            sp.add_argument("--k", type=int, default=2, help="tree order (>= 2)")
            sp.add_argument("--J", required=True, help="nearest-neighbor coupling, m/n or p^e*u")
            sp.add_argument("--J1", required=True, help="prolonged-pair coupling, m/n or p^e*u")
        if depth is not None:
            sp.add_argument("--depth", type=int, default=depth, help="tree depth n")
            sp.add_argument(
                "--budget", type=int, default=model.DEFAULT_SPIN_BUDGET,
                help="max spins for exhaustive enumeration",
            )

    sp = sub.add_parser("residues", help="count solutions of x^k = -1 over F_p")
    sp.add_argument("--p", type=int, required=True)
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--precision", type=int, default=8)
    sp.add_argument("--json", action="store_true")
    sp.set_defaults(func=cmd_residues)

    sp = sub.add_parser("solve", help="translation-invariant fixed-point census")
    common(sp)
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("periodic", help="2-periodic solutions (k = 2)")
    common(sp)
    sp.set_defaults(func=cmd_periodic)

    sp = sub.add_parser("compat", help="brute-force compatibility oracle")
    common(sp, depth=2)
    sp.add_argument("--branch", default="Ep", help="Ep, minus:I, or periodic:I")
    sp.set_defaults(func=cmd_compat)

    sp = sub.add_parser("phase", help="phase-transition verdict")
    common(sp)
    sp.add_argument("--depth", type=int, default=6, help="depths for the val(Z_n) table")
    sp.set_defaults(func=cmd_phase)

    sp = sub.add_parser("measure", help="dump a finite-volume measure table as JSON")
    common(sp, depth=2)
    sp.add_argument("--branch", default="Ep", help="Ep, minus:I, or periodic:I")
    sp.set_defaults(func=cmd_measure)

    sp = sub.add_parser("decay", help="norm-decay bookkeeping for a supplied field")
    common(sp, depth=None)
    sp.add_argument("--depth", type=int, default=6, help="largest depth n")
    sp.add_argument("--u1", required=True, help="u1 literal with |u1|_p > 1")
    sp.add_argument("--u2", required=True, help="u2 literal with |u2|_p = 1")
    sp.add_argument("--u3", required=True, help="u3 literal with |u3|_p = 1")
    sp.set_defaults(func=cmd_decay)

    return parser


def _module_label(exc: BaseException) -> str:
    tb = exc.__traceback__
    label = "padic_ivm"
    while tb is not None:
        name = tb.tb_frame.f_globals.get("__name__", "")
        if name.startswith("padic_ivm."):
            label = name.split(".", 1)[1]
        tb = tb.tb_next
    return label


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error [config]: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (solver.InternalConsistencyError, solver.CensusAnomalyError) as exc:
        print(f"error [{_module_label(exc)}]: internal consistency: {exc}", file=sys.stderr)
        return EXIT_INCONSISTENT
    except (
        DomainError,
        PrecisionLossError,
        EnumerationBudgetError,
        solver.UnsupportedParameterRegimeError,
        model.ModelError,
        PadicError,
        ValueError,
        ZeroDivisionError,
    ) as exc:
        print(f"error [{_module_label(exc)}]: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
