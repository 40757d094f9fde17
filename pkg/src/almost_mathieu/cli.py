"""Command-line interface: ``amo <subcommand> [flags]``.

Every subcommand writes a table -- CSV with a header row (default) or a
JSON array of row objects (``--format json``) -- to stdout or ``--output``.
Floats are printed with ``%.12g`` and rows are emitted in a fixed order,
so identical flags give byte-identical output.

Exit codes: 0 success, 1 numerical failure or failing verification,
2 invalid flags.  Diagnostics go to stderr; set ``AMO_LOG`` to one of
error, warn, info, debug for more of them.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .core import RationalFrequency
from .funcalc import resolvent
from .measures import atomic_limit, convergence_experiment, gap_measure, integrate_monomial, normalized_moment
from .spectral import intersection_spectrum, spectrum_at_phase, spectrum_union
from .sympoly import evaluate_moment, symbolic_moment, symbolic_normalized_moment, symbolic_T
from .traces import moment_four_traces
from .verify import SUITES, reduced_fractions, run_suites

log = logging.getLogger("almost_mathieu")

LOG_LEVELS = {"error": logging.ERROR, "warn": logging.WARNING, "info": logging.INFO, "debug": logging.DEBUG}


class UsageError(Exception):
    """Invalid flag values detected after argparse (exit code 2)."""


# ---------------------------------------------------------------------------
# flag parsing helpers
# ---------------------------------------------------------------------------


def parse_frequency(text: str, allow_irrational: bool = False):
    """'p/q' -> RationalFrequency; a decimal -> float when ``allow_irrational``."""
    text = text.strip()
    if "/" in text:
        try:
            return RationalFrequency.parse(text)
        except (ValueError, ZeroDivisionError) as exc:
            raise UsageError(f"invalid frequency {text!r}: {exc}") from None
    try:
        x = float(text)
    except ValueError:
        raise UsageError(f"invalid frequency {text!r}") from None
    if not allow_irrational:
        raise UsageError(f"frequency {text!r} must be an exact fraction p/q for this command")
    return x


def parse_phase(text: str):
    text = text.strip()
    try:
        return Fraction(text) if "/" in text or text.lstrip("-").isdigit() else float(text)
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"invalid phase {text!r}") from None


def parse_floats(text: str, name: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"invalid {name} list {text!r}") from None


def _require(cond: bool, msg: str):
    if not cond:
        raise UsageError(msg)


def _nonneg_lams(values: list[float]) -> list[float]:
    _require(bool(values), "at least one --lambda value is required")
    _require(all(v >= 0 for v in values), "--lambda values must be nonnegative")
    return values


# ---------------------------------------------------------------------------
# emission
# ---------------------------------------------------------------------------


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        x = float(v)
        if x == 0:
            x = 0.0
        return "%.12g" % x
    if isinstance(v, (Fraction, RationalFrequency)):
        f = v.fraction if isinstance(v, RationalFrequency) else v
        return f"{f.numerator}/{f.denominator}"
    return "" if v is None else str(v)


def _json_cell(v):
    c = _cell(v)
    if isinstance(v, (float, np.floating)) and not isinstance(v, bool):
        x = float(c)
        return x if np.isfinite(x) else c
    return c


def emit(rows: Sequence[dict], columns: Sequence[str], fmt: str, out) -> None:
    if fmt == "json":
        data = [{c: _json_cell(r.get(c)) for c in columns} for r in rows]
        out.write(json.dumps(data, indent=2) + "\n")
        return
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_cell(r.get(c)) for c in columns])
    out.write(buf.getvalue())


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_spectrum(args) -> tuple[list[dict], list[str]]:
    a = parse_frequency(args.alpha)
    lams = _nonneg_lams(parse_floats(args.lam, "lambda"))
    rows = []
    for lam in lams:
        if args.which == "minus":
            bl = intersection_spectrum(a, lam)
            items = sorted(
                ((float(b.lo), float(b.hi), b.j, b.lo_source, b.hi_source) for b in bl.bands),
                key=lambda t: (t[0], t[1]),
            )
            for lo, hi, j, ls, hs in items:
                rows.append({"alpha": a, "lambda": lam, "which": "minus", "band": j, "a": lo, "b": hi,
                             "a_source": ls, "b_source": hs})
        else:
            if args.which == "plus":
                u = spectrum_union(a, lam)
            else:
                _require(args.theta is not None, "--which theta needs --theta")
                u = spectrum_at_phase(a, lam, parse_phase(args.theta))
            for i, (lo, hi) in enumerate(u, start=1):
                rows.append({"alpha": a, "lambda": lam, "which": args.which, "band": i, "a": lo, "b": hi,
                             "a_source": "", "b_source": ""})
    return rows, ["alpha", "lambda", "which", "band", "a", "b", "a_source", "b_source"]


def _butterfly_task(task):
    p, q, lam, which = task
    a = Fraction(p, q)
    if which == "minus":
        ivs = sorted((float(b.lo), float(b.hi)) for b in intersection_spectrum(a, lam).bands)
    else:
        ivs = list(spectrum_union(a, lam))
    total = float(sum(hi - lo for lo, hi in ivs))
    return [{"p": p, "q": q, "lambda": lam, "band": i, "a": lo, "b": hi, "total": total}
            for i, (lo, hi) in enumerate(ivs, start=1)]


def cmd_butterfly(args) -> tuple[list[dict], list[str]]:
    _require(args.qmax >= 1, "--qmax must be >= 1")
    lams = _nonneg_lams(parse_floats(args.lam, "lambda"))
    tasks = [(f.numerator, f.denominator, lam, args.which) for lam in lams for f in reduced_fractions(args.qmax)]
    jobs = args.jobs or os.cpu_count() or 1
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            parts = list(ex.map(_butterfly_task, tasks, chunksize=4))
    else:
        parts = [_butterfly_task(t) for t in tasks]
    rows = [r for part in parts for r in part]
    rows.sort(key=lambda r: (r["lambda"], r["q"], r["p"], r["band"]))
    return rows, ["p", "q", "lambda", "band", "a", "b", "total"]


def cmd_verify(args) -> tuple[list[dict], list[str]]:
    names = args.suite or list(SUITES)
    for n in names:
        _require(n in SUITES, f"unknown suite {n!r}; choose from {', '.join(SUITES)}")
    checks = run_suites(names, seed=args.seed)
    args._failed = [c for c in checks if not c.passed]
    return [c.as_row() for c in checks], ["suite", "check", "status", "detail"]


def cmd_moment(args) -> tuple[list[dict], list[str]]:
    a = parse_frequency(args.alpha, allow_irrational=True)
    lams = _nonneg_lams(parse_floats(args.lam, "lambda"))
    _require(args.kmax >= 0, "--kmax must be >= 0")
    rational = isinstance(a, RationalFrequency)
    methods = ["oracle", "traces", "poly"] if rational else ["traces", "poly"]
    if args.method != "all":
        _require(args.method in methods, f"method {args.method!r} needs a rational frequency")
        methods = [args.method]
    if args.normalized:
        methods = ["normalized"]
    rows = []
    for lam in lams:
        for k in range(args.kmax + 1):
            for m in methods:
                if m == "oracle":
                    v = integrate_monomial(a, lam, 2 * k)
                elif m == "traces":
                    v = moment_four_traces(a, lam, k)
                elif m == "poly":
                    v = evaluate_moment(k, a, lam)
                else:
                    _require(lam > 0, "normalized moments need lambda > 0")
                    v = normalized_moment(a, lam, k)
                rows.append({"alpha": a if rational else float(a), "lambda": lam, "k": k, "moment": f"c_{2 * k}",
                             "method": m, "value": float(v)})
    return rows, ["alpha", "lambda", "k", "moment", "method", "value"]


def cmd_poly(args) -> tuple[list[dict], list[str]]:
    _require(0 <= args.k <= 8, "--k must be in 0..8")
    P = {"P": symbolic_moment, "T": symbolic_T, "normalized": symbolic_normalized_moment}[args.kind](args.k)
    rows = [
        {"kind": args.kind, "k": args.k, "lam_power": j, "t_power": r, "coefficient": v}
        for (j, r), v in sorted(P.coefficients.items())
    ]
    return rows, ["kind", "k", "lam_power", "t_power", "coefficient"]


def cmd_green(args) -> tuple[list[dict], list[str]]:
    a = parse_frequency(args.alpha, allow_irrational=True)
    try:
        z = complex(args.z.replace(" ", ""))
    except ValueError:
        raise UsageError(f"invalid complex energy {args.z!r}") from None
    _require(args.W is None or args.W >= 4, "--W must be >= 4")
    r = resolvent(a, args.lam, parse_phase(args.theta), z, W=args.W)
    rows = []
    for j, g in zip(r.sites, r.matrix[:, 0]):
        if abs(j) > args.radius:
            continue
        rows.append({"j": int(j), "re": g.real, "im": g.imag, "abs": abs(g), "c1": r.c1, "C1": r.C1, "W": r.W})
    return rows, ["j", "re", "im", "abs", "c1", "C1", "W"]


def cmd_atoms(args) -> tuple[list[dict], list[str]]:
    a = parse_frequency(args.alpha)
    m = atomic_limit(a)
    rows = [{"alpha": a, "atom": i + 1, "energy": float(e), "weight": float(w),
             "inverse_derivative_sum": m.inverse_derivative_sum}
            for i, (e, w) in enumerate(zip(m.energies, m.weights))]
    return rows, ["alpha", "atom", "energy", "weight", "inverse_derivative_sum"]


def cmd_converge(args) -> tuple[list[dict], list[str]]:
    _require(args.lam != 1, "--lambda must differ from 1")
    _require(args.kmax >= 0 and args.nmax >= 2, "need --kmax >= 0 and --nmax >= 2")
    if args.sequence == "reciprocal":
        target = 0
    else:
        _require(args.target is not None, "--sequence convergents needs --target")
        target = parse_frequency(args.target, allow_irrational=True)
        target = target.fraction if isinstance(target, RationalFrequency) else target
    rows = convergence_experiment(target, args.sequence, args.lam, args.kmax, args.nmax)
    return rows, ["n", "alpha", "target", "lambda", "k", "value", "limit", "diff", "method"]


def cmd_gap(args) -> tuple[list[dict], list[str]]:
    a = parse_frequency(args.alpha)
    _require(args.hi >= args.lo, "--hi must be >= --lo")
    v = gap_measure(a, args.lam, args.lo, args.hi)
    return [{"alpha": a, "lambda": args.lam, "lo": args.lo, "hi": args.hi, "measure": v}], [
        "alpha", "lambda", "lo", "hi", "measure"]


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="amo", description="Almost Mathieu operator spectra, measures and moments.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("csv", "json"), default="csv", help="output format (default csv)")
    common.add_argument("--output", "-o", help="write to this file instead of stdout")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("spectrum", parents=[common], help="bands of Sigma^-, Sigma^+ or Sigma_theta",
                       description="Columns: alpha, lambda, which, band, a, b, a_source, b_source "
                                   "(sources name the periodic/antiperiodic endpoint for --which minus).")
    s.add_argument("--alpha", required=True, help="frequency p/q")
    s.add_argument("--lambda", dest="lam", required=True, help="coupling (comma-separated list allowed)")
    s.add_argument("--theta", help="phase for --which theta (fraction or decimal)")
    s.add_argument("--which", choices=("minus", "plus", "theta"), default="minus")
    s.set_defaults(func=cmd_spectrum)

    s = sub.add_parser("butterfly", parents=[common], help="bands for all p/q with q <= qmax",
                       description="Columns: p, q, lambda, band, a, b, total (measure of the set for that p/q).")
    s.add_argument("--qmax", type=int, required=True)
    s.add_argument("--lambda", dest="lam", required=True, help="coupling (comma-separated list allowed)")
    s.add_argument("--which", choices=("minus", "plus"), default="minus")
    s.add_argument("--jobs", type=int, default=None, help="worker processes (default: all cores)")
    s.set_defaults(func=cmd_butterfly)

    s = sub.add_parser("verify", parents=[common], help="run invariant suites",
                       description="Columns: suite, check, status, detail.  Exit 1 if any check fails.")
    s.add_argument("--suite", action="append", help=f"suite name, repeatable ({', '.join(SUITES)})")
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("moment", parents=[common], help="even moments c_2k by several routes",
                       description="Columns: alpha, lambda, k, moment, method, value.  Decimal frequencies "
                                   "use the trace and polynomial routes only.")
    s.add_argument("--alpha", required=True, help="frequency p/q or decimal")
    s.add_argument("--lambda", dest="lam", required=True, help="coupling (comma-separated list allowed)")
    s.add_argument("--kmax", type=int, default=3)
    s.add_argument("--method", choices=("all", "oracle", "traces", "poly"), default="all")
    s.add_argument("--normalized", action="store_true", help="moments of mu^- / |4 - 4 lambda|")
    s.set_defaults(func=cmd_moment)

    s = sub.add_parser("poly", parents=[common], help="exact moment polynomial coefficients",
                       description="Columns: kind, k, lam_power, t_power, coefficient (exact p/q), t = cos 2 pi alpha.")
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--kind", choices=("P", "T", "normalized"), default="P")
    s.set_defaults(func=cmd_poly)

    s = sub.add_parser("green", parents=[common], help="resolvent column G_{j,0}(z) and decay fit",
                       description="Columns: j, re, im, abs, c1, C1, W.")
    s.add_argument("--alpha", required=True, help="frequency p/q or decimal")
    s.add_argument("--lambda", dest="lam", type=float, required=True)
    s.add_argument("--theta", default="0")
    s.add_argument("--z", required=True, help="complex energy, e.g. 0.5+0.1j")
    s.add_argument("--W", type=int, default=None, help="window radius (default: automatic)")
    s.add_argument("--radius", type=int, default=20, help="emit |j| <= radius")
    s.set_defaults(func=cmd_green)

    s = sub.add_parser("atoms", parents=[common], help="atoms of the normalized measure at lambda = 1",
                       description="Columns: alpha, atom, energy, weight, inverse_derivative_sum.")
    s.add_argument("--alpha", required=True, help="frequency p/q")
    s.set_defaults(func=cmd_atoms)

    s = sub.add_parser("converge", parents=[common], help="moments along a frequency sequence",
                       description="Columns: n, alpha, target, lambda, k, value, limit, diff, method.")
    s.add_argument("--sequence", choices=("reciprocal", "convergents"), default="reciprocal")
    s.add_argument("--target", help="limit frequency for --sequence convergents")
    s.add_argument("--lambda", dest="lam", type=float, required=True)
    s.add_argument("--kmax", type=int, default=3)
    s.add_argument("--nmax", type=int, default=64)
    s.set_defaults(func=cmd_converge)

    s = sub.add_parser("gap", parents=[common], help="measure of Sigma^- between two gap energies",
                       description="Columns: alpha, lambda, lo, hi, measure.")
    s.add_argument("--alpha", required=True, help="frequency p/q")
    s.add_argument("--lambda", dest="lam", type=float, required=True)
    s.add_argument("--lo", type=float, required=True)
    s.add_argument("--hi", type=float, required=True)
    s.set_defaults(func=cmd_gap)
    return p


def _configure_logging():
    level = LOG_LEVELS.get(os.environ.get("AMO_LOG", "warn").lower(), logging.WARNING)
    logging.basicConfig(stream=sys.stderr, level=level, format="%(levelname)s %(name)s: %(message)s")


def main(argv: Iterable[str] | None = None) -> int:
    _configure_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(None if argv is None else list(argv))
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        rows, columns = args.func(args)
    except UsageError as exc:
        print(f"amo {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
        print(f"amo {args.command}: numerical failure: {exc}", file=sys.stderr)
        return 1
    if args.command == "verify" and args.format == "csv" and not args.output:
        _print_table(rows)
    elif args.output:
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            emit(rows, columns, args.format, fh)
    else:
        emit(rows, columns, args.format, sys.stdout)
    failed = getattr(args, "_failed", [])
    if failed:
        print(f"amo verify: first failing invariant: {failed[0].suite}/{failed[0].name}: {failed[0].detail}",
              file=sys.stderr)
        return 1
    return 0


def _print_table(rows: list[dict]) -> None:
    """Human-readable pass/fail table for ``verify``."""
    w1 = max(len(r["suite"]) for r in rows)
    w2 = max(len(r["check"]) for r in rows)
    for r in rows:
        sys.stdout.write(f"{r['status']:<4}  {r['suite']:<{w1}}  {r['check']:<{w2}}  {r['detail']}\n")
    n_fail = sum(r["status"] != "pass" for r in rows)
    sys.stdout.write(f"{len(rows) - n_fail} passed, {n_fail} failed\n")


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
