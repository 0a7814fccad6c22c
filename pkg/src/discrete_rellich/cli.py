"""Command-line front end.

Every command prints a report (JSON by default, CSV of the result rows with
``--format csv``) and exits with 0 when all checks pass, 1 on a usage error
and 2 when a check fails.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import combinatorics, factorization, optimality, spectral, weights
from ._validation import PRECISIONS

SCHEMA_VERSION = "discrete-rellich-report/1"
PRECISION_ENV = "DISCRETE_RELLICH_PRECISION"

EXIT_OK, EXIT_USAGE, EXIT_CHECK = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@dataclass
class RunReport:
    command: str
    parameters: dict
    results: list = field(default_factory=list)
    checks: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    seed: int = 0
    precision: str = "f64"
    wall_time_ms: int = 0

    def check(self, name: str, passed: bool, detail: str = "") -> None:
        self.checks.append({"name": name, "passed": bool(passed), "detail": detail})

    @property
    def passed(self) -> bool:
        return all(c["passed"] for c in self.checks)

    def as_dict(self) -> dict:
        return {
            "schema": SCHEMA_VERSION,
            "command": self.command,
            "parameters": self.parameters,
            "results": self.results,
            "checks": self.checks,
            "summary": self.summary,
            "seed": self.seed,
            "precision": self.precision,
            "wall_time_ms": self.wall_time_ms,
        }


def _plain(value):
    """Convert report values to JSON-ready types; non-finite floats become strings."""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else repr(value)
    return value


def to_json(report: RunReport) -> str:
    return json.dumps(_plain(report.as_dict()), sort_keys=True, indent=2) + "\n"


def canonical_json(report_text: str) -> str:
    """Report text with ``wall_time_ms`` removed, for determinism comparisons."""
    data = json.loads(report_text)
    data.pop("wall_time_ms", None)
    return json.dumps(data, sort_keys=True, indent=2) + "\n"


def to_csv(report: RunReport) -> str:
    rows = _plain(report.results)
    buf = io.StringIO()
    if not rows:
        return ""
    columns = list(rows[0])
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format(v, ".17g") if isinstance(v, float) else v for v in (row.get(c) for c in columns)])
    return buf.getvalue()


def _int_list(text: str) -> list[int]:
    try:
        values = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def _default_precision(fallback: str) -> str:
    env = os.environ.get(PRECISION_ENV)
    if env is None:
        return fallback
    if env not in PRECISIONS:
        raise UsageError(f"{PRECISION_ENV} must be one of {PRECISIONS}, got {env!r}")
    return env


# ---------------------------------------------------------------------------
# commands


def cmd_weights(args) -> RunReport:
    k, lo, hi = args.order, args.from_, args.to
    if k < 1 or lo < k or hi < lo or args.series_terms < 0:
        raise UsageError(f"need 1 <= k <= from <= to, got k={k}, from={lo}, to={hi}")
    precision = args.precision or _default_precision("ext")
    report = RunReport("weights", {"order": k, "from": lo, "to": hi, "series_terms": args.series_terms}, precision=precision)
    n = np.arange(lo, hi + 1)
    rho = weights.WeightSpec(k, precision).rho(n)
    lead = weights.leading_constant(k)
    ls = range(k, k + args.series_terms)
    coeffs = [float(combinatorics.exact_series_coefficient(k, l)) for l in ls]
    failures = []
    for i, m in enumerate(n.tolist()):
        bound = lead / float(m) ** (2 * k)
        row = {"n": m, "rho": float(rho[i]), "leading": bound, "ratio": float(rho[i]) / bound}
        if coeffs:
            row["series"] = math.fsum(c / float(m) ** (2 * l) for c, l in zip(coeffs, ls))
        report.results.append(row)
        if not weights.exceeds_leading_term(k, m):
            failures.append(m)
    report.check(
        "strict_improvement",
        not failures,
        f"rho > leading/n^{2 * k} decided in extended precision; failures at {failures[:10]}",
    )
    return report


def cmd_factorize(args) -> RunReport:
    n_max = args.n_max
    if n_max < 2:
        raise UsageError(f"--n-max must be >= 2, got {n_max}")
    precision = args.precision or _default_precision("ext")
    report = RunReport("factorize", {"n_max": n_max}, precision=precision)
    try:
        co = factorization.rellich_coeffs(n_max, precision)
    except factorization.SandwichViolation as exc:
        report.check("sandwich", False, f"zeta_{exc.index} = {exc.value!r} outside ({exc.lower!r}, {exc.upper!r})")
        report.summary["offending_index"] = exc.index
        return report
    n = np.arange(1, n_max + 1, dtype=float)
    lower, upper = (1 + 2 / n) ** 1.5, (1 + 3 / n) ** 1.5
    for i in range(n_max):
        m = i + 1
        report.results.append(
            {
                "n": m,
                "zeta": co.zeta[m],
                "c": co.c[m],
                "b": co.b[m],
                "lower_margin": co.zeta[m] - lower[i],
                "upper_margin": upper[i] - co.zeta[m],
            }
        )
    res = factorization.equation_residuals(co)
    maxima = {name: float(np.nanmax(np.abs(v))) for name, v in res.items()}
    report.summary.update({f"max_{k}_residual": v for k, v in maxima.items()})
    report.summary["zeta_1"] = co.zeta[1]
    report.check("sandwich", bool(np.all(co.bounds_ok[1:])), f"(1+2/n)^(3/2) < zeta_n < (1+3/n)^(3/2) for n <= {n_max}")
    for name, tol in (("set1", 1e-11), ("set2", 1e-12), ("set3", 1e-11)):
        report.check(f"{name}_residual", maxima[name] <= tol, f"max |residual| = {maxima[name]!r} <= {tol}")
    if precision == "ext":
        other = factorization.zeta(n_max, "f64")
        report.summary["f64_ext_divergence"] = float(np.nanmax(np.abs(other[1:] - co.zeta[1:])))
    return report


def cmd_verify(args) -> RunReport:
    if args.trials < 1 or args.support < args.order + 1:
        raise UsageError("need --trials >= 1 and --support > order")
    report = RunReport(
        "verify identity",
        {"order": args.order, "trials": args.trials, "support": args.support, "tol": args.tol},
        seed=args.seed,
    )
    out = factorization.identity_trials(args.order, args.trials, args.support, args.seed)
    report.summary.update({"max_relative_residual": out.max_residual, "worst_trial": out.worst_trial})
    report.check(
        "factorization_identity",
        out.max_residual <= args.tol,
        f"max relative residual {out.max_residual!r} at trial {out.worst_trial} (seed {args.seed})",
    )
    return report


_OPT_KINDS = {
    "hardy-critical": "hardy_critical",
    "hardy-infinity": "hardy_infinity",
    "rellich-infinity": "rellich_infinity",
    "distance": "distance",
}


def cmd_optimality(args) -> RunReport:
    kind = _OPT_KINDS[args.kind]
    Ns = args.N_list
    if any(N < 2 for N in Ns) or any(b <= a for a, b in zip(Ns, Ns[1:])):
        raise UsageError(f"--N-list must be strictly increasing with N >= 2, got {Ns}")
    report = RunReport("optimality " + args.kind, {"N_list": Ns, "epsilon": args.epsilon})
    if kind == "distance":
        target = float(factorization.rellich_coeffs(2).zeta[1])
        values = [optimality.distance_experiment(N, args.epsilon) for N in Ns]
        for N, v in zip(Ns, values):
            first = optimality.distance_first_entry(N, args.epsilon)
            report.results.append({"kind": kind, "N": N, "remainder_norm2": v, "first_entry": first, "limit": target})
            report.check(f"first_entry_N{N}", abs(first + math.sqrt(target)) <= 1e-12, f"(R_2 u)_1 = {first!r}")
        excess = [abs(v - target) for v in values]
        report.check("excess_decreasing", all(b < a for a, b in zip(excess, excess[1:])), f"|value - c_1^2| = {excess}")
        return report
    rep = optimality.sweep(kind, Ns, args.epsilon)
    report.results = rep.rows()
    report.summary["log_slope"] = rep.log_slope
    if kind == "hardy_critical":
        for e in rep.entries:
            bound = 4 / math.log(e.N)
            report.check(f"remainder_bound_N{e.N}", e.remainder_norm2 <= bound, f"{e.remainder_norm2!r} <= 4/log N = {bound!r}")
        r = rep.remainder_norm2
        report.check("remainder_decreasing", bool(np.all(np.diff(r) < 0)), "")
    else:
        floor = (0.25 if kind == "hardy_infinity" else 9 / 16) * math.log(2)
        for e in rep.entries:
            report.check(f"denominator_N{e.N}", e.weighted_norm2 > floor, f"{e.weighted_norm2!r} > {floor!r}")
        report.check("ratio_decreasing", bool(np.all(np.diff(rep.ratio) < 0)), f"ratios {rep.ratio.tolist()}")
    return report


def cmd_combinatorics(args) -> RunReport:
    if args.what == "identity":
        report = RunReport("combinatorics identity", {"s_max": args.s_max, "k_max": args.k_max})
        out = combinatorics.verify_identity(args.s_max, args.k_max)
        report.results = [{"s": s, "k": k, "A": a, "B": b, "C": c} for s, k, a, b, c in out.rows]
        report.summary["all_equal"] = out.all_equal
        report.check("A_eq_B_eq_C", out.all_equal, f"first failure {out.first_failure}")
        return report
    k, l_max = args.order, args.l_max
    if l_max is None:
        l_max = k + 20
    if k < 1 or l_max < k:
        raise UsageError(f"need 1 <= order <= l-max, got order={k}, l-max={l_max}")
    report = RunReport("combinatorics series", {"order": k, "l_max": l_max})
    for l in range(k, l_max + 1):
        c = combinatorics.exact_series_coefficient(k, l)
        report.results.append({"k": k, "l": l, "coefficient": c, "value": float(c)})
    report.check("positivity", combinatorics.positivity_check(k, l_max), f"all coefficients for l = {k}..{l_max} positive")
    return report


def cmd_spectral(args) -> RunReport:
    sizes = args.sizes
    if any(s < 1 for s in sizes) or any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise UsageError(f"--sizes must be strictly increasing positive integers, got {sizes}")
    if max(sizes) > spectral.MAX_SIZE:
        raise UsageError(f"sizes are capped at {spectral.MAX_SIZE}")
    params = {"sizes": sizes, "tol": args.tol}
    if args.which == "conjecture":
        if args.order < 3:
            raise UsageError("conjecture evidence needs --order >= 3")
        params["order"] = args.order
        sw = spectral.conjecture_evidence(args.order, sizes, args.tol)
    else:
        sw = {
            "hardy": spectral.hardy_sanity_sweep,
            "rellich": spectral.rellich_sanity_sweep,
            "best-constant": spectral.best_constant_sweep,
        }[args.which](sizes, args.tol)
    report = RunReport("spectral " + args.which, params)
    report.results = sw.rows()
    if args.which == "conjecture":
        floor = -1e-9 * spectral.norm_bound(args.order)
        report.summary["label"] = "EVIDENCE"
        report.check("nonnegative", bool(np.all(sw.values >= floor)), f"min eigenvalue of A - W >= {floor!r}")
        return report
    report.summary["extrapolated"] = sw.extrapolated()
    report.check("monotone_nonincreasing", sw.monotone_nonincreasing, "")
    report.check("converged", sw.all_converged, "")
    if args.which in ("hardy", "rellich"):
        report.check("at_least_one", bool(np.all(sw.values >= 1 - 1e-8)), f"min estimate {sw.values.min()!r}")
    else:
        report.check("positive", bool(np.all(sw.values > 0)), "")
    return report


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--output", help="write the report to this file instead of stdout")

    parser = _Parser(prog="discrete-rellich", description="Discrete Hardy and Rellich inequality lab.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("weights", parents=[common], help="tabulate rho^(k)")
    p.add_argument("--order", type=int, required=True)
    p.add_argument("--from", dest="from_", type=int, required=True)
    p.add_argument("--to", type=int, required=True)
    p.add_argument("--series-terms", type=int, default=0)
    p.add_argument("--precision", choices=PRECISIONS)
    p.set_defaults(func=cmd_weights)

    p = sub.add_parser("factorize", parents=[common], help="Rellich remainder coefficients")
    p.add_argument("--n-max", type=int, required=True)
    p.add_argument("--precision", choices=PRECISIONS)
    p.set_defaults(func=cmd_factorize)

    p = sub.add_parser("verify", parents=[common], help="randomized factorization identity check")
    p.add_argument("what", choices=("identity",))
    p.add_argument("--order", type=int, choices=(1, 2), required=True)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--support", type=int, default=512)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-10)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("optimality", parents=[common], help="cut-off experiments")
    p.add_argument("kind", choices=tuple(_OPT_KINDS))
    p.add_argument("--N-list", type=_int_list, required=True)
    p.add_argument("--epsilon", type=float, default=optimality.DEFAULT_EPSILON)
    p.set_defaults(func=cmd_optimality)

    p = sub.add_parser("combinatorics", parents=[common], help="exact identity and series coefficients")
    p.add_argument("what", choices=("identity", "series"))
    p.add_argument("--s-max", type=int, default=12)
    p.add_argument("--k-max", type=int, default=12)
    p.add_argument("--order", type=int, default=2)
    p.add_argument("--l-max", type=int)
    p.set_defaults(func=cmd_combinatorics)

    p = sub.add_parser("spectral", parents=[common], help="truncated eigenvalue sweeps")
    p.add_argument("which", choices=("hardy", "rellich", "best-constant", "conjecture"))
    p.add_argument("--sizes", type=_int_list, required=True)
    p.add_argument("--order", type=int, default=3)
    p.add_argument("--tol", type=float, default=spectral.DEFAULT_TOL)
    p.set_defaults(func=cmd_spectral)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    start = time.perf_counter()
    try:
        report = args.func(args)
    except (UsageError, ValueError, TypeError) as exc:
        print(f"discrete-rellich: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    report.wall_time_ms = int(round((time.perf_counter() - start) * 1000))
    text = to_csv(report) if args.format == "csv" else to_json(report)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    for c in report.checks:
        if not c["passed"]:
            print(f"check failed: {c['name']}: {c['detail']}", file=sys.stderr)
    return EXIT_OK if report.passed else EXIT_CHECK
