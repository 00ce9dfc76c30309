"""Command-line front end.

Exit status: 0 when every result is certified (or every check passed),
2 when something could not be certified, 1 on errors and failed checks.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import math
import os
import sys
import time
from fractions import Fraction
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from . import __version__
from .bounds import (
    asymptotic_psi,
    axler_pn_upper,
    axler_theta_lower,
    closed_form_bound,
    dusart_pi_bounds,
    n_upper,
    rh_error_report,
    rh_n_upper,
    threshold_y,
)
from .error_term import parse_rational
from .scan import (
    CheckpointError,
    DomainError,
    UncertifiedTailError,
    alpha_chunks,
    plateau_scale_report,
    scan_psi,
    tail_sups,
)
from .sieve import DEFAULT_MEM_BUDGET, SieveMemoryError, simple_sieve

EXIT_OK, EXIT_ERROR, EXIT_UNCERTIFIED = 0, 1, 2
JSON_SAFE = 1 << 53
CHECKPOINT_ENV = "BONSELAB_CHECKPOINT_DIR"

PSI_FIELDS = ["x", "psi", "last_nonpositive", "n_upper", "certified", "runtime_ms"]

CONJECTURE_CASES = {
    "i": (("0.9", "1.3"), 21),
    "ii": (("0.5", "0.8"), 149),
    "iii": (("0.3", "0.4"), 59_875),
    "iv": (("0.2",), 442_414),
    "v": (("0.1",), 24_154_953),
}

log = logging.getLogger("bonse_lab")


class CliError(Exception):
    pass


def fmt_x(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


def json_value(v: Any) -> Any:
    """Integers at or beyond 2^53 become strings so no reader loses digits."""
    if isinstance(v, bool) or v is None:
        return v
    if isinstance(v, (int, np.integer)):
        v = int(v)
        return str(v) if abs(v) >= JSON_SAFE else v
    if isinstance(v, np.floating):
        return float(v)
    if isinstance(v, Fraction):
        return fmt_x(v)
    return v


def csv_value(v: Any) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, Fraction):
        return fmt_x(v)
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


class Emitter:
    """Writes rows as a text table, JSON lines or CSV."""

    def __init__(self, fmt: str | None, out: Path | None) -> None:
        self.fmt = fmt or "table"
        self._fh = open(out, "w", newline="") if out else sys.stdout
        self._owned = out is not None

    def emit(self, fields: Sequence[str], rows: Iterable[dict]) -> None:
        fh = self._fh
        if self.fmt == "json":
            for row in rows:
                fh.write(json.dumps({k: json_value(row[k]) for k in fields}) + "\n")
        elif self.fmt == "csv":
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(fields)
            for row in rows:
                w.writerow([csv_value(row[k]) for k in fields])
        else:
            rows = list(rows)
            cells = [[csv_value(r[k]) for k in fields] for r in rows]
            widths = [max([len(f)] + [len(c[i]) for c in cells]) for i, f in enumerate(fields)]
            fh.write("  ".join(f.ljust(w) for f, w in zip(fields, widths)).rstrip() + "\n")
            for c in cells:
                fh.write("  ".join(v.ljust(w) for v, w in zip(c, widths)).rstrip() + "\n")
        fh.flush()

    def close(self) -> None:
        if self._owned:
            self._fh.close()


def parse_x(text: str) -> Fraction:
    try:
        return parse_rational(text)
    except ValueError as exc:
        raise CliError(str(exc)) from None


def default_checkpoint(args, tag: str) -> Path | None:
    if args.checkpoint:
        return Path(args.checkpoint)
    d = os.environ.get(CHECKPOINT_ENV)
    if d:
        Path(d).mkdir(parents=True, exist_ok=True)
        return Path(d) / f"{tag}.ckpt"
    return None


def _psi_rows(xs: list[Fraction], args) -> tuple[list[dict], list]:
    tag = "psi-" + hashlib.sha1(",".join(sorted(fmt_x(x) for x in xs)).encode()).hexdigest()[:12]
    t0 = time.perf_counter()
    results = scan_psi(
        xs,
        n_ceiling=args.n_max,
        checkpoint=default_checkpoint(args, tag),
        resume=args.resume,
        mem_budget=args.mem_budget,
        report_every=args.report_every,
    )
    ms = int(round((time.perf_counter() - t0) * 1000))
    rows = [
        dict(x=r.x, psi=r.psi, last_nonpositive=r.last_nonpositive, n_upper=r.n_upper_used,
             certified=r.certified, runtime_ms=ms)
        for r in results
    ]
    return rows, results


# --- subcommands -----------------------------------------------------------------


def cmd_psi(args, em: Emitter) -> int:
    xs = [parse_x(s) for s in args.x]
    rows, results = _psi_rows(xs, args)
    em.emit(PSI_FIELDS, rows)
    return EXIT_OK if all(r.certified for r in results) else EXIT_UNCERTIFIED


def cmd_scan_alpha(args, em: Emitter) -> int:
    n_to = args.n_to if args.n_to is not None else args.n_from
    best = (-math.inf, args.n_from)

    def rows():
        nonlocal best
        for chunk in alpha_chunks(args.n_from, n_to, mem_budget=args.mem_budget):
            lo, hi = chunk.alphas()
            i = int(np.argmax(hi))
            if hi[i] > best[0]:
                best = (float(hi[i]), chunk.n0 + i)
            for n, l, h in zip(chunk.ns.tolist(), lo.tolist(), hi.tolist()):
                yield dict(n=n, alpha_lo=l, alpha_hi=h)

    em.emit(["n", "alpha_lo", "alpha_hi"], rows())
    log.info("max alpha_hi %.17g at n=%d", best[0], best[1])
    return EXIT_OK


def cmd_tail_sup(args, em: Emitter) -> int:
    kw = {"mem_budget": args.mem_budget}
    if args.n_max is not None:
        kw["n_max"] = args.n_max
    sups = tail_sups(args.m, args.scan_to, **kw)
    em.emit(
        ["m", "lo", "hi", "argmax_n", "n_reached", "certified"],
        (dict(m=t.m, lo=t.lo, hi=t.hi, argmax_n=t.argmax_n, n_reached=t.n_reached,
              certified=t.certified) for t in sups),
    )
    return EXIT_OK if all(t.certified for t in sups) else EXIT_UNCERTIFIED


def cmd_plateau(args, em: Emitter) -> int:
    rows = plateau_scale_report(args.m, mem_budget=args.mem_budget)
    em.emit(["m", "gap", "normalized"],
            (dict(m=r.m, gap=r.gap, normalized=r.normalized) for r in rows))
    return EXIT_OK


def cmd_bound(args, em: Emitter) -> int:
    rows = []
    for s in args.x:
        x = parse_x(s)
        if not -2 < x < 2:
            raise DomainError(f"x = {s} is outside (-2, 2)")
        rows.append(dict(x=x, y_star=threshold_y(x), n_upper=n_upper(x),
                         closed_form=closed_form_bound(x), asymptotic=asymptotic_psi(x)))
    em.emit(["x", "y_star", "n_upper", "closed_form", "asymptotic"], rows)
    return EXIT_OK


def cmd_rh_bound(args, em: Emitter) -> int:
    if args.table:
        rows = rh_error_report(args.table)
        em.emit(["n", "uncond", "rh", "ratio"],
                (dict(n=r.n, uncond=r.uncond, rh=r.rh, ratio=r.ratio) for r in rows))
        return EXIT_OK
    if not args.x:
        raise CliError("rh-bound needs --x or --table")
    rows = []
    for s in args.x:
        x = parse_x(s)
        if not -2 < x < 2:
            raise DomainError(f"x = {s} is outside (-2, 2)")
        r = rh_n_upper(x)
        rows.append(dict(x=x, n_rh=r.n_rh, solved=r.solved, y=r.y))
    em.emit(["x", "n_rh", "solved", "y"], rows)
    return EXIT_OK


def cmd_verify_conjecture(args, em: Emitter) -> int:
    cases = list(CONJECTURE_CASES) if args.case == "all" else [args.case]
    xs = sorted({parse_x(s) for c in cases for s in CONJECTURE_CASES[c][0]})
    _, results = _psi_rows(xs, args)
    by_x = {r.x: r for r in results}
    rows, worst = [], EXIT_OK
    for c in cases:
        pts, expected = CONJECTURE_CASES[c]
        rs = [by_x[parse_x(s)] for s in pts]
        if not all(r.certified for r in rs):
            status = "INDETERMINATE"
            worst = max(worst, EXIT_UNCERTIFIED) if worst != EXIT_ERROR else worst
        elif all(r.psi == expected for r in rs):
            status = "PASS"
        else:
            status = "FAIL"
            worst = EXIT_ERROR
        rows.append(dict(case=c, x=" ".join(pts), expected=expected,
                         psi=" ".join(str(r.psi) for r in rs), status=status))
    em.emit(["case", "x", "expected", "psi", "status"], rows)
    return worst


def lemma_checks(samples: int, limit: int, seed: int) -> list[dict]:
    """Check the three explicit estimates against exact sieve data."""
    rng = np.random.default_rng(seed)
    primes = simple_sieve(limit)
    out = []

    # pi(t) sandwich on a geometric grid plus random points
    grid = np.unique(np.concatenate([
        np.geomspace(17, limit, 1000).astype(np.int64),
        rng.integers(17, limit + 1, samples),
        np.arange(2, 17),
    ]))
    bad = []
    for t in grid.tolist():
        pi_t = int(np.searchsorted(primes, t, side="right"))
        lower, upper = dusart_pi_bounds(t)
        if (lower is not None and not lower <= pi_t) or not pi_t <= upper:
            bad.append(t)
    out.append(dict(lemma="pi-bounds", checked=len(grid), violations=len(bad),
                    first_violation=bad[0] if bad else None))

    n_hi = len(primes)
    bad = []
    ns = rng.integers(3468, n_hi + 1, samples) if n_hi >= 3468 else np.empty(0, dtype=np.int64)
    for n in ns.tolist():
        if not axler_pn_upper(n) >= primes[n - 1]:
            bad.append(n)
    out.append(dict(lemma="pn-upper", checked=len(ns), violations=len(bad),
                    first_violation=bad[0] if bad else None))

    theta = np.cumsum(np.log(primes.astype(np.float64)))
    bad = []
    ns = rng.integers(2, n_hi + 1, samples)
    for n in ns.tolist():
        th = float(theta[n - 1])
        err = n * 2.0**-50 * th
        if not axler_theta_lower(n) < th - err:
            bad.append(n)
    out.append(dict(lemma="theta-lower", checked=len(ns), violations=len(bad),
                    first_violation=bad[0] if bad else None))
    return out


def cmd_verify_lemmas(args, em: Emitter) -> int:
    rows = lemma_checks(args.samples, args.limit, args.seed)
    em.emit(["lemma", "checked", "violations", "first_violation"], rows)
    return EXIT_ERROR if any(r["violations"] for r in rows) else EXIT_OK


def cmd_plot_data(args, em: Emitter) -> int:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    status = EXIT_OK
    xs = [parse_x(s) for s in args.x_grid]
    if xs:
        _, results = _psi_rows(xs, args)
        with open(out_dir / "staircase.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["x", "psi", "certified"])
            for r in results:
                w.writerow([fmt_x(r.x), r.psi, csv_value(r.certified)])
                if not r.certified:
                    status = EXIT_UNCERTIFIED
    with open(out_dir / "envelope.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n", "alpha_lo", "alpha_hi"])
        for chunk in alpha_chunks(args.n_from, args.n_to, mem_budget=args.mem_budget):
            lo, hi = chunk.alphas()
            for n, l, h in zip(chunk.ns.tolist(), lo.tolist(), hi.tolist()):
                w.writerow([n, repr(l), repr(h)])
    if args.m:
        rows = plateau_scale_report(args.m, mem_budget=args.mem_budget)
        with open(out_dir / "gaps.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["m", "gap"])
            for r in rows:
                w.writerow([r.m, repr(r.gap)])
    em.emit(["file"], [dict(file=str(p)) for p in sorted(out_dir.glob("*.csv"))])
    return status


# --- parser ----------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    # usage errors exit 1; status 2 is reserved for uncertified results
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--format", choices=["json", "csv"], default=None,
                        help="machine-readable output (default: text table)")
    common.add_argument("--out", type=Path, default=None, help="write output to PATH")
    common.add_argument("--checkpoint", default=None, help="checkpoint file for long scans")
    common.add_argument("--resume", action="store_true", help="continue from --checkpoint")
    common.add_argument("--mem-budget", type=int, default=DEFAULT_MEM_BUDGET, metavar="BYTES")
    common.add_argument("--report-every", type=int, default=None, metavar="N",
                        help="log progress every N indices")
    common.add_argument("--n-max", type=int, default=None, metavar="N",
                        help="cap on the scanned index")
    common.add_argument("-v", "--verbose", action="store_true")

    p = _Parser(prog="bonselab", description="Certified scans of a Bonse-type error term.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("psi", parents=[common], help="threshold index Psi(x)")
    s.add_argument("--x", action="append", required=True, help="exact decimal or fraction; repeatable")
    s.set_defaults(func=cmd_psi)

    s = sub.add_parser("scan-alpha", parents=[common], help="alpha_n enclosures over a range")
    s.add_argument("--from", dest="n_from", type=int, default=8)
    s.add_argument("--to", dest="n_to", type=int, default=None)
    s.set_defaults(func=cmd_scan_alpha)

    s = sub.add_parser("tail-sup", parents=[common], help="tail suprema A_m")
    s.add_argument("--m", type=int, action="append", required=True)
    s.add_argument("--scan-to", type=int, default=None)
    s.set_defaults(func=cmd_tail_sup)

    s = sub.add_parser("plateau", parents=[common], help="certified plateau gaps")
    s.add_argument("--m", type=int, action="append", required=True)
    s.set_defaults(func=cmd_plateau)

    s = sub.add_parser("bound", parents=[common], help="unconditional scan ceiling and closed forms")
    s.add_argument("--x", action="append", required=True)
    s.set_defaults(func=cmd_bound)

    s = sub.add_parser("rh-bound", parents=[common], help="ceiling under the Riemann hypothesis")
    s.add_argument("--x", action="append", default=[])
    s.add_argument("--table", type=int, nargs="+", default=None, metavar="N",
                   help="print the error-term comparison for these n instead")
    s.set_defaults(func=cmd_rh_bound)

    s = sub.add_parser("verify-conjecture", parents=[common], help="the five plateau cases")
    s.add_argument("--case", choices=["all", *CONJECTURE_CASES], default="all")
    s.set_defaults(func=cmd_verify_conjecture)

    s = sub.add_parser("verify-lemmas", parents=[common], help="check explicit estimates against a sieve")
    s.add_argument("--samples", type=int, default=100)
    s.add_argument("--limit", type=int, default=10**6)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_verify_lemmas)

    s = sub.add_parser("plot-data", parents=[common], help="CSV files for plotting")
    s.add_argument("--out-dir", default="plot-data")
    s.add_argument("--x-grid", nargs="*", default=["0.1", "0.2", "0.3", "0.5", "0.9", "1.3"])
    s.add_argument("--from", dest="n_from", type=int, default=8)
    s.add_argument("--to", dest="n_to", type=int, default=1000)
    s.add_argument("--m", type=int, nargs="*", default=[8, 9, 10])
    s.set_defaults(func=cmd_plot_data)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.INFO if (args.verbose or args.report_every) else logging.WARNING
    logging.basicConfig(level=level, format="%(asctime)s %(name)s: %(message)s", stream=sys.stderr)
    em = None
    try:
        em = Emitter(args.format, args.out)
        return args.func(args, em)
    except (CliError, ValueError, CheckpointError, SieveMemoryError, UncertifiedTailError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    finally:
        if em is not None:
            em.close()


if __name__ == "__main__":
    sys.exit(main())
