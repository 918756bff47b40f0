"""Command-line front end: CSV in, result directory out.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Optional, Sequence

from gsdtest.constraints import build_constraints
from gsdtest.core import build_pooled
from gsdtest.errors import (
    DataError,
    DegenerateBounds,
    EmptyCredalSet,
    InvalidBounds,
    NumericalError,
    ResampleBudgetTooSmall,
    SchemaMismatch,
)
from gsdtest.io import DatasetSpec, RunManifest, ingest, write_json, write_report_files
from gsdtest.lp import solve_xi_star
from gsdtest.permutation import TestConfig, pvalue_curve, rejection_limit, reversed_test, run_test

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERICAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


def parse_grid(text: str) -> list:
    """``0,0.5,1`` or an inclusive range ``start:stop:step``."""
    try:
        if ":" in text:
            start, stop, step = (float(t) for t in text.split(":"))
            if step <= 0:
                raise ValueError
            count = int(round((stop - start) / step))
            return [round(start + i * step, 12) for i in range(count + 1)]
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid grid {text!r}") from None


def parse_ordinal(text: str) -> tuple:
    name, sep, levels = text.partition(":")
    parts = [lv.strip() for lv in levels.split("<")]
    if not sep or not name.strip() or len(parts) < 2 or "" in parts:
        raise argparse.ArgumentTypeError(f"expected col:low<...<high, got {text!r}")
    return name.strip(), tuple(parts)


def parse_bound(text: str) -> tuple:
    name, sep, rest = text.partition(":")
    lo, comma, hi = rest.partition(",")
    if not (sep and comma and name.strip() and lo.strip() and hi.strip()):
        raise argparse.ArgumentTypeError(f"expected col:lower,upper, got {text!r}")
    return name.strip(), lo.strip(), hi.strip()


def parse_groups(text: str) -> tuple:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 2 or not all(parts):
        raise argparse.ArgumentTypeError(f"expected X,Y, got {text!r}")
    return tuple(parts)


def parse_seed(text: str) -> int:
    try:
        seed = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid seed {text!r}") from None
    if not 0 <= seed < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return seed


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(
        prog="gsdtest",
        description="Permutation test for generalized stochastic dominance on mixed-scale data.",
    )
    p.add_argument("--input", required=True, help="CSV file with a header row (UTF-8)")
    p.add_argument("--group-col", required=True, help="column holding the group labels")
    p.add_argument("--groups", required=True, type=parse_groups, metavar="X,Y",
                   help="labels of the two groups; H0 is that Y dominates X")
    p.add_argument("--cardinal", default="", metavar="COLS",
                   help="comma-separated cardinal columns")
    p.add_argument("--ordinal", action="append", default=[], type=parse_ordinal,
                   metavar="COL:L1<L2<...", help="ordinal column with levels, lowest first (repeatable)")
    p.add_argument("--bound", action="append", default=[], type=parse_bound,
                   metavar="COL:LO,HI", help="explicit bound for a column; give one per column or none")
    p.add_argument("--epsilon", type=parse_grid, default=[0.0], metavar="LIST",
                   help="regularization grid (default 0)")
    p.add_argument("--gamma", type=parse_grid, default=[0.0], metavar="LIST",
                   help="contamination grid, list or start:stop:step (default 0)")
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--resamples", type=int, default=1000, metavar="N",
                      help="Monte-Carlo resamples (default 1000)")
    mode.add_argument("--exact", action="store_true", help="enumerate all splits")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--seed", type=parse_seed, default=0)
    p.add_argument("--reversed", action="store_true", help="also test with the groups swapped")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--dump-constraints", action="store_true",
                   help="write the constraint system to constraints.txt")
    p.add_argument("--workers", type=int, default=1, help="worker processes for resampling")
    return p


def _summary(report, config, label: str) -> str:
    curves = pvalue_curve(report, config.gammas)
    lines = [f"{label}: n={report.metadata['n']} m={report.metadata['m']} "
             f"s={report.metadata['s']} xi*={report.metadata['xi_star']:.6g}"]
    for r in report.results:
        limit = rejection_limit(curves[r.epsilon], config.alpha)
        lines.append(
            f"  eps={r.epsilon:g}  d={r.observed:+.6f}  p={r.entries[0].p_value:.4f}"
            f" (gamma={r.entries[0].gamma:g})  rejects up to gamma="
            + ("none" if limit is None else f"{limit:g}")
        )
    return "\n".join(lines)


def _run(args) -> int:
    spec = DatasetSpec(
        path=args.input,
        group_col=args.group_col,
        groups=args.groups,
        cardinal=[c.strip() for c in args.cardinal.split(",") if c.strip()],
        ordinal=args.ordinal,
        bounds=args.bound or None,
    )
    config = TestConfig(
        epsilons=args.epsilon,
        gammas=args.gamma,
        resamples=args.resamples,
        exact=args.exact,
        alpha=args.alpha,
        seed=args.seed,
        reversed=args.reversed,
        workers=args.workers,
    )
    xs, ys, schema = ingest(spec)
    pooled = build_pooled(xs, ys, schema, spec.bound_points())
    cs = build_constraints(pooled)
    xi_star = solve_xi_star(cs)
    manifest = RunManifest.create(spec, config)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.dump_constraints:
        (out / "constraints.txt").write_text(cs.dump(), encoding="utf-8")

    report = run_test(pooled, cs, config, xi_star)
    write_report_files(out, report, config)
    print(_summary(report, config, f"H0: {spec.groups[1]} dominates {spec.groups[0]}"))
    if config.reversed:
        rev = reversed_test(pooled, cs, config, xi_star)
        write_report_files(out, rev, config, suffix="_reversed")
        print(_summary(rev, config, f"H0: {spec.groups[0]} dominates {spec.groups[1]} (reversed)"))
    write_json(out / "manifest.json", manifest.to_dict())
    print(f"results written to {out}")
    return EXIT_OK


def run_cli(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _run(args)
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except (UsageError, ResampleBudgetTooSmall) as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except (DataError, SchemaMismatch, DegenerateBounds, InvalidBounds) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NumericalError, EmptyCredalSet) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        # remaining ValueErrors come from config validation
        print(f"invalid arguments: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
