"""Command line interface: ``test``, ``synth`` and ``betting-dump``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .calibration import SynthConfig, synth_arrays
from .core import InvalidInputError
from .io import RunConfig, read_pvalues, run_experiment, write_betting_grid, write_csv

EXIT_OK = 0
EXIT_IO = 1
EXIT_INVALID = 2


def _label_col(text: str):
    try:
        return int(text)
    except ValueError:
        return text


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="conformal-martingales",
        description="On-line exchangeability testing with conformal martingales.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    t = sub.add_parser("test", help="run the martingales over a labeled CSV file")
    t.add_argument("data", help="input CSV; every column but the label is a numeric feature")
    t.add_argument("--label-col", type=_label_col, default=-1,
                   help="label column name or zero-based index (default: last)")
    t.add_argument("--strategy", action="append", dest="strategies",
                   help="constant | power:EPS | mixture | plugin[:STRIDE]; repeatable "
                        "(default: mixture and plugin)")
    t.add_argument("--seed", type=int, required=True, help="seed for the p-value tie-breaking")
    t.add_argument("--shuffle", action="store_true", help="shuffle examples before testing")
    t.add_argument("--shuffle-seed", type=int, default=None,
                   help="seed for --shuffle (default: --seed)")
    t.add_argument("--threshold", action="append", type=float, dest="thresholds",
                   help="alarm level, repeatable (default: 20 and 100)")
    t.add_argument("--max-examples", type=int, default=None,
                   help="use only the first N rows of the file")
    t.add_argument("--out-dir", default=".", help="directory for the default output files")
    t.add_argument("--trajectory", default=None, help="trajectory CSV path")
    t.add_argument("--summary", default=None, help="summary JSON path")
    t.add_argument("--betting", default=None, help="betting-function grid CSV path")

    s = sub.add_parser("synth", help="write a synthetic Gaussian-mixture stream as CSV")
    s.add_argument("--n", type=int, default=2000, dest="n_examples")
    s.add_argument("--classes", type=int, default=2, dest="n_classes")
    s.add_argument("--dim", type=int, default=10)
    s.add_argument("--separation", type=float, default=4.0)
    s.add_argument("--std", type=float, default=1.0)
    s.add_argument("--changepoint", type=int, default=None)
    s.add_argument("--shift", type=float, default=0.0,
                   help="post-change mean shift in standard deviations")
    s.add_argument("--shift-axis", type=int, default=None,
                   help="shift along this coordinate axis (default: the diagonal)")
    s.add_argument("--shift-class", type=int, action="append", dest="shifted_classes",
                   help="class affected by the shift, repeatable (default: all)")
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--out", required=True)

    b = sub.add_parser("betting-dump", help="fit the plug-in betting function to p-values")
    b.add_argument("pvalues", help="CSV with a header and a p-value column")
    b.add_argument("--column", default="p_value")
    b.add_argument("--grid", type=int, default=201, help="number of grid points on [0, 1]")
    b.add_argument("--out", required=True)
    return parser


def _cmd_test(args) -> int:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    config = RunConfig(
        data_path=args.data,
        seed=args.seed,
        label_col=args.label_col,
        strategies=args.strategies or ("mixture", "plugin"),
        shuffle=args.shuffle,
        shuffle_seed=args.shuffle_seed,
        thresholds=args.thresholds or (20.0, 100.0),
        trajectory_path=args.trajectory or str(out / "trajectory.csv"),
        summary_path=args.summary or str(out / "summary.json"),
        betting_path=args.betting or str(out / "betting.csv"),
        max_examples=args.max_examples,
    )
    summary = run_experiment(config)
    json.dump(summary, sys.stdout, indent=2)
    sys.stdout.write("\n")
    return EXIT_OK


def _cmd_synth(args) -> int:
    direction = None
    if args.shift_axis is not None:
        if not 0 <= args.shift_axis < args.dim:
            raise InvalidInputError(f"--shift-axis must lie in [0, {args.dim})")
        direction = np.eye(args.dim)[args.shift_axis]
    config = SynthConfig(
        n_examples=args.n_examples,
        n_classes=args.n_classes,
        dim=args.dim,
        separation=args.separation,
        stds=args.std,
        changepoint=args.changepoint,
        shift=args.shift,
        shift_direction=direction,
        shifted_classes=args.shifted_classes,
        seed=args.seed,
    )
    X, y = synth_arrays(config)
    write_csv(args.out, X, y)
    return EXIT_OK


def _cmd_betting_dump(args) -> int:
    if args.grid < 2:
        raise InvalidInputError("--grid needs at least 2 points")
    p = read_pvalues(args.pvalues, args.column)
    if p.size == 0:
        raise InvalidInputError(f"{args.pvalues}: no p-values")
    best = write_betting_grid(args.out, p, args.grid)
    print(f"best power epsilon: {best:g}")
    return EXIT_OK


COMMANDS = {"test": _cmd_test, "synth": _cmd_synth, "betting-dump": _cmd_betting_dump}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except InvalidInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
