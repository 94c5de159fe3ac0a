"""Dataset ingestion, deterministic shuffling and experiment runs.

Output formats
--------------
trajectory CSV
    ``index,p_value,theta,log10_<strategy>...``, one row per example, floats
    with 9 significant digits.
summary JSON
    ``{"strategies": {name: {"final_log10", "max_log10", "crossings"}},
    "n_examples", "seed", "shuffled"}``; ``crossings`` maps each threshold to
    the first step reaching it, or null.
betting CSV
    the plug-in density fitted on the whole p-value sequence, and the power
    betting function with the best final value, on a 201-point grid of [0, 1].
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .betting import PowerBetting, fit_kde, parse_strategy
from .calibration import power_growth_grid
from .core import InvalidInputError, LabeledExample, RngHandle
from .martingale import DEFAULT_THRESHOLDS, _check_thresholds, run
from .pvalues import PValueStream

logger = logging.getLogger(__name__)

GRID_POINTS = 201


def _fmt(x: float) -> str:
    return f"{x:.9g}"


def _parse_float(cell: str) -> float | None:
    try:
        return float(cell)
    except ValueError:
        return None


def load_csv(path, label_col=-1) -> list[LabeledExample]:
    """Read labeled examples from a CSV file, keeping file order.

    Parameters
    ----------
    path : str or Path
    label_col : str or int, default=-1
        Column holding the label, by header name or zero-based index
        (negative indices count from the end). Every other column must be
        numeric.

    The first row is treated as a header when ``label_col`` names a column
    or when one of its feature cells is not a number.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        rows = [row for row in csv.reader(fh) if row and any(c.strip() for c in row)]
    if not rows:
        raise InvalidInputError(f"{path}: no data rows")

    width = len(rows[0])
    header = None
    if isinstance(label_col, str) and not _is_int(label_col):
        header = [c.strip() for c in rows[0]]
        if label_col not in header:
            raise InvalidInputError(f"{path}: no column named {label_col!r}")
        col = header.index(label_col)
    else:
        col = int(label_col)
        if not -width <= col < width:
            raise InvalidInputError(f"{path}: label column {col} out of range for {width} columns")
        col %= width
        first = [c for j, c in enumerate(rows[0]) if j != col]
        if any(_parse_float(c) is None for c in first):
            header = rows[0]
    body = rows[1:] if header is not None else rows
    start_line = 2 if header is not None else 1

    examples = []
    for offset, row in enumerate(body):
        line = start_line + offset
        if len(row) != width:
            raise InvalidInputError(f"{path}: row {line} has {len(row)} columns, expected {width}")
        feats = []
        for j, cell in enumerate(row):
            if j == col:
                continue
            v = _parse_float(cell)
            if v is None or not math.isfinite(v):
                raise InvalidInputError(
                    f"{path}: row {line}, column {j}: non-finite or non-numeric value {cell!r}"
                )
            feats.append(v)
        label = row[col].strip()
        if not label:
            raise InvalidInputError(f"{path}: row {line}: empty label")
        examples.append(LabeledExample(np.array(feats), label))
    if not examples:
        raise InvalidInputError(f"{path}: no data rows")
    return examples


def _is_int(text: str) -> bool:
    try:
        int(text)
    except ValueError:
        return False
    return True


def write_csv(path, X, y, header: Sequence[str] | None = None) -> None:
    X = np.asarray(X, dtype=float)
    if header is None:
        header = [f"x{j}" for j in range(X.shape[1])] + ["label"]
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for xi, yi in zip(X, y):
            w.writerow([repr(float(v)) for v in xi] + [yi])


def shuffle(examples, seed: int) -> list:
    """Seeded uniformly random permutation of ``examples``."""
    examples = list(examples)
    order = RngHandle(seed).permutation(len(examples))
    return [examples[i] for i in order]


@dataclass
class RunConfig:
    """Everything that determines an experiment's outputs.

    ``max_examples`` truncates the file (in file order) before any shuffling.
    """

    data_path: str
    seed: int
    label_col: str | int = -1
    strategies: Sequence[str] = ("mixture", "plugin")
    shuffle: bool = False
    shuffle_seed: int | None = None
    thresholds: Sequence[float] = DEFAULT_THRESHOLDS
    trajectory_path: str | None = "trajectory.csv"
    summary_path: str | None = "summary.json"
    betting_path: str | None = "betting.csv"
    max_examples: int | None = None

    def __post_init__(self):
        if self.seed is None or isinstance(self.seed, bool) or not isinstance(self.seed, int):
            raise InvalidInputError("an integer seed is required")
        if not self.strategies:
            raise InvalidInputError("at least one strategy is required")
        self.thresholds = _check_thresholds(self.thresholds)
        if self.max_examples is not None and self.max_examples < 1:
            raise InvalidInputError("max_examples must be positive")
        names = [parse_strategy(s).name for s in self.strategies]
        if len(set(names)) != len(names):
            raise InvalidInputError(f"duplicate strategies: {list(self.strategies)}")


def _threshold_key(t: float) -> str:
    return f"{t:g}"


def betting_grid(pvalues, n_points: int = GRID_POINTS):
    """Plug-in density fitted on all ``pvalues`` and the best power bet, on a grid.

    Returns ``(grid, plugin_density, best_eps, power_density)``.
    """
    grid = np.linspace(0.0, 1.0, n_points)
    plugin = fit_kde(pvalues).density(grid)
    eps, growth = power_growth_grid(pvalues)
    best = float(eps[int(np.argmax(growth))])
    power = PowerBetting(best).density(grid)
    return grid, plugin, best, power


def write_betting_grid(path, pvalues, n_points: int = GRID_POINTS) -> float:
    grid, plugin, best, power = betting_grid(pvalues, n_points)
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["p", "plugin", f"power_{best:g}"])
        for row in zip(grid, plugin, power):
            w.writerow([_fmt(v) for v in row])
    return best


def run_experiment(config: RunConfig) -> dict:
    """Load, optionally shuffle, test, and write the configured outputs.

    Returns the summary dictionary (also written to ``summary_path``).
    """
    examples = load_csv(config.data_path, config.label_col)
    if config.max_examples is not None:
        examples = examples[: config.max_examples]
    if config.shuffle:
        shuffle_seed = config.seed if config.shuffle_seed is None else config.shuffle_seed
        examples = shuffle(examples, shuffle_seed)
    logger.info("testing %d examples from %s", len(examples), config.data_path)

    stream = PValueStream(RngHandle(config.seed))
    records = [stream.push(z.features, z.label) for z in examples]
    strategies = [parse_strategy(s) for s in config.strategies]
    trajectories = run(strategies, records, config.thresholds)

    if config.trajectory_path:
        with Path(config.trajectory_path).open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["index", "p_value", "theta"] + [f"log10_{t.name}" for t in trajectories])
            for i, rec in enumerate(records):
                w.writerow([rec.index, _fmt(rec.p), _fmt(rec.theta)]
                           + [_fmt(t.log10_values[i]) for t in trajectories])

    summary = {
        "strategies": {
            t.name: {
                "final_log10": t.final_log10,
                "max_log10": t.max_log10,
                "crossings": {_threshold_key(k): v for k, v in t.tracker.alarms.items()},
            }
            for t in trajectories
        },
        "n_examples": len(records),
        "seed": config.seed,
        "shuffled": bool(config.shuffle),
    }
    if config.summary_path:
        with Path(config.summary_path).open("w", encoding="utf-8") as fh:
            json.dump(summary, fh, indent=2)
            fh.write("\n")
    if config.betting_path:
        write_betting_grid(config.betting_path, [r.p for r in records])
    return summary


def read_pvalues(path, column: str = "p_value") -> np.ndarray:
    """Read one column of p-values from a CSV with a header (e.g. a trajectory file)."""
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or column not in reader.fieldnames:
            raise InvalidInputError(f"{path}: no column {column!r}")
        values = []
        for line, row in enumerate(reader, start=2):
            v = _parse_float(row[column])
            if v is None or not 0.0 < v <= 1.0:
                raise InvalidInputError(f"{path}: row {line}: invalid p-value {row[column]!r}")
            values.append(v)
    return np.array(values)
