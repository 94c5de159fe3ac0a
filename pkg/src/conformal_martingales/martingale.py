"""Log-space martingale accumulation and threshold alarms."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .betting import BettingFunction
from .core import InvalidInputError

LOG10_E = math.log10(math.e)
DEFAULT_THRESHOLDS = (20.0, 100.0)


def _check_thresholds(thresholds) -> tuple[float, ...]:
    out = tuple(float(t) for t in thresholds)
    for t in out:
        if not t >= 1.0 or math.isinf(t):
            raise InvalidInputError(f"thresholds must be finite and >= 1, got {t}")
    return out


@dataclass
class MartingaleTracker:
    """Running value of a product martingale, kept as ``log10 S_n``.

    ``S_0 = 1``. ``alarms`` maps each threshold to the first step at which
    ``S_n >= threshold`` (or ``None`` while it has not happened).
    """

    name: str = "martingale"
    thresholds: Sequence[float] = DEFAULT_THRESHOLDS
    log10_value: float = 0.0
    log10_max: float = 0.0
    n_steps: int = 0
    alarms: dict = field(default_factory=dict)

    def __post_init__(self):
        self.thresholds = _check_thresholds(self.thresholds)
        self._log10_thresholds = [math.log10(t) for t in self.thresholds]
        for t in self.thresholds:
            self.alarms.setdefault(t, None)

    def step(self, factor: float) -> "MartingaleTracker":
        if not (factor > 0.0 and math.isfinite(factor)):
            raise InvalidInputError(f"betting factor must be positive and finite, got {factor}")
        return self.step_log10(math.log10(factor))

    def step_log(self, log_factor: float) -> "MartingaleTracker":
        """Advance by a factor given as its natural log."""
        if not math.isfinite(log_factor):
            raise InvalidInputError(f"log factor must be finite, got {log_factor}")
        return self.step_log10(log_factor * LOG10_E)

    def step_log10(self, log10_factor: float) -> "MartingaleTracker":
        if not math.isfinite(log10_factor):
            raise InvalidInputError(f"log10 factor must be finite, got {log10_factor}")
        self.log10_value += log10_factor
        self.n_steps += 1
        if self.log10_value > self.log10_max:
            self.log10_max = self.log10_value
        for t, lt in zip(self.thresholds, self._log10_thresholds):
            if self.alarms[t] is None and self.log10_value >= lt:
                self.alarms[t] = self.n_steps
        return self

    @property
    def value(self) -> float:
        """Linear value; may overflow to ``inf`` or underflow to 0 (display only)."""
        return 10.0 ** self.log10_value


@dataclass
class Trajectory:
    name: str
    log10_values: np.ndarray
    tracker: MartingaleTracker
    strategy: BettingFunction

    @property
    def final_log10(self) -> float:
        return self.tracker.log10_value

    @property
    def max_log10(self) -> float:
        return self.tracker.log10_max


def _as_pvalues(pvalues) -> np.ndarray:
    p = [r.p if hasattr(r, "p") else r for r in pvalues]
    return np.asarray(p, dtype=float)


def run(strategies: Sequence[BettingFunction], pvalues, thresholds=DEFAULT_THRESHOLDS) -> list[Trajectory]:
    """Drive every strategy over the same p-value sequence.

    ``pvalues`` may hold floats or :class:`~conformal_martingales.pvalues.PValueRecord`.
    Strategies are consumed (their history grows); pass fresh ones.
    """
    thresholds = _check_thresholds(thresholds)
    p = _as_pvalues(pvalues)
    out = []
    for strategy in strategies:
        tracker = MartingaleTracker(name=strategy.name, thresholds=thresholds)
        values = np.empty(p.shape[0])
        for i, pi in enumerate(p):
            tracker.step_log(strategy.log_bet(pi))
            values[i] = tracker.log10_value
        out.append(Trajectory(strategy.name, values, tracker, strategy))
    return out
