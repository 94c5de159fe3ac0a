"""Synthetic streams and statistical checks for validating the martingales.

The generators produce isotropic Gaussian class clusters, optionally with a
single regime change. The checks turn the guarantees of the method into
finite-sample tests: uniformity of conformal p-values (Kolmogorov-Smirnov),
and the log-growth comparison between the plug-in strategy and fixed power
betting functions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import kolmogorov

from .betting import BettingFunction
from .core import InvalidInputError, LabeledExample, RngHandle


@dataclass
class SynthConfig:
    """Gaussian mixture stream, optionally switching regime once.

    Parameters
    ----------
    n_examples : int
    n_classes : int
    dim : int
        Feature dimension.
    means : array of shape (n_classes, dim), optional
        Class centres. Default puts class ``k`` at ``separation`` along the
        ``k``-th coordinate axis (modulo ``dim``).
    stds : float or sequence of float
        Isotropic standard deviation, one per class or shared.
    separation : float
        Distance scale of the default class centres.
    changepoint : int, optional
        Examples with 1-based index greater than this use the post-change
        parameters.
    post_means : array of shape (n_classes, dim), optional
        Class centres after the change. Defaults to ``means`` moved by
        ``shift`` standard deviations along ``shift_direction``.
    shift : float
        Size of the default mean shift, in units of each class's std.
    shift_direction : array of shape (dim,), optional
        Direction of the default shift (normalised). Default is the diagonal
        ``(1, ..., 1) / sqrt(dim)``.
    shifted_classes : sequence of int, optional
        Classes affected by the default shift; all classes when omitted.
    post_stds : float or sequence of float, optional
    seed : int
    """

    n_examples: int = 1000
    n_classes: int = 2
    dim: int = 10
    means: np.ndarray | None = None
    stds: float | Sequence[float] = 1.0
    separation: float = 2.0
    changepoint: int | None = None
    post_means: np.ndarray | None = None
    shift: float = 0.0
    shift_direction: np.ndarray | None = None
    shifted_classes: Sequence[int] | None = None
    post_stds: float | Sequence[float] | None = None
    seed: int = 0

    def __post_init__(self):
        if self.n_examples < 1 or self.n_classes < 1 or self.dim < 1:
            raise InvalidInputError("n_examples, n_classes and dim must be positive")
        if self.changepoint is not None and not 1 < self.changepoint < self.n_examples:
            raise InvalidInputError("changepoint must lie strictly between 1 and n_examples")
        for s in np.ravel(self.stds):
            if not s > 0:
                raise InvalidInputError("standard deviations must be positive")
        if self.post_stds is not None and np.any(np.ravel(self.post_stds) <= 0):
            raise InvalidInputError("standard deviations must be positive")

    def class_means(self) -> np.ndarray:
        if self.means is not None:
            means = np.asarray(self.means, dtype=float)
            if means.shape != (self.n_classes, self.dim):
                raise InvalidInputError(f"means must have shape {(self.n_classes, self.dim)}")
            return means
        means = np.zeros((self.n_classes, self.dim))
        for k in range(self.n_classes):
            means[k, k % self.dim] += self.separation * (1 + k // self.dim)
        return means

    def class_stds(self, post: bool = False) -> np.ndarray:
        stds = self.post_stds if post and self.post_stds is not None else self.stds
        return np.broadcast_to(np.asarray(stds, dtype=float), (self.n_classes,)).copy()

    def post_class_means(self) -> np.ndarray:
        if self.post_means is not None:
            return np.asarray(self.post_means, dtype=float)
        direction = (
            np.ones(self.dim) if self.shift_direction is None
            else np.asarray(self.shift_direction, dtype=float)
        )
        direction = direction / np.linalg.norm(direction)
        moved = np.zeros(self.n_classes)
        if self.shifted_classes is None:
            moved[:] = 1.0
        else:
            moved[list(self.shifted_classes)] = 1.0
        step = (self.shift * moved * self.class_stds())[:, None] * direction[None, :]
        return self.class_means() + step


def synth_arrays(config: SynthConfig):
    """Draw ``(X, y)`` for a synthetic stream; labels are ints ``0..n_classes-1``."""
    rng = RngHandle(config.seed).generator
    n = config.n_examples
    y = rng.integers(0, config.n_classes, size=n)
    noise = rng.standard_normal((n, config.dim))
    means = config.class_means()[y]
    stds = config.class_stds()[y]
    if config.changepoint is not None:
        post = np.arange(n) >= config.changepoint
        means[post] = config.post_class_means()[y[post]]
        stds[post] = config.class_stds(post=True)[y[post]]
    return means + stds[:, None] * noise, y


def synth_stream(config: SynthConfig) -> list[LabeledExample]:
    X, y = synth_arrays(config)
    return [LabeledExample(X[i], int(y[i])) for i in range(len(y))]


def ks_uniform(pvalues) -> tuple[float, float]:
    """One-sample Kolmogorov-Smirnov test against U[0, 1].

    Returns the statistic ``D = sup |F_n(t) - t|`` and the asymptotic
    p-value ``P(K > sqrt(n) D)`` from the Kolmogorov distribution.
    """
    p = np.sort(np.asarray(pvalues, dtype=float).ravel())
    n = p.shape[0]
    if n == 0:
        raise InvalidInputError("need at least one value")
    if p[0] < 0.0 or p[-1] > 1.0 or np.isnan(p).any():
        raise InvalidInputError("values must lie in [0, 1]")
    i = np.arange(1, n + 1)
    d = max(float(np.max(i / n - p)), float(np.max(p - (i - 1) / n)))
    return d, float(kolmogorov(math.sqrt(n) * d))


def log_factors(pvalues, strategy: BettingFunction) -> np.ndarray:
    """Natural-log betting factors from replaying ``pvalues`` through a fresh copy."""
    s = strategy.fresh()
    return np.array([s.log_bet(p) for p in np.asarray(pvalues, dtype=float)])


def avg_log_growth(pvalues, strategy: BettingFunction) -> float:
    """Average natural-log growth per step, ``mean(log f_i(p_i))``."""
    return float(log_factors(pvalues, strategy).mean())


def power_growth_grid(pvalues, eps_grid=None) -> tuple[np.ndarray, np.ndarray]:
    """Average log growth of every fixed power bet on a grid of ``eps``.

    Closed form: ``log(eps) + (eps - 1) * mean(log p)``. Default grid is
    ``0.01, 0.02, ..., 0.99``.
    """
    if eps_grid is None:
        eps_grid = np.round(np.arange(1, 100) / 100.0, 2)
    eps_grid = np.asarray(eps_grid, dtype=float)
    mean_log_p = float(np.mean(np.log(np.asarray(pvalues, dtype=float))))
    return eps_grid, np.log(eps_grid) + (eps_grid - 1.0) * mean_log_p


def lag1_autocorrelation(x) -> float:
    x = np.asarray(x, dtype=float)
    x = x - x.mean()
    return float(np.dot(x[:-1], x[1:]) / np.dot(x, x))
