"""On-line randomized conformal p-values."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

from .core import InvalidInputError, LabeledExample, RngHandle
from .nonconformity import NonconformityState


@dataclass(frozen=True)
class PValueRecord:
    index: int
    p: float
    theta: float
    alpha: float


def next_pvalue(alphas, theta: float) -> float:
    """Smoothed conformal p-value of the last score in ``alphas``.

    ``(#{alpha_i > alpha_n} + theta * #{alpha_i == alpha_n}) / n``, where
    the counts run over all ``n`` scores including the last one itself.

    >>> next_pvalue([5, 4, 3, 10], 0.5)
    0.125
    """
    if not 0.0 < theta < 1.0:
        raise InvalidInputError(f"theta must lie in (0, 1), got {theta}")
    alphas = np.asarray(alphas, dtype=float)
    n = alphas.shape[0]
    if n == 0:
        raise InvalidInputError("alphas must be nonempty")
    a_n = alphas[-1]
    greater = np.count_nonzero(alphas > a_n)
    equal = np.count_nonzero(alphas == a_n)
    return (greater + theta * equal) / n


class PValueStream:
    """Feeds examples one at a time and emits one p-value per example.

    Parameters
    ----------
    rng : RngHandle
        Source of the tie-breaking draws; one draw per example, taken after
        the scores have been updated.
    """

    def __init__(self, rng: RngHandle, n_features: int | None = None):
        self.rng = rng
        self.state = NonconformityState(n_features=n_features)

    @property
    def n_seen(self) -> int:
        return self.state.n

    def push(self, x, label) -> PValueRecord:
        scores = self.state.push(x, label)
        theta = self.rng.uniform_open()
        p = next_pvalue(scores, theta)
        return PValueRecord(index=self.state.n, p=p, theta=theta, alpha=float(scores[-1]))


def iter_pvalues(examples: Iterable[LabeledExample], rng: RngHandle) -> Iterator[PValueRecord]:
    stream = PValueStream(rng)
    for z in examples:
        yield stream.push(z.features, z.label)


def process_stream(examples: Iterable[LabeledExample], rng: RngHandle) -> list[PValueRecord]:
    """Run a whole labeled sequence through the on-line p-value generator."""
    return list(iter_pvalues(examples, rng))


def pvalues_from_arrays(X, y, rng: RngHandle) -> list[PValueRecord]:
    stream = PValueStream(rng, n_features=np.shape(X)[1])
    return [stream.push(X[i], y[i]) for i in range(len(y))]
