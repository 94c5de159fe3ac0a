"""1-nearest-neighbour nonconformity scores.

The score of example ``i`` is the distance to its nearest neighbour with the
same label divided by the distance to its nearest neighbour with a different
label, with degenerate ratios resolved by :func:`core.ext_ratio`.

:class:`NonconformityState` keeps only two numbers per example (the current
nearest same-label and different-label distances). Nearest-neighbour minima
over a growing set can only decrease, so each new example needs one pass of
``n - 1`` distance evaluations to update everything.
"""

from __future__ import annotations

import numpy as np

from .core import INF, InvalidInputError, LabeledExample, ext_ratio_array
from .validation import examples_to_arrays


def _distances_to(X: np.ndarray, x: np.ndarray) -> np.ndarray:
    # shared by the incremental and batch paths so both see identical floats
    return np.sqrt(np.sum((X - x) ** 2, axis=1))


def batch_scores(X, y=None) -> np.ndarray:
    """Scores for every example in the multiset, by brute force, O(n^2 d).

    Parameters
    ----------
    X : array-like of shape (n_samples, n_features), or a list of
        :class:`LabeledExample` (then ``y`` is omitted)
    y : array-like of shape (n_samples,)

    Returns
    -------
    scores : ndarray of shape (n_samples,)
        Values in ``[0, inf]``.
    """
    if y is None:
        X, y = examples_to_arrays(X)
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise InvalidInputError("X must be 2-D with one label per row")
    n = X.shape[0]
    if n == 0:
        raise InvalidInputError("need at least one example")
    d_same = np.full(n, INF)
    d_diff = np.full(n, INF)
    for i in range(n):
        dist = _distances_to(X, X[i])
        same = y == y[i]
        same[i] = False
        diff = y != y[i]
        if same.any():
            d_same[i] = dist[same].min()
        if diff.any():
            d_diff[i] = dist[diff].min()
    return ext_ratio_array(d_same, d_diff)


class NonconformityState:
    """Incrementally maintained 1-NN nonconformity scores.

    Examples
    --------
    >>> state = NonconformityState()
    >>> state.push([0.0], "a").tolist()
    [1.0]
    >>> state.push([2.0], "a").tolist()
    [0.0, 0.0]
    """

    def __init__(self, n_features: int | None = None, capacity: int = 64):
        self.n_features = n_features
        self.n = 0
        self.n_distance_evals = 0
        self._capacity = capacity
        self._X = None
        self._codes = np.empty(capacity, dtype=np.int64)
        self._label_codes: dict = {}
        self._d_same = np.empty(capacity)
        self._d_diff = np.empty(capacity)

    def _grow(self):
        cap = 2 * self._capacity
        X = np.empty((cap, self.n_features))
        X[: self.n] = self._X[: self.n]
        self._X = X
        for name in ("_codes", "_d_same", "_d_diff"):
            old = getattr(self, name)
            new = np.empty(cap, dtype=old.dtype)
            new[: self.n] = old[: self.n]
            setattr(self, name, new)
        self._capacity = cap

    def push(self, x, label) -> np.ndarray:
        """Add one example and return the scores of all examples so far.

        The returned array is a fresh copy; element ``-1`` is the score of
        the example just pushed.
        """
        x = np.asarray(x, dtype=float).ravel()
        if not np.all(np.isfinite(x)):
            raise InvalidInputError("features must be finite")
        if self.n_features is None:
            self.n_features = x.shape[0]
        elif x.shape[0] != self.n_features:
            raise InvalidInputError(
                f"dimension mismatch: expected {self.n_features}, got {x.shape[0]}"
            )
        if self._X is None:
            self._X = np.empty((self._capacity, self.n_features))
        if self.n == self._capacity:
            self._grow()

        code = self._label_codes.setdefault(label, len(self._label_codes))
        n = self.n
        new_same = INF
        new_diff = INF
        if n:
            dist = _distances_to(self._X[:n], x)
            self.n_distance_evals += n
            same = self._codes[:n] == code
            diff = ~same
            if same.any():
                ds = dist[same]
                new_same = ds.min()
                self._d_same[:n][same] = np.minimum(self._d_same[:n][same], ds)
            if diff.any():
                dd = dist[diff]
                new_diff = dd.min()
                self._d_diff[:n][diff] = np.minimum(self._d_diff[:n][diff], dd)
        self._X[n] = x
        self._codes[n] = code
        self._d_same[n] = new_same
        self._d_diff[n] = new_diff
        self.n = n + 1
        return self.scores()

    def push_example(self, z: LabeledExample) -> np.ndarray:
        return self.push(z.features, z.label)

    def scores(self) -> np.ndarray:
        return ext_ratio_array(self._d_same[: self.n], self._d_diff[: self.n])

    @property
    def d_same(self) -> np.ndarray:
        return self._d_same[: self.n].copy()

    @property
    def d_diff(self) -> np.ndarray:
        return self._d_diff[: self.n].copy()
