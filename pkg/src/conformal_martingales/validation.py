"""Input validation helpers shared by the estimators and the stream API."""

from __future__ import annotations

import numpy as np
from sklearn.utils import check_array, check_X_y

from .core import InvalidInputError, LabeledExample


def check_stream(X, y):
    """Validate a labeled stream and return ``(X, y)`` as numpy arrays.

    ``X`` becomes a 2-D float array with finite entries, ``y`` a 1-D array
    of the same length.
    """
    try:
        X, y = check_X_y(X, y, dtype=float, ensure_all_finite=True, y_numeric=False)
    except ValueError as exc:
        raise InvalidInputError(str(exc)) from exc
    return X, y


def check_pvalues(p):
    """Validate a 1-D sequence of p-values in (0, 1]."""
    try:
        p = check_array(p, ensure_2d=False, dtype=float, ensure_all_finite=True,
                        ensure_min_samples=0)
    except ValueError as exc:
        raise InvalidInputError(str(exc)) from exc
    if p.ndim != 1:
        raise InvalidInputError(f"p-values must be 1-D, got shape {p.shape}")
    if np.any(p <= 0.0) or np.any(p > 1.0):
        raise InvalidInputError("p-values must lie in (0, 1]")
    return p


def examples_to_arrays(examples):
    """Stack a sequence of :class:`LabeledExample` into ``(X, y)``."""
    examples = list(examples)
    if not examples:
        return np.empty((0, 0)), np.empty(0, dtype=object)
    dims = {z.dim for z in examples}
    if len(dims) != 1:
        raise InvalidInputError(f"inconsistent feature dimensions: {sorted(dims)}")
    X = np.vstack([z.features for z in examples])
    y = np.empty(len(examples), dtype=object)
    y[:] = [z.label for z in examples]
    return X, y
