"""scikit-learn style front end.

:class:`ConformalPValues` turns a labeled stream into conformal p-values,
:class:`ExchangeabilityMartingale` turns p-values into a martingale
trajectory, and :class:`ExchangeabilityTester` chains the two with several
betting strategies sharing one p-value sequence.

All three are *streaming* estimators: ``fit`` starts from scratch and
consumes the rows in order, ``partial_fit`` continues from the current
state. Row order is the experimental variable, so nothing is ever shuffled
implicitly.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .betting import (
    BettingFunction,
    ConstantBetting,
    PluginBetting,
    PowerBetting,
    SimpleMixtureBetting,
    parse_strategy,
)
from .core import InvalidInputError, RngHandle
from .martingale import DEFAULT_THRESHOLDS, MartingaleTracker, _check_thresholds
from .pvalues import PValueStream
from .validation import check_pvalues, check_stream


class ConformalPValues(TransformerMixin, BaseEstimator):
    """On-line conformal p-values from a 1-nearest-neighbour nonconformity score.

    Parameters
    ----------
    random_state : int, default=0
        Seed for the tie-breaking draws. A seed is always required so that
        runs are reproducible.

    Attributes
    ----------
    p_values_ : ndarray of shape (n_seen_,)
    thetas_ : ndarray of shape (n_seen_,)
    scores_ : ndarray of shape (n_seen_,)
        Current nonconformity scores of every example seen so far.
    n_seen_ : int

    Examples
    --------
    >>> import numpy as np
    >>> X = np.array([[0.0], [1.0], [10.0]])
    >>> cp = ConformalPValues(random_state=0).fit(X, ["a", "a", "b"])
    >>> cp.scores_.round(4).tolist()
    [0.1, 0.1111, inf]
    """

    def __init__(self, random_state: int = 0):
        self.random_state = random_state

    def _reset(self):
        if self.random_state is None:
            raise InvalidInputError("random_state must be an integer seed")
        self._stream = PValueStream(RngHandle(self.random_state))
        self._p: list[float] = []
        self._theta: list[float] = []

    def _consume(self, X, y):
        X, y = check_stream(X, y)
        start = len(self._p)
        for i in range(X.shape[0]):
            rec = self._stream.push(X[i], y[i])
            self._p.append(rec.p)
            self._theta.append(rec.theta)
        self.p_values_ = np.array(self._p)
        self.thetas_ = np.array(self._theta)
        self.scores_ = self._stream.state.scores()
        self.n_seen_ = len(self._p)
        self.n_features_in_ = self._stream.state.n_features
        return self.p_values_[start:]

    def fit(self, X, y):
        self._reset()
        self._consume(X, y)
        return self

    def partial_fit(self, X, y):
        if not hasattr(self, "_stream"):
            self._reset()
        self._consume(X, y)
        return self

    def transform(self, X, y):
        """Continue the stream with new rows and return their p-values."""
        check_is_fitted(self, "n_seen_")
        return self._consume(X, y)

    def fit_transform(self, X, y):
        self._reset()
        return self._consume(X, y)


def _make_strategy(betting, epsilon, refit_stride) -> BettingFunction:
    if isinstance(betting, BettingFunction):
        return betting.fresh()
    if betting == "constant":
        return ConstantBetting()
    if betting == "power":
        return PowerBetting(epsilon)
    if betting in ("mixture", "simple_mixture"):
        return SimpleMixtureBetting()
    if betting == "plugin":
        return PluginBetting(refit_stride)
    return parse_strategy(betting)


class ExchangeabilityMartingale(BaseEstimator):
    """Product martingale over a p-value sequence, kept in log10.

    Parameters
    ----------
    betting : {"plugin", "mixture", "power", "constant"} or BettingFunction
        Strategy string (``"power:0.3"`` style is accepted too) or a prototype
        object whose fresh copy is used.
    epsilon : float, default=0.5
        Exponent for ``betting="power"``.
    refit_stride : int, default=1
        KDE refit interval for ``betting="plugin"``.
    thresholds : tuple of float, default=(20, 100)
        Alarm levels; each records the first step with ``S_n >= threshold``.

    Attributes
    ----------
    log10_values_ : ndarray of shape (n_steps_,)
    log10_max_ : float
    alarms_ : dict
        threshold -> first crossing step or None.
    strategy_ : BettingFunction
    """

    def __init__(self, betting="plugin", epsilon=0.5, refit_stride=1,
                 thresholds=DEFAULT_THRESHOLDS):
        self.betting = betting
        self.epsilon = epsilon
        self.refit_stride = refit_stride
        self.thresholds = thresholds

    def _reset(self):
        self.strategy_ = _make_strategy(self.betting, self.epsilon, self.refit_stride)
        self.tracker_ = MartingaleTracker(self.strategy_.name, _check_thresholds(self.thresholds))
        self._values: list[float] = []

    def _consume(self, p):
        p = check_pvalues(p)
        start = len(self._values)
        for pi in p:
            self.tracker_.step_log(self.strategy_.log_bet(pi))
            self._values.append(self.tracker_.log10_value)
        self.log10_values_ = np.array(self._values)
        self.log10_max_ = self.tracker_.log10_max
        self.alarms_ = dict(self.tracker_.alarms)
        self.n_steps_ = self.tracker_.n_steps
        return self.log10_values_[start:]

    def fit(self, p, y=None):
        self._reset()
        self._consume(p)
        return self

    def partial_fit(self, p, y=None):
        if not hasattr(self, "tracker_"):
            self._reset()
        self._consume(p)
        return self

    def transform(self, p):
        """Continue with new p-values and return the log10 trajectory for them."""
        check_is_fitted(self, "tracker_")
        return self._consume(p)

    def fit_transform(self, p, y=None):
        self._reset()
        return self._consume(p)

    @property
    def log10_value_(self) -> float:
        check_is_fitted(self, "tracker_")
        return self.tracker_.log10_value


class ExchangeabilityTester(BaseEstimator):
    """Conformal p-values plus several martingales on the same p-value sequence.

    Parameters
    ----------
    strategies : tuple of str, default=("mixture", "plugin")
        Strategy specs understood by :func:`~conformal_martingales.betting.parse_strategy`.
    thresholds : tuple of float, default=(20, 100)
    random_state : int, default=0

    Attributes
    ----------
    pvalues_ : ConformalPValues
    martingales_ : dict of str -> ExchangeabilityMartingale
    """

    def __init__(self, strategies=("mixture", "plugin"), thresholds=DEFAULT_THRESHOLDS,
                 random_state=0):
        self.strategies = strategies
        self.thresholds = thresholds
        self.random_state = random_state

    def _reset(self):
        if not self.strategies:
            raise InvalidInputError("at least one strategy is required")
        self.pvalues_ = ConformalPValues(random_state=self.random_state)
        self.pvalues_._reset()
        self.martingales_ = {}
        for spec in self.strategies:
            m = ExchangeabilityMartingale(betting=parse_strategy(spec), thresholds=self.thresholds)
            m._reset()
            if m.strategy_.name in self.martingales_:
                raise InvalidInputError(f"duplicate strategy {spec!r}")
            self.martingales_[m.strategy_.name] = m

    def _consume(self, X, y):
        p = self.pvalues_._consume(X, y)
        for m in self.martingales_.values():
            m._consume(p)
        return self

    def fit(self, X, y):
        self._reset()
        return self._consume(X, y)

    def partial_fit(self, X, y):
        if not hasattr(self, "martingales_"):
            self._reset()
        return self._consume(X, y)

    def rejects(self, threshold: float | None = None) -> dict:
        """Per strategy: has the martingale ever reached ``threshold``?

        Defaults to the smallest configured threshold.
        """
        check_is_fitted(self, "martingales_")
        if threshold is None:
            threshold = min(_check_thresholds(self.thresholds))
        level = np.log10(threshold)
        return {name: bool(m.tracker_.n_steps and m.log10_max_ >= level)
                for name, m in self.martingales_.items()}
