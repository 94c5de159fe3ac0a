"""Betting functions on [0, 1].

A betting function maps the next p-value to a nonnegative factor and must
integrate to one over [0, 1], given everything seen before. Each class below
keeps the history it needs, exposes the *current* function through
:meth:`BettingFunction.density` / :meth:`BettingFunction.log_density` and
consumes one p-value per :meth:`BettingFunction.bet` call.

All factors are also available in natural-log form so that martingales can
be accumulated without ever leaving log space.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import logsumexp, ndtr

from .core import InvalidInputError

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


def _check_p(p):
    p = np.asarray(p, dtype=float)
    if np.any(p <= 0.0) or np.any(p > 1.0) or np.any(np.isnan(p)):
        raise InvalidInputError("p-values must lie in (0, 1]")
    return p


def power_bet(p, eps: float):
    """``eps * p ** (eps - 1)``, evaluated as ``exp(log eps + (eps-1) log p)``."""
    if not 0.0 < eps <= 1.0:
        raise InvalidInputError(f"eps must lie in (0, 1], got {eps}")
    p = _check_p(p)
    out = np.exp(math.log(eps) + (eps - 1.0) * np.log(p))
    return float(out) if out.ndim == 0 else out


# -- simple mixture ----------------------------------------------------------

_GL_PANELS = 16
_GL_ORDER = 32


def _composite_gauss_legendre(panels: int, order: int):
    t, w = leggauss(order)
    edges = np.linspace(0.0, 1.0, panels + 1)
    half = np.diff(edges) / 2.0
    mid = (edges[:-1] + edges[1:]) / 2.0
    nodes = (mid[:, None] + half[:, None] * t[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


_EPS_NODES, _EPS_WEIGHTS = _composite_gauss_legendre(_GL_PANELS, _GL_ORDER)
_LOG_EPS_NODES = np.log(_EPS_NODES)
_LOG_EPS_WEIGHTS = np.log(_EPS_WEIGHTS)


def log_mixture_integral(n: int, log_p_sum: float) -> float:
    """Natural log of ``I(n, S) = int_0^1 eps^n exp((eps - 1) S) d eps``.

    This is the value after ``n`` steps of the uniform mixture over ``eps``
    of power martingales, with ``S`` the running sum of ``log p``. The
    integrand is evaluated in log form and summed with a max shift, so
    ``n`` and ``|S|`` in the tens of thousands stay finite.
    """
    if n == 0 and log_p_sum == 0.0:
        return 0.0
    terms = _LOG_EPS_WEIGHTS + n * _LOG_EPS_NODES + (_EPS_NODES - 1.0) * log_p_sum
    return float(logsumexp(terms))


def mixture_increment(n: int, log_p_sum_prev: float, p_new: float) -> float:
    """Ratio ``M_n / M_{n-1}`` of the simple mixture martingale at step ``n``."""
    return math.exp(log_mixture_increment(n, log_p_sum_prev, p_new))


def log_mixture_increment(n: int, log_p_sum_prev: float, p_new: float) -> float:
    if n < 1:
        raise InvalidInputError("step index n starts at 1")
    if not 0.0 < p_new <= 1.0:
        raise InvalidInputError(f"p must lie in (0, 1], got {p_new}")
    return log_mixture_integral(n, log_p_sum_prev + math.log(p_new)) - log_mixture_integral(
        n - 1, log_p_sum_prev
    )


# -- kernel density estimate with reflection --------------------------------


def silverman_bandwidth(sample) -> float:
    """Silverman's rule of thumb ``0.9 * min(sd, IQR / 1.34) * m ** (-1/5)``.

    ``sd`` is the sample standard deviation (``ddof=1``) and the quartiles use
    linear interpolation between order statistics (numpy's default, R type 7).
    When the spread term is zero or undefined the bandwidth falls back to
    ``max(1e-3, 0.9 * |x_1| * m ** (-1/5))``.
    """
    x = np.asarray(sample, dtype=float).ravel()
    m = x.shape[0]
    if m == 0:
        raise InvalidInputError("bandwidth needs at least one point")
    scale = m ** -0.2
    if m > 1:
        sd = float(np.std(x, ddof=1))
        q25, q75 = np.percentile(x, [25.0, 75.0])
        lo = min(sd, (q75 - q25) / 1.34)
        if lo > 0.0 and math.isfinite(lo):
            return float(0.9 * lo * scale)
    return float(max(1e-3, 0.9 * abs(x[0]) * scale))


def reflect(past) -> np.ndarray:
    """Extended sample ``{-p_i} u {p_i} u {2 - p_i}``."""
    p = np.asarray(past, dtype=float)
    return np.concatenate([-p, p, 2.0 - p])


# log-weight below which a kernel term cannot change a double-precision sum
_NEGLIGIBLE_LOG = 800.0


@dataclass(frozen=True)
class KdeModel:
    """Gaussian KDE over a reflected sample, truncated and renormalised to [0, 1].

    ``centers`` is the sorted extended sample and ``normalizer`` the average
    kernel mass inside [0, 1]. A model without centers is the uniform density.
    """

    centers: np.ndarray
    bandwidth: float
    normalizer: float

    @property
    def n_past(self) -> int:
        return self.centers.shape[0] // 3

    @property
    def is_uniform(self) -> bool:
        return self.centers.shape[0] == 0

    def _log_kernel_sum(self, x: float) -> float:
        # only centers within reach of the nearest one can contribute
        c = self.centers
        h = self.bandwidth
        k = np.searchsorted(c, x)
        nearest = min(abs(x - c[k - 1]) if k > 0 else np.inf, abs(c[k] - x) if k < c.shape[0] else np.inf)
        z0 = nearest / h
        reach = h * math.sqrt(z0 * z0 + 2.0 * _NEGLIGIBLE_LOG)
        lo = np.searchsorted(c, x - reach, side="left")
        hi = np.searchsorted(c, x + reach, side="right")
        z = (x - c[lo:hi]) / h
        a = -0.5 * z * z
        top = a.max()
        return float(top + np.log(np.exp(a - top).sum()))

    def log_density(self, p):
        p = np.asarray(p, dtype=float)
        scalar = p.ndim == 0
        flat = np.atleast_1d(p).ravel()
        out = np.full(flat.shape, -np.inf)
        inside = (flat >= 0.0) & (flat <= 1.0)
        if self.is_uniform:
            out[inside] = 0.0
        elif inside.any():
            log_norm = (
                math.log(self.centers.shape[0] * self.bandwidth * self.normalizer) + _LOG_SQRT_2PI
            )
            idx = np.flatnonzero(inside)
            if idx.size <= 32:
                for i in idx:
                    out[i] = self._log_kernel_sum(flat[i]) - log_norm
            else:
                # many points: dense kernel matrix in chunks, every center included
                step = max(1, 4_000_000 // self.centers.shape[0])
                for lo in range(0, idx.size, step):
                    sel = idx[lo:lo + step]
                    z = (flat[sel, None] - self.centers[None, :]) / self.bandwidth
                    out[sel] = logsumexp(-0.5 * z * z, axis=1) - log_norm
        return float(out[0]) if scalar else out.reshape(p.shape)

    def density(self, p):
        return np.exp(self.log_density(p))


_UNIFORM = KdeModel(centers=np.empty(0), bandwidth=1.0, normalizer=1.0)


def _extended_quantile(sorted_past: np.ndarray, q: float) -> float:
    # linear interpolation between order statistics of reflect(sorted_past),
    # read off the sorted past without materialising the extended sample
    m = sorted_past.shape[0]
    pos = q * (3 * m - 1)
    k = int(math.floor(pos))
    frac = pos - k

    def order_stat(j):
        if j < m:
            return -sorted_past[m - 1 - j]
        if j < 2 * m:
            return sorted_past[j - m]
        return 2.0 - sorted_past[3 * m - 1 - j]

    a = order_stat(k)
    if frac == 0.0:
        return float(a)
    b = order_stat(k + 1)
    return float(a + (b - a) * frac)


def _fit_sorted(sorted_past: np.ndarray, total: float, total_sq: float) -> KdeModel:
    """KDE from a sorted past sample plus its running sum and sum of squares."""
    m = sorted_past.shape[0]
    big_n = 3 * m
    mean = (2.0 * m - total) / big_n
    ss = 3.0 * total_sq - 4.0 * total + 4.0 * m
    sd = math.sqrt(max(ss - big_n * mean * mean, 0.0) / (big_n - 1))
    iqr = _extended_quantile(sorted_past, 0.75) - _extended_quantile(sorted_past, 0.25)
    lo = min(sd, iqr / 1.34)
    scale = big_n ** -0.2
    if lo > 0.0 and math.isfinite(lo):
        h = 0.9 * lo * scale
    else:
        # unreachable for reflected samples (their IQR exceeds 1); kept for symmetry
        # with silverman_bandwidth
        h = max(1e-3, 0.9 * abs(sorted_past[0]) * scale)

    # Mass of the reflected triple for p inside [0, 1] collapses to
    # Phi((1 + p)/h) - Phi((p - 2)/h); both tails vanish unless p is within
    # ~38h of the far edge.
    cut = 38.0 * h
    left = sorted_past[: np.searchsorted(sorted_past, cut - 1.0, side="right")]
    right = sorted_past[np.searchsorted(sorted_past, 2.0 - cut, side="left"):]
    tail = ndtr(-(1.0 + left) / h).sum() + ndtr((right - 2.0) / h).sum()
    normalizer = (m - tail) / big_n

    centers = np.concatenate([-sorted_past[::-1], sorted_past, 2.0 - sorted_past[::-1]])
    return KdeModel(centers=centers, bandwidth=h, normalizer=float(normalizer))


def fit_kde(past) -> KdeModel:
    """Fit the reflected KDE to past p-values (empty history gives uniform).

    The bandwidth is Silverman's rule applied to the extended 3m-point sample.
    """
    past = np.sort(np.asarray(past, dtype=float).ravel())
    if past.shape[0] == 0:
        return _UNIFORM
    return _fit_sorted(past, float(past.sum()), float(np.dot(past, past)))


def kde_density(model: KdeModel, p):
    return model.density(p)


# -- strategies -------------------------------------------------------------


class BettingFunction:
    """Base class: a sequence of betting functions driven by past p-values."""

    name = "base"

    def log_density(self, p):
        raise NotImplementedError

    def update(self, p: float) -> None:
        """Append ``p`` to the history without betting."""

    def density(self, p):
        return np.exp(self.log_density(p))

    def log_bet(self, p: float) -> float:
        """Natural log of the factor for ``p``, then fold ``p`` into the history."""
        p = float(_check_p(p))
        out = float(self.log_density(p))
        self.update(p)
        return out

    def bet(self, p: float) -> float:
        return math.exp(self.log_bet(p))

    def fresh(self) -> "BettingFunction":
        """A copy of this strategy with empty history."""
        return type(self)(**self.get_params())

    def get_params(self) -> dict:
        return {}

    def clone(self) -> "BettingFunction":
        return copy.deepcopy(self)

    def __repr__(self):
        args = ", ".join(f"{k}={v!r}" for k, v in self.get_params().items())
        return f"{type(self).__name__}({args})"


class ConstantBetting(BettingFunction):
    """Never bets: factor 1 for every p-value."""

    name = "constant"

    def log_density(self, p):
        p = np.asarray(p, dtype=float)
        out = np.where((p >= 0.0) & (p <= 1.0), 0.0, -np.inf)
        return float(out) if out.ndim == 0 else out


class PowerBetting(BettingFunction):
    """Fixed betting function ``eps * p ** (eps - 1)``."""

    def __init__(self, epsilon: float = 0.5):
        if not 0.0 < epsilon <= 1.0:
            raise InvalidInputError(f"epsilon must lie in (0, 1], got {epsilon}")
        self.epsilon = float(epsilon)

    @property
    def name(self):
        return f"power_{self.epsilon:g}"

    def get_params(self):
        return {"epsilon": self.epsilon}

    def log_density(self, p):
        p = np.asarray(p, dtype=float)
        if self.epsilon == 1.0:
            out = np.zeros(p.shape)
        else:
            with np.errstate(divide="ignore"):
                out = math.log(self.epsilon) + (self.epsilon - 1.0) * np.log(p)
        out = np.where((p >= 0.0) & (p <= 1.0), out, -np.inf)
        return float(out) if out.ndim == 0 else out


class SimpleMixtureBetting(BettingFunction):
    """Uniform mixture over ``eps`` of the power betting functions.

    State is the step count and the running sum of ``log p``; the betting
    function at step ``n`` is ``I(n, S + log p) / I(n - 1, S)``.
    """

    name = "mixture"

    def __init__(self):
        self.n = 0
        self.log_p_sum = 0.0
        self._log_prev = 0.0

    def log_density(self, p):
        p = np.asarray(p, dtype=float)
        flat = np.atleast_1d(p).ravel()
        out = np.full(flat.shape, -np.inf)
        for i, v in enumerate(flat):
            if v == 0.0:
                out[i] = np.inf
            elif 0.0 < v <= 1.0:
                out[i] = self.log_density_at_log(math.log(v))
        return float(out[0]) if p.ndim == 0 else out.reshape(p.shape)

    def log_density_at_log(self, log_p: float) -> float:
        """Log of the betting function at ``p = exp(log_p)``.

        Lets callers reach p-values below the smallest positive double, where
        this function still carries visible mass.
        """
        return log_mixture_integral(self.n + 1, self.log_p_sum + log_p) - self._log_prev

    def update(self, p):
        self.n += 1
        self.log_p_sum += math.log(p)
        self._log_prev = log_mixture_integral(self.n, self.log_p_sum)

    @property
    def log_value(self) -> float:
        """Natural log of the mixture martingale after the p-values seen so far."""
        return self._log_prev


class PluginBetting(BettingFunction):
    """Betting function equal to a density estimate of the past p-values.

    Parameters
    ----------
    refit_stride : int, default=1
        Refit the KDE only every ``refit_stride`` p-values and reuse the last
        model in between. Any function of the past that integrates to one is a
        valid betting function, so this trades adaptivity for speed without
        affecting validity.
    """

    name = "plugin"

    def __init__(self, refit_stride: int = 1):
        if int(refit_stride) < 1:
            raise InvalidInputError("refit_stride must be >= 1")
        self.refit_stride = int(refit_stride)
        self._past: list[float] = []
        self._sorted = np.empty(0)
        self._sum = 0.0
        self._sum_sq = 0.0
        self._model = _UNIFORM
        self._fitted_on = 0

    def get_params(self):
        return {"refit_stride": self.refit_stride}

    @property
    def history(self) -> np.ndarray:
        return np.array(self._past)

    @property
    def model(self) -> KdeModel:
        """The model used for the next bet (fitted on strictly past p-values)."""
        m = len(self._past)
        if m and (self._model.is_uniform or m - self._fitted_on >= self.refit_stride):
            self._model = _fit_sorted(self._sorted, self._sum, self._sum_sq)
            self._fitted_on = m
        return self._model

    def log_density(self, p):
        return self.model.log_density(p)

    def update(self, p):
        p = float(p)
        self._past.append(p)
        self._sorted = np.insert(self._sorted, np.searchsorted(self._sorted, p), p)
        self._sum += p
        self._sum_sq += p * p


def parse_strategy(text: str) -> BettingFunction:
    """Build a strategy from ``constant``, ``power:EPS``, ``mixture`` or ``plugin[:STRIDE]``."""
    kind, _, arg = text.strip().partition(":")
    kind = kind.lower()
    try:
        if kind == "constant" and not arg:
            return ConstantBetting()
        if kind == "power":
            return PowerBetting(float(arg))
        if kind in ("mixture", "simple_mixture") and not arg:
            return SimpleMixtureBetting()
        if kind == "plugin":
            return PluginBetting(int(arg) if arg else 1)
    except ValueError as exc:
        raise InvalidInputError(f"bad strategy {text!r}: {exc}") from exc
    raise InvalidInputError(f"unknown strategy {text!r}")
