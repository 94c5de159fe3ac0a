"""Shared domain types: labeled examples, extended ratios and seeded randomness.

Extended nonnegative reals are plain floats with ``math.inf`` standing in for
the distinguished infinite value. Floats already give the required total
order (``inf`` compares greater than every finite value and equal to itself).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Hashable

import numpy as np

INF = math.inf


class InvalidInputError(ValueError):
    """Raised when an input violates a documented precondition."""


@dataclass(frozen=True)
class LabeledExample:
    """A feature vector together with its categorical label."""

    features: np.ndarray
    label: Hashable

    def __post_init__(self):
        x = np.asarray(self.features, dtype=float)
        if x.ndim != 1:
            raise InvalidInputError(f"features must be 1-D, got shape {x.shape}")
        if not np.all(np.isfinite(x)):
            raise InvalidInputError("features must be finite")
        x.setflags(write=False)
        object.__setattr__(self, "features", x)

    @property
    def dim(self) -> int:
        return self.features.shape[0]


def euclidean_distance(a, b) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise InvalidInputError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(np.sqrt(np.sum((a - b) ** 2)))


def ext_ratio(num: float, den: float) -> float:
    """Total division on ``[0, inf]``.

    ``0/0`` and ``inf/inf`` are both taken as 1 (neutral strangeness),
    positive/0 and inf/finite give ``inf``, finite/inf gives 0.
    """
    num_inf = math.isinf(num)
    den_inf = math.isinf(den)
    if num_inf and den_inf:
        return 1.0
    if num_inf:
        return INF
    if den_inf:
        return 0.0
    if den == 0.0:
        return 1.0 if num == 0.0 else INF
    return num / den


def ext_ratio_array(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    """Vectorised :func:`ext_ratio` (elementwise, same conventions)."""
    num = np.asarray(num, dtype=float)
    den = np.asarray(den, dtype=float)
    out = np.empty(np.broadcast(num, den).shape)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        np.divide(num, den, out=out)
    # nan arises exactly for 0/0 and inf/inf
    out[np.isnan(out)] = 1.0
    return out


@dataclass
class RngHandle:
    """Seeded, single-owner source of randomness.

    Every random draw in the package goes through one of these; there is no
    module-level RNG. ``position`` counts the draws made so far.
    """

    seed: int
    position: int = field(default=0, init=False)

    def __post_init__(self):
        if not isinstance(self.seed, (int, np.integer)) or isinstance(self.seed, bool):
            raise InvalidInputError(f"seed must be an integer, got {self.seed!r}")
        self.seed = int(self.seed) & 0xFFFF_FFFF_FFFF_FFFF
        self._seq = np.random.SeedSequence(self.seed)
        self._gen = np.random.Generator(np.random.PCG64(self._seq))

    def uniform_open(self) -> float:
        """One draw from the open interval (0, 1)."""
        while True:
            u = self._gen.random()
            self.position += 1
            if u > 0.0:
                return u

    def uniform_open_array(self, size: int) -> np.ndarray:
        out = self._gen.random(size)
        self.position += size
        bad = out == 0.0
        while bad.any():
            out[bad] = self._gen.random(int(bad.sum()))
            self.position += int(bad.sum())
            bad = out == 0.0
        return out

    def permutation(self, n: int) -> np.ndarray:
        """Uniformly random permutation of ``range(n)`` (Fisher-Yates)."""
        self.position += max(n - 1, 0)
        return self._gen.permutation(n)

    @property
    def generator(self) -> np.random.Generator:
        """Underlying numpy generator, for bulk sampling in synthetic data."""
        return self._gen

    def spawn(self, n: int = 1) -> list[RngHandle]:
        """Independent child handles, deterministic in the parent seed."""
        children = self._seq.spawn(n)
        out = []
        for child in children:
            words = child.generate_state(2, dtype=np.uint32)
            out.append(RngHandle(int(words[0]) << 32 | int(words[1])))
        return out
