"""Shared statistics: normal CDF, empirical CDFs, KS distance, Wilson
intervals and the deterministic per-trial random stream contract."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from statistics import NormalDist
from typing import Callable

import numpy as np
from scipy.special import erfc

_SQRT2 = math.sqrt(2.0)


def normal_sf(x):
    """Upper tail 1 - Phi(x), accurate far into the tail."""
    if np.ndim(x) == 0:
        return 0.5 * math.erfc(float(x) / _SQRT2)
    return 0.5 * erfc(np.asarray(x, dtype=float) / _SQRT2)


def phi(x):
    """Standard normal distribution function.

    Both halves are taken from ``erfc`` so neither tail suffers from
    cancellation; ``phi(-x) + phi(x) == 1`` to rounding.
    """
    if np.ndim(x) == 0:
        x = float(x)
        if x >= 0:
            return 1.0 - 0.5 * math.erfc(x / _SQRT2)
        return 0.5 * math.erfc(-x / _SQRT2)
    x = np.asarray(x, dtype=float)
    upper = 0.5 * erfc(np.abs(x) / _SQRT2)
    return np.where(x >= 0, 1.0 - upper, upper)


def abs_normal_cdf(x):
    """P(|Z| <= x) for a standard normal Z (zero for x < 0)."""
    if np.ndim(x) == 0:
        x = float(x)
        return 0.0 if x <= 0 else 1.0 - 2.0 * normal_sf(x)
    x = np.asarray(x, dtype=float)
    return np.where(x <= 0, 0.0, 1.0 - 2.0 * normal_sf(np.maximum(x, 0.0)))


@dataclass(frozen=True)
class EmpiricalCdf:
    samples: np.ndarray = field(repr=False)

    def __post_init__(self):
        s = np.sort(np.asarray(self.samples, dtype=float).ravel())
        object.__setattr__(self, "samples", s)

    @property
    def count(self) -> int:
        return int(self.samples.size)

    def __call__(self, x):
        """Right-continuous step function F_n(x) = #{X_i <= x} / n."""
        return np.searchsorted(self.samples, x, side="right") / self.count


def ks_distance(samples, cdf: Callable) -> float:
    """sup_x |F_n(x) - F(x)|, checking both one-sided gaps at every jump."""
    ecdf = samples if isinstance(samples, EmpiricalCdf) else EmpiricalCdf(samples)
    n = ecdf.count
    if n == 0:
        raise ValueError("ks_distance needs at least one sample")
    f = np.asarray(cdf(ecdf.samples), dtype=float)
    i = np.arange(1, n + 1)
    d_plus = np.max(i / n - f)
    d_minus = np.max(f - (i - 1) / n)
    return float(max(d_plus, d_minus, 0.0))


def proportion_ci(successes: int, trials: int, level: float = 0.95) -> tuple[float, float]:
    """Wilson score interval."""
    if trials < 1 or not 0 <= successes <= trials:
        raise ValueError("need 0 <= successes <= trials and trials >= 1")
    z = NormalDist().inv_cdf(0.5 + level / 2.0)
    phat = successes / trials
    z2 = z * z
    denom = 1.0 + z2 / trials
    centre = (phat + z2 / (2 * trials)) / denom
    half = z * math.sqrt(phat * (1 - phat) / trials + z2 / (4 * trials * trials)) / denom
    low = 0.0 if successes == 0 else max(0.0, centre - half)
    high = 1.0 if successes == trials else min(1.0, centre + half)
    return low, high


@dataclass(frozen=True)
class RngStream:
    """Random stream identified by ``(master_seed, stream_id)``.

    The draw sequence is a pure function of the identifiers: the key of a
    counter-based Philox generator is derived from them through
    ``SeedSequence``, so trial ``i`` sees the same numbers no matter which
    worker runs it or in what order.  ``child`` derives further independent
    streams (auxiliary draws inside one trial).
    """

    master_seed: int
    stream_id: int = 0
    path: tuple[int, ...] = ()

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.master_seed, spawn_key=(self.stream_id, *self.path))
        return np.random.Generator(np.random.Philox(ss))

    def child(self, k: int) -> "RngStream":
        return RngStream(self.master_seed, self.stream_id, (*self.path, k))


def as_generator(stream) -> np.random.Generator:
    if isinstance(stream, np.random.Generator):
        return stream
    if isinstance(stream, RngStream):
        return stream.generator()
    if isinstance(stream, (int, np.integer)):
        return RngStream(int(stream)).generator()
    raise TypeError(f"cannot make a generator from {type(stream).__name__}")


def trial_streams(seed: int, start: int, stop: int):
    return [RngStream(seed, i) for i in range(start, stop)]
