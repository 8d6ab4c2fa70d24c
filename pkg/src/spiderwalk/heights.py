"""Leg heights, ranked excursion heights, the limiting law of a scaled leg
height, and the limit-set functional with its energy identity."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np

from .core import SpiderPath, as_weights
from .errors import SeriesCapError
from .sim import _excursion_bounds, simulate_spider_batch
from .stats import RngStream, normal_sf

SERIES_CAP = 10**6
ADMISSIBLE_SLACK = 1e-12


@dataclass(frozen=True, eq=False)
class HeightSummary:
    per_leg: np.ndarray
    h_max: int
    h_min: int
    ranked: np.ndarray
    ranked_legs: np.ndarray = field(repr=False)

    def top_legs_distinct(self, n_legs: int) -> bool:
        top = self.ranked_legs[:n_legs]
        return top.size == n_legs and np.unique(top).size == n_legs

    def min_below_ranked(self, n_legs: int) -> bool:
        """H_m <= M_N; vacuous unless the top N excursions use N legs."""
        if not self.top_legs_distinct(n_legs):
            return True
        return self.h_min <= self.ranked[n_legs - 1]


def compute_heights(path: SpiderPath, n_legs: int, depth: int) -> HeightSummary:
    """Per-leg maxima and the ``depth`` largest excursion heights of ``path``.

    The unfinished last excursion counts.  Equal heights keep time order.
    """
    r, g = path.radii, path.legs
    per_leg = np.zeros(n_legs, dtype=np.int64)
    off = r > 0
    np.maximum.at(per_leg, g[off] - 1, r[off])
    starts, _, heights, _ = _excursion_bounds(r)
    order = np.lexsort((starts, -heights))[:depth]
    return HeightSummary(
        per_leg, int(per_leg.max()), int(per_leg.min()),
        heights[order].astype(np.int64), g[starts[order] + 1].astype(np.int64),
    )


def limit_height_cdf(y, p_leg: float, tol: float = 1e-13):
    """lim P(H(j, n) / sqrt(n) <= y) = 2p sum_k (1-2p)^{k-1} (2 Phi((2k-1)y) - 1).

    Summed as 1 - 4p sum_k r^{k-1} Q((2k-1)y) with r = 1 - 2p and Q the
    normal upper tail: the same series, but convergent for every p in
    (0, 1] (Abel sum at p = 1) and free of cancellation.  Terms are added
    until the remainder bound falls below ``tol``.
    """
    if not 0 < p_leg <= 1:
        raise ValueError("leg probability must lie in (0, 1]")
    scalar = np.ndim(y) == 0
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if np.any(y < 0):
        raise ValueError("scaled height must be nonnegative")
    r = 1.0 - 2.0 * p_leg
    out = np.zeros_like(y)
    live = y > 0
    yl = y[live]
    acc = np.zeros_like(yl)
    todo = np.arange(yl.size)  # entries whose remainder is still above tol
    k0, block = 1, 64
    while todo.size:
        ks = np.arange(k0, min(k0 + block, SERIES_CAP + 1))
        acc[todo] += normal_sf(np.outer(yl[todo], 2 * ks - 1)) @ (r ** (ks - 1.0))
        k_end = ks[-1]
        tail = 4 * p_leg * abs(r) ** k_end * normal_sf((2 * k_end + 1) * yl[todo])
        if r > 0:
            tail /= 1.0 - r
        todo = todo[tail >= tol]
        if todo.size and k_end >= SERIES_CAP:
            raise SeriesCapError(f"height series did not reach tol={tol} in {SERIES_CAP} terms")
        k0 = k_end + 1
        block = max(64, min(2 * block, (1 << 22) // max(todo.size, 1)))
    out[live] = 1.0 - 4.0 * p_leg * acc
    out = np.clip(out, 0.0, 1.0)
    return float(out[0]) if scalar else out


def small_y_slope(p_leg: float, c: float = math.sqrt(2 / math.pi)) -> float:
    """c_j = 2 c p sum_k |1-2p|^{k-1} (2k-1), so that the limit CDF is at
    most c_j y.

    For p <= 1/2 this is c (1 - p) / p.  Above 1/2 the terms alternate in
    sign, and only the absolute series bounds F; it diverges at p = 1.
    """
    if not 0 < p_leg <= 1:
        raise ValueError("leg probability must lie in (0, 1]")
    s = abs(1.0 - 2.0 * p_leg)
    if s >= 1.0:
        return math.inf
    return 2.0 * c * p_leg * (1.0 + s) / (1.0 - s) ** 2


def _exact(x) -> bool:
    return isinstance(x, (int, Fraction)) and not isinstance(x, bool)


def strassen_condition(a: Sequence) -> tuple:
    """(2 sum a - max a, whether it is <= 1).  Fractions stay exact."""
    a = list(a)
    if not a:
        raise ValueError("need at least one coordinate")
    if any(x < 0 for x in a):
        raise ValueError("scaled heights must be nonnegative")
    value = 2 * sum(a) - max(a)
    if all(_exact(x) for x in a):
        return value, value <= 1
    return float(value), bool(value <= 1 + ADMISSIBLE_SLACK)


@dataclass(frozen=True)
class PiecewiseLinearFn:
    """Continuous piecewise linear f on [0, 1] given by its knots."""

    knots: tuple

    def __post_init__(self):
        knots = tuple((x, fx) for x, fx in self.knots)
        if len(knots) < 2:
            raise ValueError("need at least two knots")
        if knots[0][0] != 0 or knots[0][1] != 0:
            raise ValueError("f must start at (0, 0)")
        if knots[-1][0] != 1:
            raise ValueError("last knot must sit at x = 1")
        xs = [x for x, _ in knots]
        if any(b < a for a, b in zip(xs, xs[1:])):
            raise ValueError("knot abscissae must be nondecreasing")
        object.__setattr__(self, "knots", knots)

    def __call__(self, x):
        xs = np.array([float(k[0]) for k in self.knots])
        fs = np.array([float(k[1]) for k in self.knots])
        return np.interp(x, xs, fs)


def strassen_energy(f: PiecewiseLinearFn) -> tuple:
    """(integral of f'^2 over [0, 1], whether it is <= 1)."""
    total = 0
    for (x0, f0), (x1, f1) in zip(f.knots, f.knots[1:]):
        dx = x1 - x0
        if dx == 0:
            raise ValueError(f"zero-length segment at x = {x0}")
        total += (f1 - f0) ** 2 / dx
    exact = all(_exact(x) and _exact(fx) for x, fx in f.knots)
    if exact:
        return Fraction(total), total <= 1
    return float(total), bool(total <= 1 + ADMISSIBLE_SLACK)


def zigzag_function(a: Sequence) -> PiecewiseLinearFn:
    """Zig-zag whose energy is 2 sum a - max a.

    The positive entries are visited in index order with a largest one
    moved last; knot l sits at x_l = 2(a_1 + ... + a_{l-1}) + a_l with
    height (-1)^{l-1} a_l, and f stays flat from the last knot to 1.
    """
    a = list(a)
    if any(x < 0 for x in a):
        raise ValueError("entries must be nonnegative")
    pos = [x for x in a if x > 0]
    if not pos:
        return PiecewiseLinearFn(((0, 0), (1, 0)))
    top = pos.index(max(pos))
    seq = pos[:top] + pos[top + 1 :] + [pos[top]]
    knots = [(0, 0)]
    base = 0
    for i, x in enumerate(seq):
        knots.append((2 * base + x, x if i % 2 == 0 else -x))
        base += x
    end = knots[-1][0]
    if end > 1:
        raise ValueError("2 sum a - max a exceeds 1; no zig-zag fits in [0, 1]")
    if end < 1:
        knots.append((1, knots[-1][1]))
    return PiecewiseLinearFn(tuple(knots))


def lil_scale(n: int) -> float:
    if n < 3:
        raise ValueError("checkpoints must be >= 3 so that log log n > 0")
    return math.sqrt(2 * n * math.log(math.log(n)))


@dataclass(frozen=True, eq=False)
class TracePoint:
    n: int
    a: np.ndarray
    functional: float
    ranked_functional: float
    min_scaled: float
    hirsch: float | None = None


def rescaled_height_trace(
    path: SpiderPath,
    checkpoints: Iterable[int],
    n_legs: int,
    g: Callable[[int], float] | None = None,
) -> list[TracePoint]:
    """Heights of one path scaled by sqrt(2n log log n) at each checkpoint.

    Each point holds the per-leg vector a, the functional 2 sum a - max a,
    (M_1 + 2 sum_{i=2..N} M_i) / sqrt(2n log log n), the smallest entry of
    a and, when ``g`` is given, H_m(n) / (sqrt(n) g(n)).
    """
    points = []
    for n in checkpoints:
        scale = lil_scale(n)
        if n > path.n:
            raise ValueError(f"checkpoint {n} is past the end of the path")
        prefix = SpiderPath(path.radii[: n + 1], path.legs[: n + 1], check=False)
        hs = compute_heights(prefix, n_legs, n_legs)
        a = hs.per_leg / scale
        ranked = np.zeros(n_legs)
        ranked[: hs.ranked.size] = hs.ranked
        points.append(
            TracePoint(
                n, a, strassen_condition(a)[0],
                (ranked[0] + 2 * ranked[1:].sum()) / scale,
                hs.h_min / scale,
                None if g is None else hs.h_min / (math.sqrt(n) * g(n)),
            )
        )
    return points


@dataclass(frozen=True, eq=False)
class HeightSample:
    """Leg heights at time n for many independent spider walks.

    ``per_leg[i, j]`` is H(j + 1, n) on trial i; ``ranked[i]`` holds the N
    largest excursion heights of trial i and ``ranked_legs[i]`` their legs.
    """

    n: int
    per_leg: np.ndarray
    ranked: np.ndarray
    ranked_legs: np.ndarray

    @property
    def h_min(self) -> np.ndarray:
        return self.per_leg.min(axis=1)

    def min_below_ranked(self) -> np.ndarray:
        """Per trial: H_m <= M_N, or the top N excursions share a leg."""
        n_legs = self.per_leg.shape[1]
        srt = np.sort(self.ranked_legs, axis=1)
        distinct = np.all(srt[:, 1:] != srt[:, :-1], axis=1) & (srt[:, 0] > 0)
        return ~distinct | (self.h_min <= self.ranked[:, n_legs - 1])

    def functional(self) -> np.ndarray:
        """2 sum a - max a per trial, a = heights / sqrt(2n log log n)."""
        a = self.per_leg / lil_scale(self.n)
        return 2 * a.sum(axis=1) - a.max(axis=1)


def _batch_heights(n: int, weights, streams) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    weights = as_weights(weights)
    n_legs = weights.n_legs
    trials = len(streams)
    _, _, table = simulate_spider_batch(n, weights, streams)
    row, height, leg, start = table["row"], table["height"], table["leg"], table["start"]
    per_leg = np.zeros((trials, n_legs), dtype=np.int64)
    np.maximum.at(per_leg, (row, leg - 1), height)
    order = np.lexsort((start, -height, row))
    first = np.searchsorted(row[order], np.arange(trials))
    rank = np.arange(order.size) - first[row[order]]
    keep = order[rank < n_legs]
    ranked = np.zeros((trials, n_legs), dtype=np.int64)
    ranked_legs = np.zeros((trials, n_legs), dtype=np.int64)
    ranked[row[keep], rank[rank < n_legs]] = height[keep]
    ranked_legs[row[keep], rank[rank < n_legs]] = leg[keep]
    return per_leg, ranked, ranked_legs


def sample_heights(n: int, weights, seed: int, trials: int, block: int = 256, start: int = 0) -> HeightSample:
    """Simulate ``trials`` spider walks of ``n`` steps (trial i uses
    ``RngStream(seed, start + i)``) and keep only their heights."""
    weights = as_weights(weights).require_positive()
    parts = []
    for lo in range(start, start + trials, block):
        hi = min(lo + block, start + trials)
        parts.append(_batch_heights(n, weights, [RngStream(seed, i) for i in range(lo, hi)]))
    if not parts:
        z = np.zeros((0, weights.n_legs), dtype=np.int64)
        return HeightSample(n, z, z, z)
    return HeightSample(n, *(np.concatenate(x) for x in zip(*parts)))
