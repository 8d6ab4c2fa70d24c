"""Spider geometry: states, leg weights, paths, the spider metric, local
times and the one-step dynamics of the spider walk."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

import numpy as np

from .stats import as_generator


@dataclass(frozen=True)
class SpiderState:
    """Vertex of SP(N): the body (``r == 0``) or distance ``r`` up leg ``leg``.

    The body carries no leg; any leg passed with ``r == 0`` is dropped so
    that all representations of the origin compare equal.
    """

    r: int
    leg: int | None = None

    def __post_init__(self):
        if self.r < 0:
            raise ValueError("radial distance must be nonnegative")
        if self.r == 0:
            object.__setattr__(self, "leg", None)
        elif self.leg is None or self.leg < 1:
            raise ValueError("a state off the body needs a leg index >= 1")

    @property
    def is_origin(self) -> bool:
        return self.r == 0

    def __repr__(self):
        return "ORIGIN" if self.r == 0 else f"SpiderState(r={self.r}, leg={self.leg})"


ORIGIN = SpiderState(0)


@dataclass(frozen=True)
class LegWeights:
    """Leg-selection probabilities (p_1, ..., p_N) used at the body.

    Entries may be floats or ``Fraction``s; fractions keep the exact
    closed forms exact.
    """

    p: tuple

    def __post_init__(self):
        p = tuple(self.p)
        if not p:
            raise ValueError("need at least one leg")
        if any(q < 0 for q in p):
            raise ValueError("leg probabilities must be nonnegative")
        total = sum(p)
        exact = all(isinstance(q, (int, Fraction)) for q in p)
        if (exact and total != 1) or (not exact and abs(total - 1) > 1e-12):
            raise ValueError(f"leg probabilities sum to {total}, not 1")
        object.__setattr__(self, "p", p)

    @classmethod
    def uniform(cls, n_legs: int, exact: bool = False) -> "LegWeights":
        q = Fraction(1, n_legs) if exact else 1.0 / n_legs
        if not exact:
            return cls(tuple([q] * (n_legs - 1) + [1.0 - q * (n_legs - 1)]))
        return cls((q,) * n_legs)

    @property
    def n_legs(self) -> int:
        return len(self.p)

    def __len__(self):
        return len(self.p)

    def __getitem__(self, leg: int):
        """Probability of leg ``leg`` (1-based)."""
        if not 1 <= leg <= len(self.p):
            raise IndexError(f"leg {leg} outside 1..{len(self.p)}")
        return self.p[leg - 1]

    def as_array(self) -> np.ndarray:
        return np.array([float(q) for q in self.p])

    def cumulative(self) -> np.ndarray:
        c = np.cumsum(self.as_array())
        c[-1] = 1.0
        return c

    def is_uniform(self) -> bool:
        return max(self.p) - min(self.p) <= 1e-12

    def require_positive(self) -> "LegWeights":
        if any(q <= 0 for q in self.p):
            raise ValueError("every leg needs positive probability here")
        return self

    def exact(self) -> tuple[Fraction, ...]:
        """The weights as fractions; floats map to the nearest fraction with
        denominator <= 10^12, so 0.3 -> 3/10 and 1/3 -> 1/3."""
        return tuple(Fraction(q).limit_denominator(10**12) for q in self.p)


def as_weights(w) -> LegWeights:
    return w if isinstance(w, LegWeights) else LegWeights(tuple(w))


@dataclass(frozen=True, eq=False)
class WalkPath:
    """Simple random walk path S(0), ..., S(n) on the integers."""

    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.int64)
        if v.ndim != 1 or v.size == 0 or v[0] != 0:
            raise ValueError("a walk path starts at 0")
        if v.size > 1 and np.any(np.abs(np.diff(v)) != 1):
            raise ValueError("walk increments must be +-1")
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.size - 1

    def __len__(self):
        return self.values.size

    def __eq__(self, other):
        return isinstance(other, WalkPath) and np.array_equal(self.values, other.values)


@dataclass(frozen=True, eq=False)
class SpiderPath:
    """Spider walk S_0, ..., S_n stored column-wise.

    ``radii[k]`` is the distance from the body and ``legs[k]`` the leg index
    (0 on the body).
    """

    radii: np.ndarray = field(repr=False)
    legs: np.ndarray = field(repr=False)
    check: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        r = np.asarray(self.radii, dtype=np.int64)
        g = np.asarray(self.legs, dtype=np.int64)
        object.__setattr__(self, "radii", r)
        object.__setattr__(self, "legs", g)
        if self.check and not self.is_valid():
            raise ValueError("spider path violates the adjacency invariant")

    @classmethod
    def from_states(cls, states: Iterable[SpiderState]) -> "SpiderPath":
        states = list(states)
        return cls(np.array([s.r for s in states]), np.array([s.leg or 0 for s in states]))

    @property
    def n(self) -> int:
        return self.radii.size - 1

    def __len__(self):
        return self.radii.size

    def __getitem__(self, k: int) -> SpiderState:
        r = int(self.radii[k])
        return SpiderState(r, int(self.legs[k]) if r else None)

    def states(self) -> list[SpiderState]:
        return [self[k] for k in range(len(self))]

    def __eq__(self, other):
        return (
            isinstance(other, SpiderPath)
            and np.array_equal(self.radii, other.radii)
            and np.array_equal(self.legs, other.legs)
        )

    def is_valid(self) -> bool:
        r, g = self.radii, self.legs
        if r.ndim != 1 or r.size == 0 or r[0] != 0 or r.shape != g.shape:
            return False
        if np.any(r < 0) or np.any((r == 0) != (g == 0)):
            return False
        if r.size == 1:
            return True
        if np.any(np.abs(np.diff(r)) != 1):
            return False
        # leg may only change by passing through the body
        both_off = (r[:-1] > 0) & (r[1:] > 0)
        return not np.any(both_off & (g[:-1] != g[1:]))


def spider_distance(a: SpiderState, b: SpiderState) -> int:
    if a.r == 0 or b.r == 0 or a.leg == b.leg:
        return abs(a.r - b.r)
    return a.r + b.r


def spider_distance_arrays(r1, leg1, r2, leg2) -> np.ndarray:
    """Vectorised metric for (radius, leg) columns; radii may be real."""
    r1, r2 = np.asarray(r1, dtype=float), np.asarray(r2, dtype=float)
    leg1, leg2 = np.asarray(leg1), np.asarray(leg2)
    same = (r1 == 0) | (r2 == 0) | (leg1 == leg2)
    return np.where(same, np.abs(r1 - r2), r1 + r2)


def step(state: SpiderState, weights: LegWeights, stream) -> SpiderState:
    """One transition of the spider walk."""
    rng = as_generator(stream)
    u = rng.random()
    if state.r == 0:
        leg = int(np.searchsorted(weights.cumulative(), u, side="right")) + 1
        return SpiderState(1, min(leg, weights.n_legs))
    r = state.r + 1 if u < 0.5 else state.r - 1
    return SpiderState(r, state.leg)


def local_time(path: SpiderPath, site: SpiderState, n: int) -> int:
    """#{k : 0 < k <= n, S_k = site}."""
    if n > path.n:
        raise ValueError(f"n={n} exceeds path length {path.n}")
    r = path.radii[1 : n + 1]
    hit = r == site.r
    if site.r:
        hit &= path.legs[1 : n + 1] == site.leg
    return int(np.count_nonzero(hit))


def visit_counts(path: SpiderPath, height: int, n_legs: int, n: int | None = None) -> np.ndarray:
    """Local time at v(height, j) up to step n, for every leg j."""
    n = path.n if n is None else n
    if height < 1:
        raise ValueError("height must be >= 1")
    r = path.radii[1 : n + 1]
    g = path.legs[1 : n + 1][r == height]
    return np.bincount(g - 1, minlength=n_legs)[:n_legs] if g.size else np.zeros(n_legs, dtype=np.int64)


def enumerate_states(n_legs: int, max_r: int) -> list[SpiderState]:
    """All states with radius <= max_r."""
    return [ORIGIN] + [SpiderState(r, j) for r in range(1, max_r + 1) for j in range(1, n_legs + 1)]

