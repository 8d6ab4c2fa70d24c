"""Spiders with many legs: tall-excursion counts, the events that every leg
is reached at a given height, urn (coupon collector) limits and the
Hoeffding envelopes used to connect the two.

Conventions: zeros are counted at times 0 <= k < n, so the excursion
leaving 0 at time 0 is the first one.  Then xi(0, rho(m)) = m and
zeta(1, n) = xi(0, n) hold on every path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .core import LegWeights, SpiderPath, WalkPath, visit_counts
from .stats import RngStream, abs_normal_cdf, normal_sf, proportion_ci

MODES = ("fixed", "up", "down")


@dataclass(frozen=True, eq=False)
class ExcursionCountSummary:
    """Zero local time, tall-excursion count and return times of one path.

    ``rho`` lists every zero of the path in order (rho[0] = 0);
    ``h_n`` is the first zero at or after n, None if the path ends first.
    """

    n: int
    height: int
    xi0: int
    zeta: int
    rho: np.ndarray
    h_n: int | None

    def xi_at(self, t: int) -> int:
        return int(np.searchsorted(self.rho, t, side="left"))


def count_tall_excursions(path: WalkPath, L: int, n: int | None = None, mode: str = "literal") -> ExcursionCountSummary:
    """Count the excursions that leave 0 before time n and reach |S| = L.

    ``mode="literal"`` lets such an excursion reach L after n (it is
    judged on the whole stored path); ``mode="within"`` requires L to be
    reached by time n.
    """
    if L < 1:
        raise ValueError("height must be >= 1")
    if mode not in ("literal", "within"):
        raise ValueError(f"unknown mode {mode!r}")
    v = path.values
    n = path.n if n is None else n
    if not 0 <= n <= path.n:
        raise ValueError(f"n={n} outside 0..{path.n}")
    rho = np.flatnonzero(v == 0)
    xi0 = int(np.searchsorted(rho, n, side="left"))
    absv = np.abs(v)
    tops = np.maximum.reduceat(absv, rho)[:xi0]
    if mode == "within" and xi0:
        # only the last excursion can straddle n
        tops[-1] = absv[rho[xi0 - 1] : n + 1].max()
    zeta = int(np.count_nonzero(tops >= L))
    later = rho[rho >= n]
    return ExcursionCountSummary(n, L, xi0, zeta, rho, int(later[0]) if later.size else None)


def check_min_visits(path: SpiderPath, L: int, k: int, n_legs: int, n: int | None = None) -> tuple[bool, bool]:
    """(M, A): every leg's height-L site visited at least once / k times."""
    if L < 1 or k < 1:
        raise ValueError("need L >= 1 and k >= 1")
    counts = visit_counts(path, L, n_legs, n)
    low = int(counts.min())
    return low >= 1, low >= k


@dataclass(frozen=True)
class GrowingLegsConfig:
    """Experiment on SP(N) with uniform weights run for
    n = floor((f(N) L N log N)^2) steps.

    ``mode`` picks f(N): ``fixed`` uses the constant c, ``up`` uses
    c log N and ``down`` uses c / log N.  ``k`` > 1 asks for k visits.
    """

    N: int
    L: int = 1
    c: float = 1.0
    trials: int = 1000
    mode: str = "fixed"
    k: int = 1
    enforce_regime: bool = True

    def __post_init__(self):
        if self.N < 2:
            raise ValueError("need at least two legs")
        if self.L < 1 or self.k < 1 or self.trials < 1:
            raise ValueError("L, k and trials must be >= 1")
        if self.c <= 0:
            raise ValueError("c must be positive")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.enforce_regime and self.L > self.N / math.log(self.N):
            raise ValueError(f"L={self.L} exceeds N/log N={self.N / math.log(self.N):.3g}")

    @property
    def scale(self) -> float:
        logn = math.log(self.N)
        return {"fixed": self.c, "up": self.c * logn, "down": self.c / logn}[self.mode]

    @property
    def n(self) -> int:
        return math.floor((self.scale * self.L * self.N * math.log(self.N)) ** 2)

    @property
    def reference(self) -> float:
        """Large-N limit of the event probability."""
        if self.mode == "up":
            return 1.0
        if self.mode == "down":
            return 0.0
        return 2.0 * normal_sf(1.0 / self.c)

    @property
    def anchor(self) -> str:
        if self.mode == "fixed":
            return "Thm 5.5" if self.k > 1 else ("Thm 5.1" if self.L == 1 and self.c == 1 else "Thm 5.2")
        if self.mode == "up":
            return "Thm 5.6" if self.k > 1 else "Thm 5.3"
        return "Thm 5.4"


@dataclass(frozen=True)
class EventEstimate:
    successes: int
    trials: int
    reference: float
    anchor: str
    ci: tuple[float, float]

    @property
    def estimate(self) -> float:
        return self.successes / self.trials


def leg_visit_trial(n: int, L: int, n_legs: int, stream) -> np.ndarray:
    """Visits to the height-L site of every leg by time n, for one walk.

    Only the reflected walk's path below L is simulated step by step;
    time spent above L is skipped with exact first-passage durations, and
    a leg is drawn only for excursions that reach L.
    """
    g = stream.generator() if isinstance(stream, RngStream) else stream
    counts = np.zeros(n_legs, dtype=np.int64)
    cum = LegWeights.uniform(n_legs).cumulative()
    _kernels.compressed_walk(g, n, L, cum, counts, _kernels.TAIL, False)
    return counts


def estimate_M_probability(cfg: GrowingLegsConfig, seed: int, start: int = 0, weights: LegWeights | None = None) -> EventEstimate:
    """Monte Carlo estimate of P(M(n, L)) (or P(A(n, L, k)) when k > 1).

    Trial i uses ``RngStream(seed, start + i)``.
    """
    if weights is not None and not weights.is_uniform():
        raise ValueError("many-leg results assume uniform leg weights")
    hits = count_event_hits(cfg, seed, start, start + cfg.trials)
    return EventEstimate(hits, cfg.trials, cfg.reference, cfg.anchor, proportion_ci(hits, cfg.trials))


def count_event_hits(cfg: GrowingLegsConfig, seed: int, start: int, stop: int) -> int:
    n = cfg.n
    hits = 0
    for i in range(start, stop):
        counts = leg_visit_trial(n, cfg.L, cfg.N, RngStream(seed, i))
        hits += int(counts.min() >= cfg.k)
    return hits


def coupon_balls(N: int, m: int, x: float) -> int:
    """N log N + (m - 1) N log log N + N x, rounded to the nearest integer."""
    if N < 2:
        return max(m, round(N * x)) if N == 1 else 0
    return max(0, round(N * math.log(N) + (m - 1) * N * math.log(math.log(N)) + N * x))


def erdos_renyi_limit(m: int, x: float) -> float:
    """exp(-exp(-x) / (m - 1)!)."""
    if m < 1:
        raise ValueError("m must be >= 1")
    return math.exp(-math.exp(-x) / math.factorial(m - 1))


def coupon_trial(N: int, balls: int, m: int, stream) -> bool:
    g = stream.generator() if isinstance(stream, RngStream) else stream
    counts = np.bincount(g.integers(0, N, size=balls), minlength=N)
    return bool(counts.min() >= m)


def coupon_hits(N: int, balls: int, m: int, seed: int, start: int, stop: int) -> int:
    return sum(coupon_trial(N, balls, m, RngStream(seed, i)) for i in range(start, stop))


def coupon_simulate(N: int, balls: int, m: int, trials: int, seed: int, start: int = 0) -> EventEstimate:
    """Throw ``balls`` balls into N equally likely urns; estimate
    P(every urn holds at least m)."""
    if min(N, m, trials) < 1 or balls < 0:
        raise ValueError("N, m and trials must be positive")
    hits = coupon_hits(N, balls, m, seed, start, start + trials)
    x = (balls - N * math.log(N) - (m - 1) * N * math.log(math.log(N))) / N if N > 2 else math.nan
    ref = erdos_renyi_limit(m, x) if N > 2 else math.nan
    return EventEstimate(hits, trials, ref, "Thm 5.8" if m == 1 else "Thm 5.7", proportion_ci(hits, trials))


def hoeffding_bound(k: int, x: float) -> float:
    """2 exp(-2 k x^2)."""
    if k < 1 or x <= 0:
        raise ValueError("need k >= 1 and x > 0")
    return 2.0 * math.exp(-2.0 * k * x * x)


@dataclass(frozen=True)
class EnvelopeCheck:
    exceedances: int
    trials: int
    bound: float

    @property
    def empirical(self) -> float:
        return self.exceedances / self.trials

    @property
    def sigma(self) -> float:
        p = self.empirical
        return math.sqrt(p * (1 - p) / self.trials)

    @property
    def ok(self) -> bool:
        return self.empirical <= self.bound + 3 * self.sigma


def deviation_check(L: int, i: int, k: int, x: float, trials: int, seed: int, start: int = 0) -> EnvelopeCheck:
    """Empirical P(|zeta(L, rho(i)) - i / L| >= k x) against 2 exp(-2 k x^2).

    zeta(L, rho(i)) counts which of i fresh excursions reach L; each is
    walked step by step.  The bound needs i <= k.
    """
    if i > k:
        raise ValueError("the envelope needs i <= k")
    bound = hoeffding_bound(k, x)
    hits = 0
    for t in range(start, start + trials):
        tall = _kernels.tall_excursion_count(RngStream(seed, t).generator(), i, L)
        hits += abs(tall - i / L) >= k * x
    return EnvelopeCheck(hits, trials, bound)


def lemma53_threshold(n: int) -> float:
    return 4.0 * n**0.25 * math.log(n) ** 0.75


def count_trial(n: int, L: int, stream, mode: str = "literal") -> tuple[int, int]:
    """(xi(0, n), zeta(L, n)) for one walk, simulated coarsely above L."""
    g = stream.generator() if isinstance(stream, RngStream) else stream
    counts = np.zeros(1, dtype=np.int64)
    zeros, within, literal = _kernels.compressed_walk(
        g, n, L, np.ones(1), counts, _kernels.TAIL, mode == "literal"
    )
    return zeros, (literal if mode == "literal" else within)


def lemma53_check(n: int, L: int, trials: int, seed: int, start: int = 0, mode: str = "literal") -> EnvelopeCheck:
    """Empirical P(|zeta(L, n) - xi(0, n) / L| >= 4 n^{1/4} (log n)^{3/4})
    against 2 / n."""
    thr = lemma53_threshold(n)
    hits = 0
    for t in range(start, start + trials):
        xi0, zeta = count_trial(n, L, RngStream(seed, t), mode)
        hits += abs(zeta - xi0 / L) >= thr
    return EnvelopeCheck(hits, trials, 2.0 / n)


def zero_local_time_sample(n: int, trials: int, seed: int, start: int = 0) -> np.ndarray:
    """xi(0, n) for ``trials`` independent walks, by renewal over return times."""
    return np.array([count_trial(n, 1, RngStream(seed, t))[0] for t in range(start, start + trials)])


def zero_local_time_limit(x):
    """P(|Z| <= x)."""
    return abs_normal_cdf(x)
