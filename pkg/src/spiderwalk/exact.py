"""Exact transition probabilities of the spider walk, their continuum
limits, and a path-enumeration oracle to check them against."""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb, lcm

import numpy as np

from .core import ORIGIN, LegWeights, SpiderState, as_weights

EXACT_MAX_HALF_STEPS = 500
ORACLE_MAX_STEPS = 14
_LOG2 = math.log(2.0)


@dataclass(frozen=True)
class ProbValue:
    """A probability carried both linearly and as a natural log.

    ``exact`` holds the rational value when it was computed exactly.
    """

    linear: float
    log_form: float
    exact: Fraction | None = None

    @classmethod
    def from_fraction(cls, f: Fraction) -> "ProbValue":
        f = Fraction(f)
        return cls(float(f), _log_fraction(f), f)

    @classmethod
    def from_log(cls, lg: float) -> "ProbValue":
        return cls(math.exp(lg), lg)

    @classmethod
    def from_float(cls, x: float) -> "ProbValue":
        x = max(float(x), 0.0)
        return cls(x, math.log(x) if x > 0 else -math.inf)

    def __float__(self):
        return self.linear

    def is_zero(self) -> bool:
        return self.log_form == -math.inf


ZERO = ProbValue(0.0, -math.inf, Fraction(0))


def _log_fraction(f: Fraction) -> float:
    if f <= 0:
        return -math.inf
    return math.log(f.numerator) - math.log(f.denominator)


def _is_exact(c) -> bool:
    return isinstance(c, (int, Fraction)) and not isinstance(c, bool)


def _scale(c, pv: ProbValue) -> ProbValue:
    """c * pv for a nonnegative coefficient c."""
    if c == 0 or pv.is_zero():
        return ZERO
    if pv.exact is not None and _is_exact(c):
        return ProbValue.from_fraction(Fraction(c) * pv.exact)
    return ProbValue(float(c) * pv.linear, math.log(float(c)) + pv.log_form)


def _minus(a: ProbValue, b: ProbValue) -> ProbValue:
    if b.is_zero():
        return a
    if a.exact is not None and b.exact is not None:
        return ProbValue.from_fraction(a.exact - b.exact)
    return ProbValue.from_float(a.linear - b.linear)


def _plus(a: ProbValue, b: ProbValue) -> ProbValue:
    if a.exact is not None and b.exact is not None:
        return ProbValue.from_fraction(a.exact + b.exact)
    return ProbValue.from_float(a.linear + b.linear)


def walk_prob(m: int, d: int) -> ProbValue:
    """P(S(m) = d) for the simple symmetric walk on the line."""
    if m < 0:
        raise ValueError("m must be nonnegative")
    if abs(d) > m or (m + d) % 2:
        return ZERO
    up = (m + d) // 2
    if m <= 2 * EXACT_MAX_HALF_STEPS:
        return ProbValue.from_fraction(Fraction(comb(m, up), 1 << m))
    lg = math.lgamma(m + 1) - math.lgamma(up + 1) - math.lgamma(m - up + 1) - m * _LOG2
    return ProbValue.from_log(lg)


def binom_walk_prob(n: int, k: int) -> ProbValue:
    """P(S(2n) = 2k) = C(2n, n + k) / 2^{2n}; zero when |k| > n."""
    return walk_prob(2 * n, 2 * k)


def ballot_prob(n: int, k: int) -> ProbValue:
    """P(S(1) > 0, ..., S(2n - 1) > 0, S(2n) = 2k) = (k / n) P(S(2n) = 2k)."""
    if not 1 <= k <= n:
        raise ValueError("ballot probability needs 1 <= k <= n")
    return _scale(Fraction(k, n), binom_walk_prob(n, k))


def trans_from_origin(n: int, j: int, p_leg) -> ProbValue:
    """P(S_{2n} = v(2j, l) | S_0 = body) = 2 p_l P(S(2n) = 2j)."""
    if not 1 <= j <= n:
        return ZERO
    return _scale(2 * p_leg, binom_walk_prob(n, j))


def trans_cross_leg(n: int, j_start: int, i_end: int, p_target) -> ProbValue:
    """P(v(2j, l) -> v(2i, l*) in 2n steps), l != l*: 2 p_{l*} P(S(2n) = 2(j + i))."""
    if j_start < 1 or i_end < 1:
        raise ValueError("start and end half-heights must be >= 1")
    if i_end + j_start > n:
        return ZERO
    return _scale(2 * p_target, binom_walk_prob(n, j_start + i_end))


def trans_same_leg(n: int, j_start: int, i_end: int, p_leg) -> ProbValue:
    """P(v(2j, l) -> v(2i, l) in 2n steps)
    = P(S(2n) = 2(j - i)) - (1 - 2 p_l) P(S(2n) = 2(j + i))."""
    if j_start < 1 or i_end < 1:
        raise ValueError("start and end half-heights must be >= 1")
    if abs(i_end - j_start) > n:
        return ZERO
    direct = binom_walk_prob(n, j_start - i_end)
    reflected = binom_walk_prob(n, j_start + i_end)
    coef = 1 - 2 * p_leg
    if coef >= 0:
        return _minus(direct, _scale(coef, reflected))
    return _plus(direct, _scale(-coef, reflected))


def trans_to_origin(n: int, j_start: int) -> ProbValue:
    """P(v(2j, l) -> body in 2n steps) = P(S(2n) = 2j): the radial part is |S|."""
    return binom_walk_prob(n, j_start)


def transition_prob(n_steps: int, start: SpiderState, end: SpiderState, weights) -> ProbValue:
    """Closed-form transition probability for any step count and parity.

    Same three shapes as the half-step formulas with S(2n) replaced by
    S(m): body -> (b, l): 2 p_l P(S(m) = b); (a, l) -> (b, l*):
    2 p_{l*} P(S(m) = a + b); (a, l) -> (b, l): P(S(m) = b - a)
    - (1 - 2 p_l) P(S(m) = a + b); (a, l) -> body: P(S(m) = a).
    """
    weights = as_weights(weights)
    a, b = start.r, end.r
    if b == 0:
        return walk_prob(n_steps, a)
    p = weights[end.leg]
    if a == 0:
        return _scale(2 * p, walk_prob(n_steps, b))
    if start.leg != end.leg:
        return _scale(2 * p, walk_prob(n_steps, a + b))
    coef = 1 - 2 * p
    direct, reflected = walk_prob(n_steps, b - a), walk_prob(n_steps, a + b)
    if coef >= 0:
        return _minus(direct, _scale(coef, reflected))
    return _plus(direct, _scale(-coef, reflected))


def transition_row(n_steps: int, start: SpiderState, weights) -> dict[SpiderState, ProbValue]:
    """Closed-form probabilities of every state reachable in ``n_steps``."""
    weights = as_weights(weights)
    row = {ORIGIN: transition_prob(n_steps, start, ORIGIN, weights)}
    for r in range(1, start.r + n_steps + 1):
        for leg in range(1, weights.n_legs + 1):
            end = SpiderState(r, leg)
            row[end] = transition_prob(n_steps, start, end, weights)
    return row


def _oracle_tree(max_steps: int, start: SpiderState, weights: LegWeights):
    """Walk the tree of all step sequences of length <= max_steps.

    The probability of a sequence is prod (a_j / D) over departures from
    the body (leg j, weights written over a common denominator D) times
    (1/2) for every other step.  Numerators are summed per (depth, end
    state, number of departures) and turned into fractions at the end.
    """
    w = weights.exact()
    denom = lcm(*(q.denominator for q in w))
    nums = [int(q * denom) for q in w]
    acc: dict = defaultdict(int)
    stack = [(start.r, start.leg or 0, 0, 1, 0)]
    while stack:
        r, leg, depth, num, departures = stack.pop()
        acc[(depth, r, leg, departures)] += num
        if depth == max_steps:
            continue
        if r == 0:
            for j, a in enumerate(nums, 1):
                if a:
                    stack.append((1, j, depth + 1, num * a, departures + 1))
        else:
            stack.append((r + 1, leg, depth + 1, num, departures))
            stack.append((r - 1, leg if r > 1 else 0, depth + 1, num, departures))
    dists = [defaultdict(Fraction) for _ in range(max_steps + 1)]
    for (depth, r, leg, departures), num in acc.items():
        state = SpiderState(r, leg or None)
        dists[depth][state] += Fraction(num, denom**departures * 2 ** (depth - departures))
    return [dict(d) for d in dists]


@lru_cache(maxsize=256)
def _oracle_cached(max_steps: int, start: SpiderState, weights: LegWeights):
    return _oracle_tree(max_steps, start, weights)


def brute_force_distribution(n_steps: int, start: SpiderState, weights) -> dict[SpiderState, Fraction]:
    """Exact law of S_{n_steps} by summing over every step sequence."""
    if n_steps > ORACLE_MAX_STEPS:
        raise ValueError(f"enumeration is limited to {ORACLE_MAX_STEPS} steps")
    if n_steps < 0:
        raise ValueError("n_steps must be nonnegative")
    return _oracle_cached(n_steps, start, as_weights(weights))[n_steps]


def brute_force_transition(n_steps: int, start: SpiderState, end: SpiderState, weights) -> Fraction:
    return brute_force_distribution(n_steps, start, weights).get(end, Fraction(0))


def oracle_distributions(max_steps: int, start: SpiderState, weights) -> list[dict[SpiderState, Fraction]]:
    """Exact laws of S_0, ..., S_{max_steps} from a single enumeration."""
    if max_steps > ORACLE_MAX_STEPS:
        raise ValueError(f"enumeration is limited to {ORACLE_MAX_STEPS} steps")
    return _oracle_cached(max_steps, start, as_weights(weights))


def _check_time(t):
    if np.any(np.asarray(t) <= 0):
        raise ValueError("time must be positive")


def density_origin(t, y, p_leg):
    """Brownian spider density from the body to v(y, l)."""
    _check_time(t)
    return 2 * p_leg / np.sqrt(2 * np.pi * t) * np.exp(-np.square(y) / (2 * t))


def density_cross(t, x, y, p_target):
    _check_time(t)
    return 2 * p_target / np.sqrt(2 * np.pi * t) * np.exp(-np.square(np.add(x, y)) / (2 * t))


def density_same(t, x, y, p_leg):
    _check_time(t)
    norm = 1.0 / np.sqrt(2 * np.pi * t)
    return norm * np.exp(-np.square(np.subtract(x, y)) / (2 * t)) - (1 - 2 * p_leg) * norm * np.exp(
        -np.square(np.add(x, y)) / (2 * t)
    )


def lattice_limit_origin(t, y, p_leg):
    """Limit of sqrt(n) P(S_{2[nt]} = v(2[y sqrt n], l) | body)."""
    _check_time(t)
    return 2 * p_leg / np.sqrt(np.pi * t) * np.exp(-np.square(y) / t)


def lattice_limit_cross(t, x, y, p_target):
    _check_time(t)
    return 2 * p_target / np.sqrt(np.pi * t) * np.exp(-np.square(np.add(x, y)) / t)


def lattice_limit_same(t, x, y, p_leg):
    _check_time(t)
    norm = 1.0 / np.sqrt(np.pi * t)
    return norm * np.exp(-np.square(np.subtract(x, y)) / t) - (1 - 2 * p_leg) * norm * np.exp(
        -np.square(np.add(x, y)) / t
    )


def scaled_transition(n: int, t: float, y: float, p_leg: float, x: float = 0.0, case: str = "origin") -> float:
    """sqrt(n) times the lattice probability of reaching v(2[y sqrt n], .)
    in 2[nt] steps from the body (``origin``) or from v(2[x sqrt n], l) on
    another leg (``cross``) or the same leg (``same``)."""
    steps = math.floor(n * t)
    j_end = math.floor(y * math.sqrt(n))
    j_start = math.floor(x * math.sqrt(n))
    if case == "origin":
        pv = trans_from_origin(steps, j_end, p_leg)
    elif case == "cross":
        pv = trans_cross_leg(steps, j_start, j_end, p_leg)
    elif case == "same":
        pv = trans_same_leg(steps, j_start, j_end, p_leg)
    else:
        raise ValueError(f"unknown case {case!r}")
    return math.sqrt(n) * pv.linear


def lattice_limit(t: float, y: float, p_leg: float, x: float = 0.0, case: str = "origin") -> float:
    if case == "origin":
        return float(lattice_limit_origin(t, y, p_leg))
    if case == "cross":
        return float(lattice_limit_cross(t, x, y, p_leg))
    if case == "same":
        return float(lattice_limit_same(t, x, y, p_leg))
    raise ValueError(f"unknown case {case!r}")
