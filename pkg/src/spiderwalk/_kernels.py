"""Compiled inner loops.

All randomness comes from a ``numpy.random.Generator`` handed in by the
caller, so a kernel consumes exactly the stream a pure-numpy loop would.
"""

from __future__ import annotations

import math

import numba
import numpy as np

TABLE_SIZE = 1 << 20
_INV_SQRT_PI = 1.0 / math.sqrt(math.pi)


def _tail_table(size: int = TABLE_SIZE) -> np.ndarray:
    # u[m] = P(S(2m) = 0) = C(2m, m) / 4^m = P(no zero in 1..2m)
    m = np.arange(1, size + 1, dtype=np.float64)
    return np.concatenate(([1.0], np.cumprod((2 * m - 1) / (2 * m))))


TAIL = _tail_table()


@numba.njit(cache=True)
def _tail_asymptotic(m):
    x = 1.0 / m
    return _INV_SQRT_PI / math.sqrt(m) * (
        1.0 - x / 8.0 + x * x / 128.0 + 5.0 * x**3 / 1024.0 - 21.0 * x**4 / 32768.0
    )


@numba.njit(cache=True)
def passage_index(u, table, cap):
    """Smallest m >= 1 with table-tail u_{2m} < u, or cap + 1 if it exceeds cap.

    Drawing u uniform on (0, 1) this gives P(index > m) = u_{2m}: the index
    of the first return to zero (time 2m) of a simple random walk, and of
    its first passage one level down (time 2m - 1).
    """
    size = table.shape[0] - 1
    if u > table[1] and cap >= 1:
        return 1
    if table[size] < u:
        lo, hi = 1, size  # table[lo] >= u > table[hi]
        while hi - lo > 1:
            mid = (lo + hi) >> 1
            if table[mid] < u:
                hi = mid
            else:
                lo = mid
        return hi if hi <= cap else cap + 1
    if cap <= size:
        return cap + 1
    if u <= 0.0 or _tail_asymptotic(float(cap)) >= u:
        return cap + 1
    lo = size
    hi = max(size + 1, int(1.0 / (math.pi * u * u)))
    while _tail_asymptotic(float(hi)) >= u:
        lo = hi
        hi = min(2 * hi, cap)
    while hi - lo > 1:
        mid = lo + ((hi - lo) >> 1)
        if _tail_asymptotic(float(mid)) < u:
            hi = mid
        else:
            lo = mid
    return hi


@numba.njit(cache=True)
def passage_indices(u, table, cap):
    out = np.empty(u.shape[0], dtype=np.int64)
    for i in range(u.shape[0]):
        out[i] = passage_index(u[i], table, cap)
    return out


@numba.njit(cache=True)
def compressed_walk(g, n, height, cum, counts, table, finish):
    """Reflected walk |S| on 0..n, simulated exactly but coarsely above ``height``.

    Levels 0..height move one step at a time; each excursion above
    ``height`` is replaced by a sampled first-passage duration.  Every
    excursion that visits ``height`` by time n draws a leg from ``cum`` the
    first time it gets there, and each visit at or before n adds one to
    ``counts[leg]``.

    Returns (zeros in [0, n), excursions that reached ``height`` by n,
    excursions started before n that reach ``height`` before returning).
    The last count finishes the excursion straddling n when ``finish``.
    """
    t = 0
    r = 0
    zeros = 0
    tall = 0
    leg = -1
    n_legs = cum.shape[0]
    while t < n:
        if r == 0:
            zeros += 1
            leg = -1
            r = 1
            t += 1
        elif r == height:
            if g.random() < 0.5:
                r -= 1
                t += 1
                continue
            m = passage_index(g.random(), table, (n - t) // 2 + 1)
            t += 2 * m
        else:
            r += 1 if g.random() < 0.5 else -1
            t += 1
        if r == height and t <= n:
            if leg < 0:
                u = g.random()
                leg = 0
                while leg < n_legs - 1 and cum[leg] <= u:
                    leg += 1
                tall += 1
            counts[leg] += 1
    literal = tall
    if finish and r > 0 and leg < 0:
        while 0 < r < height:
            r += 1 if g.random() < 0.5 else -1
        if r == height:
            literal += 1
    return zeros, tall, literal


@numba.njit(cache=True)
def tall_excursion_count(g, excursions, height):
    """How many of ``excursions`` fresh excursions reach ``height``.

    Each excursion leaves 0 for 1 and is walked step by step until it
    reaches ``height`` or falls back to 0.
    """
    hits = 0
    for _ in range(excursions):
        r = 1
        while 0 < r < height:
            r += 1 if g.random() < 0.5 else -1
        if r >= height:
            hits += 1
    return hits


@numba.njit(cache=True, nogil=True)
def embed_chunk(inc, istate, fstate, tau, b_tau, exc_tau, b_int, exc_int, steps_per_unit, target, snap_tol):
    """Advance the unit-band Skorokhod embedding over one chunk of increments.

    istate = [grid index, lattice level, sign of B, Brownian excursion id,
              taus recorded, integer times recorded, first bad grid index]
    fstate = [B, worst snap error]
    Returns the number of increments consumed; stops early once ``target``
    band exits and integer times 0..target are recorded.
    """
    gi, level, sgn, exc, n_tau, n_int, bad = (
        istate[0], istate[1], istate[2], istate[3], istate[4], istate[5], istate[6]
    )
    b = fstate[0]
    worst = fstate[1]
    used = 0
    for i in range(inc.shape[0]):
        gi += 1
        b += inc[i]
        used += 1
        s = 1 if b > 0.0 else (-1 if b < 0.0 else 0)
        if s != sgn:
            exc += 1
            sgn = s
        if b >= level + 1.0 or b <= level - 1.0:
            level += 1 if b >= level + 1.0 else -1
            err = abs(b - level)
            if err > worst:
                worst = err
            if err > snap_tol and bad < 0:
                bad = gi
            if n_tau < target:
                n_tau += 1
                tau[n_tau] = gi
                b_tau[n_tau] = b
                exc_tau[n_tau] = exc
        if gi % steps_per_unit == 0 and n_int <= target:
            b_int[n_int] = b
            exc_int[n_int] = exc
            n_int += 1
        if n_tau >= target and n_int > target:
            break
    istate[0], istate[1], istate[2], istate[3], istate[4], istate[5], istate[6] = (
        gi, level, sgn, exc, n_tau, n_int, bad
    )
    fstate[0] = b
    fstate[1] = worst
    return used
