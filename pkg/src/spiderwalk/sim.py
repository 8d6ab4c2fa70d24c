"""Monte Carlo construction of spider walks and of the coupled
walk / Brownian spider pair.

Two constructions of the spider walk are provided and must agree in law:
the excursion construction (a line walk whose excursions from zero are
dropped on independently chosen legs) and the direct Markov chain.  The
Brownian side simulates B on a uniform grid, embeds the walk at the
unit-band exit times and hands each Brownian excursion that carries a walk
excursion the same leg as that walk excursion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .core import LegWeights, SpiderPath, SpiderState, WalkPath, as_weights, spider_distance_arrays, step
from .errors import InvariantViolation, SnapGuardError
from .stats import RngStream, as_generator

SNAP_FACTOR = 6.0


@dataclass(frozen=True)
class ExcursionRecord:
    start_idx: int
    end_idx: int
    height: int
    complete: bool
    leg: int | None = None


def simulate_ssrw(n: int, stream) -> WalkPath:
    if n < 0:
        raise ValueError("n must be nonnegative")
    rng = as_generator(stream)
    steps = rng.integers(0, 2, size=n, dtype=np.int8).astype(np.int64) * 2 - 1
    return WalkPath(np.concatenate(([0], np.cumsum(steps))))


def _excursion_bounds(values: np.ndarray):
    zeros = np.flatnonzero(values == 0)
    n = values.size - 1
    starts = zeros[:-1] if zeros[-1] == n else zeros
    ends = np.append(zeros[1:], n) if zeros[-1] != n else zeros[1:]
    heights = (
        np.maximum.reduceat(np.abs(values), starts) if starts.size else np.zeros(0, dtype=np.int64)
    )
    complete = values[ends] == 0
    return starts, ends, heights, complete


def decompose_excursions(path: WalkPath) -> list[ExcursionRecord]:
    """Excursions of |S| away from 0, in time order; an unfinished tail
    excursion is reported with ``complete=False``."""
    starts, ends, heights, complete = _excursion_bounds(path.values)
    return [
        ExcursionRecord(int(s), int(e), int(h), bool(c))
        for s, e, h, c in zip(starts, ends, heights, complete)
    ]


def draw_legs(count: int, weights: LegWeights, rng: np.random.Generator) -> np.ndarray:
    """``count`` i.i.d. legs (1-based) with P(leg = j) = p_j."""
    u = rng.random(count)
    legs = np.searchsorted(weights.cumulative(), u, side="right") + 1
    return np.minimum(legs, weights.n_legs)


def assign_legs(path: WalkPath, weights, stream, excursions=None) -> SpiderPath:
    """Spider walk built by putting each excursion of |S| on a random leg."""
    weights = as_weights(weights)
    rng = as_generator(stream)
    starts, ends, _, _ = _excursion_bounds(path.values)
    if excursions is not None and len(excursions) != starts.size:
        raise ValueError("excursion list does not belong to this path")
    legs_per = draw_legs(starts.size, weights, rng)
    radii = np.abs(path.values)
    exc_id = np.cumsum(path.values == 0) - 1
    off = radii > 0
    legs = np.zeros_like(radii)
    legs[off] = legs_per[exc_id[off]]
    return SpiderPath(radii, legs, check=False)


def simulate_spider(n: int, weights, stream) -> SpiderPath:
    """Excursion construction: line walk first, then one leg per excursion."""
    rng = as_generator(stream)
    return assign_legs(simulate_ssrw(n, rng), weights, rng)


def simulate_spider_direct(n: int, weights, stream, size: int | None = None):
    """Direct Markov-chain simulation.

    With ``size=None`` returns one ``SpiderPath`` built with ``core.step``;
    otherwise ``size`` independent chains are advanced together and the
    (size, n + 1) arrays of radii and legs are returned.
    """
    weights = as_weights(weights)
    rng = as_generator(stream)
    if size is None:
        states = [SpiderState(0)]
        for _ in range(n):
            states.append(step(states[-1], weights, rng))
        return SpiderPath.from_states(states)
    cum = weights.cumulative()
    radii = np.zeros((size, n + 1), dtype=np.int64)
    legs = np.zeros((size, n + 1), dtype=np.int64)
    r = np.zeros(size, dtype=np.int64)
    g = np.zeros(size, dtype=np.int64)
    for k in range(1, n + 1):
        u = rng.random(size)
        at_body = r == 0
        new_leg = np.minimum(np.searchsorted(cum, u, side="right") + 1, weights.n_legs)
        g = np.where(at_body, new_leg, g)
        r = np.where(at_body, 1, np.where(u < 0.5, r + 1, r - 1))
        g = np.where(r == 0, 0, g)
        radii[:, k] = r
        legs[:, k] = g
    return radii, legs


def simulate_spider_batch(n: int, weights, streams):
    """Excursion construction for many trials at once.

    Trial i draws from ``streams[i]`` in the same order as
    ``simulate_spider`` (steps first, then legs), so row i equals
    ``simulate_spider(n, weights, streams[i])``.  Returns (radii, legs,
    excursion table) where the table holds, per excursion, its trial row,
    start index, height and leg.
    """
    weights = as_weights(weights)
    gens = [as_generator(s) for s in streams]
    steps = np.empty((len(gens), n), dtype=np.int8)
    for i, rng in enumerate(gens):
        steps[i] = rng.integers(0, 2, size=n, dtype=np.int8)

    def legs_for(per_row):
        if not gens:
            return np.zeros(0, dtype=np.int64)
        return np.concatenate([draw_legs(int(k), weights, rng) for k, rng in zip(per_row, gens)])

    return _spider_rows(steps, legs_for)


def simulate_spider_many(n: int, weights, stream, size: int):
    """``size`` independent spider walks from one stream, same output as
    ``simulate_spider_batch``.  All steps are drawn first, then all legs."""
    weights = as_weights(weights)
    rng = as_generator(stream)
    steps = rng.integers(0, 2, size=(size, n), dtype=np.int8)
    return _spider_rows(steps, lambda per_row: draw_legs(int(per_row.sum()), weights, rng))


def _spider_rows(steps: np.ndarray, legs_for):
    trials, n = steps.shape
    walk = np.zeros((trials, n + 1), dtype=np.int32)
    np.cumsum(steps.astype(np.int32) * 2 - 1, axis=1, out=walk[:, 1:])
    radii = np.abs(walk)
    del walk
    exc_local = np.cumsum(radii == 0, axis=1) - 1
    per_row = exc_local[:, -1] + 1 - (radii[:, -1] == 0)
    offsets = np.concatenate(([0], np.cumsum(per_row)[:-1])).astype(np.int64)
    legs_flat = legs_for(per_row)
    gid = exc_local + offsets[:, None]
    off = radii > 0
    legs = np.zeros_like(radii)
    legs[off] = legs_flat[gid[off]]
    heights = np.zeros(legs_flat.size, dtype=np.int64)
    np.maximum.at(heights, gid[off], radii[off])
    start_of = np.zeros(legs_flat.size, dtype=np.int64)
    zr, zc = np.nonzero((radii == 0)[:, :-1])
    start_of[gid[zr, zc]] = zc
    table = {
        "row": np.repeat(np.arange(trials), per_row),
        "start": start_of,
        "height": heights,
        "leg": legs_flat,
    }
    return radii, legs, table


@dataclass(frozen=True, eq=False)
class GridBrownianPath:
    dt: float
    values: np.ndarray = field(repr=False)

    @property
    def horizon(self) -> float:
        return (self.values.size - 1) * self.dt


def simulate_bm_grid(T: float, dt: float, stream) -> GridBrownianPath:
    if dt <= 0:
        raise ValueError("grid step must be positive")
    if T < dt:
        raise ValueError("horizon must cover at least one grid step")
    rng = as_generator(stream)
    steps = int(round(T / dt))
    inc = rng.standard_normal(steps) * math.sqrt(dt)
    return GridBrownianPath(dt, np.concatenate(([0.0], np.cumsum(inc))))


@dataclass(frozen=True, eq=False)
class CouplingRecord:
    """Unit-band Skorokhod embedding of a walk in a grid Brownian path.

    ``tau[i]`` is the grid index of the i-th band exit (``tau[0] = 0``),
    ``embedded`` the walk S(i) = B(tau_i) snapped to the lattice.
    ``exc_at_tau`` / ``exc_at_int`` label the grid excursion of B (maximal
    run of one sign) containing tau_i and integer time m; ``b_at_int[m]`` is
    B(m).  ``assignments`` maps excursion labels to legs once legs are drawn.
    """

    dt: float
    tau: np.ndarray = field(repr=False)
    b_at_tau: np.ndarray = field(repr=False)
    exc_at_tau: np.ndarray = field(repr=False)
    b_at_int: np.ndarray = field(repr=False)
    exc_at_int: np.ndarray = field(repr=False)
    max_snap_error: float = 0.0
    assignments: dict = field(default_factory=dict, repr=False)

    @property
    def count(self) -> int:
        return self.tau.size - 1

    @property
    def embedded(self) -> WalkPath:
        return WalkPath(np.rint(self.b_at_tau).astype(np.int64))

    @property
    def tau_times(self) -> np.ndarray:
        return self.tau * self.dt


class _Embedder:
    def __init__(self, dt: float, target: int, snap_tol: float | None = None):
        self.dt = dt
        self.target = target
        self.spu = int(round(1.0 / dt))
        if abs(self.spu * dt - 1.0) > 1e-9:
            raise ValueError("1/dt must be an integer so integer times fall on the grid")
        self.snap_tol = SNAP_FACTOR * math.sqrt(dt) if snap_tol is None else snap_tol
        self.tau = np.zeros(target + 1, dtype=np.int64)
        self.b_tau = np.zeros(target + 1)
        self.exc_tau = np.zeros(target + 1, dtype=np.int64)
        self.b_int = np.zeros(target + 1)
        self.exc_int = np.zeros(target + 1, dtype=np.int64)
        self.istate = np.array([0, 0, 0, 0, 0, 1, -1], dtype=np.int64)
        self.fstate = np.zeros(2)

    @property
    def done(self) -> bool:
        return self.istate[4] >= self.target and self.istate[5] > self.target

    def feed(self, inc: np.ndarray) -> int:
        return _kernels.embed_chunk(
            inc, self.istate, self.fstate, self.tau, self.b_tau, self.exc_tau,
            self.b_int, self.exc_int, self.spu, self.target, self.snap_tol,
        )

    def record(self, trial: int | None = None) -> CouplingRecord:
        if self.istate[6] >= 0:
            raise SnapGuardError(
                f"band exit at grid index {self.istate[6]} misses the lattice by more "
                f"than {self.snap_tol:.3g}", trial,
            )
        k, m = int(self.istate[4]), int(self.istate[5])
        return CouplingRecord(
            self.dt, self.tau[: k + 1].copy(), self.b_tau[: k + 1].copy(), self.exc_tau[: k + 1].copy(),
            self.b_int[:m].copy(), self.exc_int[:m].copy(), float(self.fstate[1]),
        )


def skorokhod_embed(bm: GridBrownianPath, n: int | None = None, snap_tol: float | None = None) -> CouplingRecord:
    """Embed a simple walk at the successive unit-band exit times of ``bm``.

    A band is centred on the current lattice value, so grid overshoot never
    accumulates.  Stops after ``n`` exits (default: as many as the horizon
    allows); a short horizon gives a partial record, check ``count``.
    """
    inc = np.diff(bm.values)
    target = inc.size if n is None else n
    emb = _Embedder(bm.dt, target, snap_tol)
    emb.feed(inc)
    return emb.record()


@dataclass(frozen=True, eq=False)
class CoupledPair:
    """Spider walk and Brownian spider built on one Brownian path.

    ``walk`` is the embedded spider walk S_m; ``bm_radius[m]`` and
    ``bm_leg[m]`` give the Brownian spider at integer time m (leg 0 on the
    body); ``distance[m]`` is the spider distance between the two.
    """

    walk: SpiderPath
    bm_radius: np.ndarray = field(repr=False)
    bm_leg: np.ndarray = field(repr=False)
    record: CouplingRecord
    distance: np.ndarray = field(repr=False)
    shared: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return min(self.walk.n, self.bm_radius.size - 1)

    def sup_distance(self, n: int) -> float:
        return float(self.distance[: n + 1].max())

    def sup_ratio(self, n: int) -> float:
        """sup_{m<=n} distance / ((n log log n)^{1/4} (log n)^{1/2})."""
        if n < 3:
            raise ValueError("need n >= 3")
        scale = (n * math.log(math.log(n))) ** 0.25 * math.sqrt(math.log(n))
        return self.sup_distance(n) / scale

    def legs_agree(self) -> bool:
        """Same leg at every m where both sit in one excursion off the body."""
        m = self.shared
        return bool(np.all(self.walk.legs[: m.size][m] == self.bm_leg[: m.size][m]))


def _couple(record: CouplingRecord, weights: LegWeights, stream, trial: int | None = None) -> CoupledPair:
    rng = as_generator(stream)
    aux = stream.child(1).generator() if isinstance(stream, RngStream) else rng
    embedded = record.embedded.values
    n = min(embedded.size, record.b_at_int.size) - 1
    starts, ends, _, _ = _excursion_bounds(embedded)
    kappa = draw_legs(starts.size, weights, rng)
    assignments: dict[int, int] = {}
    for s, e, leg in zip(starts, ends, kappa):
        stop = e + 1 if embedded[e] != 0 else e
        labels = np.unique(record.exc_at_tau[s + 1 : stop])
        if labels.size != 1:
            raise InvariantViolation(
                f"walk excursion starting at step {s} spans {labels.size} Brownian excursions", trial
            )
        assignments[int(labels[0])] = int(leg)
    walk_legs = np.zeros(embedded.size, dtype=np.int64)
    off = embedded != 0
    walk_legs[off] = [assignments[int(x)] for x in record.exc_at_tau[off]]
    walk = SpiderPath(np.abs(embedded), walk_legs, check=False)

    b = record.b_at_int[: n + 1]
    labels = record.exc_at_int[: n + 1]
    bm_leg = np.zeros(n + 1, dtype=np.int64)
    lazy: dict[int, int] = {}
    for m in range(n + 1):
        if b[m] == 0.0:
            continue
        lab = int(labels[m])
        leg = assignments.get(lab)
        if leg is None:
            leg = lazy.get(lab)
            if leg is None:
                leg = lazy[lab] = int(draw_legs(1, weights, aux)[0])
        bm_leg[m] = leg
    bm_radius = np.abs(b)
    distance = spider_distance_arrays(walk.radii[: n + 1], walk.legs[: n + 1], bm_radius, bm_leg)
    shared = (embedded[: n + 1] != 0) & (b != 0) & (record.exc_at_tau[: n + 1] == labels)
    record.assignments.update(assignments)
    return CoupledPair(walk, bm_radius, bm_leg, record, distance, shared)


def build_coupled_pair(bm: GridBrownianPath, weights, stream, n: int | None = None) -> CoupledPair:
    """Couple a spider walk with the Brownian spider driven by ``bm``.

    Walk excursions take legs from ``stream`` in time order and pass them
    to the Brownian excursion that contains them.  Brownian excursions that
    never reach the unit band get a leg from an auxiliary stream the first
    time the trace needs one.
    """
    weights = as_weights(weights)
    record = skorokhod_embed(bm, n)
    return _couple(record, weights, stream)


def coupled_trial(n: int, dt: float, weights, stream: RngStream, chunk: int = 1 << 20, trial: int | None = None) -> CoupledPair:
    """Grow a grid Brownian path chunk by chunk until n band exits and the
    integer times 0..n are covered, then couple as in ``build_coupled_pair``.

    Brownian increments come from ``stream.child(0)`` and leg draws from
    ``stream`` itself, so the Brownian path does not depend on the weights.
    """
    weights = as_weights(weights)
    bm_rng = stream.child(0).generator()
    emb = _Embedder(dt, n)
    scale = np.float32(math.sqrt(dt))
    while not emb.done:
        inc = bm_rng.standard_normal(chunk, dtype=np.float32) * scale
        emb.feed(inc)
    return _couple(emb.record(trial), weights, stream, trial)
