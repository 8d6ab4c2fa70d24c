"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Every Monte Carlo run uses the master seed below, fixed before any run.
"""

import math
import random
import time
from fractions import Fraction as F

import numpy as np
import pytest

from conftest import CRITERIA
from spiderwalk.core import ORIGIN, LegWeights, SpiderState
from spiderwalk.exact import (
    binom_walk_prob,
    brute_force_transition,
    lattice_limit,
    scaled_transition,
    trans_cross_leg,
    trans_from_origin,
    trans_same_leg,
    trans_to_origin,
)
from spiderwalk.growth import (
    GrowingLegsConfig,
    coupon_balls,
    coupon_simulate,
    deviation_check,
    erdos_renyi_limit,
    estimate_M_probability,
    hoeffding_bound,
    lemma53_check,
    zero_local_time_sample,
)
from spiderwalk.heights import (
    limit_height_cdf,
    rescaled_height_trace,
    sample_heights,
    strassen_condition,
    strassen_energy,
    zigzag_function,
)
from spiderwalk.sim import coupled_trial
from spiderwalk.stats import RngStream, abs_normal_cdf, ks_distance

SEED = 20240
TRACE_LIMIT = 1.1
# mean of 2 sum(a) - max(a) at the final checkpoint, per run producing spider paths
TRACE: dict[str, float] = {}
# 2(1 - Phi(1)), frozen from the erf-series oracle in tests/oracles.py
P_ABS_Z_GT_1 = 0.31731050786291415


def _report(num, ok, detail):
    CRITERIA[num] = (bool(ok), detail)
    label = f"criterion {num}" if isinstance(num, int) else f"{num} clause"
    print(f"{label}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


def _weight_sets():
    return [
        LegWeights((F(1),)),
        LegWeights.uniform(2, exact=True),
        LegWeights.uniform(3, exact=True),
        LegWeights((F(1, 2), F(3, 10), F(1, 5))),
    ]


def test_c01_closed_forms_equal_oracle():
    t0 = time.perf_counter()
    compared = bad = 0
    for w in _weight_sets():
        wf = LegWeights(tuple(float(q) for q in w.p))
        legs = range(1, w.n_legs + 1)
        for n in range(1, 7):
            for j in (1, 2):
                for leg in legs:
                    truth = brute_force_transition(2 * n, ORIGIN, SpiderState(2 * j, leg), w)
                    cf, fl = trans_from_origin(n, j, w[leg]), trans_from_origin(n, j, wf[leg])
                    compared += 1
                    bad += cf.exact != truth or abs(fl.linear - float(truth)) > 1e-12
                for i in (1, 2):
                    for a in legs:
                        start = SpiderState(2 * j, a)
                        for b in legs:
                            truth = brute_force_transition(2 * n, start, SpiderState(2 * i, b), w)
                            if a == b:
                                cf, fl = trans_same_leg(n, j, i, w[b]), trans_same_leg(n, j, i, wf[b])
                            else:
                                cf, fl = trans_cross_leg(n, j, i, w[b]), trans_cross_leg(n, j, i, wf[b])
                            compared += 1
                            bad += cf.exact != truth or abs(fl.linear - float(truth)) > 1e-12
    elapsed = time.perf_counter() - t0
    _report(1, bad == 0 and elapsed < 10, f"{compared} values compared, {bad} mismatches, {elapsed:.2f} s")


def test_c02_row_stochastic():
    t0 = time.perf_counter()
    rows = bad = 0
    for w in _weight_sets():
        legs = range(1, w.n_legs + 1)
        for n in range(1, 7):
            total = binom_walk_prob(n, 0).exact
            total += sum(trans_from_origin(n, j, w[leg]).exact for leg in legs for j in range(1, n + 1))
            rows += 1
            bad += total != 1
            for j in (1, 2):
                for a in legs:
                    total = trans_to_origin(n, j).exact
                    for b in legs:
                        for i in range(1, n + j + 1):
                            pv = trans_same_leg(n, j, i, w[b]) if a == b else trans_cross_leg(n, j, i, w[b])
                            total += pv.exact
                    rows += 1
                    bad += total != 1
    elapsed = time.perf_counter() - t0
    _report(2, bad == 0 and elapsed < 5, f"{rows} rows summed exactly, {bad} not equal to 1, {elapsed:.2f} s")


def test_c03_local_clt():
    t0 = time.perf_counter()
    p = 1 / 3
    errs = {}
    for case in ("origin", "cross", "same"):
        got = scaled_transition(10**4, 1.0, 0.5, p, 0.5, case)
        ref = lattice_limit(1.0, 0.5, p, 0.5, case)
        errs[case] = abs(got - ref) / ref
    elapsed = time.perf_counter() - t0
    worst = max(errs.values())
    detail = ", ".join(f"{k} {v:.2e}" for k, v in errs.items())
    _report(3, worst <= 0.05 and elapsed < 1, f"relative errors {detail}; {elapsed:.3f} s")


def test_c04_height_law():
    t0 = time.perf_counter()
    p = (0.5, 0.3, 0.2)
    n = 10**4
    hs = sample_heights(n, LegWeights(p), SEED, 2 * 10**4)
    ks = [ks_distance(hs.per_leg[:, j] / math.sqrt(n), lambda y, q=q: limit_height_cdf(y, q)) for j, q in enumerate(p)]
    ranked_ok = bool(hs.min_below_ranked().all())
    functional = float(hs.functional().mean())
    TRACE["height law, n=1e4"] = functional
    elapsed = time.perf_counter() - t0
    ok = max(ks) <= 0.02 and ranked_ok
    detail = (
        f"KS per leg {', '.join(f'{v:.4f}' for v in ks)} (limit 0.02); "
        f"H_m<=M_N on all paths: {ranked_ok}; mean 2sum(a)-max(a) at n={n}: {functional:.4f}; {elapsed:.1f} s"
    )
    _report(4, ok, detail)


def test_c05_zero_local_time():
    t0 = time.perf_counter()
    n = 10**6
    xi = zero_local_time_sample(n, 10**4, SEED)
    ks = ks_distance(xi / math.sqrt(n), abs_normal_cdf)
    elapsed = time.perf_counter() - t0
    _report(5, ks <= 0.02, f"KS {ks:.4f} (limit 0.02); {elapsed:.1f} s")


def test_c06_coupon():
    t0 = time.perf_counter()
    N, trials = 10**4, 10**4
    parts, ok = [], True
    for m in (1, 2):
        for x in (-1.0, 0.0, 1.0, 2.0):
            est = coupon_simulate(N, coupon_balls(N, m, x), m, trials, SEED).estimate
            ref = erdos_renyi_limit(m, x)
            ok &= abs(est - ref) <= 0.02
            parts.append(f"m={m},x={x:g}: {est:.4f} vs {ref:.4f}")
    elapsed = time.perf_counter() - t0
    _report(6, ok, "; ".join(parts) + f"; {elapsed:.1f} s")


def test_c07_growing_legs_trend():
    t0 = time.perf_counter()
    gaps, ests = [], []
    for N in (50, 200, 1000):
        est = estimate_M_probability(GrowingLegsConfig(N=N, L=1, c=1.0, trials=2000), SEED)
        assert abs(est.reference - P_ABS_Z_GT_1) < 1e-15
        ests.append(est.estimate)
        gaps.append(abs(est.estimate - est.reference))
    monotone = all(b <= a for a, b in zip(gaps, gaps[1:]))
    elapsed = time.perf_counter() - t0
    detail = (
        f"estimates {', '.join(f'{e:.4f}' for e in ests)} for N=50,200,1000; "
        f"gaps {', '.join(f'{g:.4f}' for g in gaps)}; within 0.08 at N=1000: {gaps[-1] <= 0.08}; "
        f"nonincreasing: {monotone}; {elapsed:.1f} s"
    )
    _report(7, gaps[-1] <= 0.08 and monotone, detail)


def test_c08_monotone_variants():
    t0 = time.perf_counter()
    up = estimate_M_probability(GrowingLegsConfig(N=1000, trials=2000, mode="up"), SEED).estimate
    down = estimate_M_probability(GrowingLegsConfig(N=1000, trials=2000, mode="down"), SEED).estimate
    a3 = estimate_M_probability(GrowingLegsConfig(N=1000, trials=2000, k=3), SEED).estimate
    checks = {"f=log N >= 0.95": up >= 0.95, "f=1/log N <= 0.05": down <= 0.05, "k=3 within 0.10": abs(a3 - P_ABS_Z_GT_1) <= 0.10}
    elapsed = time.perf_counter() - t0
    detail = (
        f"f=log N: {up:.4f}; f=1/log N: {down:.4f}; A(k=3): {a3:.4f} vs {P_ABS_Z_GT_1:.4f}; "
        + ", ".join(f"{k}: {v}" for k, v in checks.items())
        + f"; {elapsed:.1f} s"
    )
    _report(8, all(checks.values()), detail)


def test_c09_hoeffding_envelopes():
    t0 = time.perf_counter()
    worst, ok, count = -1.0, True, 0
    for L in (2, 5):
        for i in (50, 200):
            for x in (0.05, 0.1, 0.2):
                res = deviation_check(L, i, k=i, x=x, trials=10**4, seed=SEED)
                ok &= res.ok
                count += 1
                worst = max(worst, res.empirical - res.bound)
    lemma = [lemma53_check(10**5, L, 10**4, SEED) for L in (2, 5)]
    ok &= all(r.ok for r in lemma)
    elapsed = time.perf_counter() - t0
    detail = (
        f"{count} grid points, largest empirical-minus-bound {worst:.4f}; "
        f"threshold-exceedance at n=1e5: {', '.join(f'{r.empirical:.4g} (bound {r.bound:.0e})' for r in lemma)}; "
        f"{elapsed:.1f} s"
    )
    _report(9, ok and elapsed < 120, detail)


def test_c10_coupling():
    t0 = time.perf_counter()
    w = LegWeights((0.5, 0.3, 0.2))
    n = 4096
    valid = agree = True
    tau, r10, r12, functional = [], [], [], []
    for t in range(200):
        pair = coupled_trial(n, 1e-4, w, RngStream(SEED, t), trial=t)
        emb = np.rint(pair.record.b_at_tau)
        valid &= pair.record.count >= n and emb[0] == 0 and bool(np.all(np.abs(np.diff(emb)) == 1)) and pair.walk.is_valid()
        agree &= pair.legs_agree()
        tau.append(pair.record.tau_times[n] / n)
        r10.append(pair.sup_ratio(1 << 10))
        r12.append(pair.sup_ratio(1 << 12))
        functional.append(rescaled_height_trace(pair.walk, [n], 3)[-1].functional)
    mean_tau = float(np.mean(tau))
    growth = float(np.mean(r12) / np.mean(r10))
    mean_fun = float(np.mean(functional))
    TRACE["coupling, n=4096"] = mean_fun
    elapsed = time.perf_counter() - t0
    ok = valid and agree and abs(mean_tau - 1) <= 0.05 and growth <= 2 and elapsed < 300
    detail = (
        f"valid walks: {valid}; legs agree: {agree}; mean tau_n/n {mean_tau:.4f}; "
        f"sup-ratio mean {np.mean(r10):.3f} (n=2^10) -> {np.mean(r12):.3f} (n=2^12), growth x{growth:.2f}; "
        f"mean 2sum(a)-max(a) at n={n}: {mean_fun:.4f}; {elapsed:.1f} s"
    )
    _report(10, ok, detail)


def test_c11_strassen_identities():
    t0 = time.perf_counter()
    rnd = random.Random(SEED)
    bad = 0
    for _ in range(100):
        size = rnd.randint(1, 5)
        a = [F(rnd.randint(0, 40), rnd.randint(1, 40)) for _ in range(size)]
        value, _ = strassen_condition(a)
        if value > 1:
            a = [x / value for x in a]
            value, _ = strassen_condition(a)
        energy, _ = strassen_energy(zigzag_function(a))
        bad += energy != value
    boundary = all(strassen_condition([F(1, 2 * n - 1)] * n) == (1, True) for n in range(1, 6))
    boundary &= strassen_condition([F(1)] + [F(0)] * 4) == (1, True)
    elapsed = time.perf_counter() - t0
    _report(11, bad == 0 and boundary and elapsed < 1, f"100 random vectors, {bad} energy mismatches; boundary cases exact: {boundary}; {elapsed:.3f} s")


def test_c12_trace_diagnostic():
    """Final-checkpoint trace of every run above that produces spider paths."""
    if len(TRACE) < 2:
        pytest.skip("needs the height-law and coupling runs in the same session")
    ok = all(v <= TRACE_LIMIT for v in TRACE.values())
    detail = "; ".join(f"{k}: {v:.4f}" for k, v in TRACE.items()) + f" (limit {TRACE_LIMIT})"
    _report("trace", ok, "trace 2sum(a)-max(a) " + detail)
