import math
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import phi_oracle, spider_histories
from spiderwalk import _kernels
from spiderwalk.core import LegWeights, SpiderPath, WalkPath
from spiderwalk.growth import (
    GrowingLegsConfig,
    check_min_visits,
    count_tall_excursions,
    count_trial,
    coupon_balls,
    coupon_simulate,
    deviation_check,
    erdos_renyi_limit,
    estimate_M_probability,
    hoeffding_bound,
    lemma53_check,
    leg_visit_trial,
)
from spiderwalk.sim import simulate_spider, simulate_ssrw
from spiderwalk.stats import RngStream

# 2(1 - Phi(1)) from the erf-series oracle
TAIL_1 = 0.31731050786291415


def test_count_example():
    s = count_tall_excursions(WalkPath(np.array([0, 1, 2, 1, 0, 1, 0])), 2, 6)
    assert s.zeta == 1 and s.xi0 == 2
    assert s.rho.tolist() == [0, 4, 6] and s.h_n == 6


def test_literal_and_within_modes():
    path = WalkPath(np.array([0, 1, 2, 3, 2, 1, 0]))
    assert count_tall_excursions(path, 3, 2, "literal").zeta == 1
    assert count_tall_excursions(path, 3, 2, "within").zeta == 0
    assert count_tall_excursions(path, 3, 3, "within").zeta == 1


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**31), L=st.integers(1, 6), n=st.integers(1, 3000))
def test_pathwise_identities(seed, L, n):
    path = simulate_ssrw(3000, RngStream(seed))
    s = count_tall_excursions(path, L, n)
    assert count_tall_excursions(path, 1, n).zeta == s.xi0
    assert s.zeta <= s.xi0 + 1
    for m in range(len(s.rho)):
        assert s.xi_at(int(s.rho[m])) == m
    if s.h_n is not None:
        later = count_tall_excursions(path, L, s.h_n)
        assert abs(later.zeta - s.zeta) <= 1 and abs(later.xi0 - s.xi0) <= 1


def test_bernoulli_mean_one_over_L():
    i, L, trials = 50, 5, 10**5
    hits = np.array([_kernels.tall_excursion_count(RngStream(40, t).generator(), i, L) for t in range(trials)])
    sigma = math.sqrt(i * (1 / L) * (1 - 1 / L) / trials)
    assert abs(hits.mean() - i / L) < 3 * sigma


def test_min_visit_examples():
    radii = np.array([0, 1, 2, 1, 0, 1, 0])
    legs = np.array([0, 1, 1, 1, 0, 1, 0])
    assert check_min_visits(SpiderPath(radii, legs), 1, 1, 2) == (False, False)
    legs2 = np.array([0, 1, 1, 1, 0, 2, 0])
    assert check_min_visits(SpiderPath(radii, legs2), 1, 1, 2) == (True, True)
    assert check_min_visits(SpiderPath(radii, legs2), 1, 2, 2) == (True, False)


def test_event_probabilities_by_enumeration():
    def prob(m, n_legs):
        p = tuple([F(1, n_legs)] * n_legs)
        tot = F(0)
        for path, pr in spider_histories(m, p):
            radii = np.array([r for r, _ in path])
            legs = np.array([leg for _, leg in path])
            tot += pr * check_min_visits(SpiderPath(radii, legs), 1, 1, n_legs)[0]
        return tot

    assert prob(2, 2) == 0 and prob(2, 3) == 0
    assert prob(4, 2) == F(1, 4)
    # Monte Carlo with the compressed walk agrees
    hits = sum(leg_visit_trial(4, 1, 2, RngStream(41, t)).min() >= 1 for t in range(20000))
    assert abs(hits / 20000 - 0.25) < 4 * math.sqrt(0.25 * 0.75 / 20000)


def test_compressed_walk_matches_full_walk():
    # visit counts at height L from the compressed walk vs the full spider walk
    n, L, trials = 400, 3, 4000
    full = np.array([
        (lambda sp: np.bincount(sp.legs[1:][sp.radii[1:] == L], minlength=4)[1:4])(
            simulate_spider(n, LegWeights.uniform(3), RngStream(42, t)))
        for t in range(trials)
    ])
    comp = np.array([leg_visit_trial(n, L, 3, RngStream(43, t)) for t in range(trials)])
    for col in range(3):
        a, b = full[:, col], comp[:, col]
        se = math.sqrt(a.var() / trials + b.var() / trials)
        assert abs(a.mean() - b.mean()) < 4 * se
    pm_full, pm_comp = (full.min(1) >= 1).mean(), (comp.min(1) >= 1).mean()
    assert abs(pm_full - pm_comp) < 4 * math.sqrt(0.5 / trials)


def test_count_trial_matches_path_counts():
    n, L, trials = 2000, 4, 3000
    comp = np.array([count_trial(n, L, RngStream(44, t), "within") for t in range(trials)])
    path = np.array([
        (lambda s: (s.xi0, s.zeta))(count_tall_excursions(simulate_ssrw(n, RngStream(45, t)), L, n, "within"))
        for t in range(trials)
    ])
    for col in range(2):
        se = math.sqrt(comp[:, col].var() / trials + path[:, col].var() / trials)
        assert abs(comp[:, col].mean() - path[:, col].mean()) < 4 * se


def test_config():
    cfg = GrowingLegsConfig(N=1000)
    assert cfg.n == math.floor((1000 * math.log(1000)) ** 2)
    assert abs(cfg.reference - TAIL_1) < 1e-15
    assert abs(TAIL_1 - 2 * (1 - phi_oracle(1))) < 1e-15
    assert GrowingLegsConfig(N=1000, mode="up").reference == 1.0
    assert GrowingLegsConfig(N=1000, mode="down").reference == 0.0
    with pytest.raises(ValueError):
        GrowingLegsConfig(N=10, L=9)
    GrowingLegsConfig(N=10, L=9, enforce_regime=False)
    with pytest.raises(ValueError):
        estimate_M_probability(GrowingLegsConfig(N=3, trials=5), 1, weights=LegWeights((0.5, 0.3, 0.2)))


def test_erdos_renyi_examples():
    assert erdos_renyi_limit(1, 0) == pytest.approx(math.exp(-1), abs=1e-16)
    assert erdos_renyi_limit(2, 0) == pytest.approx(math.exp(-1), abs=1e-16)
    assert abs(erdos_renyi_limit(1, 40) - 1) <= 1e-12
    assert erdos_renyi_limit(3, 0) == pytest.approx(math.exp(-0.5))


def test_coupon_examples():
    assert coupon_simulate(1, 3, 3, 50, seed=1).estimate == 1.0
    est = coupon_simulate(2, 2, 1, 20000, seed=2)
    assert abs(est.estimate - 0.5) < 3 * math.sqrt(0.25 / 20000)
    assert coupon_balls(10**4, 1, 0) == round(10**4 * math.log(10**4))


def test_coupon_large_n_m1():
    est = coupon_simulate(10**4, coupon_balls(10**4, 1, 0.0), 1, 4000, seed=3)
    assert est.ci[0] - 0.01 <= math.exp(-1) <= est.ci[1] + 0.01


def test_hoeffding():
    assert hoeffding_bound(2, 1.0) == pytest.approx(2 * math.exp(-4))
    assert hoeffding_bound(2, 1.0) == pytest.approx(0.03663, abs=1e-5)
    xs = np.linspace(0.01, 2, 50)
    assert np.all(np.diff([hoeffding_bound(5, x) for x in xs]) <= 0)
    assert np.all(np.diff([hoeffding_bound(k, 0.3) for k in range(1, 40)]) <= 0)
    with pytest.raises(ValueError):
        hoeffding_bound(0, 1)
    with pytest.raises(ValueError):
        hoeffding_bound(3, 0)


def test_deviation_check_example():
    res = deviation_check(L=4, i=100, k=100, x=0.2, trials=20000, seed=46)
    assert res.bound == pytest.approx(2 * math.exp(-8))
    assert res.ok


def test_lemma53_small():
    res = lemma53_check(10**4, 3, 500, seed=47)
    assert res.ok and res.bound == 2e-4
