"""Does a walk on a spider with N legs reach every leg?  Compared with the
urn picture: balls = tall excursions, urns = legs."""

from spiderwalk.growth import (
    GrowingLegsConfig,
    coupon_balls,
    coupon_simulate,
    erdos_renyi_limit,
    estimate_M_probability,
)

for N in (50, 200):
    cfg = GrowingLegsConfig(N=N, trials=500)
    est = estimate_M_probability(cfg, seed=11)
    lo, hi = est.ci
    print(f"N={N:>4}, n={cfg.n:>9}: P(every leg reached) ~ {est.estimate:.3f} [{lo:.3f}, {hi:.3f}], limit {est.reference:.4f}")

print("\nurns, N=2000, 2000 trials")
for m in (1, 2):
    for x in (-1.0, 0.0, 1.0):
        res = coupon_simulate(2000, coupon_balls(2000, m, x), m, 2000, seed=11)
        print(f"  m={m} x={x:+.0f}: {res.estimate:.3f} vs {erdos_renyi_limit(m, x):.3f}")
