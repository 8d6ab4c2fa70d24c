"""Per-leg maximal heights of a spider walk compared with their limit law."""

import math

import numpy as np

from spiderwalk.core import LegWeights
from spiderwalk.heights import limit_height_cdf, sample_heights
from spiderwalk.stats import ks_distance

p = (0.5, 0.3, 0.2)
n, trials = 4000, 4000
hs = sample_heights(n, LegWeights(p), seed=7, trials=trials)

for j, q in enumerate(p):
    y = hs.per_leg[:, j] / math.sqrt(n)
    ks = ks_distance(y, lambda v, q=q: limit_height_cdf(v, q))
    grid = "  ".join(f"{np.mean(y <= t):.3f}/{limit_height_cdf(t, q):.3f}" for t in (0.25, 0.5, 1.0, 1.5))
    print(f"leg {j + 1} (p={q}): KS {ks:.4f}; empirical/limit CDF at 0.25,0.5,1,1.5: {grid}")

print(f"\nmin height below ranked heights on every path: {bool(hs.min_below_ranked().all())}")
print(f"mean 2 sum(a) - max(a): {hs.functional().mean():.3f}")
