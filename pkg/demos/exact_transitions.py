"""Closed-form transition probabilities on a three-legged spider, checked
against exhaustive enumeration, and their approach to the Gaussian limit."""

from fractions import Fraction as F

from spiderwalk.core import ORIGIN, LegWeights, SpiderState
from spiderwalk.exact import brute_force_transition, lattice_limit, scaled_transition, trans_cross_leg, trans_same_leg

w = LegWeights((F(1, 2), F(3, 10), F(1, 5)))

print("2n steps from (2,1): closed form vs enumeration")
for n in range(1, 5):
    same = trans_same_leg(n, 1, 1, w[1]).exact
    cross = trans_cross_leg(n, 1, 1, w[3]).exact
    print(
        f"  n={n}: to (2,1) {same} = {brute_force_transition(2 * n, SpiderState(2, 1), SpiderState(2, 1), w)}"
        f", to (2,3) {cross} = {brute_force_transition(2 * n, SpiderState(2, 1), SpiderState(2, 3), w)}"
    )

print("\nsqrt(n)-scaled probabilities at t=1, x=y=0.5, p=1/3")
for n in (10**2, 10**3, 10**4):
    row = [scaled_transition(n, 1.0, 0.5, 1 / 3, 0.5, case) for case in ("origin", "cross", "same")]
    print(f"  n={n:>6}: " + "  ".join(f"{v:.6f}" for v in row))
print("  limit   : " + "  ".join(f"{lattice_limit(1.0, 0.5, 1 / 3, 0.5, c):.6f}" for c in ("origin", "cross", "same")))
print(f"\nfrom the origin after 4 steps: P(back at origin) = {brute_force_transition(4, ORIGIN, ORIGIN, w)}")
