"""Closed-form sharp constants next to the quadrature of their extremals.

For beta = alpha - 1 and beta = alpha the extremal is explicit, so the
Rayleigh quotient F of the exact field can be integrated and compared with
the Gamma-function formula.
"""
import math

import numpy as np

from wsobolev.extremals import ExtremalSpec, moving_sphere_check, random_halfspace_points
from wsobolev.params import WeightPair
from wsobolev.quadrature import rayleigh_F_extrapolated
from wsobolev.special import sharp_constant_case1, sharp_constant_case2


def main():
    print(f"{'n':>2} {'alpha':>7} {'beta':>7} {'closed form':>14} {'quadrature':>14} {'rel diff':>9}")
    for n, alpha in [(1, 0.5), (2, 1.0), (3, 2.0), (1, math.sqrt(2.0)), (2, 0.3)]:
        for beta, const in ((alpha - 1.0, sharp_constant_case1), (alpha, sharp_constant_case2)):
            try:
                S = const(n, alpha).value
            except Exception as exc:
                print(f"{n:>2} {alpha:7.4f} {beta:7.4f}  skipped: {exc}")
                continue
            wp = WeightPair(n, alpha, beta)
            F = rayleigh_F_extrapolated(ExtremalSpec(wp).evaluator(), wp).value
            print(f"{n:>2} {alpha:7.4f} {beta:7.4f} {S:14.10f} {F:14.10f} {abs(F - S) / S:9.1e}")

    # the extremals are symmetric under inversion in spheres centred on t = 0
    rng = np.random.default_rng(0)
    wp = WeightPair(2, 1.0, 1.0)
    y, t = random_halfspace_points(rng, 2, 1000)
    gap = moving_sphere_check(ExtremalSpec(wp).evaluator(), wp, (1.5, -0.5), y, t)
    print(f"\nsphere inversion gap for (2, 1, 1) about b = (1.5, -0.5): {gap:.1e}")


if __name__ == "__main__":
    main()
