"""Shooting for the radial profile on the ball and the energy diagnostic.

Away from the explicit cases the extremal is the Kelvin image of a radial
profile psi on [0, 1/2]; the shooting value psi(0) is found by bisection on
the boundary flux, and K = psi(1/2) fixes the constant.
"""
import numpy as np

from wsobolev.errors import NoSolution
from wsobolev.extremals import ExtremalSpec
from wsobolev.ode import case2_profile, energy_function, energy_regime, solve_bvp
from wsobolev.params import WeightPair
from wsobolev.quadrature import rayleigh_F_extrapolated


def main():
    r = np.linspace(0.0, 0.4999, 2000)
    wp = WeightPair(2, 1.0, 1.0)
    res = solve_bvp(wp)
    print(f"(2, 1, 1): K = {res.K:.12f}, sup gap to explicit profile = "
          f"{np.max(np.abs(res.profile(r) - case2_profile(wp, r))):.1e}")

    for key in [(2, 1.0, 0.5), (3, 1.5, 1.0), (1, 0.5, -0.5)]:
        wp = WeightPair(*key)
        res = solve_bvp(wp)
        S = rayleigh_F_extrapolated(ExtremalSpec(wp, profile=res.profile).evaluator(), wp).value
        en = energy_function(res.profile)
        trend = "nonincreasing" if np.max(en.denergy_identity) <= 0 else "nondecreasing"
        print(f"{key}: psi(0) = {res.psi0:.10f}, K = {res.K:.10f}, S = {S:.8f}, "
              f"energy {trend} ({energy_regime(wp)}), identity mismatch {en.max_relative_mismatch():.1e}")

    for key in [(2, 2.0, 6.0), (3, 2.0, 4.0)]:
        try:
            solve_bvp(WeightPair(*key))
        except NoSolution as exc:
            print(f"{key}: no positive solution ({exc})")


if __name__ == "__main__":
    main()
