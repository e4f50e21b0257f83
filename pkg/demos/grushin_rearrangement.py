"""Grushin space: the lifted bubble and the rearrangement chain.

Functions of (x, |z|) on R^n x R^m correspond to half-space functions through
t = |z|^(tau+1).  The lattice experiment rearranges a random bump in x, then
rearranges the modulus of its partial Fourier transform in z, and checks that
the discrete Grushin quotient never goes up.
"""
import numpy as np

from wsobolev.grushin import grushin_extremal_field
from wsobolev.params import GrushinParams
from wsobolev.quadrature import rayleigh_G
from wsobolev.rearrange import random_bump, rearrangement_chain
from wsobolev.special import grushin_sharp_constant_tau1


def main():
    for n, m in [(1, 1), (2, 2), (1, 4)]:
        gp = GrushinParams(n, m, 1)
        S = grushin_sharp_constant_tau1(n, m).value
        G = rayleigh_G(grushin_extremal_field(gp), gp)
        print(f"(n={n}, m={m}): closed form {S:.10f}, quotient of the bubble {G:.10f}")

    gp = GrushinParams(1, 1, 1)
    rng = np.random.default_rng(3)
    print("\n    G[u]      G[u*_x]      G[w]")
    for _ in range(5):
        c = rearrangement_chain(random_bump(rng, (1, 1), 4.0, 65), gp)
        print(f"{c.G_u:9.4f}  {c.G_ux:9.4f}  {c.G_w:9.4f}")


if __name__ == "__main__":
    main()
