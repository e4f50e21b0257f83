import math

import numpy as np
import pytest

from wsobolev.errors import DegenerateFieldError, DomainError
from wsobolev.extremals import ExtremalSpec, scale_translate
from wsobolev.grushin import grushin_extremal_field, halfspace_case1
from wsobolev.lattice import LatticeField
from wsobolev.params import GrushinParams, WeightPair, grushin_to_weight
from wsobolev.quadrature import (Field2D, QuadConfig, TailMode, extrapolate, functional_bridge_check, ggn1_ratio,
                                 poincare_check, product_weights, rayleigh_F, rayleigh_F_extrapolated, rayleigh_G,
                                 scaling_necessity_ratios, smooth_bump, stretched_grid, weighted_lp_extrapolated,
                                 weighted_lp_norm, weighted_lp_report)
from wsobolev.special import grushin_sharp_constant_tau1, sharp_constant_case1, sharp_constant_case2

WP1 = WeightPair(2, 1.0, 0.0)
WP2 = WeightPair(2, 1.0, 1.0)


def unit_square(wp, N=32):
    g = np.linspace(0, 1, N + 1)
    return Field2D(g, g, np.ones((N + 1, N + 1)), wp)


def test_trivial_integrals():
    assert weighted_lp_norm(unit_square(WeightPair(1, 1.0, 0.0)), 0.0, 1.0) == pytest.approx(2.0, rel=1e-14)
    assert weighted_lp_norm(unit_square(WeightPair(1, 1.0, 0.0)), 1.0, 1.0) == pytest.approx(1.0, rel=1e-14)


@pytest.mark.parametrize("gamma", [-0.5, -0.9, 0.0, 0.3, 1.0, 2.5])
def test_product_weights_exact_on_polynomials(gamma):
    x = stretched_grid(40, 5.0, 0.5)
    w = product_weights(x, gamma)
    for k in range(3):
        exact = 5.0 ** (k + gamma + 1) / (k + gamma + 1)
        assert w @ x ** k == pytest.approx(exact, rel=1e-12)


def test_singular_weight_converges():
    # int_0^1 t^-0.5 cos(t) dt by refinement
    exact = 1.8090484758005438
    errs = []
    for N in (20, 40, 80):
        x = np.linspace(0, 1, N + 1)
        errs.append(abs(product_weights(x, -0.5) @ np.cos(x) - exact))
    assert errs[-1] < 1e-9 and errs[0] / errs[-1] > 16


def test_lp_errors():
    f = unit_square(WP1)
    with pytest.raises(DomainError):
        weighted_lp_norm(f, -1.0, 2.0)
    with pytest.raises(DomainError):
        weighted_lp_norm(f, 0.0, 0.5)
    with pytest.raises(DegenerateFieldError):
        rayleigh_F(f.scaled(0.0))


def test_case2_lp_norm_order():
    rep = weighted_lp_extrapolated(ExtremalSpec(WP2).evaluator(), WP2, WP2.b, WP2.p_star)
    assert rep.order >= 3
    assert np.all(np.diff(rep.samples) > 0)
    assert rep.est_error < 1e-7


def test_homogeneity(rng):
    f = Field2D.from_config(ExtremalSpec(WP1).evaluator(), WP1, QuadConfig(n_rho=200, n_t=200))
    p = WP1.p_star
    base_norm, base_F = weighted_lp_norm(f, WP1.b, p), rayleigh_F(f)
    for c in (-3.0, 1e-3, 7.5):
        assert weighted_lp_norm(f.scaled(c), WP1.b, p) == pytest.approx(abs(c) * base_norm, rel=1e-13)
        assert rayleigh_F(f.scaled(c)) == pytest.approx(base_F, rel=1e-12)


@pytest.mark.parametrize("wp, S", [(WP1, sharp_constant_case1(2, 1.0).value),
                                   (WP2, sharp_constant_case2(2, 1.0).value)])
def test_rayleigh_F_closed_forms(wp, S):
    rep = rayleigh_F_extrapolated(ExtremalSpec(wp).evaluator(), wp)
    assert abs(rep.value - S) / S < 1e-5


def test_rayleigh_F_scale_invariance_on_matched_grids():
    u = ExtremalSpec(WP1).evaluator()
    cfg = QuadConfig(n_rho=1600, n_t=1600)
    f0 = rayleigh_F(Field2D.from_config(u, WP1, cfg))
    f1 = rayleigh_F(Field2D.from_config(scale_translate(u, 2.0, None, WP1), WP1, cfg))
    assert abs(f1 - f0) / f0 < 1e-4


def test_power_law_tail_recovers_truncated_mass():
    u = ExtremalSpec(WP2).evaluator()
    p = WP2.p_star
    full = weighted_lp_extrapolated(u, WP2, WP2.b, p).value
    small = Field2D.from_config(u, WP2, QuadConfig(R=50, T=50, n_rho=800, n_t=800, core=1.0))
    bare = weighted_lp_report(small, WP2.b, p)
    tailed = weighted_lp_report(small, WP2.b, p, TailMode.POWER_LAW)
    assert tailed.tail_contribution > 0
    assert abs(tailed.value - full) < 0.1 * abs(bare.value - full)


def test_extrapolate_synthetic():
    vals = [1.0 + 3.0 * h ** 4 for h in (1.0, 0.5, 0.25, 0.125)]
    limit, err, order = extrapolate(vals)
    assert limit == pytest.approx(1.0, abs=1e-13) and order == pytest.approx(4.0, rel=1e-10)


def test_config_validation():
    with pytest.raises(DomainError):
        QuadConfig(n_rho=8)
    with pytest.raises(DomainError):
        QuadConfig(R=-1)


# --------------------------------------------------------------- Grushin quotient

def test_rayleigh_G_of_grushin_extremal():
    gp = GrushinParams(1, 1, 1)
    G = rayleigh_G(grushin_extremal_field(gp), gp)
    assert G == pytest.approx(math.pi ** (2 / 3), rel=1e-4)


def test_rayleigh_G_scale_covariance():
    gp = GrushinParams(2, 1, 1)
    S = grushin_sharp_constant_tau1(2, 1).value
    for A in (0.5, 3.0):
        assert rayleigh_G(grushin_extremal_field(gp, A=A), gp) == pytest.approx(S, rel=1e-4)


def test_lattice_G_homogeneity():
    gp = GrushinParams(1, 1, 1)
    f = LatticeField.from_function(lambda x, z: np.exp(-x[..., 0] ** 2 - (z[..., 0] - 0.3) ** 2), (1, 1), 4.0, 65)
    G = rayleigh_G(f, gp)
    for c in (-2.0, 1e-4, 30.0):
        assert rayleigh_G(f.with_values(c * f.values), gp) == pytest.approx(G, rel=1e-12)


def test_bridge_case1_bubble():
    gp = GrushinParams(2, 2, 1)
    assert functional_bridge_check(halfspace_case1(gp), gp) < 1e-3
    wp = grushin_to_weight(gp)
    assert (wp.alpha, wp.beta) == (1, 0)


def test_bridge_gaussian():
    gp = GrushinParams(1, 3, 1)

    def gauss(y, t):
        return np.exp(-np.sum(np.asarray(y) ** 2, axis=-1) - np.asarray(t) ** 2)

    assert functional_bridge_check(gauss, gp, extent=30.0) < 1e-3


# --------------------------------------------------------------- Poincare and scaling

def test_poincare_constant_is_zero():
    g = np.linspace(0, 6, 121)
    assert poincare_check(Field2D(g, g, np.ones((121, 121)), WP1), 2.0, 1.0) == 0.0


def test_poincare_linear_in_t_is_stable():
    ratios = []
    for N in (120, 240, 480):
        g = np.linspace(0, 6, N + 1)
        R, T = np.meshgrid(g, g, indexing="ij")
        ratios.append(poincare_check(Field2D(g, g, T.copy(), WP1), 2.0, 1.0))
    assert all(0 < r < 1 for r in ratios)
    assert abs(ratios[-1] - ratios[-2]) / ratios[-1] < 0.01


@pytest.mark.parametrize("alpha", [0.5, 1.0, 2.0])
def test_poincare_envelope(rng, alpha):
    wp = WeightPair(2, alpha, alpha - 1.0)
    g = np.linspace(0, 8, 201)
    R, T = np.meshgrid(g, g, indexing="ij")
    worst = 0.0
    for _ in range(200):
        vals = np.zeros_like(R)
        for _ in range(int(rng.integers(1, 4))):
            vals += rng.uniform(0.2, 1.0) * np.exp(-(R ** 2 + (T - rng.uniform(0, 2)) ** 2) / rng.uniform(0.3, 1.0) ** 2)
        worst = max(worst, poincare_check(Field2D(g, g, vals, wp), 2.0, 0.7))
    assert math.isfinite(worst) and worst < 1.0


def test_poincare_errors():
    g = np.linspace(0, 3, 31)
    f = Field2D(g, g, np.ones((31, 31)), WP1)
    with pytest.raises(DomainError):
        poincare_check(f, 2.0, 1.0)
    with pytest.raises(DomainError):
        poincare_check(f, 1.0, 0.0)


@pytest.mark.parametrize("wp, S", [(WP1, sharp_constant_case1(2, 1.0).value),
                                   (WP2, sharp_constant_case2(2, 1.0).value),
                                   (WeightPair(1, 2.0, 1.0), sharp_constant_case1(1, 2.0).value)])
def test_random_fields_stay_above_sharp_constant(rng, wp, S):
    g = stretched_grid(200, 40.0, 2.0)
    R, T = np.meshgrid(g, g, indexing="ij")
    worst = math.inf
    for _ in range(500):
        vals = np.zeros_like(R)
        for _ in range(int(rng.integers(1, 4))):
            vals += rng.uniform(0.2, 1.0) * smooth_bump(R, T, rng.uniform(0, 4), rng.uniform(0.5, 3))
        worst = min(worst, rayleigh_F(Field2D(g, g, vals, wp)) / S)
    assert worst >= 1 - 1e-3


def test_scaling_necessity_growth():
    # l > (n+1) k / n: the rescaled ratio grows along t0 = 1, 10, 100
    up = scaling_necessity_ratios(2, 1.0, 2.0)
    assert up[0] < up[1] < up[2]
    # below the threshold it decays
    down = scaling_necessity_ratios(2, 1.0, 1.0)
    assert down[0] > down[1] > down[2]


def test_ggn1_ratio_scale_invariant_when_balanced():
    n, k = 2, 1.0
    l = (n + 1) * k / n
    g = np.linspace(0, 3, 301)
    R, T = np.meshgrid(g, g, indexing="ij")
    wp = WeightPair(n, k, l)
    r1 = ggn1_ratio(Field2D(g, g, smooth_bump(R, T, 1.5, 1.0), wp), k, l)
    r2 = ggn1_ratio(Field2D(2 * g, 2 * g, smooth_bump(R, T, 1.5, 1.0), wp), k, l)
    assert r2 == pytest.approx(r1, rel=1e-12)
