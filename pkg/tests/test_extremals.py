import math

import numpy as np
import pytest

from wsobolev.errors import DomainError
from wsobolev.extremals import (CaseId, ExtremalSpec, ball_radius, ball_to_halfspace, eval_case1, eval_case2,
                                from_ball, kelvin_to_ball, moving_sphere_check, neumann_trend,
                                pde_residual_ratio, random_halfspace_points, raw_constant, scale_translate,
                                unit_amplitude)
from wsobolev.ode import case2_profile, constant_solution_value
from wsobolev.params import WeightPair
from wsobolev.quadrature import Field2D, QuadConfig, dirichlet_energy, refine, weighted_lp_norm

WP1 = WeightPair(2, 1.0, 0.0)
WP2 = WeightPair(2, 1.0, 1.0)


def ball_points(rng, n, count, radius=None):
    """Points of B_{1/2}(-e/2) in R^{n+1}; on the sphere of the given radius if set."""
    d = rng.normal(size=(count, n + 1))
    d /= np.linalg.norm(d, axis=1)[:, None]
    r = radius if radius is not None else 0.5 * rng.uniform(0, 1, count) ** (1 / (n + 1))
    x = np.atleast_1d(r)[:, None] * d if radius is None else radius * d
    x[:, -1] -= 0.5
    return x


def spread(v):
    v = np.asarray(v)
    return float((v.max() - v.min()) / abs(v.mean()))


def test_eval_case1_basics():
    s = ExtremalSpec(WP1)
    assert s.case_id is CaseId.Case1
    assert float(eval_case1(s, np.zeros(2), 0.0)) == 1.0
    y = np.array([[1.0, -2.0], [0.3, 0.1]])
    expected = (1.0 / (1.0 + np.sum(y ** 2, axis=1))) ** WP1.decay
    assert np.allclose(eval_case1(s, y, 0.0), expected, rtol=1e-15, atol=0)


def test_eval_case1_decay():
    # the leading correction is 2 e A t / R^2, so keep the t share of the direction small
    R = 1e4
    for A in (1.0, 2.5):
        s = ExtremalSpec(WP1, A=A)
        e = s.wp.decay
        for direction in ([1.0, 0.0, 0.0], [0.6, 0.8, 0.0], [0.9, 0.3, 0.05]):
            d = np.array(direction) / np.linalg.norm(direction)
            val = R ** (2 * e) * float(eval_case1(s, R * d[:2], R * d[2]))
            assert val == pytest.approx(A ** e, rel=1e-4)


def test_eval_case2_basics():
    s = ExtremalSpec(WP2, y0=(0.5, -1.0))
    assert s.case_id is CaseId.Case2
    assert float(eval_case2(s, np.array([0.5, -1.0]), 0.0)) == 1.0
    y = np.array([0.2, 0.7])
    assert float(eval_case2(s, y, 0.8)) == float(eval_case2(s, y, -0.8))


def test_eval_case2_near_classical_bubble():
    wp = WeightPair(2, 1e-12, 1e-12)
    s = ExtremalSpec(wp, A=1.7)
    y = np.array([[0.3, 1.0], [2.0, -1.0]])
    t = np.array([0.5, 2.0])
    classical = (1.7 / (1.7 ** 2 + np.sum(y ** 2, axis=1) + t ** 2)) ** 0.5
    assert np.allclose(eval_case2(s, y, t), classical, rtol=1e-10)


def test_extremals_positive_and_radially_decreasing():
    for wp in (WP1, WP2):
        s = ExtremalSpec(wp, y0=(1.0, 0.0))
        u = s.evaluator()
        d = np.linspace(0, 50, 400)
        y = np.stack([1.0 + d, np.zeros_like(d)], axis=1)
        for t in (0.0, 0.7, 20.0):
            v = u(y, t)
            assert np.all(v > 0) and np.all(np.diff(v) < 0)


def test_spec_validation():
    with pytest.raises(DomainError):
        ExtremalSpec(WP1, A=0)
    with pytest.raises(DomainError):
        ExtremalSpec(WP1, k=-1)
    with pytest.raises(DomainError):
        ExtremalSpec(WeightPair(2, 1, 0.5))
    with pytest.raises(DomainError):
        ExtremalSpec(WP1, case_id=CaseId.Case2)
    with pytest.raises(DomainError):
        ExtremalSpec(WP1, y0=(1.0,))
    with pytest.raises(DomainError):
        eval_case2(ExtremalSpec(WP1), np.zeros(2), 0.0)


def test_kelvin_maps_boundary_to_sphere(rng):
    y = rng.normal(size=(200, 3)) * 5
    # image of (y, 0) under the same inversion
    xe = np.concatenate([y, np.ones((200, 1))], axis=1)
    x = xe / np.sum(xe ** 2, axis=1)[:, None]
    x[:, -1] -= 1.0
    assert np.max(np.abs(ball_radius(x) - 0.5)) < 1e-12
    yy, tt, _ = from_ball(x)
    assert np.allclose(yy, y, rtol=1e-10, atol=1e-12) and np.max(np.abs(tt)) < 1e-12


@pytest.mark.parametrize("wp", [WP1, WP2, WeightPair(3, 1.5, 0.5), WeightPair(1, math.sqrt(2), math.sqrt(2))])
def test_kelvin_image_is_radial(rng, wp):
    u = ExtremalSpec(wp).evaluator()
    for r in (0.05, 0.2, 0.45):
        vals = kelvin_to_ball(u, wp, ball_points(rng, wp.n, 100, radius=r))
        assert spread(vals) < 1e-10


def test_kelvin_of_normalized_case1_is_constant_solution(rng):
    u = ExtremalSpec.normalized(WP1).evaluator()
    vals = kelvin_to_ball(u, WP1, ball_points(rng, 2, 300))
    assert np.allclose(vals, 2.0, rtol=1e-12)
    assert constant_solution_value(WP1) == pytest.approx(2.0, rel=1e-15)


def test_kelvin_of_case2_matches_profile_shape(rng):
    x = ball_points(rng, 2, 300)
    vals = kelvin_to_ball(ExtremalSpec(WP2).evaluator(), WP2, x)
    assert spread(vals / case2_profile(WP2, ball_radius(x))) < 1e-12


def test_kelvin_rejects_points_outside_ball():
    with pytest.raises(DomainError):
        kelvin_to_ball(ExtremalSpec(WP1).evaluator(), WP1, np.array([0.0, 0.0, 0.3]))


def test_ball_to_halfspace_constant_profile(rng):
    y, t = random_halfspace_points(rng, 2, 1000)
    for A in (1.0, 2.5):
        u = ball_to_halfspace(lambda r: np.full(np.shape(r), 3.0), WP1, A, (0.5, 0.0), y, t)
        exact = eval_case1(ExtremalSpec(WP1, A=A, y0=(0.5, 0.0)), y, t)
        assert spread(u / exact) < 1e-8


def test_ball_to_halfspace_case2_profile(rng):
    y, t = random_halfspace_points(rng, 2, 1000)
    for A in (1.0, 2.5):
        u = ball_to_halfspace(lambda r: case2_profile(WP2, r), WP2, A, (0.0, -1.0), y, t)
        exact = eval_case2(ExtremalSpec(WP2, A=A, y0=(0.0, -1.0)), y, t)
        assert spread(u / exact) < 1e-8


def test_ball_to_halfspace_at_boundary_point():
    u = ball_to_halfspace(lambda r: case2_profile(WP2, r), WP2, 1.0, (), np.array([[3.0, 4.0]]), np.array([0.0]))
    assert np.all(np.isfinite(u)) and np.all(u > 0)


def test_scale_translate_group():
    u = ExtremalSpec(WP1).evaluator()
    y = np.array([[0.3, -0.2], [4.0, 1.0]])
    t = np.array([0.1, 3.0])
    assert np.array_equal(scale_translate(u, 1.0, None, WP1)(y, t), u(y, t))
    back = scale_translate(scale_translate(u, 2.0, None, WP1), 0.5, None, WP1)
    assert np.allclose(back(y, t), u(y, t), rtol=1e-12)
    with pytest.raises(DomainError):
        scale_translate(u, 0.0, None, WP1)


@pytest.mark.parametrize("lam", [0.5, 2.0])
def test_scale_preserves_norms(lam):
    u = ExtremalSpec(WP1).evaluator()
    v = scale_translate(u, lam, None, WP1)
    cfg = QuadConfig()
    p = WP1.p_star

    def norms(w):
        lp = refine(lambda N: weighted_lp_norm(Field2D.from_config(w, WP1, cfg.refined(N)), WP1.b, p)).value
        en = refine(lambda N: dirichlet_energy(Field2D.from_config(w, WP1, cfg.refined(N)))).value
        return lp, math.sqrt(en)

    for a, b in zip(norms(v), norms(u)):
        assert abs(a - b) / b < 1e-5


@pytest.mark.parametrize("wp, b", [(WP2, (0.0, 0.0)), (WP1, (3.0, 0.0)), (WP1, (-1.0, 2.0)),
                                   (WP2, (0.5, 0.5)), (WeightPair(1, 0.5, -0.5), (2.0,))])
def test_moving_sphere_identity(rng, wp, b):
    y, t = random_halfspace_points(rng, wp.n, 500)
    assert moving_sphere_check(ExtremalSpec(wp).evaluator(), wp, b, y, t) < 1e-10


def test_moving_sphere_negative_control(rng):
    y, t = random_halfspace_points(rng, 2, 500)

    def wrong(yy, tt):
        return (1.0 / ((1.0 + tt) ** 2 + np.sum(yy ** 2, axis=-1))) ** 0.8

    assert moving_sphere_check(wrong, WP1, (3.0, 0.0), y, t) > 1e-2


def test_moving_sphere_skips_centre():
    y = np.array([[3.0, 0.0], [1.0, 1.0]])
    t = np.array([0.0, 1.0])
    assert moving_sphere_check(ExtremalSpec(WP1).evaluator(), WP1, (3.0, 0.0), y, t) < 1e-12


@pytest.mark.parametrize("wp", [WP1, WP2, WeightPair(3, 2.0, 1.0), WeightPair(1, 2.0, 2.0)])
def test_pde_residual_constant_ratio(wp):
    mean, sp = pde_residual_ratio(ExtremalSpec(wp).evaluator(), wp)
    assert sp < 1e-6
    assert mean == pytest.approx(raw_constant(wp), rel=1e-6)


def test_normalized_extremal_has_unit_ratio():
    for wp in (WP1, WP2):
        mean, sp = pde_residual_ratio(ExtremalSpec.normalized(wp).evaluator(), wp)
        assert mean == pytest.approx(1.0, rel=1e-6) and sp < 1e-6
        assert unit_amplitude(wp) ** (wp.p_star - 2) == pytest.approx(raw_constant(wp), rel=1e-14)


def test_pde_residual_negative_control():
    def gauss(y, t):
        return np.exp(-np.sum(y ** 2, axis=-1) - t ** 2)

    _, sp = pde_residual_ratio(gauss, WP1)
    assert sp > 1e-1


def test_pde_residual_rejects_nonpositive():
    with pytest.raises(DomainError):
        pde_residual_ratio(lambda y, t: np.zeros(np.shape(t)), WP1, n_cells=20)


@pytest.mark.parametrize("wp", [WP1, WP2])
def test_neumann_trend(wp):
    tr = np.abs(neumann_trend(ExtremalSpec(wp).evaluator(), wp))
    assert np.all(np.diff(tr) < 0) and tr[-1] < 1e-4


def test_to_json():
    d = ExtremalSpec(WP1, A=2.0).to_json()
    assert d["case"] == "Case1" and d["A"] == 2.0 and d["y0"] == [0.0, 0.0]
