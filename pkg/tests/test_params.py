import math
from fractions import Fraction

import numpy as np
import pytest

from wsobolev.errors import DomainError
from wsobolev.params import (GrushinParams, WeightPair, classify, constant_conversion, conversion_factor,
                             critical_exponent, grushin_to_weight, in_nonexistence_regime)
from wsobolev.special import ball_volume, grushin_sharp_constant_tau1, sharp_constant_case1


@pytest.mark.parametrize("wp, p", [(WeightPair(2, 1, 0), 3.0), (WeightPair(1, 2, 2), 4.0),
                                   (WeightPair(3, 2.5, 0.5), 2.0), (WeightPair(2, 3.0, 1.0), 2.0)])
def test_critical_exponent_examples(wp, p):
    assert critical_exponent(wp) == pytest.approx(p, rel=1e-15)
    assert wp.p_star == critical_exponent(wp)


def test_p_star_above_two_below_upper_bound(rng):
    for _ in range(200):
        n = int(rng.integers(1, 6))
        beta = rng.uniform(-0.9, 5)
        alpha = rng.uniform(0.01, beta + 2 - 1e-6)
        p = WeightPair(n, alpha, beta).p_star
        assert math.isfinite(p) and p > 2


def test_weight_pair_validation():
    for bad in [(0, 1, 0), (2, 0, 0), (2, -1, 0), (2, 1, -1), (1.5, 1, 0), (2, float("nan"), 0)]:
        with pytest.raises(DomainError):
            WeightPair(*bad)


def test_classify_interior():
    c = classify(WeightPair(2, 1, 0))
    assert c.gn_valid and c.strict_valid and c.reg_valid and c.n1_unique


def test_classify_n1_constraint_by_hand():
    c = classify(WeightPair(1, 1, 3))
    assert c.gn_valid and c.strict_valid
    # (1 - 0)/4 = 0.25 against 1*5/36
    assert not c.n1_unique


def test_classify_boundary_equality():
    c = classify(WeightPair(2, 2, 6))
    assert c.gn_valid and not c.strict_valid
    assert in_nonexistence_regime(WeightPair(2, 2, 6))
    assert in_nonexistence_regime(WeightPair(3, 2, 4))
    assert not in_nonexistence_regime(WeightPair(2, 1, 3))


def test_classify_reg_needs_nonnegative_sum():
    c = classify(WeightPair(1, 0.3, -0.5))
    assert c.gn_valid and not c.reg_valid


def test_classify_invariants(rng):
    for _ in range(2000):
        n = int(rng.integers(1, 6))
        wp = WeightPair(n, rng.uniform(0.01, 8), rng.uniform(-0.99, 8))
        c = classify(wp)
        assert not c.strict_valid or c.gn_valid
        assert not c.reg_valid or c.gn_valid
        if n >= 2:
            assert c.n1_unique


def test_classify_lower_bound_monotone_in_alpha(rng):
    for _ in range(300):
        n = int(rng.integers(1, 5))
        beta = rng.uniform(-0.9, 6)
        alphas = np.sort(rng.uniform(0.01, 10, 20))
        lower_ok = [(n - 1) * beta / (n + 1) <= a for a in alphas]
        # once the lower bound holds it keeps holding as alpha grows
        assert lower_ok == sorted(lower_ok)


def test_grushin_to_weight_tau1_is_exact():
    wp = grushin_to_weight(GrushinParams(2, 4, 1))
    assert wp.alpha == Fraction(2) and wp.beta == Fraction(1)
    assert wp.is_case1()


def test_grushin_examples():
    gp = GrushinParams(1, 1, 1)
    assert gp.Q == 3 and gp.p_star == pytest.approx(6.0, rel=1e-15)
    wp = grushin_to_weight(GrushinParams(1, 2, 1))
    assert (wp.alpha, wp.beta) == (1, 0)
    assert GrushinParams(1, 2, 1).Q == 4 and wp.p_star == 4.0


def test_grushin_exponent_identity(rng):
    for _ in range(500):
        gp = GrushinParams(int(rng.integers(1, 6)), int(rng.integers(1, 7)), float(rng.uniform(0.05, 5)))
        wp = grushin_to_weight(gp)
        assert critical_exponent(wp) == pytest.approx(2 * gp.Q / (gp.Q - 2), rel=1e-14)
        assert classify(wp).strict_valid


def test_conversion_factor_unit_input():
    gp = GrushinParams(2, 3, 0.5)
    Q = gp.Q
    expected = (3 * ball_volume(3)) ** (2 / Q) * 1.5 ** ((2 * Q - 2) / Q)
    assert constant_conversion(gp, 1.0) == pytest.approx(expected, rel=1e-14)
    assert conversion_factor(gp) == pytest.approx(expected, rel=1e-14)
    with pytest.raises(DomainError):
        constant_conversion(gp, 0.0)


@pytest.mark.parametrize("n, m", [(2, 2), (1, 4), (1, 6), (2, 4), (3, 6), (3, 2)])
def test_conversion_matches_grushin_closed_form(n, m):
    gp = GrushinParams(n, m, 1)
    s = sharp_constant_case1(n, m / 2).value
    assert constant_conversion(gp, s) == pytest.approx(grushin_sharp_constant_tau1(n, m).value, rel=1e-10)


def test_json_round_trip_and_errors():
    wp = WeightPair(3, 1.5, 0.5)
    assert WeightPair.from_json(wp.to_json()) == wp
    gp = GrushinParams(2, 1, 2.0)
    assert GrushinParams.from_json(gp.to_json()) == gp
    with pytest.raises(DomainError):
        WeightPair.from_json({"n": 2, "alpha": 1})
    with pytest.raises(DomainError):
        WeightPair.from_json({"n": "2", "alpha": 1, "beta": 0})
    with pytest.raises(DomainError):
        GrushinParams.from_json({"n": 1, "m": 1, "tau": True})
    with pytest.raises(DomainError):
        GrushinParams(1, 1, 0)


def test_case_detection():
    assert WeightPair(2, 1.0, 0.0).is_case1()
    assert WeightPair(2, 0.3, 0.3 - 1.0).is_case1()
    assert WeightPair(2, Fraction(3, 2), Fraction(1, 2)).is_case1()
    assert WeightPair(2, 1.0, 1.0 + 1e-13).is_case2()
    assert not WeightPair(2, 1.0, 1.0 + 1e-9).is_case2()
