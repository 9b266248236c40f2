"""Gauss-Legendre layer: exactness, scaling, order selection."""

import numpy as np
import pytest

import susyquench as sq


def test_weights_sum_to_box(geom, rule):
    assert np.sum(rule.weights) == pytest.approx(geom.L, rel=1e-14)


def test_odd_integrand_vanishes(rule):
    assert abs(np.dot(rule.weights, rule.nodes)) < 1e-12


def test_cosine_squared(geom, rule):
    val = np.dot(rule.weights, np.cos(np.pi * rule.nodes / geom.L) ** 2)
    assert val == pytest.approx(geom.L / 2, rel=1e-14)


def test_auto_order_floor_and_growth():
    assert sq.auto_order(10) == 400
    assert sq.auto_order(176) == 400
    assert sq.auto_order(300) == 610
    assert sq.auto_order(600) > sq.auto_order(300)


def test_order_doubling_stability(geom):
    # norms of a deep level-4 state stay put when the order is doubled
    n_max = 40 + 4
    r1 = sq.build_quadrature(sq.auto_order(n_max), geom)
    r2 = sq.build_quadrature(2 * sq.auto_order(n_max), geom)
    s = sq.hierarchy_wavefunction(4, 40, geom)
    v1 = sq.inner_product(s, s, r1)
    v2 = sq.inner_product(s, s, r2)
    assert v1 == pytest.approx(v2, abs=1e-12)
    assert v1 == pytest.approx(1.0, abs=1e-11)


def test_rule_is_frozen(geom, rule):
    with pytest.raises((ValueError, AttributeError)):
        rule.nodes[0] = 0.0
