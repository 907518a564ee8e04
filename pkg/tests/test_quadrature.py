import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from facetdg.quadrature import gauss_legendre_01, segment_rule, triangle_rule


def tri_monomial(i, j):
    # closed form for the reference-triangle moment, independent derivation
    return math.factorial(i) * math.factorial(j) / math.factorial(i + j + 2)


@pytest.mark.parametrize("exactness", range(1, 13))
def test_segment_rule_exact(exactness):
    rule = segment_rule(exactness)
    for k in range(exactness + 1):
        val = np.sum(rule.weights * rule.points ** k)
        assert val == pytest.approx(1.0 / (k + 1), abs=1e-14)


@pytest.mark.parametrize("exactness", range(1, 13))
def test_triangle_rule_exact(exactness):
    rule = triangle_rule(exactness)
    assert np.all(rule.weights > 0.0)
    assert rule.weights.sum() == pytest.approx(0.5, abs=1e-14)
    for i in range(exactness + 1):
        for j in range(exactness + 1 - i):
            val = np.sum(rule.weights * rule.points[:, 0] ** i * rule.points[:, 1] ** j)
            assert val == pytest.approx(tri_monomial(i, j), abs=1e-14)


def test_points_inside_reference_domain():
    rule = triangle_rule(8)
    x, y = rule.points[:, 0], rule.points[:, 1]
    assert np.all(x >= 0) and np.all(y >= 0) and np.all(x + y <= 1 + 1e-14)


def test_gauss_legendre_01_weights_sum():
    pts, w = gauss_legendre_01(7)
    assert w.sum() == pytest.approx(1.0, abs=1e-14)
    assert np.all((pts > 0) & (pts < 1))


@settings(deadline=None, max_examples=25)
@given(st.integers(min_value=0, max_value=6), st.integers(min_value=0, max_value=6),
       st.floats(min_value=-5, max_value=5))
def test_triangle_rule_random_polynomials(i, j, a):
    rule = triangle_rule(12)
    val = np.sum(rule.weights * a * rule.points[:, 0] ** i * rule.points[:, 1] ** j)
    assert val == pytest.approx(a * tri_monomial(i, j), abs=1e-12)
