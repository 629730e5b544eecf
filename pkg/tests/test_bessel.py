import numpy as np
import pytest
from scipy import special

from bessel import bessel_j, bessel_j_range, bessel_series


@pytest.mark.parametrize("x", [0.5, 5.0, 25.0, 100.0, -7.3])
def test_matches_scipy(x):
    orders = np.arange(0, 61)
    np.testing.assert_allclose(bessel_j_range(60, x), special.jv(orders, x), atol=1e-12)


def test_high_orders_beyond_argument():
    values = bessel_j_range(200, 25.0)
    np.testing.assert_allclose(values[150:], special.jv(np.arange(150, 201), 25.0), atol=1e-15)


def test_zero_argument():
    values = bessel_j_range(5, 0.0)
    assert values[0] == 1.0
    assert np.all(values[1:] == 0.0)


def test_tiny_argument_uses_series():
    x = 1e-10
    np.testing.assert_allclose(bessel_j_range(3, x), special.jv(np.arange(4), x), rtol=1e-12, atol=0)


def test_negative_orders():
    orders = np.arange(-12, 13)
    np.testing.assert_allclose(bessel_j(orders, 9.5), special.jv(orders, 9.5), atol=1e-13)


def test_series_validator():
    for m in (-3, 0, 1, 4):
        assert bessel_series(m, 1.2) == pytest.approx(special.jv(m, 1.2), abs=1e-15)
    assert bessel_series(0, 0.0) == 1.0
