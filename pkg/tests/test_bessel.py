import math

import numpy as np
import pytest
import scipy.special as sp

from jacobiflow.errors import PreconditionError
from jacobiflow.singular.bessel import (
    bessel_i,
    bessel_ik,
    bessel_k,
    i_derivative,
    k_derivative,
)


@pytest.mark.parametrize("a", [0.0, 0.5, 1.0, 1.5, 2.0, 3.7, 10.0])
@pytest.mark.parametrize("x", [0.05, 0.7, 3.0, 12.0, 40.0])
def test_values_match_scipy(a, x):
    assert bessel_i(a, x) == pytest.approx(sp.iv(a, x), rel=1e-12)
    assert bessel_k(a, x) == pytest.approx(sp.kv(a, x), rel=1e-10)


@pytest.mark.parametrize("a", [1.0 - 1e-9, 1.0 + 1e-9, 2.0 + 1e-10, 3.0 - 1e-8])
def test_near_integer_orders(a):
    # the reflection formula degenerates at integer order; these sit right
    # on top of it
    x = 0.7
    assert bessel_i(a, x) == pytest.approx(sp.iv(a, x), rel=1e-12)
    assert bessel_k(a, x) == pytest.approx(sp.kv(a, x), rel=1e-11)


@pytest.mark.parametrize("x", [0.3, 1.0, 5.0])
def test_half_order_closed_forms(x):
    assert bessel_i(0.5, x) == pytest.approx(
        math.sqrt(2.0 / (math.pi * x)) * math.sinh(x), rel=1e-13
    )
    assert bessel_k(0.5, x) == pytest.approx(
        math.sqrt(math.pi / (2.0 * x)) * math.exp(-x), rel=1e-13
    )


@pytest.mark.parametrize("a", [0.0, 0.5, 1.0, 2.3])
@pytest.mark.parametrize("x", [0.4, 2.0, 25.0])
def test_wronskian(a, x):
    i, k = bessel_ik(a, x)
    w = i * k_derivative(a, x) - k * i_derivative(a, x)
    assert w == pytest.approx(-1.0 / x, rel=1e-11)


@pytest.mark.parametrize("a", [0.0, 1.0, 1.5])
def test_derivatives_match_finite_differences(a):
    x, h = 2.0, 1e-6
    di = (bessel_i(a, x + h) - bessel_i(a, x - h)) / (2.0 * h)
    dk = (bessel_k(a, x + h) - bessel_k(a, x - h)) / (2.0 * h)
    assert i_derivative(a, x) == pytest.approx(di, rel=1e-8)
    assert k_derivative(a, x) == pytest.approx(dk, rel=1e-8)


def test_large_argument_branch():
    # well past the series/asymptotic switch
    for a in (0.5, 2.0):
        assert bessel_i(a, 120.0) == pytest.approx(sp.iv(a, 120.0), rel=1e-12)
        assert bessel_k(a, 120.0) == pytest.approx(sp.kv(a, 120.0), rel=1e-12)


def test_argument_validation():
    with pytest.raises(PreconditionError):
        bessel_i(-0.5, 1.0)
    with pytest.raises(PreconditionError):
        bessel_i(1.0, 0.0)
    with pytest.raises(PreconditionError):
        bessel_k(1.0, -2.0)
    with pytest.raises(PreconditionError):
        bessel_k(1.0, np.inf)
    with pytest.raises(PreconditionError):
        bessel_i(1.0, 701.0)


if __name__ == "__main__":
    pytest.main([__file__])
