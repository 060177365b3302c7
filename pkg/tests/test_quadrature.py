import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from esc_lab.quadrature import gauss_legendre_unit, simpson, simpson_weights


def test_simpson_exact_for_cubics():
    # Simpson integrates cubics exactly: int_0^2 (x^3 - x + 1) = 4 - 2 + 2
    assert simpson(lambda x: x**3 - x + 1, 0.0, 2.0, 2) == pytest.approx(4.0, abs=1e-14)


def test_simpson_sin_squared_over_period():
    assert simpson(lambda t: np.sin(t) ** 2, 0.0, 2 * math.pi) == pytest.approx(math.pi, abs=1e-12)


def test_simpson_trailing_axes():
    out = simpson(lambda t: np.stack([np.cos(t) ** 2, np.ones_like(t)], axis=-1), 0, math.pi)
    np.testing.assert_allclose(out, [math.pi / 2, math.pi], atol=1e-12)


def test_simpson_rejects_odd_interval_count():
    with pytest.raises(ValueError):
        simpson_weights(7, 0.0, 1.0)


@given(st.integers(min_value=1, max_value=12))
def test_gauss_legendre_weights_sum_to_one_and_integrate_polynomials(n):
    s, w = gauss_legendre_unit(n)
    assert math.fsum(w) == pytest.approx(1.0, abs=1e-14)
    assert np.all((s > 0) & (s < 1))
    # exact up to degree 2n - 1
    k = 2 * n - 1
    assert float(np.sum(w * s**k)) == pytest.approx(1.0 / (k + 1), rel=1e-12)


def test_one_minus_s_weight_integral():
    s, w = gauss_legendre_unit(8)
    assert float(np.sum(w * (1 - s))) == pytest.approx(0.5, abs=1e-15)
