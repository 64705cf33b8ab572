import math

import numpy as np
import pytest

from charm_kit.errors import QuadratureError
from charm_kit.quadrature import adaptive_gl, integrate_arc, integrate_segment


def test_polynomial_exact():
    rng = np.random.default_rng(3)
    coef = rng.normal(size=40)
    p = np.polynomial.Polynomial(coef)
    exact = p.integ()(2.0) - p.integ()(-1.0)
    assert adaptive_gl(p, -1.0, 2.0).value == pytest.approx(exact, rel=1e-12)


def test_vector_valued():
    res = adaptive_gl(lambda u: np.vstack([np.cos(u), np.sin(u)]), 0.0, math.pi / 2)
    assert np.allclose(res.value, [1.0, 1.0], atol=1e-14)


def test_both_ends_singular():
    res = integrate_segment(lambda xi, dp, dq: 1 / np.sqrt(-dp * dq), -1.0, 1.0, True, True)
    assert res.value.real == pytest.approx(math.pi, rel=1e-13)


def test_one_end_singular():
    assert integrate_segment(lambda xi, dp, dq: 1 / np.sqrt(dp), 0.0, 1.0, True, False).value.real == pytest.approx(2.0, rel=1e-13)
    assert integrate_segment(lambda xi, dp, dq: 1 / np.sqrt(-dq), 0.0, 1.0, False, True).value.real == pytest.approx(2.0, rel=1e-13)


def test_offsets_keep_relative_accuracy():
    # xi - p would be quantized to ulp(1e8) next to the endpoint
    res = integrate_segment(lambda xi, dp, dq: 1 / np.sqrt(dp), 1e8, 1e8 + 1, True, False)
    assert res.value.real == pytest.approx(2.0, rel=1e-13)


def test_cancelling_integral_terminates():
    res = integrate_segment(lambda xi, dp, dq: xi / np.sqrt(-dp * dq), -1.0, 1.0, True, True)
    assert abs(res.value) < 1e-13


def test_complex_segment():
    res = integrate_segment(lambda xi, dp, dq: np.exp(xi), 0.0, 1j * math.pi, False, False)
    assert res.value == pytest.approx(-2.0, abs=1e-13)


def test_closed_arc():
    res = integrate_arc(lambda xi, dp, dq: 1 / (xi - 2.0), 2.0, 0.5, 0.0, 2 * math.pi)
    assert res.value == pytest.approx(2j * math.pi, abs=1e-12)
    half = integrate_arc(lambda xi, dp, dq: xi**2, 0.0, 1.0, 0.0, math.pi)
    assert half.value == pytest.approx(-2 / 3, abs=1e-13)


def test_non_integrable_raises():
    with pytest.raises(QuadratureError):
        adaptive_gl(lambda u: 1 / u, 0.0, 1.0)
