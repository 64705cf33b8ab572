import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from charm_kit.boundary import (
    angular_derivative,
    blaschke_product,
    boundary_g_prime,
    boundary_g_prime_fd,
    boundary_m_prime,
    boundary_m_prime_fd,
    density_triple,
    green_density,
    log_poisson_check,
    phi_interior,
    richardson,
)
from charm_kit.green import eval_g
from charm_kit.martin import eval_m

zero = st.builds(complex, st.floats(-3, 3), st.floats(0.2, 3))


def test_richardson_removes_two_orders():
    f = [1 + 2 * h + 3 * h * h for h in (1e-1, 1e-2, 1e-3)]
    assert richardson(f) == pytest.approx(1.0, abs=1e-13)


@given(st.lists(zero, min_size=1, max_size=4), st.floats(-4, 4))
def test_angular_derivative_vs_phase_speed(zeros, x):
    # on R the product is e^{i arg}, and |w'| is the speed of its phase
    r = angular_derivative(zeros, x)
    h = 1e-5
    speed = np.angle(blaschke_product(zeros, x + h) / blaschke_product(zeros, x - h)) / (2 * h)
    assert r.derivative == pytest.approx(speed, rel=1e-7)
    assert abs(r.limit_value) == pytest.approx(1.0, abs=1e-14)


def test_angular_derivative_rejects_lower_zero():
    with pytest.raises(ValueError):
        angular_derivative([1 - 1j], 0.0)


def test_trivial_boundary_series(trivial_acc):
    zs = 0.3 + 0.8j
    for x in (-2.0, 0.5, 3.0):
        assert boundary_g_prime(trivial_acc, zs, x) == pytest.approx(2 * zs.imag / abs(x - zs.conjugate()) ** 2)
        assert boundary_m_prime(trivial_acc, x) == pytest.approx(1 + 1 / x**2)


def test_series_match_difference_quotients(one_gen_acc):
    for x in (1.5, -2.0, 4.5, 6.0):
        assert boundary_g_prime(one_gen_acc, 1j, x) == pytest.approx(boundary_g_prime_fd(one_gen_acc, 1j, x), rel=1e-6)
        assert boundary_m_prime(one_gen_acc, x) == pytest.approx(boundary_m_prime_fd(one_gen_acc, x), rel=1e-6)


def test_m_prime_along_the_line(one_gen_acc):
    h = 1e-5
    x = 1.7
    fd = (eval_m(one_gen_acc, complex(x + h)).m - eval_m(one_gen_acc, complex(x - h)).m).real / (2 * h)
    assert boundary_m_prime(one_gen_acc, x) == pytest.approx(fd, rel=1e-7)


def test_g_prime_modulus_along_the_line(one_gen_acc):
    h = 1e-5
    x = 4.4
    a, b = eval_g(one_gen_acc, complex(x + h), 1j).value, eval_g(one_gen_acc, complex(x - h), 1j).value
    assert boundary_g_prime(one_gen_acc, 1j, x) == pytest.approx(abs(np.angle(a / b)) / (2 * h), rel=1e-7)


@given(st.floats(-5, 5))
def test_trivial_densities(x):
    from charm_kit.moebius import SemicircleConfig, TruncationPolicy, enumerate_shells

    acc = enumerate_shells(SemicircleConfig.from_triples([(0, 0.0, 1.0)]), TruncationPolicy(0))
    t = density_triple(acc, x)
    assert t.rho == pytest.approx(1.0)
    assert t.rho_i == pytest.approx(1 / (1 + x * x))
    assert t.phi_abs_sq == pytest.approx(1 / (1 + x * x))


def test_density_sandwich(one_gen_acc):
    for x in (1.5, -2.2, 5.0, 40.0):
        t = density_triple(one_gen_acc, x)
        assert 1 / (1 + x * x) <= t.rho_i * (1 + 1e-12) and t.rho_i <= t.rho
        assert 0 < t.phi_abs_sq <= 1


def test_phi_trivial_is_outer(trivial_acc):
    # boundary modulus 1/|x + i| is the trace of the outer function 1/(z + i)
    for z in (0.5 + 1j, -2 + 0.3j):
        assert phi_interior(trivial_acc, z).abs_value == pytest.approx(1 / abs(z + 1j), rel=1e-8)


def test_log_poisson_trivial_is_harmonic(trivial_acc):
    lhs, rhs, err = log_poisson_check(trivial_acc, 1j, 0.7 + 0.9j)
    assert rhs == pytest.approx(-2 * math.log(abs(0.7 + 0.9j + 1j)))
    assert lhs == pytest.approx(rhs, abs=1e-8)


def test_log_poisson_subharmonic(one_gen_acc):
    for z in (0.5 + 1.5j, 3 + 0.2j):
        lhs, rhs, err = log_poisson_check(one_gen_acc, 1j, z)
        assert lhs >= rhs - err
        assert green_density(one_gen_acc, 1j, z) > 0
