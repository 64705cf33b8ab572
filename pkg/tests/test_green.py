import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import minimize_scalar

from charm_kit.errors import CriticalPointNotFound
from charm_kit.green import (
    certificate_f,
    eval_g,
    eval_g_prime,
    find_critical_points,
    log_derivative,
    widom_product,
)
from charm_kit.moebius import apply, generator

upper = st.builds(complex, st.floats(-5, 5), st.floats(0.05, 5))


@given(upper, upper)
def test_trivial_closed_form(z, zs):
    from charm_kit.moebius import SemicircleConfig, TruncationPolicy, enumerate_shells

    acc = enumerate_shells(SemicircleConfig.from_triples([(0, 0.0, 1.0)]), TruncationPolicy(0))
    assert abs(eval_g(acc, z, zs).value - (z - zs) / (z - zs.conjugate())) < 1e-12


def _mp_abs_g(acc, z, zs):
    """|g| from the same truncated orbit, in 40-digit arithmetic."""
    mp.mp.dps = 40
    z, zs = mp.mpc(z.real, z.imag), mp.mpc(zs.real, zs.imag)
    tot = mp.mpf(0)
    for a, b, c, d in acc.mats:
        a, b, c, d = (mp.mpf(float(t)) for t in (a, b, c, d))
        w = (a * zs + b) / (c * zs + d)
        tot += mp.log(abs((z - w) / (z - mp.conj(w))))
    return float(mp.e ** tot)


def test_against_multiprecision_product(one_gen_acc):
    for z in (0.5 + 1.5j, 2.2 + 0.3j, -1.0 + 0.2j):
        e = eval_g(one_gen_acc, z, 1j)
        ref = _mp_abs_g(one_gen_acc, z, 1j)
        assert abs(abs(e.value) - ref) <= abs(e.value) * math.expm1(e.tail_bound)


def test_reference_value(one_gen_acc):
    e = eval_g(one_gen_acc, 1j, 2j)
    assert e.value == pytest.approx(-0.317117 - 0.006090j, abs=1e-6)
    assert e.tail_bound == e.truncation + e.rounding
    assert e.rounding > e.truncation  # L=12 pushes truncation below rounding
    assert e.degraded == (e.truncation > one_gen_acc.policy.target_tail)


def test_modulus_properties(one_gen_acc):
    for z in (0.5 + 1.5j, 5 + 0.01j, -3 + 2j):
        assert abs(eval_g(one_gen_acc, z, 1j).value) < 1
    for x in (1.5, -4.0, 7.0):
        assert abs(eval_g(one_gen_acc, complex(x), 1j).value) == pytest.approx(1.0, abs=1e-12)


def test_zeros_on_orbit(one_gen_config, one_gen_acc):
    zs = 0.4 + 1.1j
    assert eval_g(one_gen_acc, zs, zs).value == 0
    g = generator(one_gen_config, 1)
    # the image is only known to rounding, so the zero is numerical
    assert abs(eval_g(one_gen_acc, apply(g, zs), zs).value) < 1e-12


def test_automorphy_small_group(two_gen_acc):
    cfg = two_gen_acc.config
    for z in (0.5 + 1.5j, -1.7 + 0.4j):
        base = abs(eval_g(two_gen_acc, z, 1j).value)
        for k in cfg.generator_indices:
            g = generator(cfg, k)
            for h in (g, g.inverse()):
                assert abs(abs(eval_g(two_gen_acc, apply(h, z), 1j).value) - base) < 1e-6


def test_derivative_matches_difference(one_gen_acc):
    h = 1e-5
    for z in (0.5 + 1.5j, 2.1 + 0.7j):
        fd = (eval_g(one_gen_acc, z + h, 1j).value - eval_g(one_gen_acc, z - h, 1j).value) / (2 * h)
        assert eval_g_prime(one_gen_acc, z, 1j).value == pytest.approx(fd, rel=1e-8)
        ld = log_derivative(one_gen_acc, z, 1j).value
        assert ld == pytest.approx(fd / eval_g(one_gen_acc, z, 1j).value, rel=1e-8)


def test_derivative_at_zero(one_gen_acc):
    # g'(z*) = prod over the other factors / (z* - conj z*)
    zs = 0.4 + 1.1j
    h = 1e-6
    fd = eval_g(one_gen_acc, zs + h, zs).value / h
    assert eval_g_prime(one_gen_acc, zs, zs).value == pytest.approx(fd, rel=1e-5)


def test_critical_point_on_arc(one_gen_config, one_gen_acc):
    pts = find_critical_points(one_gen_acc, 1j)
    assert [p.semicircle_index for p in pts] == [1]
    p = pts[0]
    assert abs(abs(p.location - 3) - 1) < 1e-12
    assert p.residual < 1e-10
    # oracle: minimize |g| along the arc directly
    res = minimize_scalar(lambda t: abs(eval_g(one_gen_acc, 3 + np.exp(1j * t), 1j).value),
                          bounds=(0.01, math.pi - 0.01), method="bounded",
                          options={"xatol": 1e-10})
    assert p.location == pytest.approx(3 + np.exp(1j * res.x), abs=1e-5)
    assert p.value == pytest.approx(res.fun, abs=1e-10)


def test_no_critical_point_off_unit_arc(one_gen_acc):
    with pytest.raises(CriticalPointNotFound) as info:
        find_critical_points(one_gen_acc, 2j)
    assert info.value.samples


def test_trivial_group_has_no_green_critical_points(trivial_acc):
    assert find_critical_points(trivial_acc, 1j) == []


@given(upper, st.floats(0.1, 3.0))
def test_trivial_certificate(z, t):
    from charm_kit.moebius import SemicircleConfig, TruncationPolicy, enumerate_shells

    acc = enumerate_shells(SemicircleConfig.from_triples([(0, 0.0, 1.0)]), TruncationPolicy(0))
    zs = complex(np.exp(1j * t))
    assert certificate_f(acc, z, zs, []) <= 1 + 1e-12
    assert certificate_f(acc, complex(z.real), zs, []) == pytest.approx(1.0, abs=1e-12)


def test_certificate_one_generator(one_gen_acc):
    pts = find_critical_points(one_gen_acc, 1j)
    for z in (0.5 + 1.5j, 4.5 + 0.2j, -2 + 0.7j, 1.5 + 0.01j):
        assert certificate_f(one_gen_acc, z, 1j, pts) <= 1 + 1e-9
    for x in (1.5, 4.5, -2.0):
        assert certificate_f(one_gen_acc, complex(x), 1j, pts) == pytest.approx(1.0, abs=1e-9)


def test_widom_product():
    from charm_kit.green import CriticalPoint

    pts = [CriticalPoint(1, 3 + 1j, 0.5, 0.0), CriticalPoint(2, -3 + 1j, 0.25, 0.0)]
    w = widom_product(pts)
    assert w.product == pytest.approx(0.125)
    assert w.log_sum == pytest.approx(math.log(8))


def test_rejects_lower_half_plane(one_gen_acc):
    with pytest.raises(ValueError):
        eval_g(one_gen_acc, 1j, -1j)
    with pytest.raises(ValueError):
        eval_g(one_gen_acc, -1j, 1j)
