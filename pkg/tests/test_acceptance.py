"""Acceptance criteria 1-10; each test prints one PASS/FAIL line via ``record``."""

import math
import subprocess
import sys
import time

import numpy as np
import pytest

from charm_kit.approx import divisor_check
from charm_kit.boundary import (
    angular_derivative,
    boundary_g_prime,
    boundary_g_prime_fd,
    boundary_m_prime,
    boundary_m_prime_fd,
)
from charm_kit.comb import (
    GapSystem,
    akhiezer_levin_limit,
    cos_family,
    extract_comb,
    green_map,
    martin_map,
    widom_trend,
)
from charm_kit.green import certificate_f, eval_g, eval_g_prime, find_critical_points
from charm_kit.martin import certificate_f_martin, condition_report, eval_m, find_martin_critical
from charm_kit.moebius import (
    SemicircleConfig,
    TruncationPolicy,
    apply,
    enumerate_shells,
    generator,
    parse_config,
)
from charm_kit.runner import boundary_points, image_error, interior_points, load_corpus

from .conftest import record, shipped

RNG_SEED = 2024


def test_criterion_1_trivial_closed_forms():
    t0 = time.perf_counter()
    acc = enumerate_shells(SemicircleConfig.from_triples([(0, 0.0, 1.0)]), TruncationPolicy(0))
    rng = np.random.default_rng(RNG_SEED)
    zs = rng.uniform(-4, 4, 50) + 1j * rng.uniform(0.01, 4, 50)
    zst = 0.3 + 0.9j
    err = 0.0
    for z in zs:
        err = max(err, abs(eval_g(acc, z, zst).value - (z - zst) / (z - zst.conjugate())))
        ev = eval_m(acc, z)
        err = max(err, abs(ev.m - (z - 1 / z)), abs(ev.m_prime - (1 + 1 / z**2)))
    c0 = find_martin_critical(acc)
    err = max(err, abs(c0[0].location - 1j))
    dt = time.perf_counter() - t0
    ok = err <= 1e-12 and len(c0) == 1 and dt < 1.0
    record(1, ok, f"max error {err:.2e}, {dt:.3f} s")
    assert ok


def test_criterion_2_one_gap_cross():
    t0 = time.perf_counter()
    acc = enumerate_shells(SemicircleConfig.from_triples([(0, 0.0, 1.0)]), TruncationPolicy(0))
    rng = np.random.default_rng(RNG_SEED)
    zs = rng.uniform(-3, 3, 100) + 1j * rng.uniform(0.05, 3, 100)
    err = 0.0
    for z in zs:
        lam = -(z + 1 / z) / 2
        closed = 2 * abs(np.sqrt(lam * lam - 1 + 0j).imag)
        err = max(err, abs(eval_m(acc, z).m.imag - closed))
    # slope of M along the gap at lambda* = -1/2, read off the group side
    lam_star = -0.5
    zst = complex(np.exp(1j * math.acos(-lam_star)))
    slope = (eval_m(acc, zst).m_prime / (-(1 - 1 / zst**2) / 2)).imag
    mm = martin_map(GapSystem(((-1.0, 1.0),), lam_star), slope)
    al = akhiezer_levin_limit(mm, etas=(1e2, 1e3, 1e4))
    at_1e4 = al.samples[-1]
    dt = time.perf_counter() - t0
    ok = err <= 1e-8 and abs(at_1e4 - 2) <= 1e-3 and abs(al.limit - 2) <= 1e-3 and dt < 5
    record(2, ok, f"group vs closed form {err:.2e}, M(i 1e4)/1e4 = {at_1e4:.9f}, "
                  f"extrapolated {al.limit:.9f}, {dt:.2f} s")
    assert ok


@pytest.mark.parametrize("triples", [
    [(0, 0.0, 1.0), (1, 3.0, 1.0)],
    [(0, 0.0, 1.0), (1, 3.0, 1.0), (2, -3.0, 1.0)],
], ids=["one_generator", "three_semicircles"])
def test_criterion_3_automorphy(triples):
    t0 = time.perf_counter()
    cfg = SemicircleConfig.from_triples(triples)
    acc = enumerate_shells(cfg, TruncationPolicy(12, 1e-300))
    rng = np.random.default_rng(RNG_SEED)
    zst = 1j
    worst, worst_ratio = 0.0, 0.0
    for z in interior_points(cfg, 20, rng):
        e1 = eval_g(acc, z, zst)
        for k in cfg.generator_indices:
            g = generator(cfg, k)
            for h in (g, g.inverse()):
                w = complex(apply(h, z))
                e2 = eval_g(acc, w, zst)
                d = abs(abs(e2.value) - abs(e1.value))
                tail = max(abs(e1.value) * math.expm1(e1.tail_bound), abs(e2.value) * math.expm1(e2.tail_bound))
                tail += abs(eval_g_prime(acc, w, zst).value) * image_error(h, z)
                worst = max(worst, d)
                worst_ratio = max(worst_ratio, d / (2 * tail))
    dt = time.perf_counter() - t0
    ok = worst_ratio <= 1 and worst <= 1e-5 and dt < 30
    name = "one generator" if len(triples) == 2 else "three semicircles"
    record(3, ok, f"{name}: L=12, {acc.size} elements, max defect {worst:.2e} "
                  f"= {worst_ratio:.2f} x (2 tail), {dt:.1f} s")
    assert ok


def test_criterion_4_divisor_chain(geo_ladder):
    cfg = geo_ladder.config
    rng = np.random.default_rng(RNG_SEED)
    viol = []
    for z in interior_points(cfg, 20, rng):
        viol += list(divisor_check(geo_ladder, z, 1j, strict=False).violations)
    ok = not viol
    record(4, ok, f"{len(geo_ladder)} levels, 20 points, {len(viol)} violations")
    assert ok


def _certificate_levels(accs, rng):
    worst_int, worst_bd = -math.inf, 0.0
    for acc in accs:
        pts_g = find_critical_points(acc, 1j)
        pts_m = find_martin_critical(acc)
        for z in interior_points(acc.config, 50, rng):
            worst_int = max(worst_int, certificate_f(acc, z, 1j, pts_g), certificate_f_martin(acc, z, pts_m))
        for x in boundary_points(acc.config, 10, rng):
            worst_bd = max(worst_bd, abs(certificate_f(acc, complex(x), 1j, pts_g) - 1),
                           abs(certificate_f_martin(acc, complex(x), pts_m) - 1))
    return worst_int, worst_bd


def test_criterion_5_certificates(geo_ladder, one_gen_acc, trivial_acc):
    rng = np.random.default_rng(RNG_SEED)
    accs = [trivial_acc, one_gen_acc, *geo_ladder.accumulators]
    worst_int, worst_bd = _certificate_levels(accs, rng)
    ok = worst_int <= 1 + 1e-6 and worst_bd <= 1e-6
    record(5, ok, f"{len(accs)} levels, max interior f = {worst_int:.9f}, "
                  f"max boundary |f - 1| = {worst_bd:.2e}")
    assert ok


def test_criterion_6_boundary_identities(one_gen_acc):
    rng = np.random.default_rng(RNG_SEED)
    xs = boundary_points(one_gen_acc.config, 10, rng, margin=0.05)
    rel = 0.0
    for x in xs:
        gp = boundary_g_prime(one_gen_acc, 1j, x)
        mp = boundary_m_prime(one_gen_acc, x)
        rel = max(rel, abs(gp - boundary_g_prime_fd(one_gen_acc, 1j, x)) / abs(gp),
                  abs(mp - boundary_m_prime_fd(one_gen_acc, x)) / abs(mp))
    julia = 0.0
    for zeros in shipped("trivial")["params"]["blaschke_zeros"]:
        zeros = [complex(*z) for z in zeros]
        for x in np.linspace(-3, 3, 10):
            r = angular_derivative(zeros, float(x), rtol=1.0)
            julia = max(julia, abs(r.derivative - r.finite_difference) / r.derivative)
    ok = rel <= 1e-4 and julia <= 1e-5
    record(6, ok, f"series vs difference quotient {rel:.2e} relative, Julia {julia:.2e} relative")
    assert ok


@pytest.mark.parametrize("system", [
    GapSystem(((-3.0, -1.0), (1.0, 3.0)), -2.0),
    GapSystem(((-1.0, 1.0), (2.0, 2.5), (-4.0, -3.0)), 0.3),
], ids=["symmetric", "three_gap"])
def test_criterion_7_comb(system):
    gm, mm = green_map(system), martin_map(system)
    cp = extract_comb(gm)
    heights = max(abs(h - d) for h, d in zip(cp.height, cp.height_dual))
    # G(mu_k) from inside the gap, the third route
    gap_route = max(abs(h - gm.gap_value(m)) for h, m in zip(cp.height, gm.mu.mu))
    b0 = abs(gm.theta(system.gaps[0][1]))
    a0 = max(abs(cp.theta_a0 - math.pi), abs(cp.theta_a0_real_route - math.pi))
    dmu = max(gm.derivative_at_mu() + mm.derivative_at_mu())
    ok = heights <= 1e-6 and gap_route <= 1e-6 and b0 <= 1e-6 and a0 <= 1e-6 and dmu < 1e-8
    record(7, ok, f"{len(system)} gaps: h dual-path {heights:.1e}, gap route {gap_route:.1e}, "
                  f"|theta(b0)| {b0:.1e}, |theta(a0) - pi| {a0:.1e}, max |theta'(mu)| {dmu:.1e}")
    assert ok


@pytest.fixture(scope="module")
def cos_trend():
    return widom_trend(cos_family, (4, 8, 16))


def test_criterion_8_conditions(cos_trend):
    inc = np.diff(cos_trend.partial_sums)
    diverging = cos_trend.strictly_increasing and cos_trend.verdict.verdict == "fails"
    doc = shipped("geometric_ladder")
    cfg, pol = parse_config(doc["config"])
    geo_b = condition_report(enumerate_shells(cfg, pol)).verdict_b.verdict
    same = {}
    for s in load_corpus():
        if s.config is not None:
            rep = condition_report(enumerate_shells(s.config, s.policy))
            same[s.name] = len({v.verdict for v in rep.convergence_verdicts.values()}) == 1
    ok = diverging and geo_b == "holds" and all(same.values())
    sums = ", ".join(f"{v:.5f}" for v in cos_trend.partial_sums)
    record(8, ok, f"cos sums [{sums}] increments {np.round(inc, 5).tolist()} -> "
                  f"{cos_trend.verdict.verdict} (divergence flag {'raised' if diverging else 'NOT raised'}); "
                  f"geometric semicircles condition B {geo_b}; "
                  f"four-sum verdicts identical on {sum(same.values())}/{len(same)} configs")
    assert geo_b == "holds" and all(same.values())
    assert diverging, "cos family partial sums converge; see the decisions ledger"


def test_criterion_9_ladder_deltas(geo_tracking):
    mono = geo_tracking.monotone
    need = [k for k in mono if k in ("g", "m") or k.startswith(("green_c", "martin_c"))]
    ok = bool(need) and all(mono[k] for k in need)
    record(9, ok, f"strictly decreasing: {', '.join(k for k in need if mono[k])}"
                  + (f"; not: {[k for k in need if not mono[k]]}" if not ok else ""))
    assert ok


def test_criterion_10_verify_reproducible(tmp_path):
    outs, times = [], []
    for i in range(2):
        path = tmp_path / f"report{i}.json"
        t0 = time.perf_counter()
        proc = subprocess.run([sys.executable, "-m", "charm_kit.cli", "verify", "--all", "--out", str(path)],
                              capture_output=True, text=True, timeout=600)
        times.append(time.perf_counter() - t0)
        assert proc.returncode in (0, 1, 2), proc.stderr
        outs.append(path.read_bytes())
    same = outs[0] == outs[1]
    ok = same and max(times) < 300
    record(10, ok, f"byte-identical: {same} ({len(outs[0])} bytes), runs {times[0]:.0f} s / {times[1]:.0f} s")
    assert ok
