"""Symmetric complex Martin function of the group, m = m+ + m-.

    m+(z) = sum (gamma(z) - Re gamma(i))
    m-(z) = -sum (1/gamma(z) - Re 1/gamma(i))

Each term is rewritten without cancellation using ad - bc = 1:

    gamma(z) - Re gamma(i)     = (z - i) / ((cz + d)(ci + d)) + i / |ci + d|^2
    -(1/gamma(z) - Re 1/gamma(i)) = (z - i) / ((az + b)(ai + b)) + i / |ai + b|^2

so the terms decay like the orbit mass instead of being differences of O(1)
numbers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import AutomorphyViolation, CriticalPointNotFound, PoleError
from .green import _BLOCK, CriticalPoint, SeriesValue, _arc_scan, _bracket_sign_change, eval_g
from .moebius import OrbitAccumulator, generator
from .trend import HOLDS, INCONCLUSIVE, TrendVerdict, verdict_from_increments

POLE_RADIUS = 1e-8
CRITICAL_TOL = 1e-10
BRENT_XTOL = 1e-7  # Newton finishes from here
NEWTON_STEPS = 6


@dataclass(frozen=True)
class MartinEvaluation:
    m: complex
    m_prime: complex
    im_over_im: float
    tail_bound: float
    shells_used: int

    def to_dict(self) -> dict:
        return {
            "m": {"re": self.m.real, "im": self.m.imag},
            "m_prime": {"re": self.m_prime.real, "im": self.m_prime.imag},
            "im_over_im": self.im_over_im,
            "tail_bound": self.tail_bound,
            "shells": self.shells_used,
        }


@dataclass(frozen=True)
class ConditionReport:
    condition_a_product: float
    condition_a_sum: float
    condition_b_sum: float
    shell_trend: tuple[float, ...]  # partial sums of sum Im gamma(i) by shell
    convergence_sums: dict  # the four equivalent sums, name -> partial sums
    verdict_a: TrendVerdict
    verdict_b: TrendVerdict
    convergence_verdicts: dict
    critical_points: tuple[CriticalPoint, ...]

    def to_dict(self) -> dict:
        return {
            "condition_a_product": self.condition_a_product,
            "condition_a_sum": self.condition_a_sum,
            "condition_b_sum": self.condition_b_sum,
            "shell_trend": list(self.shell_trend),
            "convergence_sums": {k: list(v) for k, v in self.convergence_sums.items()},
            "verdict_a": self.verdict_a.to_dict(),
            "verdict_b": self.verdict_b.to_dict(),
            "convergence_verdicts": {k: v.to_dict() for k, v in self.convergence_verdicts.items()},
            "critical_points": [p.to_dict() for p in self.critical_points],
        }


@dataclass(frozen=True)
class AdditiveCharacter:
    values: dict  # generator index -> eta(g_k)
    spread: dict  # generator index -> max deviation over the base points

    def to_dict(self) -> dict:
        return {"values": {str(k): v for k, v in self.values.items()},
                "spread": {str(k): v for k, v in self.spread.items()}}


def _dens(acc: OrbitAccumulator, z: complex):
    """(cz + d, az + b) for every element, refusing points near their zeros."""
    den_c = acc.c * z + acc.d
    den_a = acc.a * z + acc.b
    # |cz+d| / |c| is the distance to the pole -d/c (and likewise for the zero -b/a)
    with np.errstate(divide="ignore", invalid="ignore"):
        dist_pole = np.where(acc.c != 0, np.abs(den_c) / np.abs(acc.c), np.inf)
        dist_zero = np.where(acc.a != 0, np.abs(den_a) / np.abs(acc.a), np.inf)
    if np.min(dist_pole) < POLE_RADIUS:
        raise PoleError(f"z = {z} is within {POLE_RADIUS} of an orbit point of infinity")
    if np.min(dist_zero) < POLE_RADIUS:
        raise PoleError(f"z = {z} is within {POLE_RADIUS} of an orbit point of 0")
    return den_c, den_a


def _plus_terms(acc, z, den_c):
    ci = acc.c * 1j + acc.d
    return (z - 1j) / (den_c * ci) + 1j / np.abs(ci) ** 2


def _minus_terms(acc, z, den_a):
    ai = acc.a * 1j + acc.b
    return (z - 1j) / (den_a * ai) + 1j / np.abs(ai) ** 2


def eval_m_plus(acc: OrbitAccumulator, z: complex) -> tuple[SeriesValue, float]:
    """m+(z) and, as a cross-check, Im m+(z)/Im z = sum |gamma'(z)|."""
    z = complex(z)
    den_c, _ = _dens(acc, z)
    val, tail = acc.total(_plus_terms(acc, z, den_c))
    ratio, _ = acc.total(1.0 / np.abs(den_c) ** 2)
    return SeriesValue(val, tail, acc.n_shells), ratio


def eval_m_minus(acc: OrbitAccumulator, z: complex) -> SeriesValue:
    z = complex(z)
    _, den_a = _dens(acc, z)
    val, tail = acc.total(_minus_terms(acc, z, den_a))
    return SeriesValue(val, tail, acc.n_shells)


def eval_m(acc: OrbitAccumulator, z: complex) -> MartinEvaluation:
    z = complex(z)
    if z.imag < 0:
        raise ValueError("z must lie in the closed upper half plane")
    den_c, den_a = _dens(acc, z)
    m, tail = acc.total(_plus_terms(acc, z, den_c) + _minus_terms(acc, z, den_a))
    mp, tail_p = acc.total(1.0 / den_c**2 + 1.0 / den_a**2)
    ioi, _ = acc.total(1.0 / np.abs(den_c) ** 2 + 1.0 / np.abs(den_a) ** 2)
    return MartinEvaluation(m, mp, ioi, max(tail, tail_p), acc.n_shells)


def _im_m_many(acc: OrbitAccumulator, zs) -> np.ndarray:
    """Im m for a batch of points: Im z * sum (1/|cz+d|^2 + 1/|az+b|^2)."""
    z = np.asarray(zs)[:, None]
    out = np.zeros(z.shape[0])
    for start in range(0, acc.size, _BLOCK):
        a, b, c, d = acc.mats[start:start + _BLOCK].T
        out += np.sum(1.0 / np.abs(c * z + d) ** 2 + 1.0 / np.abs(a * z + b) ** 2, axis=1)
    return out * z[:, 0].imag


def _m_prime(acc: OrbitAccumulator, z: complex) -> complex:
    return complex(np.sum(1.0 / (acc.c * z + acc.d) ** 2 + 1.0 / (acc.a * z + acc.b) ** 2))


def _m_second(acc: OrbitAccumulator, z: complex) -> complex:
    den_c = acc.c * z + acc.d
    den_a = acc.a * z + acc.b
    return complex(np.sum(-2.0 * acc.c / den_c**3 - 2.0 * acc.a / den_a**3))


def find_martin_critical(acc: OrbitAccumulator) -> list[CriticalPoint]:
    """Zeros of m' on every boundary arc, including the unit arc.

    Im m is invariant under the reflection in each arc, so its normal
    derivative vanishes there and the zero of m' is the critical point of Im m
    along the arc.  That critical point is a maximum (Im m vanishes at both
    feet of the arc), located by a 64-point scan, Brent on the tangential
    derivative Re(m'(z)(z - c)), and a Newton polish on m'.
    """
    out = []
    for s in acc.config.semicircles:

        def im_m(phis, s=s):
            return _im_m_many(acc, s.point(phis))

        def tangential(phi, s=s):
            z = complex(s.point(phi))
            return (_m_prime(acc, z) * (z - s.center)).real

        phis, vals = _arc_scan(im_m)
        lo, hi = _bracket_sign_change(phis, vals, want_min=False)
        try:
            phi = brentq(tangential, lo, hi, xtol=BRENT_XTOL)
        except ValueError as exc:
            raise CriticalPointNotFound(
                f"no sign change of the tangential derivative of Im m on arc {s.index}",
                samples=list(zip(phis.tolist(), vals.tolist())),
            ) from exc
        z = complex(s.point(phi))
        for _ in range(NEWTON_STEPS):
            mp = _m_prime(acc, z)
            mpp = _m_second(acc, z)
            if mpp == 0:
                break
            step = mp / mpp
            z -= step
            if abs(step) < 1e-16:
                break
        ev = eval_m(acc, z)
        on_arc = abs(abs(z - s.center) - s.radius)
        # truncation breaks the reflection symmetry at the level of the tail
        arc_tol = max(CRITICAL_TOL, 100.0 * acc.tail_bound)
        if abs(ev.m_prime) > CRITICAL_TOL or on_arc > arc_tol:
            raise CriticalPointNotFound(
                f"arc {s.index}: |m'| = {abs(ev.m_prime):.3e}, distance to arc = {on_arc:.3e}",
                samples=list(zip(phis.tolist(), vals.tolist())),
            )
        z = s.center + s.radius * (z - s.center) / abs(z - s.center)
        ev = eval_m(acc, z)
        out.append(CriticalPoint(s.index, z, ev.m.imag, abs(ev.m_prime)))
    return out


def convergence_sums(acc: OrbitAccumulator) -> dict:
    """Per-shell increments of the four equivalent convergence sums.

    sum Im gamma(i) = sum 1/(c^2+d^2) is the one used for condition (b); the
    others are its images under inversion and conjugation by 1/conj z.
    """
    a, b, c, d = acc.a, acc.b, acc.c, acc.d
    return {
        "im_gamma_i": acc.shell_sums(1.0 / (c * c + d * d)),
        "im_inv_gamma_i": acc.shell_sums(1.0 / (a * a + b * b)),
        "im_gamma_inv_i": acc.shell_sums(1.0 / (a * a + c * c)),
        "im_inv_gamma_inv_i": acc.shell_sums(1.0 / (b * b + d * d)),
    }


def _b_verdict(acc: OrbitAccumulator, increments) -> TrendVerdict:
    # a rank-0 group has exactly one term
    return verdict_from_increments(increments[1:], exhausted=acc.config.rank == 0)


def condition_report(acc: OrbitAccumulator, z_star: complex = 1j) -> ConditionReport:
    """Condition (A) over the Martin critical points (k != 0) and condition (b)."""
    pts = tuple(find_martin_critical(acc))
    vals = [eval_g(acc, p.location, z_star) for p in pts if p.semicircle_index != 0]
    a_sum = math.fsum(-v.log_abs for v in vals)
    a_prod = math.exp(-a_sum)
    # a finitely generated group has finitely many arcs, so (A) is a finite sum
    verdict_a = TrendVerdict(
        HOLDS if math.isfinite(a_sum) else INCONCLUSIVE, None,
        tuple(-v.log_abs for v in vals), f"finite configuration with {len(vals)} arcs",
    )
    sums = convergence_sums(acc)
    verdicts = {k: _b_verdict(acc, v) for k, v in sums.items()}
    b_inc = sums["im_gamma_i"]
    return ConditionReport(
        condition_a_product=a_prod,
        condition_a_sum=a_sum,
        condition_b_sum=math.fsum(b_inc),
        shell_trend=tuple(np.cumsum(b_inc).tolist()),
        convergence_sums={k: tuple(np.cumsum(v).tolist()) for k, v in sums.items()},
        verdict_a=verdict_a,
        verdict_b=verdicts["im_gamma_i"],
        convergence_verdicts=verdicts,
        critical_points=pts,
    )


BASE_POINTS = (1.5 + 2.0j, -0.7 + 1.3j, 0.2 + 3.0j)


def eta_of(acc: OrbitAccumulator, g, base_points=BASE_POINTS) -> tuple[complex, float]:
    vals = [eval_m(acc, complex(g(z))).m - eval_m(acc, z).m for z in base_points]
    spread = max(abs(v - vals[0]) for v in vals)
    return vals[0], spread


def eta_character(acc: OrbitAccumulator, tol: float = 1e-6) -> AdditiveCharacter:
    """eta(g_k) = m(g_k z) - m(z) at three base points, checked for z-independence."""
    values, spreads = {}, {}
    for k in acc.config.generator_indices:
        eta, spread = eta_of(acc, generator(acc.config, k))
        if spread > tol:
            raise AutomorphyViolation(
                f"eta(g_{k}) depends on the base point: spread {spread:.3e} > {tol:g}"
            )
        values[k] = eta.real
        spreads[k] = spread
    return AdditiveCharacter(values, spreads)


def martin_blaschke_log_abs(acc: OrbitAccumulator, z: complex, points) -> float:
    """log|B(z)| with B the product of the Blaschke factors over the orbits of ``points``."""
    total = 0.0
    for p in points:
        w = acc.orbit(p.location)
        total += math.fsum(acc.shell_sums(
            0.5 * np.log1p(-4.0 * z.imag * w.imag / np.abs(z - np.conj(w)) ** 2)
        ))
    return total


def certificate_f_martin(acc: OrbitAccumulator, z: complex, points=None) -> float:
    """|B(z)| * (Im m(z) / Im z) / |m'(z)|, B over the orbits of all Martin critical points.

    Equals 1 at real points of the boundary of the fundamental domain.
    """
    z = complex(z)
    if points is None:
        points = find_martin_critical(acc)
    ev = eval_m(acc, z)
    log_b = martin_blaschke_log_abs(acc, z, points)
    return math.exp(log_b) * ev.im_over_im / abs(ev.m_prime)
