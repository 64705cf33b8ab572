"""Complex Green function of the group as a Blaschke product over an orbit.

    g(z, z*) = prod_gamma (z - gamma(z*)) / (z - conj gamma(z*)) * C_gamma

with unimodular C_gamma making each non-identity factor positive at z*.  The
product is accumulated in log space; the modulus part uses ``log1p`` of the
pseudo-hyperbolic defect so that far-away orbit points contribute exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import CriticalPointNotFound, PoleError
from .moebius import OrbitAccumulator, act

CRITICAL_TOL = 1e-10
BRENT_XTOL = 1e-7  # Newton finishes from here
NEWTON_STEPS = 6
EPS = float(np.finfo(float).eps)


@dataclass(frozen=True)
class GreenEvaluation:
    value: complex
    log_abs: float
    tail_bound: float  # truncation + rounding, in log|g|
    shells_used: int
    degraded: bool = False
    truncation: float = 0.0
    rounding: float = 0.0

    def to_dict(self) -> dict:
        return {
            "value": {"re": self.value.real, "im": self.value.imag},
            "log_abs": self.log_abs,
            "tail_bound": self.tail_bound,
            "truncation": self.truncation,
            "rounding": self.rounding,
            "shells": self.shells_used,
            "degraded": self.degraded,
        }


@dataclass(frozen=True)
class SeriesValue:
    """A truncated orbit series: value and the estimated size of what was dropped."""

    value: complex
    tail_bound: float
    shells_used: int


@dataclass(frozen=True)
class CriticalPoint:
    semicircle_index: int
    location: complex
    value: float  # |g(c, z*)| for Green points, Im m(c) for Martin points
    residual: float  # |g'(c)| or |m'(c)|

    def to_dict(self) -> dict:
        return {
            "semicircle": self.semicircle_index,
            "location": {"re": self.location.real, "im": self.location.imag},
            "value": self.value,
            "residual": self.residual,
        }


@dataclass(frozen=True)
class WidomProduct:
    product: float
    log_sum: float  # sum of -log|g(c_k, z*)|, i.e. sum of G at the critical values


def _check_upper(z, name):
    if not complex(z).imag > 0:
        raise ValueError(f"{name} must lie in the upper half plane, got {z}")


def _factor_terms(acc: OrbitAccumulator, z: complex, z_star: complex):
    """Per-element log-modulus and phase of the normalized Blaschke factors."""
    w = acc.orbit(z_star)
    wc = np.conj(w)
    dz = z - w
    dzc = z - wc
    arg = -4.0 * z.imag * w.imag / np.abs(dzc) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        # log1p near the boundary, the plain ratio near an orbit point (arg -> -1)
        log_mod = np.where(arg > -0.5, 0.5 * np.log1p(np.maximum(arg, -0.5)),
                           np.log(np.abs(dz) / np.abs(dzc)))
    key = ("C_phase", complex(z_star))
    if key not in acc._cache:
        # arg C_gamma = arg((z* - conj w) / (z* - w)); identity excluded
        ph = np.angle((z_star - wc) / np.where(w == z_star, 1.0, z_star - w))
        ph[0] = 0.0
        acc._cache[key] = ph
    phase = np.angle(np.where(dz == 0, 1.0, dz) / dzc) + acc._cache[key]
    return log_mod, phase, dz == 0


ROUND_ULPS = 16.0


def _orbit_condition(acc: OrbitAccumulator, z_star: complex) -> np.ndarray:
    """Cancellation factor (|c||z*| + |d|) / |cz* + d| of each orbit point."""
    key = ("cond", z_star)
    if key not in acc._cache:
        acc._cache[key] = (np.abs(acc.c) * abs(z_star) + np.abs(acc.d)) / np.abs(acc.c * z_star + acc.d)
    return acc._cache[key]


def _log_rounding(acc: OrbitAccumulator, z: complex, z_star: complex, log_mod: np.ndarray) -> float:
    # each factor's argument x = 1 - |factor|^2 carries a relative error of a few
    # ulps times the orbit cancellation; log1p(-x) amplifies it by x / (1 - x)
    x = -np.expm1(2.0 * log_mod)
    with np.errstate(divide="ignore", invalid="ignore"):
        amp = np.where(x < 1.0, x / (1.0 - x), np.inf)
    delta = ROUND_ULPS * EPS * (1.0 + _orbit_condition(acc, z_star))
    per_term = 0.5 * float(np.sum(delta * amp))
    return per_term + EPS * acc.n_shells * float(np.sum(np.abs(log_mod)))


def eval_g(acc: OrbitAccumulator, z: complex, z_star: complex) -> GreenEvaluation:
    """g(z, z*) over the truncated group; exact zero on the truncated orbit of z*.

    ``tail_bound`` is the truncation tail plus an estimate of the rounding
    error, both in log|g|.
    """
    z, z_star = complex(z), complex(z_star)
    _check_upper(z_star, "z*")
    if z.imag < 0:
        raise ValueError("z must lie in the closed upper half plane")
    log_mod, phase, zero = _factor_terms(acc, z, z_star)
    if np.any(zero):
        return GreenEvaluation(0j, -math.inf, 0.0, acc.n_shells)
    log_abs, trunc = acc.total(log_mod)
    rnd = _log_rounding(acc, z, z_star, log_mod)
    ph, _ = acc.total(phase)
    ph = math.remainder(ph, 2 * math.pi)
    value = math.exp(log_abs) * complex(math.cos(ph), math.sin(ph))
    return GreenEvaluation(value, log_abs, trunc + rnd, acc.n_shells,
                           trunc > acc.policy.target_tail, trunc, rnd)


def _log_derivative_terms(acc: OrbitAccumulator, z: complex, z_star: complex):
    den = acc.c * z + acc.d
    gz = act(acc.mats, z)
    gp = 1.0 / den**2
    return gp / ((gz - z_star) * (gz - np.conj(z_star))), gz, gp


def log_derivative(acc: OrbitAccumulator, z: complex, z_star: complex) -> SeriesValue:
    """g'/g = (z* - conj z*) sum gamma'(z) / ((gamma z - z*)(gamma z - conj z*))."""
    z, z_star = complex(z), complex(z_star)
    terms, _, _ = _log_derivative_terms(acc, z, z_star)
    s, tail = acc.total(terms)
    k = z_star - z_star.conjugate()
    return SeriesValue(k * s, abs(k) * tail, acc.n_shells)


def eval_g_prime(acc: OrbitAccumulator, z: complex, z_star: complex) -> SeriesValue:
    z, z_star = complex(z), complex(z_star)
    _check_upper(z_star, "z*")
    ge = eval_g(acc, z, z_star)
    if ge.value == 0:
        # z sits on the truncated orbit: differentiate the vanishing factor only
        w = acc.orbit(z_star)
        hit = int(np.flatnonzero(z - w == 0)[0])
        log_mod, phase, _ = _factor_terms(acc, z, z_star)
        log_mod[hit] = 0.0
        phase[hit] = 0.0
        rest_abs, tail = acc.total(log_mod)
        rest_ph, _ = acc.total(phase)
        c_gamma = 1.0 if hit == 0 else np.exp(1j * acc._cache[("C_phase", z_star)][hit])
        wh = w[hit]
        val = math.exp(rest_abs) * np.exp(1j * rest_ph) * c_gamma / (wh - wh.conjugate())
        return SeriesValue(complex(val), abs(val) * tail, acc.n_shells)
    ld = log_derivative(acc, z, z_star)
    val = ge.value * ld.value
    return SeriesValue(val, abs(ge.value) * ld.tail_bound + abs(val) * ge.tail_bound, acc.n_shells)


def _log_derivative_prime(acc: OrbitAccumulator, z: complex, z_star: complex) -> complex:
    """d/dz of the series in ``log_derivative`` (without the constant prefactor)."""
    den = acc.c * z + acc.d
    gz = act(acc.mats, z)
    gp = 1.0 / den**2
    gpp = -2.0 * acc.c / den**3
    q = 1.0 / ((gz - z_star) * (gz - np.conj(z_star)))
    dq = -q * (1.0 / (gz - z_star) + 1.0 / (gz - np.conj(z_star)))
    return complex(np.sum(gpp * q + gp**2 * dq))


SCAN_POINTS = 64
_BLOCK = 1 << 15


def _arc_scan(fun_many, n=SCAN_POINTS):
    """Sample ``fun_many`` (vectorized over points) at n interior arc angles."""
    phis = (np.arange(n) + 0.5) * math.pi / n
    return phis, fun_many(phis)


def _log_abs_many(acc: OrbitAccumulator, zs, z_star: complex) -> np.ndarray:
    """log|g(z, z*)| for a batch of points (blocked over the group elements)."""
    w = acc.orbit(z_star)
    z = np.asarray(zs)[:, None]
    out = np.zeros(z.shape[0])
    for start in range(0, acc.size, _BLOCK):
        wb = w[start:start + _BLOCK][None, :]
        out += np.sum(0.5 * np.log1p(-4.0 * z.imag * wb.imag / np.abs(z - np.conj(wb)) ** 2), axis=1)
    return out


def _bracket_sign_change(phis, vals, want_min: bool):
    """Bracket of a sign change of the tangential derivative around the extremum."""
    j = int(np.argmin(vals) if want_min else np.argmax(vals))
    lo = phis[j - 1] if j > 0 else 1e-9
    hi = phis[j + 1] if j + 1 < len(phis) else math.pi - 1e-9
    return lo, hi


def find_critical_points(acc: OrbitAccumulator, z_star: complex) -> list[CriticalPoint]:
    """Zeros of g'(., z*) on the arcs k != 0, one per arc.

    The minimum of |g| along each arc is bracketed by a 64-point scan and
    located as the root of the tangential derivative of log|g|, then polished
    by complex Newton steps on g'/g.  The zero lies on the arc when z* is on the
    0-th arc (the real-pole situation); otherwise the normal derivative does not
    vanish there and the search reports failure.
    """
    z_star = complex(z_star)
    _check_upper(z_star, "z*")
    k_fac = z_star - z_star.conjugate()
    out = []
    for s in acc.config.semicircles:
        if s.index == 0:
            continue

        def log_abs(phis, s=s):
            return _log_abs_many(acc, s.point(phis), z_star)

        def tangential(phi, s=s):
            z = complex(s.point(phi))
            h = log_derivative(acc, z, z_star).value
            return (h * 1j * (z - s.center)).real

        phis, vals = _arc_scan(log_abs)
        lo, hi = _bracket_sign_change(phis, vals, want_min=True)
        try:
            phi = brentq(tangential, lo, hi, xtol=BRENT_XTOL)
        except ValueError as exc:
            raise CriticalPointNotFound(
                f"no sign change of the tangential derivative on arc {s.index}",
                samples=list(zip(phis.tolist(), vals.tolist())),
            ) from exc
        z = complex(s.point(phi))
        for _ in range(NEWTON_STEPS):
            h = complex(log_derivative(acc, z, z_star).value) / k_fac
            hp = _log_derivative_prime(acc, z, z_star)
            if hp == 0:
                break
            step = h / hp
            z -= step
            if abs(step) < 1e-16:
                break
        gp = abs(eval_g_prime(acc, z, z_star).value)
        on_arc = abs(abs(z - s.center) - s.radius)
        # truncation breaks the reflection symmetry at the level of the tail
        arc_tol = max(CRITICAL_TOL, 100.0 * acc.tail_bound)
        if gp > CRITICAL_TOL or on_arc > arc_tol:
            raise CriticalPointNotFound(
                f"arc {s.index}: |g'| = {gp:.3e}, distance to arc = {on_arc:.3e}; "
                "g' has no zero on this arc for this z* (z* must lie on the unit arc)",
                samples=list(zip(phis.tolist(), vals.tolist())),
            )
        # project back onto the arc (the Newton polish leaves ~1e-16 off it)
        z = s.center + s.radius * (z - s.center) / abs(z - s.center)
        out.append(CriticalPoint(s.index, z, abs(eval_g(acc, z, z_star).value), gp))
    return out


def widom_product(points) -> WidomProduct:
    vals = [p.value for p in points]
    if any(v <= 0 for v in vals):
        return WidomProduct(0.0, math.inf)
    log_sum = math.fsum(-math.log(v) for v in vals)
    return WidomProduct(math.exp(-log_sum), log_sum)


def blaschke_log_abs(acc: OrbitAccumulator, z: complex, centers) -> tuple[float, float]:
    """log|B(z)| for B the product over the orbits of ``centers``; plus its tail."""
    total, tail = 0.0, 0.0
    for c in centers:
        e = eval_g(acc, z, c)
        total += e.log_abs
        tail += e.tail_bound
    return total, tail


def certificate_f(acc: OrbitAccumulator, z: complex, z_star: complex, points) -> float:
    """|B / g'| * 2 Im z* * sum |gamma'(z)| / |gamma(z) - conj z*|^2.

    Equals 1 at real boundary points and is bounded by 1 in the upper half
    plane when B runs over the orbits of all zeros of g'.
    """
    z, z_star = complex(z), complex(z_star)
    terms, gz, gp = _log_derivative_terms(acc, z, z_star)
    t, _ = acc.total(terms)
    s, _ = acc.total(np.abs(gp) / np.abs(gz - np.conj(z_star)) ** 2)
    log_b, _ = blaschke_log_abs(acc, z, [p.location for p in points])
    log_g = eval_g(acc, z, z_star).log_abs
    # |g'| = |g| * 2 Im z* * |t|; the 2 Im z* cancels
    return math.exp(log_b - log_g) * s / abs(t)
