"""Comb maps of a finite-gap Denjoy domain (lambda-plane side).

E = R minus the open gaps (a_j, b_j); gap 0 contains the real pole lambda*.
With R_k(l) = sqrt(l - a_k) sqrt(l - b_k) (principal roots, cut on [a_k, b_k],
R_k ~ l at infinity) the two conformal maps of the upper half plane onto
combs are

    Green:  theta'(l) = i / (lambda* - l) * prod_k R_k(lambda*+) / R_k(l)
                        * prod_{k != 0} (l - mu_k) / (lambda* - mu_k),
            theta(b_0) = 0,
    Martin: theta'(l) = i * slope * prod_k R_k(lambda*+) / R_k(l)
                        * prod_k (l - mu_k) / (lambda* - mu_k),
            theta(a_0) = 0,

so that G = Im theta_green and M = Im theta_martin.  ``slope`` is the
derivative of M at lambda* along the gap; M is determined only up to a
positive factor and ``slope`` fixes it.

The mu_k are fixed by requiring Im theta to return to zero across every gap
(gaps k != 0 for Green, all gaps for Martin).  Writing prod (l - mu_k) as a
polynomial P, these conditions are linear in the coefficients of P, so they
are solved as a linear system in a Chebyshev basis and the mu_k are its roots.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
from numpy.polynomial import chebyshev as C

from .errors import ConfigError, ConvergenceError, PathError, PoleError
from .quadrature import integrate_arc, integrate_segment
from .trend import INCONCLUSIVE, TrendVerdict, verdict_from_increments

BRANCH_RADIUS = 1e-10
QUAD_TOL = 1e-13


@dataclass(frozen=True)
class GapSystem:
    gaps: tuple[tuple[float, float], ...]
    lambda_star: float

    def __post_init__(self):
        gaps = tuple((float(a), float(b)) for a, b in self.gaps)
        object.__setattr__(self, "gaps", gaps)
        object.__setattr__(self, "lambda_star", float(self.lambda_star))
        if not gaps:
            raise ConfigError("at least one gap is required")
        for a, b in gaps:
            if not a < b:
                raise ConfigError(f"gap ({a}, {b}) is empty")
        ordered = sorted(gaps)
        for (a1, b1), (a2, b2) in zip(ordered, ordered[1:]):
            if not b1 < a2:
                raise ConfigError(f"gaps ({a1}, {b1}) and ({a2}, {b2}) have touching closures")
        a0, b0 = gaps[0]
        if not a0 < self.lambda_star < b0:
            raise ConfigError("lambda_star must lie strictly inside gap 0 (the first gap)")

    @classmethod
    def from_dict(cls, doc: dict) -> "GapSystem":
        extra = set(doc) - {"gaps", "lambda_star"}
        if extra:
            raise ConfigError(f"unknown gap-system fields: {sorted(extra)}")
        gaps = []
        for item in doc["gaps"]:
            if set(item) != {"a", "b"}:
                raise ConfigError(f"bad gap entry {item!r}")
            gaps.append((item["a"], item["b"]))
        return cls(tuple(gaps), doc["lambda_star"])

    @classmethod
    def load(cls, path) -> "GapSystem":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_dict(self) -> dict:
        return {"gaps": [{"a": a, "b": b} for a, b in self.gaps], "lambda_star": self.lambda_star}

    def __len__(self):
        return len(self.gaps)

    @cached_property
    def branch_points(self) -> tuple[float, ...]:
        return tuple(sorted(e for g in self.gaps for e in g))

    def scaled(self, s: float) -> "GapSystem":
        return GapSystem(tuple((s * a, s * b) for a, b in self.gaps), s * self.lambda_star)

    def in_gap(self, x: float) -> int | None:
        for k, (a, b) in enumerate(self.gaps):
            if a < x < b:
                return k
        return None


def _offset(xi, e, p, dp, q, dq):
    """xi - e, taken from the accurate segment offsets when e is an endpoint."""
    if dp is not None and e == p:
        off = dp
    elif dq is not None and e == q:
        off = dq
    else:
        off = xi - e
    # the closed upper half plane: real points are approached from above
    return np.real(off) + 1j * np.abs(np.imag(off))


def branch_product(system: GapSystem, xi, p=None, dp=None, q=None, dq=None):
    """prod_k sqrt(xi - a_k) sqrt(xi - b_k) with the +i0 convention on the real line."""
    out = np.ones_like(np.asarray(xi, dtype=complex))
    for e in system.branch_points:
        out = out * np.sqrt(_offset(xi, e, p, dp, q, dq))
    return out


def branch_product_at_star(system: GapSystem) -> complex:
    return complex(branch_product(system, np.array([complex(system.lambda_star)]))[0])


@dataclass(frozen=True)
class MuSet:
    mu: tuple[float, ...]
    gap_index: tuple[int, ...]  # gap containing each mu
    residuals: tuple[float, ...]  # relative gap residuals at the solution

    def to_dict(self) -> dict:
        return {"mu": list(self.mu), "gap": list(self.gap_index), "residuals": list(self.residuals)}


@dataclass(frozen=True)
class CombParameters:
    omega: tuple[float, ...]
    height: tuple[float, ...]
    gap_index: tuple[int, ...]
    height_dual: tuple[float, ...]  # h_k along the real-axis route
    theta_a0: complex
    theta_a0_real_route: complex
    closure: float  # |theta(+R) - theta(-R)| for large R (both ends of E map to one point)

    def to_dict(self) -> dict:
        return {
            "omega": list(self.omega),
            "h": list(self.height),
            "h_dual": list(self.height_dual),
            "gap": list(self.gap_index),
            "theta_a0": {"re": self.theta_a0.real, "im": self.theta_a0.imag},
            "theta_a0_real_route": {"re": self.theta_a0_real_route.real, "im": self.theta_a0_real_route.imag},
            "theta_b0": {"re": 0.0, "im": 0.0},
            "closure": self.closure,
        }


class CombMap:
    """theta for a solved mu-set; kind is 'green' or 'martin'."""

    def __init__(self, system: GapSystem, kind: str, mu: MuSet, slope: float = 1.0, cheb=None):
        if kind not in ("green", "martin"):
            raise ValueError(kind)
        self.system = system
        self.kind = kind
        self.mu = mu
        self.slope = float(slope)
        self.cheb = cheb  # (coefficients, mid, half) of the solved polynomial, if available
        lam = system.lambda_star
        r_star = branch_product_at_star(system)
        p_star = math.prod(lam - m for m in mu.mu)
        if kind == "green":
            self.const = 1j * r_star / p_star
            self.start = system.gaps[0][1]
        else:
            self.const = 1j * self.slope * r_star / p_star
            self.start = system.gaps[0][0]

    # -- integrand -----------------------------------------------------------------
    def _integrand(self, xi, p=None, dp=None, q=None, dq=None):
        val = self.const / branch_product(self.system, xi, p, dp, q, dq)
        for m in self.mu.mu:
            val = val * (xi - m)
        if self.kind == "green":
            val = val / (self.system.lambda_star - xi)
        return val

    def derivative(self, lam: complex) -> complex:
        lam = complex(lam)
        for e in self.system.branch_points:
            if abs(lam - e) < BRANCH_RADIUS:
                raise PoleError(f"lambda = {lam} is within {BRANCH_RADIUS} of the branch point {e}")
        if self.kind == "green" and abs(lam - self.system.lambda_star) < BRANCH_RADIUS:
            raise PoleError("lambda coincides with the pole lambda*")
        return complex(self._integrand(np.array([lam]))[0])

    def derivative_at_mu(self) -> list[float]:
        """|theta'(mu_k)| with P taken from the solved Chebyshev series (checks the roots)."""
        if self.cheb is None:
            return [abs(self.derivative(m)) for m in self.mu.mu]
        coef, mid, half = self.cheb
        lead = coef[-1] * 2.0 ** (len(coef) - 2) / half ** (len(coef) - 1) if len(coef) > 1 else coef[0]
        out = []
        for m in self.mu.mu:
            pm = C.chebval((m - mid) / half, coef) / lead
            rest = self.const / branch_product(self.system, np.array([complex(m)]))[0]
            if self.kind == "green":
                rest = rest / (self.system.lambda_star - m)
            out.append(abs(complex(rest) * pm))
        return out

    # -- paths ---------------------------------------------------------------------
    def _segment(self, p, q):
        bp = self.system.branch_points
        res = integrate_segment(
            lambda xi, dp, dq: self._integrand(xi, p, dp, q, dq),
            p, q, complex(p).imag == 0 and complex(p).real in bp,
            complex(q).imag == 0 and complex(q).real in bp, QUAD_TOL,
        )
        return complex(res.value), res.error

    def _check_target(self, lam: complex):
        if lam.imag < 0:
            raise PathError("theta is evaluated in the closed upper half plane only")
        if self.kind == "green" and lam.imag == 0 and abs(lam.real - self.system.lambda_star) < BRANCH_RADIUS:
            raise PoleError("lambda coincides with the pole lambda*")

    def theta(self, lam: complex, apex_height: float | None = None) -> complex:
        """theta(lam) along start -> apex -> lam, the apex in the open upper half plane."""
        return self.theta_with_error(lam, apex_height)[0]

    def theta_with_error(self, lam: complex, apex_height: float | None = None):
        lam = complex(lam)
        self._check_target(lam)
        start = complex(self.start)
        if lam == start:
            return 0j, 0.0
        dist = abs(lam - start)
        h = apex_height if apex_height is not None else max(0.5, 0.5 * dist)
        apex = complex(0.5 * (start.real + lam.real), max(h, lam.imag))
        v1, e1 = self._segment(start, apex)
        v2, e2 = self._segment(apex, lam)
        return v1 + v2, e1 + e2

    def theta_real_route(self, x: float) -> complex:
        """theta(x) for real x along the real axis (indented above lambda* for Green)."""
        x = float(x)
        self._check_target(complex(x))
        start = float(self.start.real if isinstance(self.start, complex) else self.start)
        lo, hi = sorted((start, x))
        stops = [e for e in self.system.branch_points if lo < e < hi]
        stops = sorted(stops, reverse=x < start)
        nodes = [start, *stops, x]
        total = 0j
        lam_s = self.system.lambda_star
        for p, q in zip(nodes, nodes[1:]):
            if self.kind == "green" and min(p, q) < lam_s < max(p, q):
                a0, b0 = self.system.gaps[0]
                rho = 0.5 * min(lam_s - a0, b0 - lam_s, abs(p - lam_s), abs(q - lam_s))
                sgn = 1.0 if q < p else -1.0  # moving left: approach from the right
                first = lam_s + sgn * rho
                last = lam_s - sgn * rho
                total += self._segment(p, first)[0]
                arc = integrate_arc(lambda xi, *_: self._integrand(xi), lam_s, rho,
                                    0.0 if q < p else math.pi, math.pi if q < p else 0.0, QUAD_TOL)
                total += complex(arc.value)
                total += self._segment(last, q)[0]
            else:
                total += self._segment(p, q)[0]
        return total

    def im_theta(self, lam: complex) -> float:
        """Im theta, extended to the lower half plane by symmetry."""
        lam = complex(lam)
        if lam.imag < 0:
            lam = lam.conjugate()
        return self.theta(lam).imag

    def gap_value(self, x: float) -> float:
        """Im theta(x) for x inside a gap, integrating from the gap end whose Im theta is 0."""
        k = self.system.in_gap(x)
        if k is None:
            return 0.0
        a, b = self.system.gaps[k]
        lam_s = self.system.lambda_star
        if self.kind == "green" and k == 0 and x < lam_s:
            # go from a_0 so the pole stays outside the segment
            return self._segment(a, x)[0].imag
        if self.kind == "green" and k == 0:
            return -self._segment(x, b)[0].imag
        return self._segment(a, x)[0].imag


# -- solving for mu --------------------------------------------------------------------

def _cheb_frame(system: GapSystem):
    pts = system.branch_points
    mid = 0.5 * (pts[0] + pts[-1])
    half = 0.5 * (pts[-1] - pts[0])
    return mid, half


def _weight(system: GapSystem, kind: str, xi, p, dp, q, dq):
    w = 1.0 / branch_product(system, xi, p, dp, q, dq)
    if kind == "green":
        w = w / (system.lambda_star - xi)
    return w


def gap_moments(system: GapSystem, kind: str, degree: int, gaps) -> np.ndarray:
    """Im int_{gap} T_j(x(xi)) w(xi) dxi for j = 0..degree, one row per gap."""
    mid, half = _cheb_frame(system)
    rows = []
    for k in gaps:
        a, b = system.gaps[k]

        def g(xi, dp, dq, a=a, b=b):
            x = (np.real(xi) - mid) / half
            basis = C.chebvander(x, degree).T  # (degree + 1, n)
            return basis * _weight(system, kind, xi, a, dp, b, dq)[None, :]

        res = integrate_segment(g, a, b, True, True, QUAD_TOL)
        rows.append(np.imag(res.value))
    return np.array(rows)


def _residuals(system: GapSystem, kind: str, mu, gaps) -> list[float]:
    """Relative residual int_gap prod (xi - mu) w / int_gap |prod (xi - mu) w| per gap."""
    out = []
    for k in gaps:
        a, b = system.gaps[k]

        def g(xi, dp, dq, a=a, b=b):
            val = _weight(system, kind, xi, a, dp, b, dq)
            for m in mu:
                val = val * (xi - m)
            return np.stack([np.imag(val), np.abs(val)])

        v = integrate_segment(g, a, b, True, True, QUAD_TOL).value
        out.append(float(abs(v[0].real) / v[1].real))
    return out


def solve_mu(system: GapSystem, kind: str):
    """(MuSet, Chebyshev data) for the Green (k != 0) or Martin (all gaps) conditions."""
    gaps = list(range(1, len(system))) if kind == "green" else list(range(len(system)))
    n = len(gaps)
    mid, half = _cheb_frame(system)
    if n == 0:
        return MuSet((), (), ()), (np.array([1.0]), mid, half)
    mom = gap_moments(system, kind, n, gaps)
    sol = np.linalg.solve(mom[:, :n], -mom[:, n])
    coef = np.concatenate([sol, [1.0]])
    roots = C.chebroots(coef) * half + mid
    trace = {"coefficients": coef.tolist(), "roots": [[r.real, r.imag] for r in np.atleast_1d(roots)]}
    if np.max(np.abs(np.imag(roots))) > 1e-9 * max(1.0, half):
        raise ConvergenceError("mu polynomial has non-real roots", trace=trace)
    roots = np.sort(np.real(roots))
    assigned = {}
    for r in roots:
        k = system.in_gap(float(r))
        if k is None or k not in gaps or k in assigned:
            raise ConvergenceError(f"root {r} is not the unique critical point of a gap", trace=trace)
        assigned[k] = float(r)
    mu = tuple(assigned[k] for k in gaps)
    res = _residuals(system, kind, mu, gaps)
    return MuSet(mu, tuple(gaps), tuple(res)), (coef, mid, half)


def solve_mu_green(system: GapSystem) -> MuSet:
    return solve_mu(system, "green")[0]


def solve_mu_martin(system: GapSystem) -> MuSet:
    return solve_mu(system, "martin")[0]


def green_map(system: GapSystem) -> CombMap:
    mu, cheb = solve_mu(system, "green")
    return CombMap(system, "green", mu, cheb=cheb)


def martin_map(system: GapSystem, slope: float = 1.0) -> CombMap:
    mu, cheb = solve_mu(system, "martin")
    return CombMap(system, "martin", mu, slope, cheb=cheb)


def theta_green_derivative(system: GapSystem, mu: MuSet, lam: complex) -> complex:
    return CombMap(system, "green", mu).derivative(lam)


def theta_martin(system: GapSystem, mu: MuSet, slope: float, lam: complex) -> complex:
    return CombMap(system, "martin", mu, slope).theta(lam)


# -- derived quantities ----------------------------------------------------------------

def extract_comb(gmap: CombMap, tol: float = 1e-6) -> CombParameters:
    """Slit bases and heights of the Green comb, with the normalization checks."""
    if gmap.kind != "green":
        raise ValueError("comb parameters are extracted from the Green map")
    system = gmap.system
    a0 = system.gaps[0][0]
    theta_a0 = gmap.theta(a0)
    theta_a0_real = gmap.theta_real_route(a0)
    for val, name in ((theta_a0, "upper"), (theta_a0_real, "real-axis")):
        if abs(val - math.pi) > tol:
            raise ConvergenceError(f"theta(a_0) = {val} along the {name} route, expected pi")
    omegas, heights, duals = [], [], []
    for m in gmap.mu.mu:
        t = gmap.theta(m)
        omegas.append(t.real)
        heights.append(t.imag)
        duals.append(gmap.theta_real_route(m).imag)
    far = 1e3 * max(1.0, max(abs(e) for e in system.branch_points))
    closure = abs(gmap.theta_real_route(far) - gmap.theta_real_route(-far))
    return CombParameters(tuple(omegas), tuple(heights), gmap.mu.gap_index, tuple(duals),
                          theta_a0, theta_a0_real, closure)


@dataclass(frozen=True)
class WidomSum:
    total: float
    terms: tuple[float, ...]  # G(mu_j, lambda*) per gap

    def to_dict(self) -> dict:
        return {"total": self.total, "terms": list(self.terms)}


def widom_sum_gaps(gmap: CombMap, mu_martin: MuSet) -> WidomSum:
    """sum_j G(mu_j, lambda*) over the Martin critical points of all gaps."""
    terms = tuple(gmap.gap_value(m) for m in mu_martin.mu)
    return WidomSum(math.fsum(terms), terms)


@dataclass(frozen=True)
class AkhiezerLevin:
    limit: float
    etas: tuple[float, ...]
    samples: tuple[float, ...]  # M(i eta) / eta
    monotone: bool
    flag: str

    def to_dict(self) -> dict:
        return {"limit": self.limit, "etas": list(self.etas), "samples": list(self.samples),
                "monotone": self.monotone, "flag": self.flag}


def akhiezer_levin_limit(mmap: CombMap, etas=(1e2, 1e3, 1e4)) -> AkhiezerLevin:
    """lim M(i eta)/eta by Richardson extrapolation in 1/eta."""
    from .boundary import richardson

    samples = tuple(mmap.im_theta(1j * eta) / eta for eta in etas)
    d = np.diff(samples)
    monotone = bool(np.all(d >= 0) or np.all(d <= 0))
    limit = max(richardson(samples), 0.0)
    return AkhiezerLevin(limit, tuple(etas), samples, monotone, "ok" if monotone else INCONCLUSIVE)


# -- families ----------------------------------------------------------------------------

def cos_family(n_gaps: int, lambda_star: float = -0.5) -> GapSystem:
    """n gaps of {|cos l| > 1/2}: (k pi - pi/3, k pi + pi/3), k = -n/2 .. n - n/2 - 1, gap 0 first."""
    ks = [0] + [k for k in range(-(n_gaps // 2), n_gaps - n_gaps // 2) if k != 0]
    return GapSystem(tuple((k * math.pi - math.pi / 3, k * math.pi + math.pi / 3) for k in ks), lambda_star)


def geometric_family(n_gaps: int, lambda_star: float = -0.5, ratio: float = 0.5) -> GapSystem:
    """Gap 0 = (-1, 1), then gaps of half-width 0.5 * ratio^k centered at 3k, k = 1..n-1."""
    gaps = [(-1.0, 1.0)]
    for k in range(1, n_gaps):
        w = 0.5 * ratio**k
        gaps.append((3.0 * k - w, 3.0 * k + w))
    return GapSystem(tuple(gaps), lambda_star)


@dataclass(frozen=True)
class FamilyTrend:
    sizes: tuple[int, ...]
    partial_sums: tuple[float, ...]
    verdict: TrendVerdict
    strictly_increasing: bool

    def to_dict(self) -> dict:
        return {"sizes": list(self.sizes), "partial_sums": list(self.partial_sums),
                "verdict": self.verdict.to_dict(), "strictly_increasing": self.strictly_increasing}


def widom_trend(family, sizes=(4, 8, 16)) -> FamilyTrend:
    """Widom sums of a truncated family; the increments feed the decay verdict."""
    sums = []
    for n in sizes:
        system = family(n)
        sums.append(widom_sum_gaps(green_map(system), solve_mu_martin(system)).total)
    # increments between successive truncations; the first partial sum is not one
    inc = np.diff(sums)
    verdict = verdict_from_increments(inc, window=max(2, min(3, len(inc))))
    return FamilyTrend(tuple(sizes), tuple(sums), verdict, bool(np.all(np.diff(sums) > 0)))
