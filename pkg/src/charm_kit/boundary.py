"""Boundary identities as executable checks.

Angular derivatives of finite Blaschke products, the real-axis series for
|g'| and m', the Poisson-log subharmonicity inequality, and the densities
rho, rho_i and |phi|^2 = rho_i / rho on the real line.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .errors import IdentityViolation, PoleError, QuadratureError
from .green import eval_g
from .martin import eval_m
from .moebius import OrbitAccumulator

RICHARDSON_Y = (1e-2, 1e-3, 1e-4)


def richardson(values, ratio: float = 10.0) -> float:
    """Extrapolate f(h), f(h/r), f(h/r^2) to h -> 0 assuming f = f0 + c1 h + c2 h^2."""
    f0, f1, f2 = values
    r1 = (ratio * f1 - f0) / (ratio - 1)
    r2 = (ratio * f2 - f1) / (ratio - 1)
    return (ratio**2 * r2 - r1) / (ratio**2 - 1)


def vertical_difference_quotient(fun, x: float, ys=RICHARDSON_Y):
    """|f(x + iy) - f(x)| / y at each y, and the Richardson limit."""
    fx = fun(complex(x, 0.0))
    samples = [(complex(x, y), fun(complex(x, y))) for y in ys]
    quot = [abs(v - fx) / y for (z, v), y in zip(samples, ys)]
    return fx, samples, quot, richardson(quot)


@dataclass(frozen=True)
class AngularDerivativeResult:
    x: float
    limit_value: complex
    derivative: float  # sum formula
    finite_difference: float  # Richardson limit of the vertical difference quotients
    approach_samples: tuple

    def to_dict(self) -> dict:
        return {
            "x": self.x,
            "limit_value": {"re": self.limit_value.real, "im": self.limit_value.imag},
            "derivative": self.derivative,
            "finite_difference": self.finite_difference,
            "approach": [[z.real, z.imag, v.real, v.imag] for z, v in self.approach_samples],
        }


def blaschke_product(zeros, z: complex) -> complex:
    """prod (z - z_k) / (z - conj z_k) over the given zeros in the upper half plane."""
    out = 1.0 + 0j
    for zk in zeros:
        out *= (z - zk) / (z - complex(zk).conjugate())
    return out


def angular_derivative(zeros, x: float, rtol: float = 1e-5) -> AngularDerivativeResult:
    """|w'(x)| = sum 2 Im z_k / |x - z_k|^2, checked against the vertical difference quotient."""
    zeros = [complex(z) for z in zeros]
    for zk in zeros:
        if not zk.imag > 0:
            raise ValueError(f"Blaschke zero {zk} is not in the upper half plane")
    exact = math.fsum(2.0 * zk.imag / abs(x - zk) ** 2 for zk in zeros)
    wx, samples, _, fd = vertical_difference_quotient(lambda z: blaschke_product(zeros, z), x)
    if abs(abs(wx) - 1.0) > 1e-6:
        raise IdentityViolation(f"|w(x)| = {abs(wx)} is not unimodular at x = {x}")
    if abs(fd - exact) > rtol * max(exact, 1e-300) and not (exact == 0 and abs(fd) < 1e-12):
        raise IdentityViolation(
            f"angular derivative mismatch at x={x}: sum {exact!r} vs difference quotient {fd!r}; "
            f"y-range {RICHARDSON_Y} may be too coarse"
        )
    return AngularDerivativeResult(x, wx, exact, fd, tuple(samples))


def _real_rows(acc: OrbitAccumulator, x: float, need_zero_free: bool = True):
    cx = acc.c * x + acc.d
    ax = acc.a * x + acc.b
    if np.min(np.abs(cx)) == 0:
        raise PoleError(f"x = {x} is a pole of an enumerated element")
    if need_zero_free and np.min(np.abs(ax)) == 0:
        raise PoleError(f"x = {x} is a zero of an enumerated element")
    return cx, ax


def boundary_g_prime(acc: OrbitAccumulator, z_star: complex, x: float) -> float:
    """|g'(x, z*)| = 2 Im z* sum gamma'(x) / |gamma(x) - conj z*|^2 on the real boundary.

    Each term equals 1 / |(a - conj z* c) x + (b - conj z* d)|^2, which has no
    pole on the real line.
    """
    zc = complex(z_star).conjugate()
    terms = 1.0 / np.abs((acc.a - zc * acc.c) * x + (acc.b - zc * acc.d)) ** 2
    if not np.all(np.isfinite(terms)):
        raise PoleError(f"non-finite series term at x = {x}")
    s, _ = acc.total(terms)
    return 2.0 * complex(z_star).imag * s


def boundary_g_prime_fd(acc: OrbitAccumulator, z_star: complex, x: float) -> float:
    return vertical_difference_quotient(lambda z: eval_g(acc, z, z_star).value, x)[3]


def boundary_m_prime(acc: OrbitAccumulator, x: float) -> float:
    """m'(x) = sum gamma'(x) (1 + 1/gamma(x)^2) = sum 1/(cx+d)^2 + 1/(ax+b)^2."""
    cx, ax = _real_rows(acc, x)
    s, _ = acc.total(1.0 / cx**2 + 1.0 / ax**2)
    return s


def boundary_m_prime_fd(acc: OrbitAccumulator, x: float) -> float:
    return vertical_difference_quotient(lambda z: eval_m(acc, z).m, x)[3]


def green_density(acc: OrbitAccumulator, z_star: complex, z: complex) -> float:
    """sum |gamma'(z)| / |gamma(z) - conj z*|^2 (a sum of squared moduli of holomorphic maps)."""
    zc = complex(z_star).conjugate()
    return float(np.sum(1.0 / np.abs((acc.a - zc * acc.c) * z + (acc.b - zc * acc.d)) ** 2))


def poisson_average(fun, z: complex, epsabs: float = 1e-10, epsrel: float = 1e-10, limit: int = 400):
    """(1/pi) int fun(x) Im z / |x - z|^2 dx over the real line.

    With x = Re z + Im z tan t the Poisson measure becomes dt / pi on
    (-pi/2, pi/2), so no range truncation is needed.
    """
    x0, y0 = complex(z).real, complex(z).imag

    def integrand(t):
        return fun(x0 + y0 * math.tan(t))

    val, err = quad(integrand, -math.pi / 2, math.pi / 2, epsabs=epsabs, epsrel=epsrel, limit=limit)
    return val / math.pi, err / math.pi


def log_poisson_check(acc: OrbitAccumulator, z_star: complex, z: complex):
    """(lhs, rhs, quadrature error): Poisson average of log S on R versus log S(z)."""
    z = complex(z)
    if not z.imag > 0:
        raise ValueError("z must lie in the upper half plane")
    lhs, err = poisson_average(lambda x: math.log(green_density(acc, z_star, x)), z)
    if not math.isfinite(lhs):
        raise QuadratureError(f"Poisson-log quadrature diverged at z = {z}")
    return lhs, math.log(green_density(acc, z_star, z)), err


@dataclass(frozen=True)
class DensityTriple:
    x: float
    rho: float
    rho_i: float
    phi_abs_sq: float

    def to_dict(self) -> dict:
        return {"x": self.x, "rho": self.rho, "rho_i": self.rho_i, "phi_abs_sq": self.phi_abs_sq}


def density_triple(acc: OrbitAccumulator, x: float) -> DensityTriple:
    """rho = sum gamma'(x), rho_i = sum gamma'(x) / (1 + gamma(x)^2), and their ratio."""
    cx, ax = _real_rows(acc, x, need_zero_free=False)
    rho, _ = acc.total(1.0 / cx**2)
    rho_i, _ = acc.total(1.0 / (cx**2 + ax**2))
    low = 1.0 / (1.0 + x * x)
    slack = 1e-12 * rho
    if not (low - slack <= rho_i <= rho + slack):
        raise IdentityViolation(f"density sandwich fails at x={x}: {low} <= {rho_i} <= {rho}")
    return DensityTriple(x, rho, rho_i, rho_i / rho)


@dataclass(frozen=True)
class PhiValue:
    z: complex
    abs_value: float
    log_abs: float
    quadrature_error: float


def phi_interior(acc: OrbitAccumulator, z: complex) -> PhiValue:
    """|phi(z)| for the outer function with boundary modulus sqrt(rho_i / rho)."""

    def log_abs_phi(x):
        t = density_triple(acc, x)
        return 0.5 * math.log(t.phi_abs_sq)

    val, err = poisson_average(log_abs_phi, z)
    return PhiValue(complex(z), math.exp(val), val, err)
