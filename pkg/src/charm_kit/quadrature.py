"""Adaptive Gauss-Legendre quadrature along straight segments and arcs.

Integrands on the comb side carry inverse square-root singularities at gap
endpoints.  A segment whose start and/or end sits on such a branch point is
reparametrized so the singularity cancels against the Jacobian:

    both ends   s = sin^2(u/2),  u in [0, pi]
    start only  s = u^2
    end only    s = 1 - (1 - u)^2

The integrand receives the point xi together with the offsets xi - p and
xi - q computed from s directly, so factors like sqrt(xi - a) keep full
relative accuracy next to the endpoint.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import QuadratureError

NODES = 20
_X, _W = np.polynomial.legendre.leggauss(NODES)
MAX_DEPTH = 48


@dataclass(frozen=True)
class QuadResult:
    value: complex | np.ndarray
    error: float


def _gl(f, lo: float, hi: float):
    half = 0.5 * (hi - lo)
    u = lo + half * (_X + 1.0)
    return np.asarray(f(u)) @ _W * half


def adaptive_gl(f, lo: float, hi: float, tol: float = 1e-13) -> QuadResult:
    """Integrate f (vectorized in u; may return (m, n) arrays) over [lo, hi].

    Bisection until the one-panel and two-panel estimates agree to
    tol * (integral of |f|).
    """
    whole = _gl(f, lo, hi)
    # relative to the integral of |f|: the integral itself may cancel to zero
    scale = max(float(np.max(_gl(lambda u: np.abs(f(u)), lo, hi))), 1e-300)
    total = np.zeros_like(whole)
    err = 0.0
    stack = [(lo, hi, whole, 0)]
    while stack:
        a, b, coarse, depth = stack.pop()
        mid = 0.5 * (a + b)
        left, right = _gl(f, a, mid), _gl(f, mid, b)
        fine = left + right
        diff = float(np.max(np.abs(fine - coarse)))
        if diff <= tol * scale or (b - a) < 1e-15 * max(1.0, abs(lo), abs(hi)):
            total = total + fine
            err += diff
        elif depth >= MAX_DEPTH:
            raise QuadratureError(f"no convergence on [{a}, {b}] after {depth} bisections")
        else:
            stack.append((a, mid, left, depth + 1))
            stack.append((mid, b, right, depth + 1))
    return QuadResult(total, err)


def integrate_segment(g, p: complex, q: complex, sing_p: bool, sing_q: bool, tol: float = 1e-13) -> QuadResult:
    """int_p^q g(xi, xi - p, xi - q) dxi along the straight segment.

    ``g`` is vectorized and may return an (m, n) array for m integrands at
    n nodes.
    """
    p, q = complex(p), complex(q)
    span = q - p
    if span == 0:
        return QuadResult(0.0, 0.0)

    if sing_p and sing_q:
        lo, hi = 0.0, np.pi

        def param(u):
            return np.sin(0.5 * u) ** 2, np.cos(0.5 * u) ** 2, 0.5 * np.sin(u)
    elif sing_p:
        lo, hi = 0.0, 1.0

        def param(u):
            return u * u, (1.0 - u) * (1.0 + u), 2.0 * u
    elif sing_q:
        lo, hi = 0.0, 1.0

        def param(u):
            return u * (2.0 - u), (1.0 - u) ** 2, 2.0 * (1.0 - u)
    else:
        lo, hi = 0.0, 1.0

        def param(u):
            return u, 1.0 - u, np.ones_like(u)

    def f(u):
        s, t, ds = param(u)
        dp = span * s
        dq = -span * t
        xi = np.where(s <= 0.5, p + dp, q + dq)
        return g(xi, dp, dq) * (span * ds)

    return adaptive_gl(f, lo, hi, tol)


def integrate_arc(g, center: float, radius: float, phi0: float, phi1: float, tol: float = 1e-13) -> QuadResult:
    """int g(xi) dxi along center + radius e^{i phi}, phi from phi0 to phi1 (no singular ends)."""

    def f(u):
        e = np.exp(1j * u)
        xi = center + radius * e
        return g(xi, None, None) * (1j * radius * e)

    return adaptive_gl(f, phi0, phi1, tol)
