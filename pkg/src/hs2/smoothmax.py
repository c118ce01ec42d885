"""Mollified maximum f_h(a, b) = h⁻² ∫ φ((a, b) − y)/h) max{y₁, y₂} dy and convex composition.

With X = w₁ − w₂ for w distributed by the radial bump φ on ℝ², symmetry gives

    f_h(a, b) = (a + b)/2 + (h/2) G((a − b)/h),   G(c) = E|c − X|,

so the 2-D convolution reduces to 1-D integrals along the kink direction.
G(c) = |c| once |c| >= √2 (the support of X), G'' = 2 p_X and G' = 2 F_X − 1.

Scalar evaluations use adaptive quadrature directly. Batched evaluations,
needed inside composed fields, use a Chebyshev series of p_X integrated
twice, which keeps value, first and second derivatives mutually consistent.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np
from numpy.polynomial import chebyshev
from scipy.integrate import quad

from .fields import ScalarField

SQRT2 = np.sqrt(2.0)
QUAD_TOL = 1e-13
CHEB_DEGREE = 200


def _bump(r: float) -> float:
    return float(np.exp(-1.0 / (1.0 - r * r))) if r < 1.0 else 0.0


@lru_cache(maxsize=None)
def bump_normalization() -> float:
    """Mass of the unnormalized radial bump exp(−1/(1−|w|²)) on ℝ²."""
    return 2.0 * np.pi * quad(lambda r: _bump(r) * r, 0.0, 1.0, epsabs=1e-16, epsrel=QUAD_TOL)[0]


def mollifier(r) -> np.ndarray:
    """Radial unit-mass bump φ on ℝ² as a function of |w|, supported in the unit disc."""
    r = np.asarray(r, dtype=float)
    inside = r < 1.0
    safe = np.where(inside, r, 0.0)
    return np.where(inside, np.exp(-1.0 / (1.0 - safe * safe)), 0.0) / bump_normalization()


def _phi(r: float) -> float:
    return _bump(r) / bump_normalization()


def _positive_part_mean(c: float) -> float:
    """E(X − c)₊ for c >= 0."""
    if c >= SQRT2:
        return 0.0

    def integrand(r):
        th = np.arccos(min(c / (SQRT2 * r), 1.0))
        return _phi(r) * r * (2.0 * SQRT2 * r * np.sin(th) - 2.0 * c * th)

    return quad(integrand, c / SQRT2, 1.0, epsabs=1e-16, epsrel=QUAD_TOL, limit=200)[0]


def kink_profile(c: float) -> float:
    """G(c) = E|c − X| by adaptive quadrature."""
    a = abs(float(c))
    return a + 2.0 * _positive_part_mean(a) if a < SQRT2 else a


@lru_cache(maxsize=None)
def alpha() -> float:
    """f_h(a, a) = a + α h, with α = ½ E|w₁ − w₂| for the bump."""
    return 0.5 * kink_profile(0.0)


def first_absolute_moment() -> float:
    """∫ φ(w) |w₁| dw, by polar quadrature (an independent route to α = m₁/√2)."""
    return 4.0 * quad(lambda r: _phi(r) * r * r, 0.0, 1.0, epsabs=1e-16, epsrel=QUAD_TOL)[0]


def smooth_max(a: float, b: float, h: float) -> float:
    """f_h(a, b); equals max{a, b} whenever |a − b| >= √2 h."""
    if not h > 0:
        raise ValueError(f"h must be positive, got {h}")
    a, b = float(a), float(b)
    d = (a - b) / h
    if abs(d) >= SQRT2:
        return max(a, b)
    return 0.5 * (a + b) + 0.5 * h * kink_profile(d)


def _marginal_density(c: float) -> float:
    """p_X(c) = ψ(c/√2)/√2 where ψ is the 1-D marginal of φ."""
    w = c / SQRT2
    if abs(w) >= 1.0:
        return 0.0
    L = np.sqrt(1.0 - w * w)
    val = quad(lambda v: _phi(np.sqrt(w * w + v * v)), -L, L, epsabs=1e-16, epsrel=QUAD_TOL)[0]
    return val / SQRT2


@lru_cache(maxsize=None)
def _series():
    p = chebyshev.Chebyshev.interpolate(np.vectorize(_marginal_density), CHEB_DEGREE, domain=[-SQRT2, SQRT2])
    cdf = p.integ(lbnd=-SQRT2)
    dG = 2.0 * cdf - 1.0
    G = dG.integ(lbnd=-SQRT2) + SQRT2
    return G, dG, 2.0 * p


def kink_profile_batch(c, derivatives: bool = False):
    """G(c) (and G', G'' if requested) for an array of c."""
    c = np.asarray(c, dtype=float)
    G, dG, d2G = _series()
    inside = np.abs(c) < SQRT2
    cc = np.clip(c, -SQRT2, SQRT2)
    g = np.where(inside, G(cc), np.abs(c))
    if not derivatives:
        return g
    return g, np.where(inside, dG(cc), np.sign(c)), np.where(inside, d2G(cc), 0.0)


class SmoothMax:
    """f_h as a convex bivariate function nondecreasing in each variable."""

    def __init__(self, h: float):
        if not h > 0:
            raise ValueError(f"h must be positive, got {h}")
        self.h = float(h)

    def __call__(self, a, b):
        return self.value(a, b)

    def value(self, a, b):
        a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
        d = (a - b) / self.h
        return np.where(np.abs(d) >= SQRT2, np.maximum(a, b),
                        0.5 * (a + b) + 0.5 * self.h * kink_profile_batch(d))

    def derivatives(self, a, b):
        """(f, f_a, f_b, f_aa, f_ab, f_bb)."""
        a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
        h = self.h
        g, g1, g2 = kink_profile_batch((a - b) / h, derivatives=True)
        f = 0.5 * (a + b) + 0.5 * h * g
        fa = 0.5 + 0.5 * g1
        faa = 0.5 * g2 / h
        return f, fa, 1.0 - fa, faa, -faa, faa


def compose_convex(f, u1: ScalarField, u2: ScalarField) -> ScalarField:
    """w = f(u1, u2).

    ``f`` must be convex and nondecreasing in each variable; this is the
    caller's responsibility unless f is a :class:`SmoothMax`. If f offers
    ``derivatives(a, b)`` and both fields have exact derivatives, w does too.
    """
    if u1.n != u2.n:
        raise ValueError("fields live on different groups")
    value = (lambda z: f.value(u1.value(z), u2.value(z))) if hasattr(f, "value") else (lambda z: f(u1.value(z), u2.value(z)))
    exact = hasattr(f, "derivatives") and u1.exact and u2.exact

    def gradient(z):
        _, fa, fb, *_ = f.derivatives(u1.value(z), u2.value(z))
        return fa[..., None] * u1.gradient(z) + fb[..., None] * u2.gradient(z)

    def hessian(z):
        _, fa, fb, faa, fab, fbb = f.derivatives(u1.value(z), u2.value(z))
        g1, g2 = u1.gradient(z), u2.gradient(z)
        o11 = g1[..., :, None] * g1[..., None, :]
        o22 = g2[..., :, None] * g2[..., None, :]
        o12 = g1[..., :, None] * g2[..., None, :]
        ex = lambda s: s[..., None, None]
        return (ex(fa) * u1.hessian(z) + ex(fb) * u2.hessian(z) + ex(faa) * o11
                + ex(fab) * (o12 + np.swapaxes(o12, -1, -2)) + ex(fbb) * o22)

    return ScalarField(u1.n, value, gradient if exact else None, hessian if exact else None,
                       min(u1.fd_step, u2.fd_step), f"f({u1.name}, {u2.name})")
