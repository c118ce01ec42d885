"""The radial barrier v = K(R⁴ − ρ(ξ₀⁻¹∘ξ)⁴), K = m₀/((1−σ⁴)R⁴), and radial perturbations of it."""
from __future__ import annotations

import numpy as np

from .fields import ScalarField, compose_scalar, gauge4_field, left_translate
from .group import GaugeBall, Point, horizontal_sq, compose_z, inverse_z

# σ₂(𝓗(ρ⁴)) = c_n (|x|²+|y|²)²; values from a symbolic expansion, cross-checked by FD in the tests.
SIGMA2_CONSTANTS = {1: 144, 2: 352, 3: 624, 4: 960, 5: 1360, 6: 1824}


def sigma2_constant(n: int) -> int:
    try:
        return SIGMA2_CONSTANTS[int(n)]
    except KeyError:
        raise KeyError(f"c_n is tabulated for n = 1..6 only, got n={n}") from None


def trace_coefficient(n: int) -> int:
    """trace 𝓗(ρ⁴) = (8n+16)(|x|²+|y|²)."""
    return 8 * n + 16


def centered_gauge4(center: Point) -> ScalarField:
    """ξ ↦ ρ(center⁻¹∘ξ)⁴."""
    return left_translate(gauge4_field(center.n), -center.as_array())


class Barrier(ScalarField):
    """v(ξ) = K (R⁴ − ρ(ξ₀⁻¹∘ξ)⁴); zero on ∂B_R, m₀ on ∂B_{σR}, σ₂(𝓗)-convex in B_R."""

    def __init__(self, center, R: float, sigma: float, m0: float):
        center = center if isinstance(center, Point) else Point.from_array(center)
        if not R > 0:
            raise ValueError(f"R must be positive, got {R}")
        if not 0 < sigma < 1:
            raise ValueError(f"sigma must lie in (0, 1), got {sigma}")
        if not m0 < 0:
            raise ValueError(f"m0 must be negative, got {m0}")
        self.center, self.R, self.sigma, self.m0 = center, float(R), float(sigma), float(m0)
        self.K = self.m0 / ((1.0 - self.sigma ** 4) * self.R ** 4)
        r4 = self.R ** 4
        K = self.K
        inner = compose_scalar(centered_gauge4(center), lambda r: K * (r4 - r),
                               lambda r: np.full_like(r, -K), lambda r: np.zeros_like(r))
        super().__init__(center.n, inner._value, inner._gradient, inner._hessian,
                         name=f"barrier(R={R:g},sigma={sigma:g},m0={m0:g})")

    @property
    def ball(self) -> GaugeBall:
        return GaugeBall(self.center, self.R)

    @property
    def inner_ball(self) -> GaugeBall:
        return GaugeBall(self.center, self.sigma * self.R)

    def _s(self, z):
        return horizontal_sq(compose_z(inverse_z(self.center.as_array()), np.asarray(z, dtype=float)))

    def trace_formula(self, z):
        """trace 𝓗(v) = −(8n+16) s K with s = |x−x₀|²+|y−y₀|²."""
        return -trace_coefficient(self.n) * self._s(z) * self.K

    def sigma2_formula(self, z):
        """σ₂(𝓗(v)) = c_n s² K²."""
        return sigma2_constant(self.n) * self._s(z) ** 2 * self.K ** 2

    def ut_formula(self, z):
        """∂_t v = −2K t' where t' is the vertical coordinate of ξ₀⁻¹∘ξ."""
        w = compose_z(inverse_z(self.center.as_array()), np.asarray(z, dtype=float))
        return -2.0 * self.K * w[..., -1]

    def describe(self) -> dict:
        return {"center": self.center.as_array().tolist(), "R": self.R, "sigma": self.sigma, "m0": self.m0}


def radial_bump(center: Point, R: float, a: float, b: float, c: float) -> ScalarField:
    """φ(r) = (R⁴−r)(a + b(R⁴−r) + c(R⁴−r)²) with r = ρ(center⁻¹∘ξ)⁴.

    For a, b, c ≥ 0: positive inside B_R, zero on ∂B_R, nonincreasing in r
    with φ'' ≥ 0, so adding it to a multiple of R⁴ − r keeps H-convexity as
    long as the combined slope stays ≤ 0.
    """
    r4 = float(R) ** 4

    def g(r):
        q = r4 - r
        return q * (a + b * q + c * q * q)

    def dg(r):
        q = r4 - r
        return -(a + 2 * b * q + 3 * c * q * q)

    def d2g(r):
        q = r4 - r
        return 2 * b + 6 * c * q

    return compose_scalar(centered_gauge4(center), g, dg, d2g, name="radial_bump")


def max_bump_slope(R: float, a: float, b: float, c: float) -> float:
    """sup over B_R of |φ'(r)|, attained at the center."""
    r4 = float(R) ** 4
    return a + 2 * b * r4 + 3 * c * r4 * r4
