"""Scalar fields on ℝ^{2n+1} with optional exact Euclidean derivatives.

All callables are vectorized: ``value(z)`` maps an array of shape ``(..., d)``
(``d = 2n+1``) to ``(...)``, ``gradient(z)`` to ``(..., d)`` and ``hessian(z)``
to ``(..., d, d)``. Fields without exact derivatives fall back to finite
differences in :mod:`hs2.horizontal`.

User-supplied callables must be reentrant; they may be called concurrently.
"""
from __future__ import annotations

import itertools
from typing import Callable

import numpy as np

from .group import Point, compose_z, dilate_z, dim_of, horizontal_sq

ArrayFn = Callable[[np.ndarray], np.ndarray]


def as_coords(p, n: int | None = None) -> np.ndarray:
    z = p.as_array() if isinstance(p, Point) else np.asarray(p, dtype=float)
    if n is not None and z.shape[-1] != 2 * n + 1:
        raise ValueError(f"expected points in R^{2 * n + 1}, got last axis {z.shape[-1]}")
    return z


class ScalarField:
    """A twice-differentiable function u on (a domain of) ℝ^{2n+1}."""

    def __init__(self, n: int, value: ArrayFn, gradient: ArrayFn | None = None,
                 hessian: ArrayFn | None = None, fd_step: float = 1e-4, name: str = "field"):
        if n < 1:
            raise ValueError(f"n must be >= 1, got {n}")
        if not fd_step > 0:
            raise ValueError(f"fd_step must be positive, got {fd_step}")
        self.n = int(n)
        self._value = value
        self._gradient = gradient
        self._hessian = hessian
        self.fd_step = float(fd_step)
        self.name = name

    @property
    def dim(self) -> int:
        return 2 * self.n + 1

    @property
    def exact(self) -> bool:
        return self._gradient is not None and self._hessian is not None

    def value(self, z) -> np.ndarray:
        return np.asarray(self._value(as_coords(z, self.n)), dtype=float)

    def gradient(self, z) -> np.ndarray:
        if self._gradient is None:
            raise MissingDerivativeError(f"{self.name} has no exact gradient")
        return np.asarray(self._gradient(as_coords(z, self.n)), dtype=float)

    def hessian(self, z) -> np.ndarray:
        if self._hessian is None:
            raise MissingDerivativeError(f"{self.name} has no exact hessian")
        return np.asarray(self._hessian(as_coords(z, self.n)), dtype=float)

    def __call__(self, p):
        out = self.value(p)
        return float(out) if out.ndim == 0 else out

    def without_derivatives(self) -> "ScalarField":
        """Same values, derivatives left to finite differences."""
        return ScalarField(self.n, self._value, fd_step=self.fd_step, name=f"{self.name}[fd]")

    def with_fd_step(self, h: float) -> "ScalarField":
        return ScalarField(self.n, self._value, self._gradient, self._hessian, fd_step=h, name=self.name)

    # arithmetic -----------------------------------------------------------
    def __add__(self, other):
        if isinstance(other, ScalarField):
            return linear_combination([(1.0, self), (1.0, other)])
        return add_constant(self, float(other))

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, ScalarField):
            return linear_combination([(1.0, self), (-1.0, other)])
        return add_constant(self, -float(other))

    def __rsub__(self, other):
        return add_constant(linear_combination([(-1.0, self)]), float(other))

    def __mul__(self, c):
        return linear_combination([(float(c), self)])

    __rmul__ = __mul__

    def __neg__(self):
        return linear_combination([(-1.0, self)])

    def __repr__(self) -> str:
        return f"ScalarField({self.name!r}, n={self.n}, exact={self.exact})"


class MissingDerivativeError(LookupError):
    pass


def _same_n(fields) -> int:
    ns = {f.n for f in fields}
    if len(ns) != 1:
        raise ValueError(f"fields live on different groups: n in {sorted(ns)}")
    return ns.pop()


def linear_combination(terms: list[tuple[float, ScalarField]]) -> ScalarField:
    n = _same_n([f for _, f in terms])
    exact = all(f.exact for _, f in terms)

    def value(z):
        return sum(c * f.value(z) for c, f in terms)

    def gradient(z):
        return sum(c * f.gradient(z) for c, f in terms)

    def hessian(z):
        return sum(c * f.hessian(z) for c, f in terms)

    name = " + ".join(f"{c:g}*{f.name}" for c, f in terms)
    step = min(f.fd_step for _, f in terms)
    return ScalarField(n, value, gradient if exact else None, hessian if exact else None, step, name)


def add_constant(field: ScalarField, c: float) -> ScalarField:
    return ScalarField(field.n, lambda z: field.value(z) + c,
                       field._gradient, field._hessian, field.fd_step, f"{field.name} + {c:g}")


def constant(n: int, c: float) -> ScalarField:
    d = 2 * n + 1
    return ScalarField(
        n,
        lambda z: np.full(z.shape[:-1], float(c)),
        lambda z: np.zeros(z.shape[:-1] + (d,)),
        lambda z: np.zeros(z.shape[:-1] + (d, d)),
        name=f"const({c:g})",
    )


class Polynomial(ScalarField):
    """Polynomial Σ c_k z^{e_k} in the Euclidean coordinates of ℝ^{2n+1}."""

    def __init__(self, n: int, exponents, coeffs, name: str = "poly"):
        e = np.atleast_2d(np.asarray(exponents, dtype=int))
        c = np.asarray(coeffs, dtype=float).reshape(-1)
        if e.shape != (c.size, 2 * n + 1) or np.any(e < 0):
            raise ValueError(f"exponents must be a nonnegative ({c.size}, {2 * n + 1}) array")
        self.exponents = e
        self.coeffs = c
        super().__init__(n, self._val, self._grad, self._hess, name=name)

    def _monomials(self, z, e):
        # z: (..., d), e: (m, d) -> (..., m), via a table of powers z_k^p
        top = int(e.max(initial=0))
        P = np.ones(z.shape + (top + 1,))
        for p in range(1, top + 1):
            P[..., p] = P[..., p - 1] * z
        cols = np.arange(e.shape[1])
        return np.prod(P[..., cols, e], axis=-1)

    def _val(self, z):
        return self._monomials(z, self.exponents) @ self.coeffs

    def _shifted(self, k):
        e = self.exponents.copy()
        w = self.coeffs * e[:, k]
        e[:, k] = np.maximum(e[:, k] - 1, 0)
        return e, w

    def _grad(self, z):
        d = self.dim
        out = np.empty(z.shape[:-1] + (d,))
        for k in range(d):
            e, w = self._shifted(k)
            out[..., k] = self._monomials(z, e) @ w
        return out

    def _hess(self, z):
        d = self.dim
        out = np.empty(z.shape[:-1] + (d, d))
        for k in range(d):
            ek, wk = self._shifted(k)
            for m in range(k, d):
                e = ek.copy()
                w = wk * e[:, m]
                e[:, m] = np.maximum(e[:, m] - 1, 0)
                out[..., k, m] = self._monomials(z, e) @ w
                out[..., m, k] = out[..., k, m]
        return out

    @property
    def degree(self) -> int:
        return int(self.exponents.sum(axis=1).max(initial=0))

    @classmethod
    def random(cls, n: int, degree: int, rng: np.random.Generator, scale: float = 1.0) -> "Polynomial":
        """All monomials of total degree <= degree with standard normal coefficients."""
        d = 2 * n + 1
        exps = [e for e in itertools.product(range(degree + 1), repeat=d) if sum(e) <= degree]
        return cls(n, exps, scale * rng.standard_normal(len(exps)), name=f"randpoly{degree}")


def _unit(n: int, k: int) -> list[int]:
    e = [0] * (2 * n + 1)
    e[k] = 1
    return e


def t_field(n: int) -> Polynomial:
    """u(ξ) = t."""
    return Polynomial(n, [_unit(n, 2 * n)], [1.0], name="t")


def sq_field(n: int) -> Polynomial:
    """u(ξ) = |x|² + |y|²."""
    exps = []
    for k in range(2 * n):
        e = [0] * (2 * n + 1)
        e[k] = 2
        exps.append(e)
    return _SqField(n, exps, np.ones(2 * n), name="sq")


class _SqField(Polynomial):
    def _val(self, z):
        return horizontal_sq(z)

    def _grad(self, z):
        out = 2.0 * z
        out[..., -1] = 0.0
        return out

    def _hess(self, z):
        d = self.dim
        D = np.full(d, 2.0)
        D[-1] = 0.0
        return np.broadcast_to(np.diag(D), z.shape[:-1] + (d, d)).copy()


def gauge4_field(n: int) -> Polynomial:
    """u(ξ) = ρ(ξ)⁴ = (|x|² + |y|²)² + t²."""
    d = 2 * n + 1
    exps, coeffs = [], []
    for i in range(2 * n):
        for j in range(i, 2 * n):
            e = [0] * d
            e[i] += 2
            e[j] += 2
            exps.append(e)
            coeffs.append(1.0 if i == j else 2.0)
    e = [0] * d
    e[2 * n] = 2
    exps.append(e)
    coeffs.append(1.0)
    return _Gauge4Field(n, exps, coeffs, name="gauge4")


class _Gauge4Field(Polynomial):
    """Closed-form derivatives of s² + t²; the monomial list is kept for coefficient access."""

    def _val(self, z):
        return horizontal_sq(z) ** 2 + z[..., -1] ** 2

    def _grad(self, z):
        s = horizontal_sq(z)
        out = 4.0 * s[..., None] * z
        out[..., -1] = 2.0 * z[..., -1]
        return out

    def _hess(self, z):
        d = self.dim
        s = horizontal_sq(z)
        zh = z.copy()
        zh[..., -1] = 0.0
        out = 8.0 * zh[..., :, None] * zh[..., None, :]
        idx = np.arange(d - 1)
        out[..., idx, idx] += 4.0 * s[..., None]
        out[..., -1, -1] = 2.0
        return out


def quadratic_form_field(A: np.ndarray, b=None, c_t: float = 0.0) -> Polynomial:
    """u = zᵀAz + b·z + c_t t with z = (x, y) horizontal and A symmetric 2n×2n."""
    A = np.asarray(A, dtype=float)
    m = A.shape[0]
    if m % 2 or A.shape != (m, m):
        raise ValueError("A must be square of even size 2n")
    n = m // 2
    d = m + 1
    exps, coeffs = [], []
    for i in range(m):
        for j in range(i, m):
            e = [0] * d
            e[i] += 1
            e[j] += 1
            exps.append(e)
            coeffs.append(A[i, i] if i == j else A[i, j] + A[j, i])
    b = np.zeros(m) if b is None else np.asarray(b, dtype=float)
    for i in range(m):
        exps.append(_unit(n, i))
        coeffs.append(b[i])
    exps.append(_unit(n, 2 * n))
    coeffs.append(c_t)
    return Polynomial(n, exps, coeffs, name="quadform")


def compose_scalar(field: ScalarField, g: Callable, dg: Callable, d2g: Callable, name: str | None = None) -> ScalarField:
    """w = g(u) with chain-rule derivatives."""

    def value(z):
        return g(field.value(z))

    def gradient(z):
        return dg(field.value(z))[..., None] * field.gradient(z)

    def hessian(z):
        u = field.value(z)
        gu = field.gradient(z)
        return d2g(u)[..., None, None] * gu[..., :, None] * gu[..., None, :] + dg(u)[..., None, None] * field.hessian(z)

    exact = field.exact
    return ScalarField(field.n, value, gradient if exact else None, hessian if exact else None,
                       field.fd_step, name or f"g({field.name})")


def gauge_field(n: int) -> ScalarField:
    """u(ξ) = ρ(ξ); smooth away from the origin."""
    return compose_scalar(
        gauge4_field(n),
        lambda q: q ** 0.25,
        lambda q: 0.25 * q ** -0.75,
        lambda q: -0.1875 * q ** -1.75,
        name="gauge",
    )


def left_translation_jacobian(eta: np.ndarray) -> np.ndarray:
    """Jacobian of ξ ↦ η∘ξ (constant in ξ)."""
    eta = np.asarray(eta, dtype=float)
    n = dim_of(eta)
    J = np.eye(2 * n + 1)
    J[2 * n, :n] = 2.0 * eta[n:2 * n]
    J[2 * n, n:2 * n] = -2.0 * eta[:n]
    return J


def left_translate(field: ScalarField, eta) -> ScalarField:
    """ξ ↦ u(η∘ξ)."""
    eta = as_coords(eta, field.n)
    J = left_translation_jacobian(eta)

    def value(z):
        return field.value(compose_z(eta, z))

    def gradient(z):
        return field.gradient(compose_z(eta, z)) @ J

    def hessian(z):
        return J.T @ field.hessian(compose_z(eta, z)) @ J

    exact = field.exact
    return ScalarField(field.n, value, gradient if exact else None, hessian if exact else None,
                       field.fd_step, f"{field.name}∘L")


def dilate_field(field: ScalarField, lam: float) -> ScalarField:
    """ξ ↦ u(δ_λ ξ)."""
    n = field.n
    D = np.full(2 * n + 1, float(lam))
    D[2 * n] = lam * lam

    def value(z):
        return field.value(dilate_z(lam, z))

    def gradient(z):
        return field.gradient(dilate_z(lam, z)) * D

    def hessian(z):
        return field.hessian(dilate_z(lam, z)) * D[:, None] * D[None, :]

    exact = field.exact
    return ScalarField(n, value, gradient if exact else None, hessian if exact else None,
                       field.fd_step, f"{field.name}∘δ")


def from_callable(n: int, fn: Callable[[np.ndarray], np.ndarray], fd_step: float = 1e-4, name: str = "callable") -> ScalarField:
    return ScalarField(n, fn, fd_step=fd_step, name=name)
