"""Heisenberg group arithmetic in the global (x, y, t) chart.

Points are stored either as :class:`Point` values or, for vectorized work, as
float arrays of shape ``(..., 2n+1)`` laid out as ``(x_1..x_n, y_1..y_n, t)``.
The ``*_z`` functions operate on such arrays and broadcast over leading axes.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, eq=False)
class Point:
    """A group element ξ = (x, y, t) of ℍⁿ."""

    x: np.ndarray
    y: np.ndarray
    t: float

    def __post_init__(self):
        x = np.atleast_1d(np.asarray(self.x, dtype=float))
        y = np.atleast_1d(np.asarray(self.y, dtype=float))
        if x.ndim != 1 or x.shape != y.shape or x.size < 1:
            raise ValueError(f"x and y must be vectors of equal length n >= 1, got {x.shape} and {y.shape}")
        t = float(self.t)
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y)) and np.isfinite(t)):
            raise ValueError("point coordinates must be finite")
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "t", t)

    @property
    def n(self) -> int:
        return self.x.size

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.x, self.y, [self.t]])

    @classmethod
    def from_array(cls, z) -> "Point":
        z = np.asarray(z, dtype=float)
        if z.ndim != 1 or z.size < 3 or z.size % 2 == 0:
            raise ValueError(f"expected a vector of odd length 2n+1 >= 3, got shape {z.shape}")
        n = (z.size - 1) // 2
        return cls(z[:n], z[n:2 * n], z[2 * n])

    @classmethod
    def identity(cls, n: int) -> "Point":
        return cls(np.zeros(n), np.zeros(n), 0.0)

    def allclose(self, other: "Point", rtol: float = 1e-12, atol: float = 1e-12) -> bool:
        return self.n == other.n and np.allclose(self.as_array(), other.as_array(), rtol=rtol, atol=atol)

    def __repr__(self) -> str:
        return f"Point(x={self.x.tolist()}, y={self.y.tolist()}, t={self.t!r})"


def dim_of(z: np.ndarray) -> int:
    """Return n for an array whose last axis has length 2n+1."""
    d = z.shape[-1]
    if d < 3 or d % 2 == 0:
        raise ValueError(f"last axis must have odd length 2n+1 >= 3, got {d}")
    return (d - 1) // 2


def compose_z(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape[-1] != b.shape[-1]:
        raise ValueError(f"dimension mismatch: {a.shape[-1]} vs {b.shape[-1]}")
    n = dim_of(a)
    xa, ya, ta = a[..., :n], a[..., n:2 * n], a[..., 2 * n]
    xb, yb, tb = b[..., :n], b[..., n:2 * n], b[..., 2 * n]
    t = ta + tb + 2.0 * (np.sum(xb * ya, axis=-1) - np.sum(yb * xa, axis=-1))
    out = np.empty(np.broadcast_shapes(a.shape, b.shape))
    out[..., :2 * n] = a[..., :2 * n] + b[..., :2 * n]
    out[..., 2 * n] = t
    return out


def inverse_z(a: np.ndarray) -> np.ndarray:
    return -np.asarray(a, dtype=float)


def dilate_z(lam, a: np.ndarray) -> np.ndarray:
    """δ_λ on a batch; ``lam`` may be a scalar or broadcast against the leading axes."""
    lam = np.asarray(lam, dtype=float)
    if not np.all(lam > 0):
        raise ValueError(f"dilation factor must be positive, got {lam}")
    a = np.asarray(a, dtype=float)
    n = dim_of(a)
    out = a * lam[..., None]
    out[..., 2 * n] = a[..., 2 * n] * lam * lam
    return out


def horizontal_sq(a: np.ndarray) -> np.ndarray:
    """|x|² + |y|² for each point."""
    n = dim_of(a)
    return np.sum(a[..., :2 * n] ** 2, axis=-1)


def gauge_z(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    n = dim_of(a)
    s = horizontal_sq(a)
    return (s * s + a[..., 2 * n] ** 2) ** 0.25


def distance_z(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """d(a, b) = ρ(b⁻¹∘a)."""
    return gauge_z(compose_z(inverse_z(b), a))


def compose(a: Point, b: Point) -> Point:
    """Group product a∘b."""
    if a.n != b.n:
        raise ValueError(f"dimension mismatch: n={a.n} vs n={b.n}")
    return Point.from_array(compose_z(a.as_array(), b.as_array()))


def inverse(a: Point) -> Point:
    return Point(-a.x, -a.y, -a.t)


def dilate(lam: float, a: Point) -> Point:
    """δ_λ(x, y, t) = (λx, λy, λ²t)."""
    if not lam > 0:
        raise ValueError(f"dilation factor must be positive, got {lam}")
    return Point(lam * a.x, lam * a.y, lam * lam * a.t)


def gauge(a: Point) -> float:
    return float(gauge_z(a.as_array()))


def distance(a: Point, b: Point) -> float:
    if a.n != b.n:
        raise ValueError(f"dimension mismatch: n={a.n} vs n={b.n}")
    return float(distance_z(a.as_array(), b.as_array()))


# Regions. Gauge balls are open sets {ξ : d(ξ, center) < radius}.

def _as_point(center, n: int | None = None) -> Point:
    if isinstance(center, Point):
        return center
    if center is None:
        if n is None:
            raise ValueError("need n to build a default center")
        return Point.identity(n)
    return Point.from_array(center)


@dataclass(frozen=True, eq=False)
class GaugeBall:
    center: Point
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", _as_point(self.center))
        if not self.radius > 0:
            raise ValueError(f"radius must be positive, got {self.radius}")
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def n(self) -> int:
        return self.center.n

    def contains(self, z: np.ndarray) -> np.ndarray:
        return distance_z(np.asarray(z, dtype=float), self.center.as_array()) < self.radius

    def concentric(self, radius: float) -> "GaugeBall":
        return GaugeBall(self.center, radius)

    def describe(self) -> dict:
        return {"type": "ball", "center": self.center.as_array().tolist(), "radius": self.radius}


@dataclass(frozen=True, eq=False)
class GaugeAnnulus:
    """{ξ : inner <= d(ξ, center) <= outer}."""

    center: Point
    inner: float
    outer: float

    def __post_init__(self):
        object.__setattr__(self, "center", _as_point(self.center))
        if not 0 < self.inner < self.outer:
            raise ValueError(f"need 0 < inner < outer, got {self.inner}, {self.outer}")

    @property
    def n(self) -> int:
        return self.center.n

    def contains(self, z: np.ndarray) -> np.ndarray:
        r = distance_z(np.asarray(z, dtype=float), self.center.as_array())
        return (r >= self.inner) & (r <= self.outer)

    def describe(self) -> dict:
        return {"type": "annulus", "center": self.center.as_array().tolist(),
                "inner": self.inner, "outer": self.outer}


@dataclass(frozen=True, eq=False)
class Box:
    """Axis-aligned box in ℝ^{2n+1}."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=float)
        hi = np.asarray(self.upper, dtype=float)
        if lo.ndim != 1 or lo.shape != hi.shape:
            raise ValueError("lower and upper must be vectors of equal length")
        dim_of(lo)
        if not np.all(hi > lo):
            raise ValueError("box must have upper > lower on every axis")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def unit(cls, n: int) -> "Box":
        return cls(np.zeros(2 * n + 1), np.ones(2 * n + 1))

    @classmethod
    def cube(cls, n: int, lo: float, hi: float) -> "Box":
        return cls(np.full(2 * n + 1, float(lo)), np.full(2 * n + 1, float(hi)))

    @property
    def n(self) -> int:
        return dim_of(self.lower)

    @property
    def volume(self) -> float:
        return float(np.prod(self.upper - self.lower))

    def contains(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        return np.all((z >= self.lower) & (z <= self.upper), axis=-1)

    def split(self, axis: int, at: float | None = None) -> tuple["Box", "Box"]:
        at = 0.5 * (self.lower[axis] + self.upper[axis]) if at is None else float(at)
        mid_hi = self.upper.copy()
        mid_hi[axis] = at
        mid_lo = self.lower.copy()
        mid_lo[axis] = at
        return Box(self.lower, mid_hi), Box(mid_lo, self.upper)

    def describe(self) -> dict:
        return {"type": "box", "lower": self.lower.tolist(), "upper": self.upper.tolist()}
