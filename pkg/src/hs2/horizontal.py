"""Horizontal derivatives on ℍⁿ.

X_j = ∂_{x_j} + 2 y_j ∂_t and X_{n+j} = ∂_{y_j} − 2 x_j ∂_t. In exact mode the
horizontal jet is assembled from the Euclidean gradient g and Hessian D²u:

    X u   = Bᵀ g
    X²u   = Bᵀ D²u B + u_t · D,     D[i, j] = ∂_i a_j

where the columns of B are the vectors X_i = e_i + a_i e_t. In FD mode every
derivative is a central difference along the right-translation flows
p ↦ p∘(s e_i), which generate the X_i; that route uses only the group law and
serves as an independent check on the chain-rule assembly.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fields import ScalarField, as_coords
from .group import Point, compose_z, dim_of

FD_STEP = 1e-4


def commutator_matrix(n: int) -> np.ndarray:
    """[[0, I], [−I, 0]] of size 2n."""
    S = np.zeros((2 * n, 2 * n))
    S[:n, n:] = np.eye(n)
    S[n:, :n] = -np.eye(n)
    return S


def _coefficients(z: np.ndarray) -> np.ndarray:
    """a(z) with X_i = ∂_i + a_i ∂_t."""
    n = dim_of(z)
    return np.concatenate([2.0 * z[..., n:2 * n], -2.0 * z[..., :n]], axis=-1)


def frame(z: np.ndarray) -> np.ndarray:
    """B(z) of shape (..., 2n+1, 2n): columns are X_i(z) as Euclidean vectors."""
    n = dim_of(z)
    B = np.zeros(z.shape[:-1] + (2 * n + 1, 2 * n))
    B[..., np.arange(2 * n), np.arange(2 * n)] = 1.0
    B[..., 2 * n, :] = _coefficients(z)
    return B


@dataclass(frozen=True, eq=False)
class HorizontalJet:
    """Horizontal 2-jet of u at one point (or a batch, when arrays carry leading axes)."""

    value: np.ndarray | float
    Xu: np.ndarray
    X2u: np.ndarray
    H: np.ndarray
    ut: np.ndarray | float

    @property
    def n(self) -> int:
        return self.Xu.shape[-1] // 2

    def commutator(self, i: int, j: int):
        """[X_i, X_j]u = X_iX_ju − X_jX_iu."""
        return self.X2u[..., i, j] - self.X2u[..., j, i]

    def at(self, k: int) -> "HorizontalJet":
        return HorizontalJet(self.value[k], self.Xu[k], self.X2u[k], self.H[k], self.ut[k])


def _exact_arrays(field: ScalarField, z: np.ndarray):
    n = field.n
    g = field.gradient(z)
    D2 = field.hessian(z)
    B = frame(z)
    Bt = np.swapaxes(B, -1, -2)
    ut = g[..., 2 * n]
    Xu = np.einsum("...ki,...k->...i", B, g)
    X2u = Bt @ D2 @ B + ut[..., None, None] * 2.0 * (-commutator_matrix(n))
    return field.value(z), Xu, X2u, ut


def _flow(z: np.ndarray, k: int, s: float) -> np.ndarray:
    e = np.zeros(z.shape[-1])
    e[k] = s
    return compose_z(z, e)


def _fd_arrays(field: ScalarField, z: np.ndarray, h: float):
    n = field.n
    m = 2 * n
    u = field.value
    Xu = np.empty(z.shape[:-1] + (m,))
    X2u = np.empty(z.shape[:-1] + (m, m))
    u0 = u(z)
    for i in range(m):
        Xu[..., i] = (u(_flow(z, i, h)) - u(_flow(z, i, -h))) / (2 * h)
        X2u[..., i, i] = (u(_flow(z, i, h)) - 2.0 * u0 + u(_flow(z, i, -h))) / (h * h)
    for i in range(m):
        for j in range(m):
            if i == j:
                continue
            pp = u(_flow(_flow(z, i, h), j, h))
            pm = u(_flow(_flow(z, i, h), j, -h))
            mp = u(_flow(_flow(z, i, -h), j, h))
            mm = u(_flow(_flow(z, i, -h), j, -h))
            X2u[..., i, j] = (pp - pm - mp + mm) / (4 * h * h)
    ut = (u(_flow(z, m, h)) - u(_flow(z, m, -h))) / (2 * h)
    return u0, Xu, X2u, ut


def jet_arrays(field: ScalarField, z, mode: str = "auto", fd_step: float | None = None,
               richardson: bool = False):
    """Vectorized jet: returns (value, Xu, X2u, H, ut) for points z of shape (..., 2n+1).

    ``mode`` is ``"exact"``, ``"fd"`` or ``"auto"`` (exact when the field has
    Euclidean derivatives).
    """
    z = as_coords(z, field.n)
    if mode == "auto":
        mode = "exact" if field.exact else "fd"
    if mode == "exact":
        if not field.exact:
            raise ValueError(f"{field.name} provides no exact derivatives; use mode='fd'")
        v, Xu, X2u, ut = _exact_arrays(field, z)
    elif mode == "fd":
        h = field.fd_step if fd_step is None else float(fd_step)
        v, Xu, X2u, ut = _fd_arrays(field, z, h)
        if richardson:
            _, Xu2, X2u2, ut2 = _fd_arrays(field, z, h / 2)
            Xu = (4 * Xu2 - Xu) / 3
            X2u = (4 * X2u2 - X2u) / 3
            ut = (4 * ut2 - ut) / 3
    else:
        raise ValueError(f"unknown derivative mode {mode!r}")
    if not (np.all(np.isfinite(X2u)) and np.all(np.isfinite(ut))):
        raise FloatingPointError(f"non-finite derivatives of {field.name}")
    H = 0.5 * (X2u + np.swapaxes(X2u, -1, -2))
    return v, Xu, X2u, H, ut


def horizontal_jet(field: ScalarField, p, mode: str = "auto", fd_step: float | None = None,
                   richardson: bool = False) -> HorizontalJet:
    v, Xu, X2u, H, ut = jet_arrays(field, p, mode, fd_step, richardson)
    if np.ndim(v) == 0:
        return HorizontalJet(float(v), Xu, X2u, H, float(ut))
    return HorizontalJet(v, Xu, X2u, H, ut)


def horizontal_hessian(field: ScalarField, z, mode: str = "auto") -> np.ndarray:
    """Symmetrized 𝓗(u) at a batch of points."""
    return jet_arrays(field, z, mode)[3]


def hessian_c(field: ScalarField, p, c: float, mode: str = "auto") -> np.ndarray:
    """𝓗_c(u) = X²u + c u_t [[0, I], [−I, 0]]; symmetric exactly when c = 2."""
    _, _, X2u, _, ut = jet_arrays(field, p, mode)
    return X2u + c * np.asarray(ut)[..., None, None] * commutator_matrix(field.n)


def fd_certificate(field: ScalarField, z, fd_step: float | None = None) -> float:
    """Largest discrepancy between exact-mode and FD-mode jet entries at z."""
    _, Xu_e, X2u_e, _, ut_e = jet_arrays(field, z, "exact")
    _, Xu_f, X2u_f, _, ut_f = jet_arrays(field, z, "fd", fd_step)
    return float(max(np.max(np.abs(Xu_e - Xu_f)), np.max(np.abs(X2u_e - X2u_f)),
                     np.max(np.abs(ut_e - ut_f))))


# Weighted Taylor polynomial ---------------------------------------------

def exponential_coordinates(z, z0) -> np.ndarray:
    """η with z = z0∘exp(Σ η_j X_j + η_{2n+1} [X_j, X_{n+j}]).

    η = (x − x0, y − y0, (t0 − t + 2(x·y0 − y·x0))/4).
    """
    z = np.asarray(z, dtype=float)
    z0 = np.asarray(z0, dtype=float)
    n = dim_of(z)
    x, y, t = z[..., :n], z[..., n:2 * n], z[..., 2 * n]
    x0, y0, t0 = z0[..., :n], z0[..., n:2 * n], z0[..., 2 * n]
    eta = np.empty(np.broadcast_shapes(z.shape, z0.shape))
    eta[..., :2 * n] = z[..., :2 * n] - z0[..., :2 * n]
    eta[..., 2 * n] = (t0 - t + 2.0 * (np.sum(x * y0, axis=-1) - np.sum(y * x0, axis=-1))) / 4.0
    return eta


@dataclass(frozen=True, eq=False)
class WeightedPolynomial:
    """P(η) = c0 + ℓ·η_h + c_v η_{2n+1} + η_hᵀ Q η_h in exponential coordinates at p0.

    η_h are the 2n horizontal coordinates (weight 1) and η_{2n+1} has weight 2,
    so every term has homogeneous degree <= 2.
    """

    p0: np.ndarray
    constant: float
    linear: np.ndarray
    vertical: float
    quadratic: np.ndarray

    @property
    def n(self) -> int:
        return self.linear.size // 2

    def __call__(self, z) -> np.ndarray:
        eta = exponential_coordinates(as_coords(z, self.n), self.p0)
        m = 2 * self.n
        eh = eta[..., :m]
        return (self.constant + eh @ self.linear + self.vertical * eta[..., m]
                + np.einsum("...i,ij,...j->...", eh, self.quadratic, eh))

    def coefficients(self) -> dict[tuple[int, ...], float]:
        """{α: c_α} for all multi-indices with weighted degree |α| <= 2."""
        d = 2 * self.n + 1
        out = {(0,) * d: self.constant}
        for i in range(2 * self.n):
            a = [0] * d
            a[i] = 1
            out[tuple(a)] = float(self.linear[i])
        a = [0] * d
        a[d - 1] = 1
        out[tuple(a)] = self.vertical
        for i in range(2 * self.n):
            for j in range(i, 2 * self.n):
                a = [0] * d
                a[i] += 1
                a[j] += 1
                c = self.quadratic[i, i] if i == j else 2.0 * self.quadratic[i, j]
                out[tuple(a)] = float(c)
        return out


def taylor_polynomial(field: ScalarField, p0, mode: str = "auto") -> WeightedPolynomial:
    z0 = as_coords(p0, field.n)
    jet = horizontal_jet(field, z0, mode)
    return WeightedPolynomial(
        p0=np.array(z0, dtype=float),
        constant=float(jet.value),
        linear=np.array(jet.Xu),
        vertical=-4.0 * float(jet.ut),
        quadratic=0.5 * np.array(jet.H),
    )


def taylor_decay(field: ScalarField, p0, radii, resolution: int = 24, mode: str = "auto") -> list[float]:
    """r⁻² · (mean of |u − P| over the gauge ball B_r(p0)) for each r."""
    from .quadrature import ball_rule

    radii = [float(r) for r in radii]
    if any(r <= 0 for r in radii):
        raise ValueError("radii must be positive")
    if any(b >= a for a, b in zip(radii, radii[1:])):
        raise ValueError("radii must be strictly decreasing")
    z0 = as_coords(p0, field.n)
    P = taylor_polynomial(field, z0, mode)
    out = []
    for r in radii:
        nodes, weights = ball_rule(Point.from_array(z0), r, field.n, resolution)
        resid = np.abs(field.value(nodes) - P(nodes))
        out.append(float(np.dot(weights, resid) / weights.sum() / r ** 2))
    return out
