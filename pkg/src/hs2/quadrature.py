"""Cubature rules and sample plans over boxes and gauge balls.

Boxes use the tensor midpoint rule. Gauge balls B_R(ξ0) are integrated on a
template for the unit ball at the origin, mapped by ζ ↦ ξ0∘δ_R(ζ); left
translation preserves Lebesgue measure and δ_R scales it by R^{2n+2}, so the
mapped weights are exact rescalings and dilation tests are exact up to
rounding. The template is a product rule in coordinates that follow the ball
exactly, so there is no boundary-cell error.

Every weight is a fixed function of (n, resolution), and nodes are produced in
lexicographic cell order, so sums are reproducible bit for bit.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .group import Box, GaugeAnnulus, GaugeBall, Point, compose_z, dilate_z, gauge_z

def _cells(resolution, dim: int) -> tuple[int, ...]:
    if np.ndim(resolution) == 0:
        cells = (int(resolution),) * dim
    else:
        cells = tuple(int(c) for c in resolution)
    if len(cells) != dim:
        raise ValueError(f"resolution needs {dim} entries, got {len(cells)}")
    if min(cells) < 2:
        raise ValueError(f"resolution too coarse: need at least 2 cells per axis, got {cells}")
    return cells


def box_rule(box: Box, resolution) -> tuple[np.ndarray, np.ndarray]:
    """Tensor midpoint rule: (nodes (M, d), weights (M,))."""
    d = box.lower.size
    cells = _cells(resolution, d)
    axes = [box.lower[k] + (np.arange(c) + 0.5) * (box.upper[k] - box.lower[k]) / c for k, c in enumerate(cells)]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
    w = box.volume / np.prod(cells)
    return grid, np.full(grid.shape[0], w)


def box_step(box: Box, resolution) -> float:
    cells = _cells(resolution, box.lower.size)
    return float(np.max((box.upper - box.lower) / np.asarray(cells)))


def _simplex_rule(n: int, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Collapsed (Duffy) Gauss rule on {q ∈ ℝⁿ : q >= 0, Σq = 1}, measure dq_1..dq_{n-1}."""
    if n == 1:
        return np.ones((1, 1)), np.ones(1)
    g, gw = np.polynomial.legendre.leggauss(k)
    g, gw = 0.5 * (g + 1.0), 0.5 * gw
    v = np.stack(np.meshgrid(*[g] * (n - 1), indexing="ij"), axis=-1).reshape(-1, n - 1)
    w = np.prod(np.stack(np.meshgrid(*[gw] * (n - 1), indexing="ij"), axis=-1).reshape(-1, n - 1), axis=-1)
    q = np.empty((v.shape[0], n))
    mass = np.ones(v.shape[0])
    for j in range(n - 1):
        w = w * mass
        q[:, j] = mass * v[:, j]
        mass = mass * (1.0 - v[:, j])
    q[:, n - 1] = mass
    return q, w


@lru_cache(maxsize=32)
def _unit_ball_template(n: int, cells: int, t_nodes: int):
    # z_k = sqrt(p_k) e^{iθ_k}: dz = 2^{-n} dp dθ, p = s q with q on the simplex
    # (dp = s^{n-1} ds dq), s = sin ψ so the fiber half-length sqrt(1 - s²) = cos ψ.
    g, gw = np.polynomial.legendre.leggauss(cells)
    psi = 0.25 * np.pi * (g + 1.0)
    wpsi = 0.25 * np.pi * gw * np.sin(psi) ** (n - 1) * np.cos(psi) ** 2
    qs, wq = _simplex_rule(n, cells)
    m_theta = 2 * cells
    theta = 2.0 * np.pi * np.arange(m_theta) / m_theta
    th = np.stack(np.meshgrid(*[theta] * n, indexing="ij"), axis=-1).reshape(-1, n)
    wth = (2.0 * np.pi / m_theta) ** n
    tau, wt = np.polynomial.legendre.leggauss(t_nodes)

    s = np.sin(psi)
    r = np.sqrt(s[:, None, None] * qs[None, :, :])                       # (ψ, q, n)
    x = r[:, :, None, :] * np.cos(th)[None, None, :, :]                 # (ψ, q, θ, n)
    y = r[:, :, None, :] * np.sin(th)[None, None, :, :]
    t = np.cos(psi)[:, None, None, None] * tau[None, None, None, :]      # (ψ, 1, 1, τ)
    shape = (psi.size, qs.shape[0], th.shape[0], tau.size)
    nodes = np.empty(shape + (2 * n + 1,))
    nodes[..., :n] = x[:, :, :, None, :]
    nodes[..., n:2 * n] = y[:, :, :, None, :]
    nodes[..., 2 * n] = np.broadcast_to(t, shape)
    weights = (2.0 ** -n * wth * wpsi[:, None, None, None] * wq[None, :, None, None]
               * np.ones(th.shape[0])[None, None, :, None] * wt[None, None, None, :])
    nodes = nodes.reshape(-1, 2 * n + 1)
    weights = np.broadcast_to(weights, shape).reshape(-1).copy()
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def unit_ball_rule(n: int, resolution: int, t_nodes: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Product rule on the unit gauge ball at the origin.

    ``resolution`` Gauss nodes in the radial and simplex directions, twice as
    many trapezoid nodes per angle, and ``t_nodes`` (default ``resolution``)
    Gauss nodes along each t-fiber.
    """
    cells = int(resolution)
    if cells < 2:
        raise ValueError(f"resolution too coarse: need at least 2 nodes per axis, got {cells}")
    return _unit_ball_template(n, cells, int(t_nodes or cells))


def ball_rule(center: Point, radius: float, n: int, resolution: int,
              t_nodes: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    zeta, w = unit_ball_rule(n, resolution, t_nodes)
    nodes = compose_z(center.as_array(), dilate_z(radius, zeta))
    return nodes, w * radius ** (2 * n + 2)


def region_rule(region, resolution) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(region, Box):
        return box_rule(region, resolution)
    if isinstance(region, GaugeBall):
        return ball_rule(region.center, region.radius, region.n, int(resolution))
    raise TypeError(f"cannot integrate over {type(region).__name__}")


def coarse_resolution(resolution):
    if np.ndim(resolution) == 0:
        return max(int(resolution) // 2, 2)
    return tuple(max(int(c) // 2, 2) for c in resolution)


def region_step(region, resolution) -> float:
    if isinstance(region, Box):
        return box_step(region, resolution)
    return 2.0 * region.radius / int(resolution)


def integrate(fn, region, resolution, chunk: int = 20000) -> float:
    """Σ w_k fn(nodes_k), evaluated in fixed-size chunks in node order."""
    nodes, weights = region_rule(region, resolution)
    total = 0.0
    for start in range(0, nodes.shape[0], chunk):
        sl = slice(start, start + chunk)
        total += float(np.dot(weights[sl], fn(nodes[sl])))
    return total


# exact gauge-ball moments -----------------------------------------------

def _sphere_area(m: int) -> float:
    from scipy.special import gamma
    return 2.0 * np.pi ** (m / 2) / gamma(m / 2)


def unit_ball_moment(n: int, p: int = 0, q: int = 0) -> float:
    """∫_{B_1} (|x|²+|y|²)^p t^{2q} dξ over the unit gauge ball, in closed form.

    With u = |z|⁴ the radial integral becomes a Beta function.
    """
    from scipy.special import beta

    area = _sphere_area(2 * n)
    # ∫_0^1 r^{2n-1+2p} * 2 (1-r^4)^{q+1/2}/(2q+1) dr
    return area * 2.0 / (2 * q + 1) * 0.25 * beta((2 * n + 2 * p) / 4.0, q + 1.5)


def unit_ball_volume(n: int) -> float:
    return unit_ball_moment(n, 0, 0)


# sampling ----------------------------------------------------------------

@dataclass(frozen=True)
class SamplePlan:
    """How to sample a region: ``grid`` (per_axis points incl. endpoints) or ``random`` (count, seed)."""

    kind: str = "random"
    count: int = 1000
    per_axis: int = 9
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("grid", "random"):
            raise ValueError(f"unknown sample plan kind {self.kind!r}")


def _unit_ball_samples(n: int, plan: SamplePlan, shrink: float = 1.0) -> np.ndarray:
    m = 2 * n
    if plan.kind == "grid":
        g = np.linspace(-1.0, 1.0, plan.per_axis)
        zh = np.stack(np.meshgrid(*[g] * m, indexing="ij"), axis=-1).reshape(-1, m)
        zh = zh[np.sum(zh ** 2, axis=-1) <= 1.0 + 1e-12]
        s = np.minimum(np.sum(zh ** 2, axis=-1), 1.0)
        L = np.sqrt(1.0 - s * s)
        pts = np.empty((zh.shape[0], g.size, m + 1))
        pts[..., :m] = zh[:, None, :]
        pts[..., m] = L[:, None] * g[None, :]
        pts = pts.reshape(-1, m + 1)
    else:
        rng = np.random.default_rng(plan.seed)
        out = []
        need = plan.count
        while need > 0:
            cand = rng.uniform(-1.0, 1.0, size=(2 * need + 16, m + 1))
            cand = cand[gauge_z(cand) < 1.0][:need]
            out.append(cand)
            need -= cand.shape[0]
        pts = np.concatenate(out)
    return dilate_z(shrink, pts) if shrink != 1.0 else pts


def sample_points(region, plan: SamplePlan, shrink: float = 1.0) -> np.ndarray:
    """Points of the (closed) region; ``shrink`` < 1 keeps them strictly inside."""
    if isinstance(region, Box):
        d = region.lower.size
        c = 0.5 * (region.lower + region.upper)
        half = 0.5 * (region.upper - region.lower) * shrink
        if plan.kind == "grid":
            axes = [np.linspace(c[k] - half[k], c[k] + half[k], plan.per_axis) for k in range(d)]
            return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
        rng = np.random.default_rng(plan.seed)
        return c + half * rng.uniform(-1.0, 1.0, size=(plan.count, d))
    if isinstance(region, GaugeBall):
        zeta = _unit_ball_samples(region.n, plan, shrink)
        return compose_z(region.center.as_array(), dilate_z(region.radius, zeta))
    if isinstance(region, GaugeAnnulus):
        n = region.n
        rng = np.random.default_rng(plan.seed)
        raw = rng.standard_normal((plan.count, 2 * n + 1))
        # random direction on the unit gauge sphere, then a gauge radius in [inner, outer]
        unit = dilate_z(1.0 / gauge_z(raw), raw)
        pts = dilate_z(rng.uniform(region.inner, region.outer, size=plan.count), unit)
        return compose_z(region.center.as_array(), pts)
    raise TypeError(f"cannot sample {type(region).__name__}")


def boundary_points(region, count: int, seed: int = 0) -> np.ndarray:
    """Points on the topological boundary of a box or gauge ball."""
    rng = np.random.default_rng(seed)
    if isinstance(region, Box):
        d = region.lower.size
        pts = rng.uniform(region.lower, region.upper, size=(count, d))
        axis = rng.integers(0, d, size=count)
        side = rng.integers(0, 2, size=count)
        pts[np.arange(count), axis] = np.where(side == 1, region.upper[axis], region.lower[axis])
        return pts
    if isinstance(region, GaugeBall):
        n = region.n
        raw = rng.standard_normal((count, 2 * n + 1))
        unit = dilate_z(1.0 / gauge_z(raw), raw)
        return compose_z(region.center.as_array(), dilate_z(region.radius, unit))
    raise TypeError(f"cannot take the boundary of {type(region).__name__}")
