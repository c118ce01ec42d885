"""Group mollification u_ε(ξ) = Σ_k ω_k u(η_k∘ξ).

The kernel is a discrete symmetric probability measure on the anisotropic
box [−ε, ε]^{2n} × [−ε², ε²] (product Gauss–Legendre nodes, product-bump
weights). Because each term is a left translate of u, 𝓗(u_ε) is a convex
combination of translates of 𝓗(u): 𝓗-convexity and σ₂(𝓗)-convexity pass
to u_ε exactly, and affine functions are reproduced.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np

from .fields import ScalarField, as_coords
from .gridio import GridSamples
from .group import compose_z, dilate_z
from .horizontal import fd_certificate, jet_arrays

DEFAULT_NODES = 6


@lru_cache(maxsize=None)
def kernel_template(n: int, nodes: int = DEFAULT_NODES) -> tuple[np.ndarray, np.ndarray]:
    """Unit-scale nodes in [−1, 1]^{2n+1} and normalized weights."""
    if nodes < 2 or nodes % 2:
        raise ValueError("use an even number of nodes per axis (keeps η = 0 out of the stencil)")
    g, w = np.polynomial.legendre.leggauss(nodes)
    w = w * np.exp(-1.0 / (1.0 - g * g))
    d = 2 * n + 1
    pts = np.stack(np.meshgrid(*[g] * d, indexing="ij"), axis=-1).reshape(-1, d)
    wts = np.prod(np.stack(np.meshgrid(*[w] * d, indexing="ij"), axis=-1).reshape(-1, d), axis=-1)
    return pts, wts / wts.sum()


class MollifiedField(ScalarField):
    def __init__(self, base: ScalarField, eps: float, nodes: int = DEFAULT_NODES, chunk: int = 200000):
        if not eps > 0:
            raise ValueError(f"eps must be positive, got {eps}")
        self.base, self.eps = base, float(eps)
        unit, self.weights = kernel_template(base.n, nodes)
        self.nodes = dilate_z(self.eps, unit)
        n = base.n
        K = self.nodes.shape[0]
        # Jacobians of ξ ↦ η_k∘ξ
        J = np.broadcast_to(np.eye(2 * n + 1), (K, 2 * n + 1, 2 * n + 1)).copy()
        J[:, 2 * n, :n] = 2.0 * self.nodes[:, n:2 * n]
        J[:, 2 * n, n:2 * n] = -2.0 * self.nodes[:, :n]
        self._J = J
        self._chunk = max(chunk // K, 1)

        super().__init__(n, self._val, self._grad if base.exact else None,
                         self._hess if base.exact else None, base.fd_step,
                         f"{base.name}*eps{eps:g}")

    def _apply(self, z, fn):
        z = as_coords(z, self.n)
        lead = z.shape[:-1]
        flat = z.reshape(-1, z.shape[-1])
        parts = []
        for s in range(0, flat.shape[0], self._chunk):
            pts = compose_z(self.nodes[:, None, :], flat[None, s:s + self._chunk, :])
            parts.append(fn(pts))
        out = np.concatenate(parts, axis=0) if parts else np.zeros((0,))
        return out.reshape(lead + out.shape[1:])

    def _val(self, z):
        return self._apply(z, lambda p: np.einsum("k,kn->n", self.weights, self.base.value(p)))

    def _grad(self, z):
        return self._apply(z, lambda p: np.einsum("k,kni,kij->nj", self.weights, self.base.gradient(p), self._J))

    def _hess(self, z):
        return self._apply(z, lambda p: np.einsum("k,kai,knab,kbj->nij", self.weights, self._J,
                                                  self.base.hessian(p), self._J))

    def certificate(self, z) -> float:
        """Max discrepancy between exact and FD jets (exact bases), or between FD at h and h/2."""
        if self.exact:
            return fd_certificate(self, z)
        a = jet_arrays(self, z, "fd", self.fd_step)
        b = jet_arrays(self, z, "fd", self.fd_step / 2)
        return float(max(np.max(np.abs(x - y)) for x, y in zip(a[1:], b[1:])))


def mollify(source, eps: float, nodes: int = DEFAULT_NODES) -> MollifiedField:
    """Mollify a ScalarField or GridSamples at scale ε.

    Grid input is first interpolated by a C² cubic spline; each grid step
    must resolve the kernel, i.e. be at most a quarter of its width on that
    axis (ε horizontally, ε² vertically).
    """
    if isinstance(source, GridSamples):
        width = np.full(source.step.size, float(eps))
        width[-1] = float(eps) ** 2
        if np.any(source.step > width / 4):
            raise ValueError(f"eps={eps:g} is below the grid resolution (step must be <= kernel width/4)")
        source = source.to_field()
    return MollifiedField(source, eps, nodes)
