"""Cyclic Jacobi eigensolver for batches of small dense symmetric matrices."""
from __future__ import annotations

import numpy as np

MAX_SWEEPS = 100


class EigenNonConvergence(ArithmeticError):
    pass


def jacobi_eigh(A, tol: float = 1e-15, max_sweeps: int = MAX_SWEEPS):
    """Eigen-decomposition of symmetric A (shape (..., k, k)).

    Returns ascending eigenvalues (..., k) and orthogonal Q with A = Q Λ Qᵀ.
    Every matrix in the batch sees the same rotation sequence, so the result
    does not depend on batch composition.
    """
    A = np.array(A, dtype=float)
    if A.ndim < 2 or A.shape[-1] != A.shape[-2]:
        raise ValueError(f"expected square matrices, got shape {A.shape}")
    batch = A.shape[:-2]
    k = A.shape[-1]
    A = A.reshape((-1, k, k))
    V = np.broadcast_to(np.eye(k), A.shape).copy()
    scale = np.sqrt(np.sum(A * A, axis=(-1, -2)))
    thresh = (tol * np.maximum(scale, np.finfo(float).tiny)) ** 2
    iu = np.triu_indices(k, 1)
    for _ in range(max_sweeps):
        off = np.sum(A[:, iu[0], iu[1]] ** 2, axis=-1)
        if np.all(off <= thresh):
            break
        for p in range(k - 1):
            for q in range(p + 1, k):
                apq = A[:, p, q]
                active = np.abs(apq) > 0.0
                if not np.any(active):
                    continue
                safe = np.where(active, apq, 1.0)
                with np.errstate(over="ignore"):  # tiny apq: θ → ±inf, t → 0 as intended
                    theta = (A[:, q, q] - A[:, p, p]) / (2.0 * safe)
                    t = np.sign(theta) / (np.abs(theta) + np.hypot(theta, 1.0))
                t = np.where(theta == 0.0, 1.0, t)
                t = np.where(active, t, 0.0)
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                cc, ss = c[:, None], s[:, None]
                Ap, Aq = A[:, :, p].copy(), A[:, :, q].copy()
                A[:, :, p] = cc * Ap - ss * Aq
                A[:, :, q] = ss * Ap + cc * Aq
                Rp, Rq = A[:, p, :].copy(), A[:, q, :].copy()
                A[:, p, :] = cc * Rp - ss * Rq
                A[:, q, :] = ss * Rp + cc * Rq
                A[:, p, q] = np.where(active, 0.0, A[:, p, q])
                A[:, q, p] = A[:, p, q]
                Vp, Vq = V[:, :, p].copy(), V[:, :, q].copy()
                V[:, :, p] = cc * Vp - ss * Vq
                V[:, :, q] = ss * Vp + cc * Vq
    else:
        off = np.sum(A[:, iu[0], iu[1]] ** 2, axis=-1)
        if np.any(off > thresh):
            raise EigenNonConvergence(f"Jacobi did not converge in {max_sweeps} sweeps")
    w = np.diagonal(A, axis1=-2, axis2=-1).copy()
    order = np.argsort(w, axis=-1)
    w = np.take_along_axis(w, order, axis=-1)
    V = np.take_along_axis(V, order[:, None, :], axis=-1)
    return w.reshape(batch + (k,)), V.reshape(batch + (k, k))


def eigenvalues(A, tol: float = 1e-15) -> np.ndarray:
    return jacobi_eigh(A, tol)[0]
