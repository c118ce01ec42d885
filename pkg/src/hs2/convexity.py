"""σ₂ of symmetric matrices, 𝓗- and σ₂(𝓗)-convexity classification, and the
linear algebra behind monotonicity of σ₂ on its convex cone."""
from __future__ import annotations

import enum
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .fields import ScalarField
from .group import Point
from .horizontal import jet_arrays
from .jacobi import eigenvalues
from .quadrature import SamplePlan, sample_points
from .smoothmax import SmoothMax, compose_convex, smooth_max  # noqa: F401  (public re-exports)

SYMMETRY_TOL = 1e-12
CLASSIFY_TOL = 1e-8


class AsymmetricMatrixError(ValueError):
    pass


def as_symmetric(A, tol: float = SYMMETRY_TOL) -> np.ndarray:
    """Validate a (batch of) symmetric matrices and return it as a float array."""
    A = np.asarray(A, dtype=float)
    if A.ndim < 2 or A.shape[-1] != A.shape[-2]:
        raise AsymmetricMatrixError(f"expected square matrices, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise AsymmetricMatrixError("matrix has non-finite entries")
    scale = 1.0 + np.max(np.abs(A), initial=0.0)
    if np.max(np.abs(A - np.swapaxes(A, -1, -2)), initial=0.0) > tol * scale:
        raise AsymmetricMatrixError("matrix is not symmetric")
    return A


@dataclass(frozen=True)
class SymMatrix:
    entries: np.ndarray

    def __post_init__(self):
        A = as_symmetric(self.entries)
        if A.ndim != 2:
            raise AsymmetricMatrixError("SymMatrix holds a single matrix")
        A = A.copy()
        A.flags.writeable = False
        object.__setattr__(self, "entries", A)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)


def _arr(A) -> np.ndarray:
    return A.entries if isinstance(A, SymMatrix) else as_symmetric(A)


# σ₂ by three routes --------------------------------------------------

def sigma2(A):
    """½((tr A)² − tr(A²)), batched over leading axes."""
    A = _arr(A)
    tr = np.trace(A, axis1=-2, axis2=-1)
    return 0.5 * (tr * tr - np.einsum("...ij,...ji->...", A, A))


def sigma2_minors(A):
    """Σ_{i<j} (a_ii a_jj − a_ij²): sum of the 2×2 principal minors."""
    A = _arr(A)
    out = np.zeros(A.shape[:-2])
    for i, j in combinations(range(A.shape[-1]), 2):
        out = out + A[..., i, i] * A[..., j, j] - A[..., i, j] ** 2
    return out


def sigma2_eigen(A):
    """Σ_{i<j} λ_i λ_j from Jacobi eigenvalues."""
    lam = eigenvalues(_arr(A))
    out = np.zeros(lam.shape[:-1])
    for i, j in combinations(range(lam.shape[-1]), 2):
        out = out + lam[..., i] * lam[..., j]
    return out


def sigma2_horizontal(field: ScalarField, p, mode: str = "auto"):
    """σ₂(𝓗(u)) at p (or a batch of points)."""
    H = jet_arrays(field, p, mode)[3]
    out = sigma2(H)
    return float(out) if np.ndim(out) == 0 else out


# gradient of σ₂ and the appendix lemma --------------------------------

def sigma2_gradient_matrix(A) -> np.ndarray:
    """∂σ₂/∂a_ij = tr(A) δ_ij − a_ji, i.e. tr(A)·I − A for symmetric A."""
    A = _arr(A)
    k = A.shape[-1]
    return np.trace(A, axis1=-2, axis2=-1)[..., None, None] * np.eye(k) - A


def _sigma2_general(A: np.ndarray) -> float:
    return 0.5 * (np.trace(A) ** 2 - np.trace(A @ A))


def sigma2_gradient_fd(A, h: float = 1e-5) -> np.ndarray:
    """Central differences of σ₂ in each entry, treating entries as independent."""
    A = np.array(_arr(A), dtype=float)
    k = A.shape[0]
    M = np.empty((k, k))
    for i in range(k):
        for j in range(k):
            E = np.zeros((k, k))
            E[i, j] = h
            M[i, j] = (_sigma2_general(A + E) - _sigma2_general(A - E)) / (2 * h)
    return M


def lemma_partial_s(lam) -> np.ndarray:
    """∂s/∂λ_j = Σ_{k≠j} λ_k."""
    lam = np.asarray(lam, dtype=float)
    return lam.sum(axis=-1, keepdims=True) - lam


class LemmaStatus(enum.Enum):
    HOLDS = "HOLDS"
    VIOLATED = "VIOLATED"
    NOT_APPLICABLE = "NOT_APPLICABLE"


@dataclass(frozen=True)
class LemmaCheck:
    partials: np.ndarray
    s: float
    trace: float
    status: LemmaStatus


def check_lemma(lam, tol: float = 1e-12) -> LemmaCheck:
    """Evaluate the partials and whether s ≥ 0, Σλ ≥ 0 implies they are all nonnegative."""
    lam = np.asarray(lam, dtype=float)
    d = lemma_partial_s(lam)
    s = 0.5 * (lam.sum() ** 2 - np.sum(lam ** 2))
    tr = float(lam.sum())
    if s < 0 or tr < 0:
        status = LemmaStatus.NOT_APPLICABLE
    else:
        status = LemmaStatus.HOLDS if np.all(d >= -tol) else LemmaStatus.VIOLATED
    return LemmaCheck(d, float(s), tr, status)


def random_symmetric(rng: np.random.Generator, dim: int, size: int | None = None) -> np.ndarray:
    shape = (dim, dim) if size is None else (size, dim, dim)
    G = rng.standard_normal(shape)
    return 0.5 * (G + np.swapaxes(G, -1, -2))


def sample_sigma2_cone(rng: np.random.Generator, dim: int, count: int, batch: int = 4096):
    """Rejection-sample symmetric Gaussian matrices with σ₂ ≥ 0 and trace ≥ 0.

    Returns (matrices, number drawn).
    """
    kept, drawn, have = [], 0, 0
    while have < count:
        A = random_symmetric(rng, dim, batch)
        drawn += batch
        ok = (sigma2(A) >= 0) & (np.trace(A, axis1=-2, axis2=-1) >= 0)
        kept.append(A[ok])
        have += int(ok.sum())
    return np.concatenate(kept)[:count], drawn


@dataclass
class MonotonicityReport:
    accepted_samples: int
    drawn_samples: int
    dims: tuple
    min_psd_eigenvalue: float
    min_partial: float
    min_delta_margin: float
    max_fd_error: float
    fd_samples: int
    lemma_violations: int
    pass_: bool

    def as_dict(self) -> dict:
        return {
            "accepted_samples": self.accepted_samples,
            "drawn_samples": self.drawn_samples,
            "acceptance_rate": self.accepted_samples / self.drawn_samples if self.drawn_samples else 0.0,
            "dims": list(self.dims),
            "min_psd_eigenvalue": self.min_psd_eigenvalue,
            "min_partial": self.min_partial,
            "min_delta_margin": self.min_delta_margin,
            "max_fd_error": self.max_fd_error,
            "fd_samples": self.fd_samples,
            "lemma_violations": self.lemma_violations,
            "pass": self.pass_,
        }


def monotonicity_check(samples: int = 1000, seed: int = 42, dims=(2, 3, 4, 6), fd_samples: int = 100,
                   psd_tol: float = 1e-10, partial_tol: float = 1e-12, fd_tol: float = 1e-6) -> MonotonicityReport:
    """Monotonicity of σ₂ on {σ₂ ≥ 0, tr ≥ 0}, checked on rejection-sampled matrices.

    For each accepted A: the eigenvalues of tr(A)I − A are ≥ −psd_tol, each
    ∂s/∂λ_j ≥ −partial_tol, and xᵀMx ≥ δ|x|² with δ = ½ min_j ∂s/∂λ_j
    (tested through the smallest eigenvalue of M). The closed-form gradient
    matrix is compared with central differences on the first fd_samples matrices.
    """
    rng = np.random.default_rng(seed)
    dims = tuple(int(d) for d in dims)
    per = [samples // len(dims) + (1 if k < samples % len(dims) else 0) for k in range(len(dims))]
    min_psd, min_partial, min_margin, fd_err = np.inf, np.inf, np.inf, 0.0
    drawn_total, accepted, violations, fd_done = 0, 0, 0, 0
    for dim, count in zip(dims, per):
        if count == 0:
            continue
        A, drawn = sample_sigma2_cone(rng, dim, count)
        drawn_total += drawn
        accepted += A.shape[0]
        M = sigma2_gradient_matrix(A)
        mu = eigenvalues(M)
        lam = eigenvalues(A)
        d = lemma_partial_s(lam)
        delta = 0.5 * d.min(axis=-1)
        min_psd = min(min_psd, float(mu.min()))
        min_partial = min(min_partial, float(d.min()))
        min_margin = min(min_margin, float(np.min(mu[:, 0] - delta)))
        violations += int(np.sum(np.any(d < -partial_tol, axis=-1)))
        take = min(A.shape[0], max(fd_samples - fd_done, 0))
        for k in range(take):
            fd_err = max(fd_err, float(np.max(np.abs(M[k] - sigma2_gradient_fd(A[k])))))
        fd_done += take
    ok = accepted == samples and min_psd >= -psd_tol and violations == 0 and min_margin >= -psd_tol and fd_err <= fd_tol
    return MonotonicityReport(accepted, drawn_total, dims, min_psd, min_partial, min_margin, fd_err,
                          fd_done, violations, bool(ok))


# classification --------------------------------------------------------

class Verdict(enum.Enum):
    H_CONVEX = "H_CONVEX"
    SIGMA2_CONVEX_ONLY = "SIGMA2_CONVEX_ONLY"
    NEITHER = "NEITHER"


MAX_REPORTED_POINTS = 50


@dataclass
class ConvexityReport:
    samples: int
    min_eigenvalue: float
    min_trace: float
    min_sigma2: float
    failing_points: list
    verdict: Verdict
    failing_count: int = 0
    tolerance: float = CLASSIFY_TOL
    min_euclidean_eigenvalue: float | None = None

    def as_dict(self) -> dict:
        out = {
            "samples": self.samples,
            "min_eigenvalue": self.min_eigenvalue,
            "min_trace": self.min_trace,
            "min_sigma2": self.min_sigma2,
            "verdict": self.verdict.value,
            "failing_count": self.failing_count,
            "failing_points": [p.as_array().tolist() for p in self.failing_points],
            "tolerance": self.tolerance,
        }
        if self.min_euclidean_eigenvalue is not None:
            out["min_euclidean_eigenvalue"] = self.min_euclidean_eigenvalue
        return out


def pointwise_flags(H: np.ndarray, tol: float = CLASSIFY_TOL):
    """Per-matrix (psd_ok, sigma2_ok, λ_min, trace, σ₂) with scale-aware tolerances.

    The trace and σ₂ tolerances are the ones implied by a PSD tolerance of
    tol·(1+‖A‖), so that the PSD test passing forces the σ₂ test to pass.
    """
    H = np.asarray(H, dtype=float)
    k = H.shape[-1]
    lam = eigenvalues(H)
    norm = np.max(np.abs(lam), axis=-1)
    scale = 1.0 + norm
    tr = np.trace(H, axis1=-2, axis2=-1)
    s2 = sigma2(H)
    psd_ok = lam[..., 0] >= -tol * scale
    s2_ok = (tr >= -k * tol * scale) & (s2 >= -(k * k) * tol * scale * scale)
    return psd_ok, s2_ok, lam[..., 0], tr, s2


def euclidean_min_eigenvalue(field: ScalarField, z) -> np.ndarray:
    return eigenvalues(field.hessian(z))[..., 0]


def classify(field: ScalarField, domain, sampler: SamplePlan | None = None, mode: str = "auto",
             tol: float = CLASSIFY_TOL, points=None, euclidean: bool = False,
             chunk: int = 5000) -> ConvexityReport:
    """Classify a field over a sampled domain.

    A point blocks 𝓗-convexity when 𝓗(u) has an eigenvalue below
    −tol(1+‖𝓗‖), and blocks σ₂(𝓗)-convexity when its trace or σ₂ is below
    the matching scaled tolerance. ``failing_points`` holds (up to 50 of)
    the points that prevent the next stronger verdict.
    """
    if points is None:
        points = sample_points(domain, sampler or SamplePlan())
    z = np.asarray(points, dtype=float)
    psd, s2ok, lmin, tr, s2 = [], [], [], [], []
    for start in range(0, z.shape[0], chunk):
        H = jet_arrays(field, z[start:start + chunk], mode)[3]
        a, b, c, d, e = pointwise_flags(H, tol)
        psd.append(a), s2ok.append(b), lmin.append(c), tr.append(d), s2.append(e)
    psd, s2ok = np.concatenate(psd), np.concatenate(s2ok)
    lmin, tr, s2 = np.concatenate(lmin), np.concatenate(tr), np.concatenate(s2)
    if np.any(psd & ~s2ok):
        raise AssertionError("H-convex sample failed the sigma2 test; tolerances are inconsistent")
    if psd.all():
        verdict, bad = Verdict.H_CONVEX, np.zeros(0, dtype=int)
    elif s2ok.all():
        verdict, bad = Verdict.SIGMA2_CONVEX_ONLY, np.flatnonzero(~psd)
    else:
        verdict, bad = Verdict.NEITHER, np.flatnonzero(~s2ok)
    eu = None
    if euclidean:
        if not field.exact:
            raise ValueError("euclidean eigenvalues need exact derivatives")
        eu = float(min(np.min(euclidean_min_eigenvalue(field, z[s:s + chunk]))
                       for s in range(0, z.shape[0], chunk)))
    return ConvexityReport(
        samples=int(z.shape[0]),
        min_eigenvalue=float(lmin.min()),
        min_trace=float(tr.min()),
        min_sigma2=float(s2.min()),
        failing_points=[Point.from_array(z[i]) for i in bad[:MAX_REPORTED_POINTS]],
        verdict=verdict,
        failing_count=int(bad.size),
        tolerance=tol,
        min_euclidean_eigenvalue=eu,
    )


def quadratic_form_c(M: np.ndarray, v: np.ndarray) -> np.ndarray:
    """⟨M v, v⟩ batched."""
    return np.einsum("...i,...ij,...j->...", v, M, v)
