import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from hs2 import fields as F
from hs2.convexity import (AsymmetricMatrixError, LemmaStatus, SymMatrix, Verdict, monotonicity_check, check_lemma,
                           classify, lemma_partial_s, pointwise_flags, sample_sigma2_cone, sigma2, sigma2_eigen,
                           sigma2_gradient_fd, sigma2_gradient_matrix, sigma2_horizontal, sigma2_minors)
from hs2.group import Box, GaugeAnnulus, GaugeBall, Point
from hs2.horizontal import jet_arrays
from hs2.quadrature import SamplePlan

sys.path.insert(0, str(Path(__file__).parent))
import oracles  # noqa: E402


def test_sigma2_examples():
    assert sigma2(np.diag([1.0, 2.0, 3.0])) == pytest.approx(11)
    for n in (1, 2, 3):
        assert sigma2(2 * np.eye(2 * n)) == pytest.approx(4 * n * (2 * n - 1))
    assert sigma2(np.zeros((4, 4))) == 0
    assert sigma2(SymMatrix(np.diag([1.0, 2.0, 3.0]))) == pytest.approx(11)


@pytest.mark.parametrize("dim", [2, 4, 6])
def test_sigma2_routes_agree(dim):
    rng = np.random.default_rng(dim)
    G = rng.normal(size=(300, dim, dim))
    A = G + np.swapaxes(G, -1, -2)
    a, b, c = sigma2(A), sigma2_minors(A), sigma2_eigen(A)
    scale = np.maximum(np.abs(a), np.sum(A * A, axis=(-1, -2)))
    assert np.all(np.abs(a - b) <= 1e-10 * scale)
    assert np.all(np.abs(a - c) <= 1e-10 * scale)
    ref = np.array([oracles.sigma2_bruteforce(M) for M in A[:30]])
    assert np.allclose(c[:30], ref, rtol=1e-10, atol=1e-10 * scale[:30].max())


def test_symmetry_validation():
    with pytest.raises(AsymmetricMatrixError):
        sigma2(np.array([[1.0, 2.0], [0.0, 1.0]]))
    with pytest.raises(AsymmetricMatrixError):
        SymMatrix(np.array([[1.0, np.nan], [np.nan, 1.0]]))
    with pytest.raises(AsymmetricMatrixError):
        SymMatrix(np.ones((2, 3)))


def test_sigma2_horizontal_examples():
    p = np.array([0.3, 0.2, -0.5])
    assert sigma2_horizontal(F.sq_field(1), p) == pytest.approx(4)
    assert sigma2_horizontal(F.t_field(1), p) == pytest.approx(0, abs=1e-14)
    x1sq = F.Polynomial(1, [[2, 0, 0]], [1.0])
    assert sigma2_horizontal(x1sq, p) == pytest.approx(0, abs=1e-14)
    u = F.Polynomial.random(2, 3, np.random.default_rng(0))
    z = np.random.default_rng(1).normal(size=(20, 5))
    assert np.allclose(sigma2_horizontal(u, z), sigma2(jet_arrays(u, z)[3]), atol=1e-10)


def test_gradient_matrix_examples():
    assert np.allclose(sigma2_gradient_matrix(np.diag([2.0, 1.0, 0.0])), np.diag([1.0, 2.0, 3.0]))
    assert np.allclose(sigma2_gradient_matrix(np.zeros((3, 3))), 0)


def test_gradient_matrix_fd():
    rng = np.random.default_rng(3)
    for _ in range(100):
        k = int(rng.integers(2, 7))
        G = rng.normal(size=(k, k))
        A = G + G.T
        assert np.max(np.abs(sigma2_gradient_matrix(A) - sigma2_gradient_fd(A))) <= 1e-6


def test_partial_derivative_examples():
    assert np.allclose(lemma_partial_s([2.0, 1.0, 0.0]), [1, 2, 3])
    assert np.allclose(lemma_partial_s([1.0, 1.0]), [1, 1])
    chk = check_lemma([3.0, -1.0])
    assert np.allclose(chk.partials, [-1, 3])
    assert chk.status is LemmaStatus.NOT_APPLICABLE
    assert check_lemma([2.0, 1.0, 0.0]).status is LemmaStatus.HOLDS


@settings(max_examples=500, deadline=None)
@given(arrays(np.float64, st.integers(1, 8), elements=st.floats(-100, 100, allow_nan=False)))
def test_partial_derivative_nonnegative_on_cone(lam):
    chk = check_lemma(lam)
    if chk.status is not LemmaStatus.NOT_APPLICABLE:
        # the partials are exact sums; tolerance covers rounding in Σλ − λ_j
        assert np.all(chk.partials >= -1e-12 * (1 + np.abs(lam).sum()))


def test_monotonicity_and_rejection_sampler():
    rng = np.random.default_rng(0)
    A, drawn = sample_sigma2_cone(rng, 4, 200)
    assert A.shape == (200, 4, 4) and drawn >= 200
    assert np.all(sigma2(A) >= 0) and np.all(np.trace(A, axis1=1, axis2=2) >= 0)
    rep = monotonicity_check(400, seed=1, dims=(2, 3, 5))
    assert rep.pass_ and rep.accepted_samples == 400
    assert rep.min_psd_eigenvalue >= -1e-10 and rep.min_delta_margin >= -1e-10


def test_monotonicity_check_is_seed_deterministic():
    a = monotonicity_check(200, seed=5).as_dict()
    b = monotonicity_check(200, seed=5).as_dict()
    assert a == b


def test_sigma2_monotone_along_psd_directions():
    # the proposition says M = ∂σ₂/∂A is PSD on the cone, so σ₂(A + τxxᵀ) is nondecreasing in τ ≥ 0
    rng = np.random.default_rng(6)
    A, _ = sample_sigma2_cone(rng, 4, 100)
    x = rng.normal(size=(100, 4))
    C = x[:, :, None] * x[:, None, :]
    base = sigma2(A)
    for tau in (1e-3, 1e-1, 1.0):
        assert np.all(sigma2(A + tau * C) >= base - 1e-12)


# classification ----------------------------------------------------------

def test_classify_sq_plus_t():
    u = F.sq_field(1) + 0.01 * F.t_field(1)
    rep = classify(u, GaugeBall(Point.identity(1), 1.0), SamplePlan(count=500))
    assert rep.verdict is Verdict.H_CONVEX and rep.failing_points == []


def test_classify_negative_sq():
    rep = classify(-1.0 * F.sq_field(1), Box.unit(1), SamplePlan(count=200))
    assert rep.verdict is Verdict.NEITHER
    assert rep.min_trace < 0 and rep.failing_count == 200


def test_classify_sigma2_only():
    # diag(3, 3, 3, −1) type: σ₂ > 0 and trace > 0 but not PSD
    A = np.diag([3.0, 3.0, 3.0, -1.0])
    u = F.quadratic_form_field(0.5 * A)
    rep = classify(u, GaugeBall(Point.identity(2), 1.0), SamplePlan(count=100))
    assert rep.verdict is Verdict.SIGMA2_CONVEX_ONLY
    assert rep.failing_count == 100 and len(rep.failing_points) == 50
    assert rep.min_eigenvalue == pytest.approx(-1.0)


@pytest.mark.parametrize("n", [1, 2])
def test_gauge_is_h_convex_but_not_convex(n):
    rep = classify(F.gauge_field(n), GaugeAnnulus(Point.identity(n), 0.5, 1.5), SamplePlan(count=3000, seed=2),
                   euclidean=True)
    assert rep.verdict is Verdict.H_CONVEX
    assert rep.min_euclidean_eigenvalue <= -1e-3


def test_pointwise_flags_consistency():
    rng = np.random.default_rng(4)
    G = rng.normal(size=(5000, 4, 4))
    H = G + np.swapaxes(G, -1, -2)
    psd, s2, *_ = pointwise_flags(H)
    assert not np.any(psd & ~s2)


def test_h_convex_implies_sigma2_convex_pointwise():
    rng = np.random.default_rng(5)
    L = rng.normal(size=(2000, 4, 3))
    H = L @ np.swapaxes(L, -1, -2)  # PSD, rank ≤ 3
    assert np.all(sigma2(H) >= -1e-12) and np.all(np.trace(H, axis1=1, axis2=2) >= 0)
