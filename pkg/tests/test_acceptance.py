"""Acceptance gate: one group of tests per criterion, summarized at the end of the run."""
import json
import subprocess
import sys

import numpy as np
import pytest

from hs2 import fields as F
from hs2.barrier import Barrier, sigma2_constant
from hs2.cli import main
from hs2.convexity import Verdict, monotonicity_check, classify, random_symmetric, sigma2, sigma2_eigen, sigma2_minors
from hs2.group import Box, GaugeAnnulus, GaugeBall, Point, compose_z, dilate_z, distance_z, inverse_z
from hs2.horizontal import commutator_matrix, jet_arrays, taylor_decay
from hs2.measures import (TestFunction, admissible_pair, compare_pair, CompareVerdict, geometric_schedule,
                          kinked_approximant, kinked_reference, measure_of_region, oscillation_bound_check,
                          ut_l2_monitor, weak_convergence_test)
from hs2.quadrature import SamplePlan
from hs2.smoothmax import SmoothMax, alpha, compose_convex, smooth_max

criterion = pytest.mark.criterion


# 1 -------------------------------------------------------------------------

@criterion(1, "commutator structure of exact jets; FD order >= 1.9")
@pytest.mark.parametrize("n", [1, 2, 3])
def test_commutators(n):
    rng = np.random.default_rng(100 + n)
    S = commutator_matrix(n)
    worst = 0.0
    for _ in range(200):
        poly = F.Polynomial.random(n, 4, rng)
        z = rng.uniform(-1, 1, size=(1, 2 * n + 1))
        _, _, X2u, _, ut = jet_arrays(poly, z, "exact")
        D = X2u - np.swapaxes(X2u, -1, -2)
        worst = max(worst, float(np.max(np.abs(D + 4.0 * ut[:, None, None] * S))))
    assert worst <= 1e-8


@criterion(1, "commutator structure of exact jets; FD order >= 1.9")
@pytest.mark.parametrize("n", [1, 2, 3])
def test_fd_order(n):
    rng = np.random.default_rng(200 + n)
    orders = []
    for _ in range(10):
        poly = F.Polynomial.random(n, 4, rng)
        z = rng.uniform(-1, 1, size=(4, 2 * n + 1))
        _, Xu_e, X2u_e, _, ut_e = jet_arrays(poly, z, "exact")
        errs = []
        for h in (2e-2, 1e-2):
            _, Xu, X2u, _, ut = jet_arrays(poly, z, "fd", fd_step=h)
            errs.append(max(np.max(np.abs(Xu - Xu_e)), np.max(np.abs(X2u - X2u_e)), np.max(np.abs(ut - ut_e))))
        orders.append(np.log2(errs[0] / errs[1]))
    assert min(orders) >= 1.9


# 2 -------------------------------------------------------------------------

@criterion(2, "group axioms and metric homogeneity")
@pytest.mark.parametrize("n", [1, 2, 3])
def test_group_axioms(n):
    rng = np.random.default_rng(300 + n)
    a, b, c, w = (rng.normal(size=(1000, 2 * n + 1)) for _ in range(4))
    lam = rng.uniform(0.1, 10, size=1000)

    def close(p, q):
        return np.max(np.abs(p - q) / (1 + np.abs(q))) <= 1e-12

    assert close(compose_z(compose_z(a, b), c), compose_z(a, compose_z(b, c)))
    assert close(inverse_z(compose_z(a, b)), compose_z(inverse_z(b), inverse_z(a)))
    d = distance_z(a, b)
    assert np.max(np.abs(distance_z(compose_z(w, a), compose_z(w, b)) - d) / d) <= 1e-12
    assert np.max(np.abs(distance_z(dilate_z(lam, a), dilate_z(lam, b)) - lam * d) / (lam * d)) <= 1e-12


# 3 -------------------------------------------------------------------------

@criterion(3, "three sigma2 formulas agree")
@pytest.mark.parametrize("dim", [2, 4, 6])
def test_sigma2_formulas(dim):
    A = random_symmetric(np.random.default_rng(400 + dim), dim, 1000)
    scale = np.maximum(np.abs(sigma2(A)), np.sum(A * A, axis=(-1, -2)))
    ref = sigma2(A)
    assert np.max(np.abs(sigma2_minors(A) - ref) / scale) <= 1e-10
    assert np.max(np.abs(sigma2_eigen(A) - ref) / scale) <= 1e-10


# 4 -------------------------------------------------------------------------

@criterion(4, "monotonicity of sigma2 on the sigma2 cone")
def test_sigma2_monotonicity():
    rep = monotonicity_check(samples=1000, seed=42)
    assert rep.accepted_samples == 1000
    assert rep.min_psd_eigenvalue >= -1e-10
    assert rep.min_partial >= -1e-12
    assert rep.max_fd_error <= 1e-6
    assert rep.lemma_violations == 0 and rep.pass_


# 5 -------------------------------------------------------------------------

@criterion(5, "gauge is H-convex on an annulus but not Euclidean convex")
@pytest.mark.parametrize("n", [1, 2])
def test_gauge_h_convex(n):
    rep = classify(F.gauge_field(n), GaugeAnnulus(Point.identity(n), 0.5, 1.5),
                   SamplePlan(count=10_000, seed=n), euclidean=True)
    assert rep.verdict is Verdict.H_CONVEX
    assert rep.min_euclidean_eigenvalue <= -1e-3


# 6 -------------------------------------------------------------------------

@criterion(6, "measures of t and |x|^2+|y|^2 on the unit box; additivity")
@pytest.mark.parametrize("n", [1, 2])
def test_flagship_measures(n):
    box = Box.unit(n)
    assert abs(measure_of_region(F.t_field(n), box, 4).value - 12 * n) <= 1e-9
    assert abs(measure_of_region(F.sq_field(n), box, 4).value - 4 * n * (2 * n - 1)) <= 1e-9
    for field in (F.t_field(n), F.sq_field(n)):
        whole = measure_of_region(field, box, 4).value
        for axis in range(2 * n + 1):
            left, right = box.split(axis)
            parts = measure_of_region(field, left, 2).value + measure_of_region(field, right, 2).value
            assert abs(parts - whole) <= 1e-9


# 7 -------------------------------------------------------------------------

@criterion(7, "comparison principle on 20 constructed pairs per n")
@pytest.mark.parametrize("n,resolution", [(1, 12), (2, 8)])
def test_comparison_principle(n, resolution):
    rng = np.random.default_rng(700 + n)
    failures = []
    for k in range(20):
        p = admissible_pair(n, rng)
        r = compare_pair(p.u, p.v, p.region, resolution, seed=k)
        if r.verdict is not CompareVerdict.PASS:
            failures.append((k, r.verdict.value, r.failures))
    assert not failures


# 8 -------------------------------------------------------------------------

def _barriers(n, count=100):
    rng = np.random.default_rng(800 + n)
    v = Barrier(Point.from_array(0.3 * rng.normal(size=2 * n + 1)), 1.1, 0.6, -1.3)
    zh = compose_z(v.center.as_array(), 0.8 * rng.uniform(-1, 1, size=(count, 2 * n + 1)))
    return v, zh


@criterion("8a", "barrier trace formula with coefficient 8n+4")
@pytest.mark.parametrize("n", [1, 2])
def test_barrier_trace(n):
    v, z = _barriers(n)
    H = jet_arrays(v, z)[3]
    w = compose_z(-v.center.as_array(), z)
    s = np.sum(w[:, :2 * n] ** 2, axis=-1)
    stated = -(8 * n + 4) * s * v.m0 / ((1 - v.sigma ** 4) * v.R ** 4)
    assert np.max(np.abs(np.trace(H, axis1=1, axis2=2) - stated)) <= 1e-9


@criterion("8b", "sigma2 of the barrier is c_n s^2 K^2")
@pytest.mark.parametrize("n", [1, 2, 3])
def test_barrier_sigma2(n):
    v, z = _barriers(n)
    H = jet_arrays(v, z)[3]
    w = compose_z(-v.center.as_array(), z)
    s = np.sum(w[:, :2 * n] ** 2, axis=-1)
    ratio = sigma2(H) / (s ** 2 * v.K ** 2)
    assert np.max(np.abs(ratio / sigma2_constant(n) - 1)) <= 1e-8


# 9 -------------------------------------------------------------------------

def _oscillation_family(n):
    o = Point.identity(n)
    lin = F.Polynomial(n, np.eye(2 * n + 1, dtype=int).tolist(), np.linspace(0.2, -0.3, 2 * n + 1))
    fam = [F.sq_field(n), F.gauge4_field(n), F.gauge4_field(n) + lin, 0.5 * F.sq_field(n) + F.gauge4_field(n),
           Barrier(o, 1.0, 0.5, -1.0), Barrier(o, 1.5, 0.4, -0.3) + lin,
           compose_convex(SmoothMax(0.2), F.sq_field(n), F.sq_field(n) + F.t_field(n))]
    return fam


@criterion(9, "oscillation ratios bounded and scale invariant")
@pytest.mark.parametrize("n,resolution", [(1, 10), (2, 6)])
def test_oscillation_family(n, resolution):
    o = Point.identity(n)
    worst_measure, worst_trace = 0.0, 0.0
    for u in _oscillation_family(n):
        outer, inner = GaugeBall(o, 1.0), GaugeBall(o, 0.5)
        base = oscillation_bound_check(u, outer, inner, resolution)
        assert base.within_bounds, u.name
        worst_measure = max(worst_measure, base.measure_ratio / base.measure_bound)
        worst_trace = max(worst_trace, base.trace_ratio / base.trace_bound)
        for lam in (0.1, 10.0):
            r = oscillation_bound_check(lam * u, outer, inner, resolution, check_convexity=False)
            assert r.measure_ratio == pytest.approx(base.measure_ratio, rel=1e-6)
            assert r.trace_ratio == pytest.approx(base.trace_ratio, rel=1e-6)
        lam = 2.5
        r = oscillation_bound_check(F.dilate_field(u, lam), GaugeBall(o, 1 / lam), GaugeBall(o, 0.5 / lam),
                                    resolution, check_convexity=False)
        assert r.measure_ratio == pytest.approx(base.measure_ratio, rel=1e-6)
        assert r.trace_ratio == pytest.approx(base.trace_ratio, rel=1e-6)
    print(f"n={n}: max measure ratio / bound = {worst_measure:.3g}, max trace ratio / bound = {worst_trace:.3g}")


# 10 ------------------------------------------------------------------------

@criterion(10, "smooth max identities and convexity of compositions")
def test_smooth_max_identities():
    rng = np.random.default_rng(1000)
    for _ in range(200):
        a, h = rng.normal(), rng.uniform(0.01, 2)
        b = a + rng.choice([-1, 1]) * (2 * h + rng.uniform(1e-6, 3))
        assert abs(smooth_max(a, b, h) - max(a, b)) <= 1e-10
        assert abs(smooth_max(a, a, h) - (a + alpha() * h)) <= 1e-10


@criterion(10, "smooth max identities and convexity of compositions")
@pytest.mark.parametrize("case", ["kinked", "barriers", "sigma2_only"])
def test_composed_fields_convex(case):
    if case == "kinked":
        n, u1, u2 = 1, F.sq_field(1), F.sq_field(1) + F.t_field(1)
    elif case == "barriers":
        n = 1
        u1 = Barrier(Point.identity(1), 1.0, 0.5, -1.0)
        u2 = F.left_translate(F.gauge4_field(1), np.array([0.2, 0.0, 0.1])) + F.constant(1, -0.8)
    else:
        n = 2
        u1 = F.Polynomial(2, [[2, 0, 0, 0, 0], [0, 2, 0, 0, 0], [0, 0, 2, 0, 0], [0, 0, 0, 2, 0]],
                          [1.0, 1.0, 1.0, -0.3])
        u2 = F.sq_field(2) + 0.5 * F.t_field(2)
    dom = GaugeBall(Point.identity(n), 1.0)
    for h in (0.3, 0.05):
        rep = classify(compose_convex(SmoothMax(h), u1, u2), dom, SamplePlan(count=1000, seed=10))
        assert rep.verdict in (Verdict.H_CONVEX, Verdict.SIGMA2_CONVEX_ONLY)
    if case == "sigma2_only":
        assert rep.verdict is Verdict.SIGMA2_CONVEX_ONLY


# 11 ------------------------------------------------------------------------

EPS_STAR = 0.05


@criterion(11, "weak convergence of the measures under smoothing")
def test_weak_convergence_smooth():
    u = F.gauge4_field(1) + F.sq_field(1)
    f = TestFunction(np.array([0.1, -0.1, 0.05]), np.array([0.5, 0.5, 0.5]))
    tab = weak_convergence_test(u, geometric_schedule(EPS_STAR, 3), f, Box.cube(1, -1, 1), 16)
    for d, e in zip(tab.discrepancies, tab.errors):
        assert d <= e + tab.reference_error


@criterion(11, "weak convergence of the measures under smoothing")
def test_weak_convergence_kinked():
    n, c = 1, 1.0
    f = TestFunction(np.zeros(3), np.full(3, 0.5))
    ref = kinked_reference(n, c, f)
    tab = weak_convergence_test(None, geometric_schedule(0.2, 5), f, Box.cube(1, -1, 1), (24, 24, 400),
                                approximant=kinked_approximant(n, c), reference=ref)
    print("kinked discrepancies:", [f"{d:.4g}" for d in tab.discrepancies])
    assert tab.non_increasing(slack=0.1)


# 12 ------------------------------------------------------------------------

@criterion("12a", "Taylor remainder of rho^4 at the origin decays by 1.3..3 per halving")
def test_taylor_decay_gauge4():
    vals = taylor_decay(F.gauge4_field(1), np.zeros(3), (0.2, 0.1, 0.05, 0.025))
    factors = [a / b for a, b in zip(vals, vals[1:])]
    print("decay factors:", factors)
    assert all(1.3 <= q <= 3.0 for q in factors)


@criterion("12b", "weighted degree <= 2 polynomials are their own Taylor polynomial")
@pytest.mark.parametrize("n", [1, 2])
def test_taylor_exact_for_weighted_quadratics(n):
    rng = np.random.default_rng(1200 + n)
    d = 2 * n + 1
    exps = [[0] * d]
    for i in range(d):
        e = [0] * d
        e[i] = 1
        exps.append(e)
    for i in range(2 * n):
        for j in range(i, 2 * n):
            e = [0] * d
            e[i] += 1
            e[j] += 1
            exps.append(e)
    for _ in range(5):
        u = F.Polynomial(n, exps, rng.normal(size=len(exps)))
        p0 = rng.normal(size=d)
        fine = taylor_decay(u, p0, (0.2, 0.1, 0.05, 0.025), resolution=12)
        coarse = taylor_decay(u, p0, (0.2, 0.1, 0.05, 0.025), resolution=6)
        scale = 1 + np.max(np.abs(u.coeffs)) * (1 + np.max(np.abs(p0))) ** 2
        for a, b, r in zip(fine, coarse, (0.2, 0.1, 0.05, 0.025)):
            assert a <= abs(a - b) + 1e-13 * scale / r ** 2


# 13 ------------------------------------------------------------------------

@criterion(13, "L2 norm of the t-derivative stays under one bound as eps shrinks")
def test_ut_l2_bound():
    tab = ut_l2_monitor(F.gauge_field(1), geometric_schedule(0.2, 5), GaugeBall(Point.identity(1), 1.0), 0.5)
    print("norms:", [f"{v:.4g}" for v in tab.l2_norms], "bound:", f"{tab.bound:.4g}")
    assert tab.within_bound


# 14 ------------------------------------------------------------------------

CAMPAIGN = """\
[campaign]
n = 1
seed = 42

[[scenario]]
kind = "appendix"
samples = 1000

[[scenario]]
kind = "measure"
field = "t"
domain = "box:0,1"
resolution = 4
expect = 12.0

[[scenario]]
kind = "compare"
pairs = 4
resolution = 8

[[scenario]]
kind = "oscillation"
fields = ["sq", "gauge4"]
resolution = 8
"""


def _hs2(*args):
    return subprocess.run([sys.executable, "-m", "hs2.cli", *args], capture_output=True, text=True)


@criterion(14, "CLI determinism and exit statuses")
def test_cli_determinism(tmp_path):
    cfg = tmp_path / "campaign.toml"
    cfg.write_text(CAMPAIGN)
    outs = [tmp_path / "a", tmp_path / "b"]
    for out in outs:
        assert _hs2("run", str(cfg), "--out", str(out)).returncode == 0
    files = sorted(p.name for p in outs[0].iterdir())
    assert files == sorted(p.name for p in outs[1].iterdir())
    for name in files:
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()
    a, b = _hs2("run", str(cfg)), _hs2("run", str(cfg))
    assert a.stdout == b.stdout and json.loads(a.stdout)["pass"] is True


@criterion(14, "CLI determinism and exit statuses")
def test_cli_exit_statuses(tmp_path):
    empty = tmp_path / "empty.toml"
    empty.write_text("[campaign]\nn = 1\nscenario = []\n")
    r = _hs2("run", str(empty))
    assert r.returncode == 2 and "usage" in r.stderr
    assert _hs2("measure", "--field", "t", "--domain", "box:0,1", "--resolution", "4", "--expect", "11").returncode == 1
    assert _hs2("appendix", "--samples", "1000", "--seed", "42").returncode == 0
    assert main([]) == 2
