"""σ₂(𝓗)-measures μ(u) with density σ₂(𝓗u) + 12n u_t², comparison and oscillation checks,
and weak-convergence experiments."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field as dc_field

import numpy as np

from .barrier import Barrier, max_bump_slope, radial_bump, sigma2_constant, trace_coefficient  # noqa: F401
from .convexity import Verdict, classify, sigma2
from .fields import ScalarField
from .group import Box, GaugeBall, Point, compose_z, gauge_z, inverse_z
from .horizontal import jet_arrays
from .mollify import mollify
from .quadrature import (SamplePlan, boundary_points, coarse_resolution, integrate, region_step,
                         sample_points, unit_ball_moment)
from .smoothmax import SmoothMax, compose_convex


# densities ---------------------------------------------------------------

def measure_density(field: ScalarField, p, mode: str = "auto"):
    """σ₂(𝓗u) + 12 n u_t² at p (or a batch of points)."""
    _, _, _, H, ut = jet_arrays(field, p, mode)
    out = sigma2(H) + 12.0 * field.n * ut * ut
    return float(out) if np.ndim(out) == 0 else out


def trace_density(field: ScalarField, p, mode: str = "auto"):
    H = jet_arrays(field, p, mode)[3]
    out = np.trace(H, axis1=-2, axis2=-1)
    return float(out) if np.ndim(out) == 0 else out


def _describe(region) -> dict:
    return region.describe() if hasattr(region, "describe") else {"kind": type(region).__name__}


@dataclass
class MeasureEstimate:
    """Quadrature value with a Richardson-type error estimate.

    ``resolution`` is the mesh step of the finer rule.
    """

    value: float
    error_estimate: float
    resolution: float
    region: dict
    coarse_value: float = float("nan")

    def as_dict(self) -> dict:
        return {"value": self.value, "error_estimate": self.error_estimate,
                "resolution": self.resolution, "region": self.region}

    def __add__(self, other: "MeasureEstimate") -> "MeasureEstimate":
        return MeasureEstimate(self.value + other.value, self.error_estimate + other.error_estimate,
                               max(self.resolution, other.resolution), {"kind": "union"},
                               self.coarse_value + other.coarse_value)


def integrate_estimate(fn, region, resolution) -> MeasureEstimate:
    """Integrate fn over a Box (midpoint rule, error (Q_h − Q_2h)/3) or GaugeBall
    (spectral product rule, error |Q_N − Q_{N/2}|)."""
    if np.ndim(resolution) == 0 and int(resolution) < 2:
        raise ValueError("resolution too coarse: need at least 2 cells per axis")
    fine = integrate(fn, region, resolution)
    coarse_res = coarse_resolution(resolution)
    if np.all(np.asarray(coarse_res) == np.asarray(resolution)):
        # too few cells to halve: refine instead and report the error of the coarse rule
        finer = tuple(2 * int(r) for r in np.atleast_1d(resolution))
        finer = finer[0] if np.ndim(resolution) == 0 else finer
        other = integrate(fn, region, finer)
    else:
        other = integrate(fn, region, coarse_res)
    diff = abs(fine - other)
    err = diff / 3.0 if isinstance(region, Box) else diff
    if not other == other or not fine == fine:
        raise FloatingPointError("quadrature produced NaN")
    return MeasureEstimate(float(fine), float(err), region_step(region, resolution), _describe(region), float(other))


def measure_of_region(field: ScalarField, region, resolution, mode: str = "auto") -> MeasureEstimate:
    return integrate_estimate(lambda z: measure_density(field, z, mode), region, resolution)


def trace_integral(field: ScalarField, region, resolution, mode: str = "auto") -> MeasureEstimate:
    return integrate_estimate(lambda z: trace_density(field, z, mode), region, resolution)


def ut_square_integral(field: ScalarField, region, resolution, mode: str = "auto") -> MeasureEstimate:
    def fn(z):
        ut = jet_arrays(field, z, mode)[4]
        return ut * ut
    return integrate_estimate(fn, region, resolution)


def sigma2_integral(field: ScalarField, region, resolution, mode: str = "auto") -> MeasureEstimate:
    return integrate_estimate(lambda z: sigma2(jet_arrays(field, z, mode)[3]), region, resolution)


# comparison principle -------------------------------------------------------

class CompareVerdict(enum.Enum):
    PASS = "PASS"
    FAIL = "FAIL"
    PRECONDITION_FAILED = "PRECONDITION_FAILED"


@dataclass
class ComparisonResult:
    verdict: CompareVerdict
    preconditions: dict
    mu_u: MeasureEstimate | None = None
    mu_v: MeasureEstimate | None = None
    trace_u: MeasureEstimate | None = None
    trace_v: MeasureEstimate | None = None
    measure_margin: MeasureEstimate | None = None
    trace_margin: MeasureEstimate | None = None
    failures: list = dc_field(default_factory=list)

    def as_dict(self) -> dict:
        out = {"verdict": self.verdict.value, "preconditions": self.preconditions, "failures": self.failures}
        for k in ("mu_u", "mu_v", "trace_u", "trace_v", "measure_margin", "trace_margin"):
            v = getattr(self, k)
            if v is not None:
                out[k] = v.as_dict()
        return out


def _margin_ok(m: MeasureEstimate, scale: float) -> bool:
    return m.value >= -(m.error_estimate + 1e-12 * (1.0 + scale))


def compare_pair(u: ScalarField, v: ScalarField, region, resolution, plan: SamplePlan | None = None,
                 boundary_count: int = 500, boundary_tol: float = 1e-8, mode: str = "auto",
                 seed: int = 0) -> ComparisonResult:
    """Check μ(u)(Ω) ≤ μ(v)(Ω) and ∫trace 𝓗u ≤ ∫trace 𝓗v for an admissible pair.

    Preconditions (u + v σ₂(𝓗)-convex, v = u on ∂Ω, v < u inside) are checked
    on samples first; if any fails the verdict is PRECONDITION_FAILED and no
    inequality is evaluated. Margins ∫(density_v − density_u) are integrated
    on a single rule so their error estimates are not inflated by cancellation.
    """
    if u.n != v.n:
        raise ValueError("u and v live on different groups")
    plan = plan or SamplePlan(kind="random", count=2000, seed=seed)
    pre: dict = {}
    failures = []
    rep = classify(u + v, region, plan, mode)
    pre["sum_verdict"] = rep.verdict.value
    if rep.verdict is Verdict.NEITHER:
        failures.append("u+v is not sigma2(H)-convex")
    bpts = boundary_points(region, boundary_count, seed)
    gap_b = float(np.max(np.abs(u.value(bpts) - v.value(bpts))))
    pre["boundary_max_gap"] = gap_b
    if gap_b > boundary_tol:
        failures.append("v != u on the boundary")
    ipts = sample_points(region, plan, shrink=0.98)
    gap_i = float(np.min(u.value(ipts) - v.value(ipts)))
    pre["interior_min_gap"] = gap_i
    if not gap_i > 0:
        failures.append("v < u fails inside")
    if failures:
        return ComparisonResult(CompareVerdict.PRECONDITION_FAILED, pre, failures=failures)

    mu_u = measure_of_region(u, region, resolution, mode)
    mu_v = measure_of_region(v, region, resolution, mode)
    tr_u = trace_integral(u, region, resolution, mode)
    tr_v = trace_integral(v, region, resolution, mode)
    mm = integrate_estimate(lambda z: measure_density(v, z, mode) - measure_density(u, z, mode), region, resolution)
    tm = integrate_estimate(lambda z: trace_density(v, z, mode) - trace_density(u, z, mode), region, resolution)
    if not _margin_ok(mm, abs(mu_v.value)):
        failures.append("measure inequality")
    if not _margin_ok(tm, abs(tr_v.value)):
        failures.append("trace inequality")
    verdict = CompareVerdict.FAIL if failures else CompareVerdict.PASS
    return ComparisonResult(verdict, pre, mu_u, mu_v, tr_u, tr_v, mm, tm, failures)


@dataclass
class AdmissiblePair:
    u: ScalarField
    v: Barrier
    region: GaugeBall
    params: dict


def admissible_pair(n: int, rng: np.random.Generator, theta: float = 0.5) -> AdmissiblePair:
    """A barrier v and u = v + ε φ with φ ≥ 0 a radial bump vanishing on ∂B_R.

    ε is capped so that u + v = 2v + εφ keeps a nonnegative radial slope;
    then 𝓗(u + v) = g'(r)𝓗(ρ⁴) + g''(r) Xr Xrᵀ is PSD.
    """
    if not 0 < theta <= 1:
        raise ValueError("theta must lie in (0, 1]")
    center = Point.from_array(0.5 * rng.standard_normal(2 * n + 1))
    R = float(rng.uniform(0.5, 1.5))
    sig = float(rng.uniform(0.3, 0.8))
    m0 = float(-rng.uniform(0.2, 2.0))
    a, b, c = (float(x) for x in rng.uniform(0.0, 1.0, size=3))
    v = Barrier(center, R, sig, m0)
    eps = theta * 2.0 * abs(v.K) / max_bump_slope(R, a, b, c)
    u = v + eps * radial_bump(center, R, a, b, c)
    params = {"center": center.as_array().tolist(), "R": R, "sigma": sig, "m0": m0,
              "a": a, "b": b, "c": c, "eps": eps}
    return AdmissiblePair(u, v, v.ball, params)


# oscillation ------------------------------------------------------------------

def oscillation(field: ScalarField, region, sampler: SamplePlan | None = None, extra_points=None) -> float:
    """max − min of u over samples of the region (a lower bound for the true oscillation)."""
    pts = sample_points(region, sampler or SamplePlan(kind="random", count=4000))
    if extra_points is not None:
        pts = np.concatenate([pts, np.asarray(extra_points, dtype=float)])
    vals = field.value(pts)
    return float(np.max(vals) - np.min(vals))


class NotConvexError(ValueError):
    pass


def measure_bound_constant(n: int, sigma: float) -> float:
    """C with μ(u)(B_σR) ≤ C (osc_{B_R} u)² R^{2n−2}: the barrier mass for m₀ = −osc."""
    return float((sigma2_constant(n) * unit_ball_moment(n, 2, 0) + 48.0 * n * unit_ball_moment(n, 0, 1))
                 / (1.0 - sigma ** 4) ** 2)


def trace_bound_constant(n: int, sigma: float) -> float:
    """C with ∫_{B_σR} trace 𝓗u ≤ C R^{2n} osc_{B_R} u."""
    return float(trace_coefficient(n) * unit_ball_moment(n, 1, 0) / (1.0 - sigma ** 4))


@dataclass
class OscillationReport:
    n: int
    osc: float
    R: float
    sigma: float
    measure: MeasureEstimate
    trace: MeasureEstimate
    sigma2_part: MeasureEstimate
    ut_part: MeasureEstimate
    measure_ratio: float
    trace_ratio: float
    sigma2_ratio: float
    ut_ratio: float
    measure_bound: float
    trace_bound: float

    @property
    def within_bounds(self) -> bool:
        tol = 1e-9
        return bool(self.measure_ratio <= self.measure_bound * (1 + tol)
                and self.trace_ratio <= self.trace_bound * (1 + tol)
                and self.sigma2_ratio <= self.measure_bound * (1 + tol)
                and self.ut_ratio <= self.measure_bound / (12 * self.n) * (1 + tol))

    def as_dict(self) -> dict:
        return {
            "osc": self.osc, "R": self.R, "sigma": self.sigma,
            "measure": self.measure.as_dict(), "trace": self.trace.as_dict(),
            "measure_ratio": self.measure_ratio, "trace_ratio": self.trace_ratio,
            "sigma2_ratio": self.sigma2_ratio, "ut_ratio": self.ut_ratio,
            "measure_bound": self.measure_bound, "trace_bound": self.trace_bound,
            "within_bounds": self.within_bounds,
        }


def _ratio(num: MeasureEstimate, den: float) -> float:
    if den > 0:
        return num.value / den
    return 0.0 if abs(num.value) <= num.error_estimate + 1e-12 else float("inf")


def oscillation_bound_check(field: ScalarField, outer: GaugeBall, inner: GaugeBall, resolution: int = 12,
                            sampler: SamplePlan | None = None, mode: str = "auto",
                            check_convexity: bool = True) -> OscillationReport:
    """Ratios μ(u)(Ω′)/[(osc_Ω u)² R^{2n−2}] and ∫_{Ω′}trace/[R^{2n} osc_Ω u] for concentric balls
    Ω′ = B_{σR} ⊂ Ω = B_R, with the σ₂ and u_t² parts of μ reported separately."""
    if not (inner.center.allclose(outer.center) and inner.radius < outer.radius):
        raise ValueError("inner ball must be concentric and strictly smaller")
    n = field.n
    sampler = sampler or SamplePlan(kind="random", count=4000)
    if check_convexity:
        rep = classify(field, outer, sampler, mode)
        if rep.verdict is Verdict.NEITHER:
            raise NotConvexError(f"{field.name} is not sigma2(H)-convex on the ball")
    R, sig = outer.radius, inner.radius / outer.radius
    osc = oscillation(field, outer, sampler, boundary_points(outer, 1000, sampler.seed))
    mu = measure_of_region(field, inner, resolution, mode)
    tr = trace_integral(field, inner, resolution, mode)
    s2 = sigma2_integral(field, inner, resolution, mode)
    ut2 = ut_square_integral(field, inner, resolution, mode)
    q = osc * osc * R ** (2 * n - 2)
    return OscillationReport(
        n, osc, R, sig, mu, tr, s2, ut2,
        _ratio(mu, q), _ratio(tr, R ** (2 * n) * osc), _ratio(s2, q), _ratio(ut2, q),
        measure_bound_constant(n, sig), trace_bound_constant(n, sig),
    )


# weak convergence ---------------------------------------------------------------

def _bump1(s):
    s = np.asarray(s, dtype=float)
    inside = np.abs(s) < 1.0
    safe = np.where(inside, s, 0.0)
    return np.where(inside, np.exp(1.0 - 1.0 / (1.0 - safe * safe)), 0.0)


@dataclass(frozen=True)
class TestFunction:
    """f(z) = A Π_k b((z_k − c_k)/w_k), a smooth bump supported in the box c ± w."""

    __test__ = False  # not a pytest class

    center: np.ndarray
    half_widths: np.ndarray
    amplitude: float = 1.0

    def __post_init__(self):
        c = np.asarray(self.center, dtype=float)
        w = np.broadcast_to(np.asarray(self.half_widths, dtype=float), c.shape).copy()
        if np.any(w <= 0):
            raise ValueError("half widths must be positive")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "half_widths", w)

    @property
    def support(self) -> Box:
        return Box(self.center - self.half_widths, self.center + self.half_widths)

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        return self.amplitude * np.prod(_bump1((z - self.center) / self.half_widths), axis=-1)


class SupportError(ValueError):
    pass


def check_support(f: TestFunction, region, samples: int = 4000) -> None:
    """Raise unless supp f lies strictly inside the region."""
    box = f.support
    if isinstance(region, Box):
        if np.any(box.lower <= region.lower) or np.any(box.upper >= region.upper):
            raise SupportError("test function support touches the region boundary")
        return
    if isinstance(region, GaugeBall):
        pts = np.concatenate([boundary_points(box, samples, 0), corners(box)])
        d = gauge_z(compose_z(inverse_z(region.center.as_array()), pts))
        if np.any(d >= region.radius):
            raise SupportError("test function support leaves the ball")
        return
    raise TypeError(f"unsupported region {type(region).__name__}")


def corners(box: Box) -> np.ndarray:
    d = box.lower.size
    bits = np.array(np.meshgrid(*[[0, 1]] * d, indexing="ij")).reshape(d, -1).T
    return np.where(bits == 1, box.upper, box.lower)


def weighted_measure(field: ScalarField, f: TestFunction, resolution, mode: str = "auto") -> MeasureEstimate:
    """∫ f dμ(u), integrated over the support box of f."""
    return integrate_estimate(lambda z: f(z) * measure_density(field, z, mode), f.support, resolution)


@dataclass
class ConvergenceTable:
    schedule: list
    values: list
    discrepancies: list
    errors: list
    reference: float
    reference_error: float

    def non_increasing(self, slack: float = 0.1) -> bool:
        d = self.discrepancies
        return all(b <= a * (1 + slack) for a, b in zip(d, d[1:]))

    def rows(self) -> list[dict]:
        return [{"eps": e, "value": v, "discrepancy": d, "error_estimate": r}
                for e, v, d, r in zip(self.schedule, self.values, self.discrepancies, self.errors)]

    def as_dict(self) -> dict:
        return {"reference": self.reference, "reference_error": self.reference_error, "rows": self.rows()}


def geometric_schedule(eps0: float, steps: int = 5) -> list[float]:
    return [eps0 * 2.0 ** (-k) for k in range(steps)]


def weak_convergence_test(u: ScalarField | None, eps_schedule, f: TestFunction, region, resolution,
                          approximant=None, reference: tuple[float, float] | None = None,
                          mode: str = "auto") -> ConvergenceTable:
    """|∫f dμ(u_ε) − ∫f dμ(u)| over the schedule.

    ``approximant(ε)`` defaults to the group mollification of u. ``reference``
    is (value, error) of ∫f dμ(u); when omitted it is integrated from u, which
    must then be C².
    """
    check_support(f, region)
    if approximant is None:
        if u is None:
            raise ValueError("need u or an approximant")
        approximant = lambda e: mollify(u, e)  # noqa: E731
    if reference is None:
        ref = weighted_measure(u, f, resolution, mode)
        reference = (ref.value, ref.error_estimate)
    vals, discs, errs = [], [], []
    for e in eps_schedule:
        est = weighted_measure(approximant(e), f, resolution, mode)
        vals.append(est.value)
        discs.append(abs(est.value - reference[0]))
        errs.append(est.error_estimate)
    return ConvergenceTable(list(map(float, eps_schedule)), vals, discs, errs,
                            float(reference[0]), float(reference[1]))


def kinked_pair(n: int, c: float = 1.0):
    """u₁ = |x|²+|y|² and u₂ = u₁ + c t: both H-convex, max{u₁, u₂} has a kink on t = 0."""
    from .fields import sq_field, t_field
    u1 = sq_field(n)
    return u1, u1 + c * t_field(n)


def kinked_approximant(n: int, c: float = 1.0):
    u1, u2 = kinked_pair(n, c)
    return lambda h: compose_convex(SmoothMax(h), u1, u2)


def _tensor_gauss(lower, upper, nodes: int):
    g, w = np.polynomial.legendre.leggauss(nodes)
    d = len(lower)
    half = 0.5 * (np.asarray(upper) - np.asarray(lower))
    mid = 0.5 * (np.asarray(upper) + np.asarray(lower))
    pts = np.stack(np.meshgrid(*[g] * d, indexing="ij"), axis=-1).reshape(-1, d) * half + mid
    wts = np.prod(np.stack(np.meshgrid(*[w] * d, indexing="ij"), axis=-1).reshape(-1, d), axis=-1) * np.prod(half)
    return pts, wts


def kinked_reference(n: int, c: float, f: TestFunction, nodes: int = 24) -> tuple[float, float]:
    """∫ f dμ(max{u₁, u₂}) for the kinked pair, in closed form up to smooth quadrature.

    μ = [4n(2n−1) + 12 n c² 1_{t>0}] dz + 8(2n−1) c |z|² dz_h ⊗ δ_{t=0}.
    The error is the change when the Gauss rule is halved.
    """
    box = f.support
    lo, hi = box.lower, box.upper

    def compute(m):
        total = 0.0
        for a, b, extra in ((lo[-1], min(hi[-1], 0.0), 0.0), (max(lo[-1], 0.0), hi[-1], 12.0 * n * c * c)):
            if b <= a:
                continue
            l2, h2 = lo.copy(), hi.copy()
            l2[-1], h2[-1] = a, b
            p, w = _tensor_gauss(l2, h2, m)
            total += float(np.dot(w, f(p) * (4.0 * n * (2 * n - 1) + extra)))
        if lo[-1] < 0.0 < hi[-1]:
            p, w = _tensor_gauss(lo[:-1], hi[:-1], m)
            z = np.concatenate([p, np.zeros((p.shape[0], 1))], axis=-1)
            total += 8.0 * (2 * n - 1) * c * float(np.dot(w, np.sum(p * p, axis=-1) * f(z)))
        return total

    fine = compute(nodes)
    return fine, abs(fine - compute(max(nodes // 2, 2)))


# L² bound on ∂_t under mollification ------------------------------------------

@dataclass
class UtBoundTable:
    schedule: list
    l2_norms: list
    errors: list
    bound: float
    settings: dict

    @property
    def within_bound(self) -> bool:
        return all(v <= self.bound for v in self.l2_norms)

    def as_dict(self) -> dict:
        return {"bound": self.bound, "settings": self.settings,
                "rows": [{"eps": e, "l2_norm": v, "error_estimate": r}
                         for e, v, r in zip(self.schedule, self.l2_norms, self.errors)]}


def ut_l2_monitor(u: ScalarField, eps_schedule, outer: GaugeBall, sigma: float, resolution: int = 10,
                  sampler: SamplePlan | None = None, nodes: int = 6) -> UtBoundTable:
    """‖∂_t u_ε‖_{L²(B_σR)} for the mollifications u_ε against one ε-independent bound.

    Every u_ε averages u over translates η_k∘B_R, each inside B_{R'} with
    R' = R + max_k ρ(ξ₀⁻¹∘η_k∘ξ₀) for the largest ε, so osc_{B_R} u_ε ≤
    osc_{B_R'} u and the bound C (osc_{B_R'} u)² R^{2n−2} applies to all ε.
    """
    from .mollify import kernel_template
    from .group import dilate_z

    n = u.n
    c0 = outer.center.as_array()
    unit, _ = kernel_template(n, nodes)
    eta = dilate_z(max(eps_schedule), unit)
    conj = compose_z(compose_z(inverse_z(c0), eta), c0)
    R_big = outer.radius + float(np.max(gauge_z(conj)))
    big = GaugeBall(outer.center, R_big)
    sampler = sampler or SamplePlan(kind="random", count=8000)
    osc = oscillation(u, big, sampler, boundary_points(big, 2000, sampler.seed))
    bound = float(np.sqrt(measure_bound_constant(n, sigma) / (12.0 * n) * osc ** 2 * outer.radius ** (2 * n - 2)))
    inner = outer.concentric(sigma * outer.radius)
    norms, errs = [], []
    for e in eps_schedule:
        est = ut_square_integral(mollify(u, e, nodes), inner, resolution)
        norms.append(float(np.sqrt(max(est.value, 0.0))))
        errs.append(est.error_estimate)
    return UtBoundTable(list(map(float, eps_schedule)), norms, errs, bound,
                        {"R": outer.radius, "sigma": sigma, "enlarged_R": R_big, "osc": osc})
