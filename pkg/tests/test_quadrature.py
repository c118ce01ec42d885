import sys
from pathlib import Path

import numpy as np
import pytest

from hs2.group import Box, GaugeAnnulus, GaugeBall, Point, compose_z, dilate_z, gauge_z, inverse_z
from hs2.quadrature import (SamplePlan, ball_rule, box_rule, boundary_points, integrate, sample_points,
                            unit_ball_moment, unit_ball_rule)

sys.path.insert(0, str(Path(__file__).parent))
import oracles  # noqa: E402


def test_unit_ball_volume_matches_adaptive_cubature():
    ref = oracles.gauge_ball_integral(lambda w: 1.0, tol=1e-10)
    assert unit_ball_moment(1) == pytest.approx(ref, rel=1e-8)


def test_shifted_ball_integral_matches_adaptive_cubature():
    c, r = (0.2, 0.1, 0.3), 0.7
    fn = lambda w: w[0] ** 2 + w[2]  # noqa: E731
    ref = oracles.gauge_ball_integral(fn, center=c, radius=r, tol=1e-9)
    est = integrate(lambda z: z[..., 0] ** 2 + z[..., 2], GaugeBall(Point.from_array(c), r), 12)
    assert est == pytest.approx(ref, rel=1e-7)


@pytest.mark.parametrize("n", [1, 2])
@pytest.mark.parametrize("p,q", [(0, 0), (1, 0), (2, 0), (0, 1), (1, 1)])
def test_moments(n, p, q):
    z, w = unit_ball_rule(n, 10)
    s = np.sum(z[:, :2 * n] ** 2, axis=-1)
    approx = np.dot(w, s ** p * z[:, -1] ** (2 * q))
    assert approx == pytest.approx(unit_ball_moment(n, p, q), rel=1e-11)


def test_ball_nodes_are_inside_and_dilation_exact():
    c = Point.from_array([0.3, -0.1, 0.2])
    nodes, w = ball_rule(c, 0.8, 1, 8)
    assert np.all(gauge_z(compose_z(inverse_z(c.as_array()), nodes)) <= 0.8 + 1e-12)
    n1, w1 = ball_rule(Point.identity(1), 1.0, 1, 8)
    n2, w2 = ball_rule(Point.identity(1), 2.0, 1, 8)
    assert np.allclose(n2, dilate_z(2.0, n1), rtol=0, atol=1e-15)
    assert np.allclose(w2, 16 * w1, rtol=1e-15)


def test_box_rule_midpoint_order():
    box = Box.unit(1)
    f = lambda z: np.exp(z[..., 0] + 2 * z[..., 1] - z[..., 2])  # noqa: E731
    exact = (np.e - 1) * (np.e ** 2 - 1) / 2 * (1 - np.exp(-1))
    errs = [abs(integrate(f, box, N) - exact) for N in (8, 16, 32)]
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.02)
    assert errs[1] / errs[2] == pytest.approx(4.0, rel=0.02)


def test_box_rule_polynomial_exact_degree1_and_weights():
    box = Box(np.array([-1.0, 0.0, 2.0]), np.array([1.0, 3.0, 2.5]))
    z, w = box_rule(box, (4, 3, 2))
    assert w.sum() == pytest.approx(box.volume)
    assert np.dot(w, z[:, 1]) == pytest.approx(1.5 * box.volume)
    with pytest.raises(ValueError):
        box_rule(box, 1)


def test_samplers_stay_in_regions():
    ball = GaugeBall(Point.from_array([0.5, 0.0, -0.2]), 0.7)
    for plan in (SamplePlan("random", 500, seed=1), SamplePlan("grid", per_axis=7)):
        pts = sample_points(ball, plan)
        assert np.all(gauge_z(compose_z(inverse_z(ball.center.as_array()), pts)) <= 0.7 + 1e-12)
    ann = GaugeAnnulus(Point.identity(2), 0.5, 1.5)
    r = gauge_z(sample_points(ann, SamplePlan(count=1000)))
    assert r.min() >= 0.5 - 1e-12 and r.max() <= 1.5 + 1e-12
    b = boundary_points(ball, 100)
    assert np.allclose(gauge_z(compose_z(inverse_z(ball.center.as_array()), b)), 0.7)
    bb = boundary_points(Box.unit(1), 100)
    assert np.all(np.any(np.isclose(bb, 0) | np.isclose(bb, 1), axis=-1))


def test_seeded_sampling_is_deterministic():
    ball = GaugeBall(Point.identity(1), 1.0)
    a = sample_points(ball, SamplePlan(count=50, seed=9))
    b = sample_points(ball, SamplePlan(count=50, seed=9))
    assert np.array_equal(a, b)
