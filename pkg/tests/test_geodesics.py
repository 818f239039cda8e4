import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from liouville_verify.errors import CompletenessError, DomainError, UsageError
from liouville_verify.fields import GridSpec
from liouville_verify.geodesics import (
    avr,
    ball_area,
    distance_slope,
    eikonal_distance,
    is_complete,
    radial_distance,
    radial_distance_field,
)
from liouville_verify.metrics import metric_cylinder_pullback, metric_flat, metric_gamma, metric_spherical
from scipy import integrate


@pytest.fixture(scope="module")
def flat_dist():
    return eikonal_distance(metric_flat(), GridSpec.box(2.0, 257), (0.0, 0.0))


@pytest.fixture(scope="module")
def gamma_dist():
    return eikonal_distance(metric_gamma(0.6), GridSpec.box(20.0, 513), (0.0, 0.0))


def test_radial_examples():
    assert radial_distance(metric_flat(), 7.0) == pytest.approx(7.0, abs=1e-12)
    g = 0.75
    approx = math.sqrt(g) * 1e4 ** (2 * g - 1) / (2 * g - 1)
    assert radial_distance(metric_gamma(g), 1e4) == pytest.approx(approx, rel=0.02)
    assert radial_distance(metric_spherical(), math.inf) == pytest.approx(math.pi, abs=1e-10)


@given(st.floats(0.5, 0.99), st.floats(0.0, 50.0))
def test_radial_matches_scipy(g, R):
    m = metric_gamma(g)
    ref = integrate.quad(lambda s: math.sqrt(g) * (1 + s * s) ** (g - 1), 0, R, epsabs=1e-13, epsrel=1e-12)[0]
    assert radial_distance(m, R) == pytest.approx(ref, rel=1e-9, abs=1e-12)


def test_radial_requires_symmetry():
    from liouville_verify.fields import ScalarField
    from liouville_verify.metrics import metric_from_factor

    m = metric_from_factor(ScalarField(lambda x, y: 0.1 * x))
    with pytest.raises(UsageError):
        radial_distance(m, 1.0)


def test_completeness():
    assert is_complete(metric_flat())
    assert is_complete(metric_gamma(0.5))
    assert not is_complete(metric_spherical())


def test_flat_eikonal(flat_dist):
    X, Y = flat_dist.grid.plane_nodes()
    r = np.hypot(X, Y)
    away = r > 0.2
    assert np.nanmax(np.abs(flat_dist.values[away] - r[away]) / r[away]) < 0.01
    assert flat_dist.values[128, 128] == 0.0


def test_gamma_eikonal_vs_oracle(gamma_dist):
    rng = np.random.default_rng(0)
    rho = rng.uniform(2.0, 18.0, 20)
    th = rng.uniform(0, 2 * np.pi, 20)
    pts = np.stack([rho * np.cos(th), rho * np.sin(th)], -1)
    oracle = radial_distance_field(metric_gamma(0.6))(pts)
    assert np.max(np.abs(gamma_dist(pts) / oracle - 1)) < 0.02


def test_cylinder_axis_distance():
    m = metric_cylinder_pullback()
    grid = GridSpec.log_polar(0.01, 100.0, 256)
    d = eikonal_distance(m, grid, (1.0, 0.0))
    for T in (1.0, 2.0, 3.0):
        assert d((math.exp(T), 0.0)) == pytest.approx(T, rel=0.02)


def test_eikonal_errors():
    with pytest.raises(UsageError):
        eikonal_distance(metric_flat(), GridSpec.box(1.0, 64), (5.0, 0.0))
    with pytest.raises(UsageError):
        eikonal_distance(metric_cylinder_pullback(), GridSpec.box(1.0, 64), (0.0, 0.0))
    with pytest.raises(UsageError):
        eikonal_distance(metric_flat(), GridSpec("polar", 2.0, 64, 0.5), (1.0, 0.0))


def test_accept_order_monotone(gamma_dist):
    # values in the order the march accepted them
    assert np.all(np.diff(gamma_dist.accept_order) >= -1e-12)


def test_no_interior_local_maxima(gamma_dist):
    T = gamma_dist.values
    c = T[1:-1, 1:-1]
    nb = np.stack([T[2:, 1:-1], T[:-2, 1:-1], T[1:-1, 2:], T[1:-1, :-2]])
    assert not np.any(np.all(c > nb, axis=0))


def test_lipschitz_on_edges(gamma_dist):
    T = gamma_dist.values
    grid = gamma_dist.grid
    X, Y = grid.plane_nodes()
    m = gamma_dist.metric
    # segment length by Simpson on each horizontal edge
    xm = 0.5 * (X[1:] + X[:-1])
    L = (X[1:] - X[:-1]) / 6 * (
        m.length_density(X[1:], Y[1:]) + 4 * m.length_density(xm, Y[1:]) + m.length_density(X[:-1], Y[:-1])
    )
    # the seed disk (4 cells) is initialised by a midpoint rule, not marched
    dx, _ = grid.spacing()
    outside = np.hypot(xm, Y[1:]) > 5 * dx
    assert np.all((np.abs(T[1:] - T[:-1]) <= L * (1 + 1e-9) + 1e-12)[outside])


def test_eikonal_residual(gamma_dist):
    T = gamma_dist.values
    grid = gamma_dist.grid
    dx, _ = grid.spacing()
    gx, gy = np.gradient(T, dx)
    X, Y = grid.plane_nodes()
    ef = gamma_dist.metric.length_density(X, Y)
    r = np.hypot(X, Y)
    band = (r > 3) & (r < 15)
    assert np.median(np.abs(np.hypot(gx, gy)[band] / ef[band] - 1)) < 0.02


def test_refinement_improves():
    m = metric_gamma(0.75)
    pts = np.array([[3.0, 1.0], [-5.0, 2.0], [0.5, -7.0]])
    oracle = radial_distance_field(m)(pts)
    errs = [np.max(np.abs(eikonal_distance(m, GridSpec.box(8.0, n), (0, 0))(pts) / oracle - 1)) for n in (65, 129, 257)]
    assert errs[2] < errs[0]


def test_ball_area_examples(flat_dist):
    assert ball_area(flat_dist, 1.5) == pytest.approx(np.pi * 2.25, rel=0.01)
    assert ball_area(radial_distance_field(metric_flat()), 2.0) == pytest.approx(4 * np.pi, rel=1e-10)
    sph = radial_distance_field(metric_spherical())
    assert ball_area(sph, math.pi) == pytest.approx(4 * np.pi, rel=0.02)
    g = radial_distance_field(metric_gamma(0.75))
    ts = [1.0, 5.0, 20.0, 80.0]
    areas = [ball_area(g, t) for t in ts]
    assert np.all(np.diff(areas) > 0)
    with pytest.raises(DomainError):
        ball_area(flat_dist, 3.0)


def test_flat_eikonal_ball_area_t2():
    d = eikonal_distance(metric_flat(), GridSpec.box(2.5, 257), (0.0, 0.0))
    assert ball_area(d, 2.0) == pytest.approx(4 * np.pi, rel=0.01)


def test_avr_examples():
    rep = avr(metric_flat())
    assert rep.beta_area == pytest.approx(1.0, abs=1e-6) and rep.gap < 1e-2
    rep = avr(metric_gamma(0.75))
    assert rep.beta_area == pytest.approx(0.5, rel=0.03) and rep.beta_gb == pytest.approx(0.5, rel=0.03)
    with pytest.raises(CompletenessError):
        avr(metric_spherical())


def test_avr_cylinder():
    rep = avr(metric_cylinder_pullback())
    assert rep.method == "eikonal"
    assert abs(rep.beta_area) < 0.02
    assert rep.beta_gb is None


def test_distance_slope_examples():
    assert distance_slope(metric_flat()) == pytest.approx(1.0, abs=1e-2)
    assert distance_slope(metric_gamma(0.75)) == pytest.approx(0.5, rel=0.03)
    assert distance_slope(metric_gamma(0.9)) == pytest.approx(0.8, rel=0.03)


def test_gamma_half_slope_is_sqrt_gamma():
    # r grows like sqrt(γ) ln|x| at γ = 1/2
    m = metric_gamma(0.5)
    R = np.array([1e8, 1e12])
    r = np.array([radial_distance(m, x) for x in R])
    assert (r[1] - r[0]) / np.log(R[1] / R[0]) == pytest.approx(math.sqrt(0.5), rel=1e-6)
