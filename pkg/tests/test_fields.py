import numpy as np
import pytest
from hypothesis import given, strategies as st

from liouville_verify.errors import DomainError, EvaluationError, UsageError
from liouville_verify.fields import GridSpec, ScalarField, constant_field, gradient_fd, laplacian_fd, polar_ring, region_integral

ORIGIN = ((0.0, 0.0),)
sq = ScalarField(lambda x, y: x**2 + y**2, name="r2")
logr = ScalarField(lambda x, y: np.log(np.hypot(x, y)), ORIGIN, name="logr")
sph = ScalarField(lambda x, y: np.log(2.0 / (1.0 + x**2 + y**2)), name="sph")
lin = ScalarField(lambda x, y: x + 0 * y, name="x1")


def test_laplacian_quadratic():
    assert laplacian_fd(sq, (0.3, -1.7), h=1e-3) == pytest.approx(4.0, abs=1e-6)


def test_laplacian_harmonic_log():
    assert abs(laplacian_fd(logr, (1.0, 0.0), h=1e-3)) < 1e-5


def test_laplacian_spherical_oracle():
    assert laplacian_fd(sph, (1.0, 1.0)) == pytest.approx(-4.0 / 9.0, abs=1e-5)


def test_gradient_examples():
    assert np.allclose(gradient_fd(lin, (2.0, 5.0)), (1.0, 0.0), atol=1e-10)
    assert np.allclose(gradient_fd(sph, (1.0, 0.0)), (-1.0, 0.0), atol=1e-5)
    assert np.allclose(gradient_fd(constant_field(3.0), (1.0, 2.0)), 0.0)


def test_singular_errors():
    with pytest.raises(DomainError):
        logr((0.0, 0.0))
    with pytest.raises(DomainError):
        laplacian_fd(logr, (1e-3, 0.0), h=1e-3)
    bad = ScalarField(lambda x, y: np.log(x - 5.0), name="bad")
    with pytest.raises(EvaluationError):
        bad((1.0, 0.0))


def test_grid_invariants():
    with pytest.raises(UsageError):
        GridSpec.box(1.0, 4)
    with pytest.raises(UsageError):
        GridSpec("polar", 1.0, 16, 0.0, True)


def test_sampled_agrees_with_analytic():
    g = GridSpec.box(2.0, 65)
    s = sph.sample(g)
    pts = np.array([[0.31, -0.77], [1.2, 1.1], [-1.9, 0.05]])
    assert np.allclose(s(pts), sph(pts), atol=2e-3)
    X, Y = g.plane_nodes()
    assert np.allclose(s.values, sph.evaluate(X, Y))


def test_sampled_laplacian_is_grid_native():
    g = GridSpec.log_polar(0.5, 4.0, 256)
    lap = sph.sample(g).laplacian()
    X, Y = g.plane_nodes()
    exact = -4.0 / (1.0 + X**2 + Y**2) ** 2
    inner = slice(2, -2)
    assert np.nanmax(np.abs(lap[inner] - exact[inner])) < 1e-3


def test_region_integral_levels():
    g = GridSpec.box(3.0, 257)
    vals = -sq.sample(g).values
    one = region_integral(g, vals, -4.0)
    many = region_integral(g, vals, [-4.0, -1.0])
    assert one == pytest.approx(4 * np.pi, rel=1e-3)
    assert many[0] == pytest.approx(one)
    assert many[1] == pytest.approx(np.pi, rel=1e-3)
    below = region_integral(g, vals, -4.0, above=False)
    assert one + below == pytest.approx(36.0, rel=1e-9)


def test_polar_ring_shape():
    ring = polar_ring([1.0, 2.0], 8)
    assert ring.shape == (2, 8, 2)
    assert np.allclose(np.hypot(ring[1, :, 0], ring[1, :, 1]), 2.0)


def _smooth(a, b):
    return ScalarField(lambda x, y: np.sin(a * x) * np.cos(b * y) + 0.3 * np.exp(0.5 * x * y), name="smooth")


def _lap_exact(a, b, x, y):
    e = 0.3 * np.exp(0.5 * x * y) * 0.25 * (x**2 + y**2)
    return -(a**2 + b**2) * np.sin(a * x) * np.cos(b * y) + e


coord = st.floats(-1.5, 1.5)


@given(st.floats(0.5, 2.0), st.floats(0.5, 2.0), coord, coord)
def test_richardson_factor(a, b, x, y):
    f = _smooth(a, b)
    h = 0.05
    e1 = laplacian_fd(f, (x, y), h) - _lap_exact(a, b, x, y)
    e2 = laplacian_fd(f, (x, y), h / 2) - _lap_exact(a, b, x, y)
    if abs(e1) < 1e-8:
        return  # truncation term vanishes to leading order here
    assert 3.2 <= e1 / e2 <= 4.8


@given(coord, coord, st.floats(-3, 3), st.floats(-3, 3))
def test_translation_equivariance(x, y, sx, sy):
    f = _smooth(1.3, 0.7)
    g = f.translated((sx, sy))
    h = 1e-3
    assert laplacian_fd(g, (x + sx, y + sy), h) == pytest.approx(laplacian_fd(f, (x, y), h), abs=1e-5)
    assert np.allclose(gradient_fd(g, (x + sx, y + sy), h), gradient_fd(f, (x, y), h), atol=1e-7)
