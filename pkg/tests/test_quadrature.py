import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from liouville_verify.errors import InfiniteTotalCurvatureError, UsageError
from liouville_verify.fields import ScalarField
from liouville_verify.geodesics import avr
from liouville_verify.metrics import metric_flat, metric_gamma, metric_spherical
from liouville_verify.quadrature import adaptive_quad, alpha_of, integrate_plane, integrate_polar, total_gauss_curvature, total_mass
from liouville_verify.solutions import solution_cylinder, solution_gamma, solution_spherical

sph_density = ScalarField(lambda x, y: 4.0 / (1.0 + x * x + y * y) ** 2, name="sph")


def _bump(c=(0.4, -0.3), width=0.7):
    # smooth compact bump exp(-1/(1-s^2)), normalised to unit mass by a 1-D radial oracle
    def raw(s):
        s = np.asarray(s, float)
        out = np.zeros_like(s)
        m = s < 1
        out[m] = np.exp(-1.0 / (1.0 - s[m] ** 2))
        return out

    mass = 2 * np.pi * width**2 * integrate.quad(lambda s: s * raw(np.array([s]))[0], 0, 1, epsabs=1e-14)[0]
    cx, cy = c
    return ScalarField(lambda x, y: raw(np.hypot(x - cx, y - cy) / width) / mass, name="bump")


def test_adaptive_quad_basic():
    r = adaptive_quad(np.sin, 0.0, np.pi, 1e-12)
    assert r.converged and r.value == pytest.approx(2.0, abs=1e-12)
    r = adaptive_quad(lambda x: 1 / np.sqrt(x), 0.0, 1.0, 1e-8)
    assert r.value == pytest.approx(2.0, abs=1e-6)


def test_plane_examples():
    r = integrate_plane(sph_density, 1e-8)
    assert r.converged and r.value == pytest.approx(4 * np.pi, abs=1e-8)
    assert 0 <= r.tail_fraction <= 1
    assert r.error <= 1e-8
    b = integrate_plane(_bump(), 1e-8)
    assert b.value == pytest.approx(1.0, abs=1e-7)
    d = integrate_plane(ScalarField(lambda x, y: 1.0 / (1.0 + x * x + y * y)), 1e-6)
    assert d.diverged and math.isnan(d.value) and not d.converged
    assert d.growth_exponent == pytest.approx(0.0, abs=0.05)


def test_tolerance_must_be_positive():
    with pytest.raises(UsageError):
        integrate_plane(sph_density, 0.0)


def test_alpha_examples():
    assert alpha_of(solution_spherical()) == pytest.approx(-2.0, abs=1e-3)
    assert alpha_of(solution_gamma(0.75)) == pytest.approx(-1.5, abs=1e-3)
    cyl = solution_cylinder(1, 0)
    w_density = ScalarField(lambda x, y: np.exp(2 * cyl.w.func(x, y)), cyl.w.singularities)
    assert -integrate_plane(w_density).value / (2 * np.pi) == pytest.approx(-4.0, abs=1e-2)


@pytest.mark.parametrize("b", [0, 1, 2])
def test_cylinder_mass(b):
    assert total_mass(solution_cylinder(b, 0)).value == pytest.approx(4 * np.pi * (b + 1), rel=1e-2)


def test_divergent_alpha_raises():
    from liouville_verify.metrics import metric_flat
    from liouville_verify.solutions import LiouvilleSolution

    slow = ScalarField(lambda x, y: -0.5 * np.log1p(x * x + y * y))
    with pytest.raises(InfiniteTotalCurvatureError):
        alpha_of(LiouvilleSolution(slow, metric_flat()))


def test_total_curvature_examples():
    assert total_gauss_curvature(metric_flat()) == pytest.approx(0.0, abs=1e-12)
    assert total_gauss_curvature(metric_gamma(0.75)) == pytest.approx(np.pi, rel=1e-2)
    assert total_gauss_curvature(metric_spherical()) == pytest.approx(4 * np.pi, rel=1e-2)


@pytest.mark.parametrize("g", [0.6, 0.75, 0.9])
def test_gauss_bonnet_matches_avr(g):
    m = metric_gamma(g)
    rep = avr(m)
    assert 2 * np.pi * (1 - rep.beta_area) == pytest.approx(total_gauss_curvature(m), abs=0.03 * 2 * np.pi)


@pytest.mark.parametrize("R0", [1.0, 10.0, 100.0])
def test_split_consistency(R0):
    tol = 1e-8
    ref = integrate_plane(sph_density, tol).value
    assert integrate_plane(sph_density, tol, split_radius=R0).value == pytest.approx(ref, abs=3 * tol)


@given(st.floats(0.1, 3.0), st.floats(0.0, 2.0))
def test_monotone(scale, extra):
    tol = 1e-7
    d1 = ScalarField(lambda x, y: scale / (1.0 + x * x + y * y) ** 2)
    d2 = ScalarField(lambda x, y: (scale + extra) / (1.0 + x * x + y * y) ** 2 + extra * np.exp(-(x * x + y * y)))
    assert integrate_plane(d1, tol).value <= integrate_plane(d2, tol).value + 2 * tol


@given(st.floats(0.1, 5.0))
def test_disk_radial_oracle(R):
    # ∫_{|x|<R} 4/(1+r^2)^2 = 4πR²/(1+R²)
    r = integrate_polar(sph_density, 0.0, R, 1e-10)
    assert r.value == pytest.approx(4 * np.pi * R**2 / (1 + R**2), abs=1e-9)
