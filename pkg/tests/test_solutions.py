import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from liouville_verify.errors import DomainError, ParameterError, UsageError
from liouville_verify.fields import ScalarField, constant_field
from liouville_verify.metrics import metric_flat
from liouville_verify.solutions import (
    LN2,
    LiouvilleSolution,
    cone_order_fit,
    flat_residual,
    kelvin_solution,
    kelvin_transform,
    parse_solution,
    pde_residual,
    rescaled,
    sample_points,
    solution_cylinder,
    solution_gamma,
    solution_spherical,
)

ALL = [solution_spherical()] + [solution_gamma(g) for g in (0.5, 0.6, 0.75, 0.9)] + [
    solution_cylinder(b, 0) for b in (0, 1, 2)
] + [solution_cylinder(1, m) for m in (0.5, 2.0)]


def test_spherical_examples():
    s = solution_spherical()
    assert s.u((0.0, 0.0)) == pytest.approx(LN2)
    assert abs(pde_residual(s, (1.0, 1.0))) < 1e-5
    assert abs(pde_residual(s, (0.5, 0.5))) < 1e-5
    x = 1e4
    # u/ln|x| tends to -2 slowly (ln 2 offset); the limit itself is checked on the slope
    a, b = s.u((x, 0.0)), s.u((x * 10, 0.0))
    assert (b - a) / np.log(10) == pytest.approx(-2.0, abs=1e-3)


def test_gamma_examples():
    s = solution_gamma(0.75)
    assert abs(pde_residual(s, (2.0, 1.0))) < 1e-5
    a, b = s.u((1e4, 0.0)), s.u((1e5, 0.0))
    assert (b - a) / np.log(10) == pytest.approx(-1.5, abs=1e-2)
    assert np.exp(2 * solution_gamma(0.5).u((0.0, 0.0))) == pytest.approx(4.0)
    assert abs(pde_residual(solution_gamma(0.6), (1.0, 0.0))) < 1e-5


def test_cylinder_examples():
    s = solution_cylinder(0, 0)
    t = np.linspace(-5, 5, 11)
    z = np.stack([np.exp(t), 0 * t], -1)
    assert np.allclose(s.u(z), -np.log(np.cosh(t)), atol=1e-12)
    # u ~ -|t| + ln 2: the slope in t is the decay rate
    u20, u21 = s.u((np.exp(20.0), 0.0)), s.u((np.exp(21.0), 0.0))
    assert u21 - u20 == pytest.approx(-1.0, abs=1e-2)
    assert s.u((np.exp(20.0), 0.0)) / 20 == pytest.approx(-1.0, abs=0.05)


def test_non_solution_residual_is_one():
    zero = LiouvilleSolution(constant_field(0.0), metric_flat(), "custom")
    assert pde_residual(zero, (0.3, 0.2)) == pytest.approx(1.0, abs=1e-12)


def test_cylinder_parameter_rules():
    with pytest.raises(ParameterError):
        solution_cylinder(0.5, 1.0)
    with pytest.raises(ParameterError):
        solution_cylinder(-1.0, 0.0)
    solution_cylinder(0.5, 0.0)
    with pytest.raises(DomainError):
        solution_cylinder(0, 0).u((0.0, 0.0))


@pytest.mark.parametrize("sol", ALL + [kelvin_solution(s) for s in ALL], ids=lambda s: s.label)
def test_residual_and_order(sol):
    pts = sample_points(200, 0.25, 4.0, seed=0)
    h = sol.u.default_step(pts)
    r1 = np.abs(pde_residual(sol, pts, h))
    r2 = np.abs(pde_residual(sol, pts, h / 2))
    assert r1.max() <= 1e-4
    i = r1.argmax()
    assert r1[i] / r2[i] == pytest.approx(4.0, rel=0.2)


def test_kelvin_examples():
    w = solution_cylinder(0, 0).w
    assert abs(flat_residual(kelvin_transform(w), (0.5, 0.0))) < 1e-4
    pts = sample_points(20, 0.1, 10.0, seed=5)
    ww = kelvin_transform(kelvin_transform(w))
    assert np.allclose(ww(pts), w(pts), atol=1e-8)
    sph = solution_spherical().u
    th = np.linspace(0, 2 * np.pi, 7)
    ring = np.stack([np.cos(th), np.sin(th)], -1)
    assert np.allclose(kelvin_transform(sph)(ring), sph(ring), atol=1e-14)
    with pytest.raises(DomainError):
        kelvin_transform(sph)((0.0, 0.0))


@given(st.floats(-3, 3), st.floats(-3, 3))
def test_kelvin_involution_property(x, y):
    if np.hypot(x, y) < 0.05:
        return
    w = solution_cylinder(1, 0.5).w
    assert kelvin_transform(kelvin_transform(w))((x, y)) == pytest.approx(w((x, y)), abs=1e-9)


@pytest.mark.parametrize("lam", [0.5, 2.0, 10.0])
def test_scaling_covariance(lam):
    s = rescaled(solution_spherical(), lam)
    pts = sample_points(50, 0.1, 3.0, seed=1)
    assert np.abs(pde_residual(s, pts)).max() < 1e-4


@pytest.mark.parametrize("b", [0, 1, 2])
def test_cone_orders(b):
    est = cone_order_fit(solution_cylinder(b, 0).w)
    assert est.beta1 == pytest.approx(b, abs=0.05 * max(1, b))
    assert est.beta2 == pytest.approx(-b - 2, rel=0.05)
    assert est.beta1 > -1 and est.beta2 < -1
    assert est.conical and est.satisfies_bounds


def test_cone_orders_with_mu():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        est = cone_order_fit(solution_cylinder(1, 2.0).w)
    assert est.beta1 > -1 and est.beta2 < -1


def test_cone_order_constant_flagged():
    with pytest.warns(RuntimeWarning, match="violate"):
        est = cone_order_fit(constant_field(0.0))
    assert est.beta1 == pytest.approx(0.0) and est.beta2 == pytest.approx(0.0)
    assert not est.satisfies_bounds
    with pytest.raises(UsageError):
        cone_order_fit(constant_field(0.0), inner_radii=[1e-3, 2e-3])


def test_parse_solution():
    assert parse_solution("cylinder:1:0").params == (1.0, 0.0)
    assert parse_solution("cylinder:0").params == (0.0, 0.0)
    with pytest.raises(UsageError, match="valid names"):
        parse_solution("toroidal")
    with pytest.raises(UsageError):
        parse_solution("gamma:x")
