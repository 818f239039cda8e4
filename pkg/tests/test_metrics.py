import numpy as np
import pytest
from hypothesis import given, strategies as st

from liouville_verify.errors import DomainError, ParameterError, UsageError
from liouville_verify.fields import ScalarField
from liouville_verify.metrics import (
    check_curvature_consistency,
    gauss_curvature,
    metric_cylinder_pullback,
    metric_flat,
    metric_from_factor,
    metric_gamma,
    metric_spherical,
    parse_metric,
)
from liouville_verify.solutions import sample_points


def test_flat():
    m = metric_flat()
    assert m.area_weight((3.0, -2.0)) == 1.0
    assert gauss_curvature(m, (1.0, 1.0)) == 0.0
    assert m.domain == "plane"


def test_gamma_curvature_example():
    K = gauss_curvature(metric_gamma(0.75), (1.0, 0.0))
    assert K == pytest.approx(1.0 / (0.75 * 2**1.5), abs=1e-3)
    assert K == pytest.approx(0.4714, abs=1e-3)


def test_gamma_examples():
    assert metric_gamma(0.75).area_weight((0.0, 0.0)) == pytest.approx(0.75)
    assert metric_gamma(1 - 1e-9).area_weight((3.0, 1.0)) == pytest.approx(1.0, abs=1e-7)
    assert gauss_curvature(metric_gamma(0.5), (0.0, 0.0)) == pytest.approx(4.0)
    for g in (0.3, 1.0, 1.2):
        with pytest.raises(ParameterError):
            metric_gamma(g)


def test_cylinder_pullback():
    m = metric_cylinder_pullback()
    assert m.domain == "punctured-plane"
    assert gauss_curvature(m, (3.0, 4.0)) == 0.0
    f_only = metric_from_factor(m.f, "punctured-plane")
    assert abs(gauss_curvature(f_only, (2.0, 0.0))) < 1e-5
    with pytest.raises(DomainError):
        gauss_curvature(m, (0.0, 0.0))
    # circle |z| = rho has length 2 pi for every rho
    th = np.linspace(0, 2 * np.pi, 2001)
    for rho in (0.5, 1.0, 2.0):
        pts = rho * np.stack([np.cos(th), np.sin(th)], -1)
        seg = np.hypot(*np.diff(pts, axis=0).T)
        mid = 0.5 * (pts[1:] + pts[:-1])
        assert np.sum(m.length_weight(mid) * seg) == pytest.approx(2 * np.pi, rel=1e-5)


def test_spherical_curvature_numeric():
    m = metric_spherical()
    f_only = metric_from_factor(m.f)
    for p in [(0, 0), (1, 0), (5, 5)]:
        assert gauss_curvature(f_only, p) == pytest.approx(1.0, abs=1e-4)


@pytest.mark.parametrize("m", [metric_flat(), metric_gamma(0.5), metric_gamma(0.75), metric_gamma(0.9), metric_spherical(), metric_cylinder_pullback()], ids=lambda m: m.label)
def test_closed_form_curvature_matches_fd(m):
    pts = sample_points(100, 0.05, 20.0, seed=3)
    rel, kmin = check_curvature_consistency(m, pts)
    assert rel < 1e-3
    assert kmin >= -1e-5  # finite-difference noise at flat points
    assert np.min(gauss_curvature(m, pts)) >= -1e-6


@given(st.floats(0.5, 0.99))
def test_gamma_curvature_monotone(g):
    m = metric_gamma(g)
    r = np.geomspace(1e-3, 1e3, 50)
    K = m.curvature(r, 0 * r)
    assert np.all(K >= 0)
    assert np.all(np.diff(K) <= 0)


def test_parse_metric():
    assert parse_metric("gamma:0.75").params == (0.75,)
    assert parse_metric("flat").name == "flat"
    with pytest.raises(UsageError, match="valid names"):
        parse_metric("hyperbolic")
    with pytest.raises(UsageError):
        parse_metric("gamma")
