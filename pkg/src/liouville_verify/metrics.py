"""Conformal metrics ``g = e^{2f} g_0`` and the built-in families."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError, ParameterError, UsageError
from .fields import ScalarField, laplacian_fd

PUNCTURE_CUTOFF = 1e-3


def _log1p_sq(r):
    """``ln(1 + r^2)`` without overflow for huge ``r``."""
    r = np.abs(np.asarray(r, dtype=float))
    with np.errstate(divide="ignore"):
        return np.logaddexp(0.0, 2.0 * np.log(r))


@dataclass(frozen=True, eq=False)
class ConformalMetric:
    """``e^{2f}`` times the flat metric on the plane or the punctured plane.

    ``f_radial`` (when the factor depends on ``|x|`` only) maps a radius to
    ``f`` and enables the exact radial-distance oracle.  ``curvature`` is an
    optional closed-form ``K(x, y)``; it takes precedence over finite
    differences.
    """

    f: ScalarField
    curvature: Callable | None = None
    domain: str = "plane"
    name: str = "custom"
    params: tuple = ()
    f_radial: Callable | None = None
    inner_cutoff: float = 0.0

    def __post_init__(self):
        if self.domain not in ("plane", "punctured-plane"):
            raise UsageError(f"unknown domain tag {self.domain!r}")

    @property
    def label(self) -> str:
        return ":".join([self.name, *(f"{p:g}" for p in self.params)])

    @property
    def radial(self) -> bool:
        return self.f_radial is not None

    def area_weight(self, points):
        return np.exp(2.0 * np.asarray(self.f(points)))

    def length_weight(self, points):
        return np.exp(np.asarray(self.f(points)))

    def area_density(self, x, y):
        return np.exp(2.0 * self.f.evaluate(x, y))

    def length_density(self, x, y):
        return np.exp(self.f.evaluate(x, y))

    def curvature_density(self, x, y):
        """``K e^{2f}``, the Gauss-Bonnet integrand in plane coordinates."""
        if self.curvature is not None:
            return self.curvature(x, y) * np.exp(2.0 * self.f.evaluate(x, y))
        pts = np.stack(np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float)), -1)
        return -laplacian_fd(self.f, pts)


def gauss_curvature(metric: ConformalMetric, point, h=None):
    """``K = -e^{-2f} Δf``; the closed form is used when the metric carries one."""
    p = np.asarray(point, dtype=float)
    metric.f(p)  # raises DomainError at markers
    if metric.curvature is not None:
        out = np.asarray(metric.curvature(p[..., 0], p[..., 1]), dtype=float)
    else:
        out = -np.exp(-2.0 * np.asarray(metric.f(p))) * laplacian_fd(metric.f, p, h)
    return float(out) if np.ndim(out) == 0 else out


def numerical_curvature(metric: ConformalMetric, point, h=None):
    """Finite-difference curvature, ignoring any closed form."""
    p = np.asarray(point, dtype=float)
    out = -np.exp(-2.0 * np.asarray(metric.f(p))) * laplacian_fd(metric.f, p, h)
    return float(out) if np.ndim(out) == 0 else out


def metric_flat() -> ConformalMetric:
    zero = ScalarField(lambda x, y: 0.0 * x + 0.0 * y, name="f_flat")
    return ConformalMetric(
        f=zero,
        curvature=lambda x, y: 0.0 * np.asarray(x) + 0.0 * np.asarray(y),
        name="flat",
        f_radial=lambda s: 0.0 * np.asarray(s, dtype=float),
    )


def metric_gamma(gamma: float) -> ConformalMetric:
    """``e^{2f} = gamma / (1 + |x|^2)^{2 - 2 gamma}`` for ``gamma`` in [1/2, 1)."""
    gamma = float(gamma)
    if not 0.5 <= gamma < 1.0:
        raise ParameterError("gamma must lie in [1/2, 1) for a complete metric with K >= 0")
    half_log_g = 0.5 * np.log(gamma)

    def f_radial(s):
        return half_log_g - (1.0 - gamma) * _log1p_sq(s)

    def curvature(x, y):
        return 4.0 * (1.0 - gamma) / gamma * np.exp(-2.0 * gamma * _log1p_sq(np.hypot(x, y)))

    return ConformalMetric(
        f=ScalarField(lambda x, y: f_radial(np.hypot(x, y)), name=f"f_gamma{gamma:g}"),
        curvature=curvature,
        name="gamma",
        params=(gamma,),
        f_radial=f_radial,
    )


def metric_cylinder_pullback(cutoff: float = PUNCTURE_CUTOFF) -> ConformalMetric:
    """The flat cylinder as ``|z|^{-2} g_0`` on the punctured plane (``t = ln|z|``)."""
    f = ScalarField(
        lambda x, y: -np.log(np.hypot(x, y)),
        singularities=((0.0, 0.0),),
        name="f_cylinder",
        cutoff=cutoff,
    )
    return ConformalMetric(
        f=f,
        curvature=lambda x, y: 0.0 * np.asarray(x) + 0.0 * np.asarray(y),
        domain="punctured-plane",
        name="cylinder",
        f_radial=lambda s: -np.log(np.asarray(s, dtype=float)),
        inner_cutoff=cutoff,
    )


def metric_spherical() -> ConformalMetric:
    """Round metric pulled back by stereographic projection: ``f = ln(2/(1+|x|^2))``."""

    def f_radial(s):
        return np.log(2.0) - _log1p_sq(s)

    return ConformalMetric(
        f=ScalarField(lambda x, y: f_radial(np.hypot(x, y)), name="f_spherical"),
        curvature=lambda x, y: 1.0 + 0.0 * np.asarray(x) + 0.0 * np.asarray(y),
        name="spherical",
        f_radial=f_radial,
    )


def metric_from_factor(f: ScalarField, domain: str = "plane", name: str = "custom") -> ConformalMetric:
    """A metric with no closed-form curvature; ``K`` comes from finite differences."""
    return ConformalMetric(f=f, domain=domain, name=name, inner_cutoff=f.cutoff)


METRIC_FAMILIES = {
    "flat": (metric_flat, 0),
    "gamma": (metric_gamma, 1),
    "cylinder": (metric_cylinder_pullback, 0),
    "spherical": (metric_spherical, 0),
}


def parse_metric(spec: str) -> ConformalMetric:
    """Build a metric from a selector such as ``"gamma:0.75"`` or ``"flat"``."""
    name, *args = spec.strip().split(":")
    if name not in METRIC_FAMILIES:
        raise UsageError(f"unknown metric {name!r}; valid names: {', '.join(sorted(METRIC_FAMILIES))}")
    builder, nargs = METRIC_FAMILIES[name]
    if len(args) != nargs:
        raise UsageError(f"metric {name!r} takes {nargs} parameter(s), got {len(args)}")
    try:
        values = [float(a) for a in args]
    except ValueError as exc:
        raise UsageError(f"bad metric parameter in {spec!r}") from exc
    return builder(*values)


def check_curvature_consistency(metric: ConformalMetric, points, h=None):
    """Max relative gap between closed-form and finite-difference ``K`` at ``points``.

    The gap is measured against ``max(|K|, 1e-2)`` so that flat points, where
    only truncation noise remains, are compared absolutely.  Returns the gap
    and the smallest finite-difference curvature seen.
    """
    if metric.curvature is None:
        raise UsageError("metric has no closed-form curvature to compare against")
    p = np.asarray(points, dtype=float)
    if metric.domain == "punctured-plane":
        r = np.hypot(p[..., 0], p[..., 1])
        if np.any(r <= metric.inner_cutoff):
            raise DomainError("sample point inside the puncture cutoff")
    exact = np.asarray(metric.curvature(p[..., 0], p[..., 1]), dtype=float)
    numeric = numerical_curvature(metric, p, h)
    scale = np.maximum(np.abs(exact), 1e-2)
    return float(np.max(np.abs(numeric - exact) / scale)), float(np.min(numeric))
