"""Adaptive integration over intervals, disks, annuli and the whole plane.

The 1-D engine is a globally adaptive Gauss-Kronrod (7/15) rule evaluated
panel-batch at a time.  Plane integrals use polar coordinates: a periodic
trapezoid rule in the angle (spectrally accurate for smooth integrands,
refined by doubling) nested inside the adaptive radial rule.  The far field
``rho > R0`` is compactified by ``s = 1/rho``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InfiniteTotalCurvatureError, UsageError
from .fields import ScalarField

_XGK = np.array([
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0,
])
_WGK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327,
])
_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])  # 15 nodes, ascending
_KW = np.concatenate([_WGK[:-1], _WGK[::-1]])
_GW = np.zeros(15)
_GW[[1, 3, 5, 7, 9, 11, 13]] = np.concatenate([_WG[:-1], _WG[::-1]])

DEFAULT_TOL = 1e-6
DEFAULT_SPLIT_RADIUS = 10.0


@dataclass
class QuadResult:
    value: float
    error: float
    panels: int
    converged: bool


def adaptive_quad(fn, a: float, b: float, tol: float = DEFAULT_TOL, rtol: float = 0.0, max_panels: int = 4000, breakpoints=()):
    """Globally adaptive Gauss-Kronrod quadrature of a vectorized ``fn`` on ``[a, b]``.

    Panels whose error estimate exceeds the mean are bisected until the
    summed estimate meets ``max(tol, rtol * |value|)``.  The endpoints are
    never evaluated, so integrable endpoint singularities are fine.
    """
    if not b > a:
        if b == a:
            return QuadResult(0.0, 0.0, 0, True)
        raise UsageError("adaptive_quad needs a < b")
    edges = np.unique(np.concatenate([[a], [p for p in breakpoints if a < p < b], [b]]))
    lo, hi = edges[:-1], edges[1:]
    min_half = 1e-13 * (b - a)
    done_val = 0.0
    done_err = 0.0
    n_done = 0
    while True:
        mid = 0.5 * (lo + hi)
        half = 0.5 * (hi - lo)
        x = mid[:, None] + half[:, None] * _NODES[None, :]
        fx = np.asarray(fn(x.ravel()), dtype=float).reshape(x.shape)
        if not np.all(np.isfinite(fx)):
            raise ArithmeticError("non-finite integrand value in adaptive quadrature")
        kron = half * (fx @ _KW)
        gauss = half * (fx @ _GW)
        err = np.abs(kron - gauss)
        value = done_val + kron.sum()
        total_err = done_err + err.sum()
        target = max(tol, rtol * abs(value))
        n_panels = n_done + len(lo)
        if total_err <= target:
            return QuadResult(float(value), float(total_err), n_panels, True)
        if n_panels >= max_panels:
            return QuadResult(float(value), float(total_err), n_panels, False)
        split = err > min(err.mean(), target / max(n_panels, 1))
        split[np.argmax(err)] = True
        split &= half > min_half  # panels at roundoff width are final
        if not split.any():
            return QuadResult(float(value), float(total_err), n_panels, False)
        done_val += kron[~split].sum()
        done_err += err[~split].sum()
        n_done += int((~split).sum())
        m = mid[split]
        lo = np.concatenate([lo[split], m])
        hi = np.concatenate([m, hi[split]])


def _as_density(density):
    if isinstance(density, ScalarField):
        return density.evaluate
    return density


def angular_integral(density, rho, center=(0.0, 0.0), n0: int = 32, max_n: int = 8192, rtol: float = 1e-12):
    """``∫_0^{2π} density(c + rho e^{iθ}) dθ`` for an array of radii.

    Periodic trapezoid rule with nested doubling until successive estimates
    agree to ``rtol``.  Returns ``(values, converged)``.
    """
    fn = _as_density(density)
    rho = np.asarray(rho, dtype=float)
    theta0 = 0.1234
    n = n0
    th = theta0 + 2.0 * np.pi * np.arange(n) / n
    r = rho[..., None]
    vals = fn(center[0] + r * np.cos(th), center[1] + r * np.sin(th))
    total = vals.sum(axis=-1)
    est = 2.0 * np.pi * total / n
    while n < max_n:
        th = theta0 + 2.0 * np.pi * (np.arange(n) + 0.5) / n
        vals = fn(center[0] + r * np.cos(th), center[1] + r * np.sin(th))
        total = total + vals.sum(axis=-1)
        n *= 2
        new = 2.0 * np.pi * total / n
        if np.all(np.abs(new - est) <= rtol * np.abs(new) + 1e-300):
            return new, True
        est = new
    return est, False


def integrate_polar(density, r0: float, r1: float, tol: float = DEFAULT_TOL, center=(0.0, 0.0), breakpoints=()):
    """``∫∫ density`` over the annulus ``r0 < |x - center| < r1`` (``r1`` finite)."""
    ang_ok = [True]

    def radial(rho):
        m, ok = angular_integral(density, rho, center)
        ang_ok[0] &= ok
        return rho * m

    res = adaptive_quad(radial, r0, r1, tol, breakpoints=breakpoints)
    res.converged &= ang_ok[0]
    return res


@dataclass
class PlanarIntegral:
    """Result of a whole-plane integral; a divergent one carries ``value = nan``."""

    value: float
    error: float
    converged: bool
    tail_fraction: float
    panels: int = 0
    diverged: bool = False
    growth_exponent: float | None = None
    split_radius: float = DEFAULT_SPLIT_RADIUS

    def __post_init__(self):
        if self.converged and self.error > 0:
            assert 0.0 <= self.tail_fraction <= 1.0


def decay_exponent(density, center=(0.0, 0.0), radii=(1e4, 1e5, 1e6)):
    """Fitted ``p`` in ``mean_θ density ~ rho^{-p}`` at large radii (``inf`` if zero)."""
    rho = np.asarray(radii, dtype=float)
    m, _ = angular_integral(density, rho, center, n0=64, max_n=64)
    m = np.abs(m)
    pos = m > 0
    if pos.sum() < 2:
        return math.inf
    slope = np.polyfit(np.log(rho[pos]), np.log(m[pos]), 1)[0]
    return float(-slope)


def integrate_plane(density, tol: float = DEFAULT_TOL, split_radius: float = DEFAULT_SPLIT_RADIUS, center=(0.0, 0.0), decay_margin: float = 0.05, max_panels: int = 4000):
    """Integral of a nonnegative density over the whole plane.

    Disk ``rho < R0`` plus the compactified tail.  A density whose angular
    mean decays no faster than ``rho^{-2-decay_margin}`` is reported as
    diverged (``value = nan``) with the estimated mass growth exponent.
    """
    if not tol > 0:
        raise UsageError("tolerance must be positive")
    p = decay_exponent(density, center, radii=np.array([1e4, 1e5, 1e6]) * max(1.0, split_radius / 10.0))
    if p <= 2.0 + decay_margin:
        return PlanarIntegral(math.nan, math.inf, False, math.nan, 0, True, 2.0 - p, split_radius)
    disk = integrate_polar(density, 0.0, split_radius, 0.5 * tol, center)

    ang_ok = [True]

    def tail(s):
        m, ok = angular_integral(density, 1.0 / s, center)
        ang_ok[0] &= ok
        return m / s**3

    far = adaptive_quad(tail, 0.0, 1.0 / split_radius, 0.5 * tol, max_panels=max_panels)
    total = disk.value + far.value
    denom = abs(disk.value) + abs(far.value)
    frac = abs(far.value) / denom if denom > 0 else 0.0
    ok = disk.converged and far.converged and ang_ok[0]
    return PlanarIntegral(
        total,
        disk.error + far.error,
        ok,
        frac,
        disk.panels + far.panels,
        growth_exponent=2.0 - p if math.isfinite(p) else None,
        split_radius=split_radius,
    )


def alpha_of(sol, tol: float = DEFAULT_TOL) -> float:
    """``α = -(1/2π) ∫ e^{2f+2u} dx``."""
    res = integrate_plane(sol.density, tol)
    if res.diverged or not res.converged:
        raise InfiniteTotalCurvatureError(f"{sol.label}: total curvature does not converge", res)
    return -res.value / (2.0 * np.pi)


def total_mass(sol, tol: float = DEFAULT_TOL) -> PlanarIntegral:
    """``∫ e^{2f+2u} dx`` as a full :class:`PlanarIntegral` record."""
    return integrate_plane(sol.density, tol)


def total_gauss_curvature(metric, tol: float = DEFAULT_TOL) -> float:
    """``∫ K dg = ∫ K e^{2f} dx`` over the plane."""
    res = integrate_plane(metric.curvature_density, tol)
    if res.diverged or not res.converged:
        raise InfiniteTotalCurvatureError(f"{metric.label}: total curvature does not converge", res)
    return res.value
