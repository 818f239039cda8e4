"""The logarithmic potential ``v(x) = (1/2π) ∫ ψ(y) ln(|x-y|/|y|) dy`` of a
curvature density and the checks built on it: conjugacy ``u + v = const``,
the growth bound on ``v``, the Green mean-value identity, ball averages of
``u``, and asymptotic slope fits.

The plane is split along the perpendicular bisector of ``0`` and ``x``.  The
half-plane nearer ``x`` is integrated in polar coordinates about ``x`` (the
``ln|x-y|`` singularity becomes ``s ln s``), the other half in polar
coordinates about ``0``; far fields are compactified by ``σ = 1/s``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .errors import DivergenceError, UsageError
from .fields import ScalarField, laplacian_fd, polar_ring
from .geodesics import DistanceField, radial_distance_field
from .metrics import ConformalMetric
from .quadrature import adaptive_quad, alpha_of, angular_integral, decay_exponent, integrate_polar
from .solutions import LiouvilleSolution, sample_points

DEFAULT_TOL = 1e-8


@dataclass
class PotentialSample:
    x: tuple
    value: float
    error: float
    converged: bool
    split: str = "bisector"


def _fn(psi):
    return psi.evaluate if isinstance(psi, ScalarField) else psi


def _ray(g, smax, s1, tol):
    """``∫_0^{smax} g(s) ds`` with the part beyond ``s1`` compactified."""
    head = adaptive_quad(g, 0.0, min(smax, s1), tol)
    val, err, ok = head.value, head.error, head.converged
    if smax > s1:
        lo = 0.0 if math.isinf(smax) else 1.0 / smax
        tail = adaptive_quad(lambda sig: g(1.0 / sig) / sig**2, lo, 1.0 / s1, tol)
        val, err, ok = val + tail.value, err + tail.error, ok and tail.converged
    return val, err, ok


def _half_plane(fn, x, centre_is_x, tol):
    """Integral of ``ψ(y)(ln|x-y| - ln|y|)`` over one side of the bisector."""
    ax = math.hypot(*x)
    thx = math.atan2(x[1], x[0])
    s1 = max(10.0, 10.0 * ax)
    inner_tol = tol / (4 * np.pi)
    ok = [True]

    def along(phi):
        c = math.cos(phi - thx)
        ex, ey = math.cos(phi), math.sin(phi)
        if centre_is_x:
            smax = ax / (2 * -c) if c < 0 else math.inf

            def g(s):
                yx, yy = x[0] + s * ex, x[1] + s * ey
                return fn(yx, yy) * (np.log(s) - 0.5 * np.log(yx * yx + yy * yy)) * s
        else:
            smax = ax / (2 * c) if c > 0 else math.inf

            def g(s):
                yx, yy = s * ex, s * ey
                return fn(yx, yy) * (0.5 * np.log((x[0] - yx) ** 2 + (x[1] - yy) ** 2) - np.log(s)) * s
        val, _, conv = _ray(g, smax, s1, inner_tol)
        ok[0] &= conv
        return val

    def outer(phis):
        return np.array([along(p) for p in np.atleast_1d(phis)])

    # the radial extent blows up at thx ± π/2
    bps = sorted(((thx + k * np.pi / 2) % (2 * np.pi)) for k in range(4))
    res = adaptive_quad(outer, 0.0, 2 * np.pi, tol, breakpoints=bps)
    return res.value, res.error, res.converged and ok[0]


def log_potential(psi, x, tol: float = DEFAULT_TOL, check_decay: bool = True) -> PotentialSample:
    """``v(x)`` for a nonnegative density ``psi`` with finite plane integral."""
    x = (float(x[0]), float(x[1]))
    fn = _fn(psi)
    if check_decay and decay_exponent(fn) <= 2.0:
        raise DivergenceError("density mass diverges; the potential is undefined", None)
    if x == (0.0, 0.0):
        return PotentialSample(x, 0.0, 0.0, True)
    a, ea, oka = _half_plane(fn, x, True, 0.5 * tol)
    b, eb, okb = _half_plane(fn, x, False, 0.5 * tol)
    return PotentialSample(x, (a + b) / (2 * np.pi), (ea + eb) / (2 * np.pi), oka and okb)


def potential_field(psi, tol: float = DEFAULT_TOL) -> ScalarField:
    """``v`` wrapped as a :class:`ScalarField` (one quadrature per point)."""
    fn = _fn(psi)

    def v(xs, ys):
        xs, ys = np.broadcast_arrays(np.asarray(xs, float), np.asarray(ys, float))
        out = np.array([log_potential(fn, (a, b), tol, check_decay=False).value for a, b in zip(xs.ravel(), ys.ravel())])
        return out.reshape(xs.shape)

    return ScalarField(v, name="v")


def radial_potential(p, R: float, tol: float = 1e-12) -> float:
    """``v`` at ``|x| = R`` for a radial density ``p(ρ)``: ``∫_0^R p(ρ) ρ ln(R/ρ) dρ``."""
    if R == 0:
        return 0.0
    return adaptive_quad(lambda r: p(r) * r * np.log(R / r), 0.0, R, tol).value


@dataclass
class ConjugacyResult:
    deviation: float
    values: np.ndarray
    points: np.ndarray


def conjugacy_check(sol: LiouvilleSolution, points=None, u: ScalarField | None = None, tol: float = DEFAULT_TOL) -> ConjugacyResult:
    """``max - min`` of ``u + v`` over sample points (``u`` may be overridden)."""
    pts = sample_points(20, 0.05, 20.0, seed=7) if points is None else np.asarray(points, float)
    u = sol.u if u is None else u
    psi = sol.density
    vals = np.array([u(p) + log_potential(psi, p, tol, check_decay=False).value for p in pts])
    return ConjugacyResult(float(vals.max() - vals.min()), vals, pts)


@dataclass
class BoundednessCheck:
    """Running supremum of a quantity over a geometric radius ladder."""

    radii: np.ndarray
    sup_per_radius: np.ndarray
    running_sup: np.ndarray
    increments: np.ndarray
    stable: bool
    extra: dict = field(default_factory=dict)


def _running_sup(radii, sups, stab_tol):
    run = np.maximum.accumulate(sups)
    inc = np.diff(run)
    stable = bool(len(inc) == 0 or inc[-1] <= stab_tol)
    return BoundednessCheck(np.asarray(radii, float), np.asarray(sups), run, inc, stable)


def growth_bound_check(psi, alpha: float, radii=(10.0, 1e2, 1e3), n_angles: int = 8, tol: float = DEFAULT_TOL, stab_tol: float = 1e-2) -> BoundednessCheck:
    """Sup of ``v(x) + α ln|x|`` on circles; stable when the running sup stops growing."""
    fn = _fn(psi)
    sups = []
    for R, ring in zip(radii, polar_ring(radii, n_angles)):
        vals = [log_potential(fn, p, tol, check_decay=False).value for p in ring]
        sups.append(max(vals) + alpha * math.log(R))
    return _running_sup(radii, sups, stab_tol)


def potential_upper_bound_check(sol: LiouvilleSolution, radii=(10.0, 1e2, 1e3), n_angles: int = 8, tol: float = DEFAULT_TOL, stab_tol: float = 1e-2) -> BoundednessCheck:
    """Claim: ``v(x) <= -α ln|x| + C`` for large ``|x|``."""
    alpha = alpha_of(sol)
    out = growth_bound_check(sol.density, alpha, radii, n_angles, tol, stab_tol)
    out.extra["alpha"] = alpha
    return out


def mean_value_residual(u, psi, x, rho: float, tol: float = 1e-10, form: str = "ball") -> float:
    """Residual of the Green representation of ``u`` (with ``Δu = -ψ``) on ``B_ρ(x)``.

    ``form="ball"``: ``u(x) = mean_B u + (1/2π)∫_B ψ [ln(ρ/|x-y|) - (1 - |x-y|²/ρ²)/2]``.
    ``form="circle"``: ``u(x) = mean_{∂B} u + (1/2π)∫_B ψ ln(ρ/|x-y|)``.
    ``form="ball-log"``: ball mean with the bare ``ln(ρ/|x-y|)`` kernel; this
    is off by ``(1/4π)∫_B ψ (1 - |x-y|²/ρ²)`` and is kept to measure that gap.
    """
    if form not in ("ball", "circle", "ball-log"):
        raise UsageError(f"unknown mean-value form {form!r}")
    uf = _fn(u)
    x = (float(x[0]), float(x[1]))
    if form == "circle":
        mean = angular_integral(uf, np.array([rho]), x)[0][0] / (2 * np.pi)
    else:
        mean = integrate_polar(uf, 0.0, rho, tol, center=x).value / (np.pi * rho**2)
    green = 0.0
    if psi is not None:
        fn = _fn(psi)
        corr = 0.5 if form == "ball" else 0.0

        def kern(a, b):
            s2 = (a - x[0]) ** 2 + (b - x[1]) ** 2
            return fn(a, b) * (np.log(rho) - 0.5 * np.log(s2) - corr * (1.0 - s2 / rho**2))

        green = integrate_polar(kern, 0.0, rho, tol, center=x).value / (2 * np.pi)
    ux = float(np.asarray(uf(np.array(x[0]), np.array(x[1]))))
    return abs(ux - mean - green)


def mean_value_identity_check(sol: LiouvilleSolution, x, rho: float, tol: float = 1e-10, form: str = "ball") -> float:
    return mean_value_residual(sol.u, sol.density, x, rho, tol, form)


def average_upper_bound_check(sol: LiouvilleSolution, sigma: float = 1.0, eps: float = 0.1, radii=(10.0, 1e2, 1e3, 1e4), n_angles: int = 8, stab_tol: float = 1e-2, alpha: float | None = None) -> BoundednessCheck:
    """Ball averages ``(1/πρ²)∫_{B_ρ(x)} u - (α+ε) ln|x|`` with ``ρ = |x|^{-σ}``.

    The raw claim-(3) term ``∫_{B_ρ(x)} ψ ln(|y|/|x-y|)`` is reported per
    radius in ``extra["residual_terms"]`` without asserting a bound on it.
    """
    alpha = alpha_of(sol) if alpha is None else alpha
    uf, psi = sol.u.evaluate, sol.density.evaluate
    sups, resid = [], []
    for R, ring in zip(radii, polar_ring(radii, n_angles)):
        rho = R ** (-sigma)
        vals, rterms = [], []
        for p in ring:
            c = (float(p[0]), float(p[1]))
            avg = integrate_polar(uf, 0.0, rho, 1e-12, center=c).value / (np.pi * rho**2)
            vals.append(avg - (alpha + eps) * math.log(R))
            rterms.append(
                integrate_polar(
                    lambda a, b: psi(a, b) * (0.5 * np.log(a * a + b * b) - np.log(np.hypot(a - c[0], b - c[1]))),
                    0.0, rho, 1e-14, center=c,
                ).value
            )
        sups.append(max(vals))
        resid.append(max(rterms))
    out = _running_sup(radii, sups, stab_tol)
    out.extra.update(alpha=alpha, sigma=sigma, eps=eps, residual_terms=resid)
    return out


def laplacian_of_potential(psi, points, h: float = 0.02, tol: float = 1e-11):
    """Relative gap between ``Δ_fd v`` and ``ψ`` at the given points."""
    v = potential_field(psi, tol)
    pts = np.asarray(points, float)
    lap = np.array([laplacian_fd(v, p, h) for p in pts])
    target = _fn(psi)(pts[:, 0], pts[:, 1])
    return np.abs(lap - target) / np.abs(target), lap


@dataclass
class SlopeEstimate:
    """Least-squares slope of an angular-averaged field against an abscissa."""

    slope: float
    intercept: float
    band: float
    radii: np.ndarray
    abscissa: np.ndarray
    ordinate: np.ndarray
    against: str


def slope_estimate(field_: ScalarField, against="ln-euclid", radii=None, n_angles: int = 32, abscissa: str | None = None, confidence: float = 0.95) -> SlopeEstimate:
    """Slope of ``mean_θ field`` against ``ln|x|``, ``ln r(x)`` or ``r(x)``.

    ``against`` is ``"ln-euclid"``, a :class:`DistanceField`, or a radial
    :class:`ConformalMetric` (exact distance oracle).  ``abscissa`` picks
    ``"log"`` (default) or ``"linear"`` for distance abscissas.  ``band`` is
    the half width of the confidence interval of the slope.
    """
    radii = np.geomspace(1e8, 1e12, 9) if radii is None else np.asarray(radii, float)
    rings = polar_ring(radii, n_angles)
    y = np.asarray(field_(rings)).mean(axis=1)
    if isinstance(against, str):
        if against not in ("ln-euclid", "euclid"):
            raise UsageError(f"unknown abscissa source {against!r}")
        xs = np.log(radii)
        tag = "ln|x|"
    else:
        dist = radial_distance_field(against) if isinstance(against, ConformalMetric) else against
        if not isinstance(dist, DistanceField):
            raise UsageError("against must be 'ln-euclid', a DistanceField or a radial metric")
        r = np.asarray(dist(rings))
        if (abscissa or "log") == "log":
            xs = np.log(r).mean(axis=1)
            tag = "ln r"
        else:
            xs = r.mean(axis=1)
            tag = "r"
    fit = stats.linregress(xs, y)
    if len(xs) > 2:
        band = float(stats.t.ppf(0.5 + confidence / 2, len(xs) - 2) * fit.stderr)
    else:
        band = math.inf
    return SlopeEstimate(float(fit.slope), float(fit.intercept), band, radii, xs, y, tag)


@dataclass
class ImplicationCheck:
    """``hypothesis ⟹ conclusion`` evaluated at desk scale."""

    hypothesis: bool
    conclusion: bool
    consistent: bool
    values: dict


def prop_lower_check(slope_intrinsic: float, alpha: float, beta: float, slack: float = 0.05) -> ImplicationCheck:
    """``u >= -2 ln r + o(ln r)`` should force ``α >= -2β``."""
    hyp = slope_intrinsic >= -2.0 - slack
    concl = alpha >= -2.0 * beta - slack
    return ImplicationCheck(hyp, concl, (not hyp) or concl, dict(slope=slope_intrinsic, alpha=alpha, beta=beta))


def liminf_ratio(u: ScalarField, dist, radii=None, n_angles: int = 32) -> float:
    """``min_θ u(x)/ln r(x)`` on the outermost circle."""
    radii = np.geomspace(1e8, 1e12, 9) if radii is None else np.asarray(radii, float)
    dist = radial_distance_field(dist) if isinstance(dist, ConformalMetric) else dist
    ring = polar_ring(radii[-1:], n_angles)
    return float(np.min(np.asarray(u(ring)) / np.log(np.asarray(dist(ring)))))


def p1_check(ratio: float, alpha: float, beta: float, slack: float = 0.05) -> ImplicationCheck:
    """For ``β > 0``: ``liminf u/ln r`` is finite and at least ``α/β``."""
    if beta <= 0:
        raise UsageError("the bound needs a positive asymptotic volume ratio")
    ok = math.isfinite(ratio) and ratio >= alpha / beta - slack
    return ImplicationCheck(True, ok, ok, dict(ratio=ratio, bound=alpha / beta))
