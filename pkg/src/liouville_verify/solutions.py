"""Closed-form solution families, PDE residuals, Kelvin transform, cone orders."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ParameterError, UsageError
from .fields import ScalarField, laplacian_fd, polar_ring
from .metrics import (
    ConformalMetric,
    PUNCTURE_CUTOFF,
    _log1p_sq,
    metric_cylinder_pullback,
    metric_flat,
    metric_gamma,
)

LN2 = float(np.log(2.0))


@dataclass(frozen=True, eq=False)
class LiouvilleSolution:
    """A solution ``u`` of ``Δu + e^{2f} e^{2u} = 0`` for the metric ``e^{2f} g_0``.

    ``w`` is the flat punctured-plane representative of cylinder solutions
    (``e^{2w} = e^{2u}/|z|^2``).  ``u_radial`` is ``u`` as a function of
    ``|x|`` when the solution is radially symmetric about the origin.
    """

    u: ScalarField
    metric: ConformalMetric
    family: str = "custom"
    params: tuple = ()
    w: ScalarField | None = None
    u_radial: Callable | None = None

    @property
    def label(self) -> str:
        return ":".join([self.family, *(f"{p:g}" for p in self.params)])

    @property
    def density(self) -> ScalarField:
        """``psi = e^{2f + 2u}``, the curvature density in plane coordinates."""
        f, u = self.metric.f, self.u
        markers = tuple(dict.fromkeys(f.singularities + u.singularities))
        return ScalarField(
            lambda x, y: np.exp(2.0 * f.func(x, y) + 2.0 * u.func(x, y)),
            singularities=markers,
            name=f"psi[{self.label}]",
            scale=min(f.scale, u.scale),
            cutoff=max(f.cutoff, u.cutoff),
        )

    def u_max(self) -> float:
        """Supremum of ``u`` (known in closed form for the built-in families)."""
        if self.family == "spherical":
            return LN2
        if self.family == "gamma":
            return LN2
        if self.family == "cylinder":
            b, mu = self.params
            if mu == 0:
                return 0.0
        raise UsageError(f"no closed-form maximum for family {self.family!r}")


def solution_spherical() -> LiouvilleSolution:
    """``u = ln(2 / (1 + |x|^2))`` over the flat plane."""
    def u_radial(r):
        return LN2 - _log1p_sq(r)

    u = ScalarField(lambda x, y: u_radial(np.hypot(x, y)), name="u_spherical")
    return LiouvilleSolution(u, metric_flat(), "spherical", (), u_radial=u_radial)


def solution_gamma(gamma: float) -> LiouvilleSolution:
    """``e^{2u} = 4/(1+|x|^2)^{2 gamma}`` over ``metric_gamma(gamma)``."""
    metric = metric_gamma(gamma)
    gamma = float(gamma)

    def u_radial(r):
        return LN2 - gamma * _log1p_sq(r)

    u = ScalarField(lambda x, y: u_radial(np.hypot(x, y)), name=f"u_gamma{gamma:g}")
    return LiouvilleSolution(u, metric, "gamma", (gamma,), u_radial=u_radial)


def _int_power(z, k: int):
    """``z**k`` by repeated multiplication (integer ``k >= 1``)."""
    out = z
    for _ in range(k - 1):
        out = out * z
    return out


def _cylinder_log_denominator(x, y, k, mu):
    """``ln(|1 + mu z^k|^2 + |z|^{2k})``, stable for small and large ``|z|``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    with np.errstate(divide="ignore"):
        log_r = np.log(np.hypot(x, y))
    if mu == 0:
        return np.logaddexp(0.0, 2.0 * k * log_r)
    z = x + 1j * y
    inside = np.abs(z) <= 1.0
    out = np.empty(np.broadcast(x, y).shape)
    zi = np.broadcast_to(z, out.shape)[inside]
    if zi.size:
        zk = _int_power(zi, k)
        out[inside] = np.log(np.abs(1.0 + mu * zk) ** 2 + np.abs(zk) ** 2)
    zo = np.broadcast_to(z, out.shape)[~inside]
    if zo.size:
        inv_k = _int_power(1.0 / zo, k)
        out[~inside] = 2.0 * k * np.log(np.abs(zo)) + np.log(np.abs(inv_k + mu) ** 2 + 1.0)
    return out


def solution_cylinder(b: float, mu: float = 0.0, cutoff: float = PUNCTURE_CUTOFF) -> LiouvilleSolution:
    """Finite-total-curvature solutions on the flat cylinder, as functions of ``z``.

    ``e^{2u} = (2b+2)^2 |z|^{2b+2} / (|1 + mu z^{b+1}|^2 + |z|^{2b+2})^2`` with
    ``b > -1``, ``mu >= 0``, and ``b`` a nonnegative integer whenever ``mu > 0``.
    """
    b = float(b)
    mu = float(mu)
    if not b > -1:
        raise ParameterError("cone parameter b must exceed -1")
    if mu < 0:
        raise ParameterError("mu must be nonnegative")
    if mu > 0 and (b != int(b) or b < 0):
        raise ParameterError("mu > 0 requires a nonnegative integer b (z^{b+1} must be single valued)")
    k = int(b) + 1 if mu > 0 else b + 1.0
    log_c = float(np.log(2.0 * b + 2.0))

    def u_func(x, y):
        log_r = np.log(np.hypot(x, y))
        return log_c + (b + 1.0) * log_r - _cylinder_log_denominator(x, y, k, mu)

    def w_func(x, y):
        return u_func(x, y) - np.log(np.hypot(x, y))

    origin = ((0.0, 0.0),)
    scale = 1.0 if mu == 0 else min(1.0, 0.25 * mu ** (-1.0 / k))
    u = ScalarField(u_func, origin, name=f"u_cyl{b:g}_{mu:g}", scale=scale, cutoff=cutoff)
    w = ScalarField(w_func, origin, name=f"w_cyl{b:g}_{mu:g}", scale=scale, cutoff=cutoff)
    u_radial = None
    if mu == 0:
        def u_radial(r):
            lr = np.log(np.asarray(r, dtype=float))
            return log_c + (b + 1.0) * lr - np.logaddexp(0.0, 2.0 * (b + 1.0) * lr)

    return LiouvilleSolution(u, metric_cylinder_pullback(cutoff), "cylinder", (b, mu), w=w, u_radial=u_radial)


SOLUTION_FAMILIES = {
    "spherical": (solution_spherical, (0,)),
    "gamma": (solution_gamma, (1,)),
    "cylinder": (solution_cylinder, (1, 2)),
}


def parse_solution(spec: str) -> LiouvilleSolution:
    """Build a solution from ``"spherical"``, ``"gamma:0.75"`` or ``"cylinder:1:0"``."""
    name, *args = spec.strip().split(":")
    if name not in SOLUTION_FAMILIES:
        raise UsageError(
            f"unknown solution {name!r}; valid names: {', '.join(sorted(SOLUTION_FAMILIES))}"
        )
    builder, counts = SOLUTION_FAMILIES[name]
    if len(args) not in counts:
        raise UsageError(f"solution {name!r} takes {' or '.join(map(str, counts))} parameter(s)")
    try:
        values = [float(a) for a in args]
    except ValueError as exc:
        raise UsageError(f"bad solution parameter in {spec!r}") from exc
    return builder(*values)


def pde_residual(sol: LiouvilleSolution, point, h=None):
    """``Δ_fd u + e^{2f} e^{2u}`` at ``point`` (or an (N, 2) array of points)."""
    p = np.asarray(point, dtype=float)
    lap = laplacian_fd(sol.u, p, h)
    src = np.exp(2.0 * np.asarray(sol.metric.f(p)) + 2.0 * np.asarray(sol.u(p)))
    out = lap + src
    return float(out) if np.ndim(out) == 0 else out


def flat_residual(w: ScalarField, point, h=None):
    """``Δ_fd w + e^{2w}``: residual of the flat Liouville equation."""
    p = np.asarray(point, dtype=float)
    out = laplacian_fd(w, p, h) + np.exp(2.0 * np.asarray(w(p)))
    return float(out) if np.ndim(out) == 0 else out


def _inversion(x, y):
    r2 = x * x + y * y
    return x / r2, y / r2


def kelvin_transform(w: ScalarField) -> ScalarField:
    """``w~(x) = w(x/|x|^2) - 2 ln|x|``, defined off the origin."""
    func = w.func
    markers = [(0.0, 0.0)]
    for mx, my in w.singularities:
        r2 = mx * mx + my * my
        if r2 > 0:
            markers.append((mx / r2, my / r2))

    def kelvin(x, y):
        xi, yi = _inversion(x, y)
        return func(xi, yi) - np.log(x * x + y * y)

    return ScalarField(
        kelvin,
        tuple(markers),
        name=f"kelvin[{w.name}]",
        scale=w.scale,
        cutoff=max(w.cutoff, PUNCTURE_CUTOFF),
    )


def kelvin_solution(sol: LiouvilleSolution) -> LiouvilleSolution:
    """Kelvin transform of the pair ``(u, f)``: ``u -> u~``, ``f -> f(x/|x|^2)``.

    If ``Δu + e^{2f+2u} = 0`` then the transformed pair solves the same
    equation on the punctured plane.
    """
    f = sol.metric.f
    ffunc = f.func
    markers = [(0.0, 0.0)] + [
        (mx / (mx * mx + my * my), my / (mx * mx + my * my)) for mx, my in f.singularities if mx or my
    ]
    f_new = ScalarField(
        lambda x, y: ffunc(*_inversion(x, y)), tuple(markers), name=f"kelvin[{f.name}]", cutoff=PUNCTURE_CUTOFF
    )
    curvature = None
    if sol.metric.curvature is not None:
        K = sol.metric.curvature

        def curvature(x, y):
            r2 = x * x + y * y
            return K(x / r2, y / r2) / (r2 * r2)

    metric = ConformalMetric(
        f=f_new,
        curvature=curvature,
        domain="punctured-plane",
        name=f"kelvin-{sol.metric.name}",
        params=sol.metric.params,
        inner_cutoff=PUNCTURE_CUTOFF,
    )
    w = kelvin_transform(sol.w) if sol.w is not None else None
    return LiouvilleSolution(kelvin_transform(sol.u), metric, f"kelvin-{sol.family}", sol.params, w=w)


def rescaled(sol: LiouvilleSolution, lam: float) -> LiouvilleSolution:
    """``u_lam(x) = u(lam x) + ln lam`` with ``f_lam(x) = f(lam x)``."""
    lam = float(lam)
    if lam <= 0:
        raise ParameterError("scale factor must be positive")
    uf, ff = sol.u.func, sol.metric.f.func
    shift = float(np.log(lam))
    u = ScalarField(
        lambda x, y: uf(lam * x, lam * y) + shift,
        tuple((mx / lam, my / lam) for mx, my in sol.u.singularities),
        name=f"{sol.u.name}*{lam:g}",
        scale=sol.u.scale / lam,
        cutoff=sol.u.cutoff / lam,
    )
    f = ScalarField(
        lambda x, y: ff(lam * x, lam * y),
        tuple((mx / lam, my / lam) for mx, my in sol.metric.f.singularities),
        name=f"{sol.metric.f.name}*{lam:g}",
        scale=sol.metric.f.scale / lam,
        cutoff=sol.metric.f.cutoff / lam,
    )
    metric = ConformalMetric(f, None, sol.metric.domain, sol.metric.name, sol.metric.params)
    return LiouvilleSolution(u, metric, sol.family, sol.params + (lam,))


def sample_points(n: int, rmin: float, rmax: float, seed: int = 0):
    """``n`` points with log-uniform radius in ``[rmin, rmax]`` and uniform angle."""
    rng = np.random.default_rng(seed)
    r = np.exp(rng.uniform(np.log(rmin), np.log(rmax), n))
    th = rng.uniform(0.0, 2.0 * np.pi, n)
    return np.stack([r * np.cos(th), r * np.sin(th)], axis=-1)


@dataclass
class ConeOrderEstimate:
    beta1: float
    beta2: float
    residual1: float
    residual2: float
    conical: bool = True
    satisfies_bounds: bool = True
    warnings: list = field(default_factory=list)


def _angular_slope(w: ScalarField, radii, n_angles):
    pts = polar_ring(radii, n_angles)
    means = w(pts).mean(axis=1)
    lr = np.log(np.asarray(radii, dtype=float))
    coef = np.polyfit(lr, means, 1)
    resid = means - np.polyval(coef, lr)
    return float(coef[0]), float(np.sqrt(np.mean(resid**2)))


def cone_order_fit(w: ScalarField, inner_radii=None, outer_radii=None, n_angles: int = 32, residual_tol: float = 1e-2):
    """Slopes of the angular mean of ``w`` against ``ln|x|`` near 0 and near infinity."""
    inner = np.geomspace(1e-5, 1e-3, 9) if inner_radii is None else np.asarray(inner_radii, float)
    outer = np.geomspace(1e3, 1e5, 9) if outer_radii is None else np.asarray(outer_radii, float)
    for name, rr in (("inner", inner), ("outer", outer)):
        if rr.min() <= 0 or rr.max() / rr.min() < 100 * (1 - 1e-9):
            raise UsageError(f"{name} radii must be positive and span at least two decades")
    b1, res1 = _angular_slope(w, inner, n_angles)
    b2, res2 = _angular_slope(w, outer, n_angles)
    est = ConeOrderEstimate(b1, b2, res1, res2)
    if max(res1, res2) > residual_tol:
        est.conical = False
        est.warnings.append(f"fit residual {max(res1, res2):.3g} above {residual_tol:g}: not conical")
    if not (b1 > -1 and b2 < -1):
        est.satisfies_bounds = False
        est.warnings.append(f"cone orders ({b1:.3g}, {b2:.3g}) violate beta1 > -1, beta2 < -1")
    for msg in est.warnings:
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
    return est
