"""Intrinsic distance, geodesic ball areas and the asymptotic volume ratio.

Two distance routes are kept independent on purpose: the exact radial
formula ``r(R) = ∫_0^R e^{f(s)} ds`` for radially symmetric metrics about
the origin, and a first-order fast-marching solve of ``|∇r| = e^f`` on a
structured grid for everything else.
"""
from __future__ import annotations

import heapq
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import CompletenessError, DomainError, UsageError
from .fields import GridSpec, SampledField, polar_ring, region_integral
from .metrics import ConformalMetric
from .quadrature import adaptive_quad, total_gauss_curvature

_RADIAL_TOL = 1e-10
_R_LIMIT = 1e300


def _require_radial(metric: ConformalMetric):
    if not metric.radial or metric.domain != "plane":
        raise UsageError(f"{metric.label}: the radial oracle needs a radially symmetric metric on the full plane")


def _length_piece(metric, r0, r1, tol):
    """``∫_{r0}^{r1} e^{f(s)} ds``; pieces away from 0 run in ``y = ln s``."""
    fr = metric.f_radial
    if r1 <= r0:
        return 0.0
    if r0 <= 0.0:
        head = adaptive_quad(lambda s: np.exp(fr(s)), 0.0, min(r1, 1.0), tol).value
        return head + (_length_piece(metric, 1.0, r1, tol) if r1 > 1.0 else 0.0)
    return adaptive_quad(lambda y: np.exp(fr(np.exp(y)) + y), math.log(r0), math.log(r1), tol, rtol=1e-13).value


def _area_piece(metric, r0, r1, tol):
    """``∫_{r0}^{r1} 2π s e^{2f(s)} ds``."""
    fr = metric.f_radial
    if r1 <= r0:
        return 0.0
    if r0 <= 0.0:
        head = adaptive_quad(lambda s: 2 * np.pi * s * np.exp(2 * fr(s)), 0.0, min(r1, 1.0), tol).value
        return head + (_area_piece(metric, 1.0, r1, tol) if r1 > 1.0 else 0.0)
    return adaptive_quad(
        lambda y: 2 * np.pi * np.exp(2 * fr(np.exp(y)) + 2 * y), math.log(r0), math.log(r1), tol, rtol=1e-13
    ).value


def radial_distance(metric: ConformalMetric, R: float, tol: float = _RADIAL_TOL) -> float:
    """Distance from the origin to ``|x| = R``; ``R = inf`` gives the radius of the surface."""
    _require_radial(metric)
    if R < 0:
        raise UsageError("radius must be nonnegative")
    if math.isinf(R):
        fr = metric.f_radial
        big = np.array([1e6, 1e12])
        decay = big * np.exp(fr(big))
        if decay[1] > 1e-3 * decay[0]:
            return math.inf
        head = _length_piece(metric, 0.0, 1.0, tol)
        tail = adaptive_quad(lambda sig: np.exp(fr(1.0 / sig)) / sig**2, 0.0, 1.0, tol).value
        return head + tail
    return _length_piece(metric, 0.0, float(R), tol)


def radial_profile(metric: ConformalMetric, radii, tol: float = _RADIAL_TOL):
    """Cumulative distance and area ``(r(R_k), A(R_k))`` for increasing radii."""
    _require_radial(metric)
    radii = np.asarray(radii, dtype=float)
    if np.any(np.diff(radii) <= 0) or radii[0] < 0:
        raise UsageError("radii must be nonnegative and strictly increasing")
    r = np.empty_like(radii)
    A = np.empty_like(radii)
    prev, rc, ac = 0.0, 0.0, 0.0
    for k, R in enumerate(radii):
        rc += _length_piece(metric, prev, R, tol)
        ac += _area_piece(metric, prev, R, tol)
        r[k], A[k] = rc, ac
        prev = R
    return r, A


def is_complete(metric: ConformalMetric) -> bool:
    """Radial completeness test: distance to infinity must be infinite."""
    _require_radial(metric)
    r6 = radial_distance(metric, 1e6)
    r12 = r6 + _length_piece(metric, 1e6, 1e12, 1e-12)
    return (r12 - r6) > 1e-4 * max(1.0, r6)


@dataclass(eq=False)
class DistanceField:
    """Distance ``r(x)`` from ``base``.

    ``method`` is ``"radial"`` (exact oracle, base at the origin) or
    ``"eikonal"`` (fast-marching samples on ``grid``).
    """

    base: tuple
    metric: ConformalMetric
    method: str
    grid: GridSpec | None = None
    values: np.ndarray | None = None
    accept_order: np.ndarray | None = None

    def __call__(self, points):
        p = np.asarray(points, dtype=float)
        if self.method == "radial":
            rho = np.hypot(p[..., 0], p[..., 1])
            uniq, inv = np.unique(rho.ravel(), return_inverse=True)
            if uniq[0] == 0.0:
                r_u = np.zeros_like(uniq)
                if len(uniq) > 1:
                    r_u[1:] = radial_profile(self.metric, uniq[1:])[0]
            else:
                r_u = radial_profile(self.metric, uniq)[0]
            out = r_u[inv].reshape(rho.shape)
            return float(out) if out.ndim == 0 else out
        return SampledField(self.grid, self.values).interpolate(p)


def radial_distance_field(metric: ConformalMetric) -> DistanceField:
    _require_radial(metric)
    return DistanceField((0.0, 0.0), metric, "radial")


_RING = ((1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1))


def _triangle_geometry(dx, dy):
    """Per ring position: edge length and, per adjacent pair, the constants of the
    closed-form minimiser of ``λ T_a + (1-λ) T_b + w |λ e_a + (1-λ) e_b|``."""
    vec = [np.array([di * dx, dj * dy]) for di, dj in _RING]
    lengths = [float(np.linalg.norm(v)) for v in vec]
    tri = {}
    for k in range(8):
        for k2 in ((k + 1) % 8, (k - 1) % 8):
            ea, eb = vec[k], vec[k2]
            d = ea - eb
            dn = float(np.linalg.norm(d))
            dhat = d / dn
            par = float(eb @ dhat)
            h = float(np.linalg.norm(eb - par * dhat))
            tri[(k, k2)] = (dn, par, h)
    return lengths, tri


def _fast_march(speed, dx, dy, periodic, seeds):
    """First-order fast marching for ``|∇T| = speed`` with an 8-neighbour stencil.

    Each node is updated from single accepted neighbours and from triangles
    spanned by an accepted neighbour pair adjacent on the ring.  ``seeds``
    maps flat indices to fixed values.  Returns ``T`` and the accepted values
    in acceptance order.
    """
    n0, n1 = speed.shape
    N = n0 * n1
    w = speed.ravel().tolist()
    T = [math.inf] * N
    accepted = bytearray(N)
    fixed = bytearray(N)
    heap = []
    for idx, val in seeds.items():
        T[idx] = val
        fixed[idx] = 1
        heap.append((val, idx))
    heapq.heapify(heap)
    lengths, tri = _triangle_geometry(dx, dy)
    pairs = [((k + 1) % 8, (k - 1) % 8) for k in range(8)]
    order = []
    inf = math.inf
    sqrt = math.sqrt
    push, pop = heapq.heappush, heapq.heappop

    def node(i, j):
        if i < 0 or i >= n0:
            return -1
        if periodic:
            return i * n1 + j % n1
        if j < 0 or j >= n1:
            return -1
        return i * n1 + j

    while heap:
        t, idx = pop(heap)
        if accepted[idx] or t > T[idx]:
            continue
        accepted[idx] = 1
        order.append(t)
        i, j = divmod(idx, n1)
        for k in range(8):
            di, dj = _RING[k]
            bi, bj = i - di, j - dj
            nb = node(bi, bj)
            if nb < 0 or accepted[nb] or fixed[nb]:
                continue
            wn = w[nb]
            if wn == inf:
                continue
            best = t + wn * lengths[k]
            for k2 in pairs[k]:
                o = node(bi + _RING[k2][0], bj + _RING[k2][1])
                if o < 0 or not accepted[o]:
                    continue
                tb = T[o]
                dn, par, h = tri[(k, k2)]
                delta = t - tb
                kk = -delta / (wn * dn)
                if -1.0 < kk < 1.0:
                    sp = kk * h / sqrt(1.0 - kk * kk)
                    lam = (sp - par) / dn
                    if 0.0 < lam < 1.0:
                        cand = tb + lam * delta + wn * sqrt(sp * sp + h * h)
                        if cand < best:
                            best = cand
            if best < T[nb]:
                T[nb] = best
                push(heap, (best, nb))
    return np.array(T).reshape(n0, n1), np.array(order)


def eikonal_distance(metric: ConformalMetric, grid: GridSpec, base=(0.0, 0.0), seed_cells: float = 4.0) -> DistanceField:
    """Fast-marching distance from ``base`` for the metric ``e^{2f} g_0`` on ``grid``.

    The solve runs in the grid chart with speed ``e^{f + j}``.  Nodes within
    ``seed_cells`` cells of the base are initialised with the straight-segment
    length (midpoint rule); every other value comes from the upwind update.
    """
    if not grid.conformal:
        raise UsageError("eikonal solves need a conformal chart (Cartesian or log-polar grid)")
    if not grid.contains(base):
        raise UsageError("base point outside the grid")
    if metric.domain == "punctured-plane" and math.hypot(*base) <= max(metric.inner_cutoff, 1e-12):
        raise UsageError("the puncture is at infinite distance; choose a base away from the origin")
    XI, ETA = grid.nodes()
    X, Y = grid.to_plane(XI, ETA)
    J = grid.log_scale(XI, ETA)
    f_vals = np.full(X.shape, np.inf)
    mask = np.zeros(X.shape, dtype=bool)
    for mx, my in metric.f.singularities:
        mask |= np.hypot(X - mx, Y - my) <= max(metric.f.cutoff, 1e-12)
    f_vals[~mask] = metric.f.evaluate(X[~mask], Y[~mask])
    speed = np.where(mask, np.inf, np.exp(f_vals + J))

    dx, dy = grid.spacing()
    bxi, beta = grid.from_plane(base[0], base[1])
    bxi, beta = float(bxi), float(beta)
    dxi = XI - bxi
    deta = ETA - beta
    if grid.periodic:
        deta = (deta + np.pi) % (2 * np.pi) - np.pi
    dist_chart = np.hypot(dxi, deta)
    near = (dist_chart <= seed_cells * max(dx, dy)) & ~mask
    if not np.any(near):
        raise UsageError("no grid node near the base point")
    mxi, meta = bxi + 0.5 * dxi[near], beta + 0.5 * deta[near]
    mx, my = grid.to_plane(mxi, meta)
    w_mid = np.exp(metric.f.evaluate(mx, my) + grid.log_scale(mxi, meta))
    seeds = dict(zip(np.flatnonzero(near).tolist(), (dist_chart[near] * w_mid).tolist()))
    T, order = _fast_march(speed, dx, dy, grid.periodic, seeds)
    T[mask] = np.nan
    return DistanceField(tuple(map(float, base)), metric, "eikonal", grid, T, order)


def _boundary_values(grid: GridSpec, values):
    if grid.periodic:
        return np.concatenate([values[0], values[-1]])
    return np.concatenate([values[0], values[-1], values[:, 0], values[:, -1]])


def ball_area(dist: DistanceField, t: float) -> float:
    """Area of the geodesic ball ``{r < t}``."""
    metric = dist.metric
    if t <= 0:
        return 0.0
    if dist.method == "radial":
        fr = metric.f_radial
        r_inf = radial_distance(metric, math.inf)
        if t >= r_inf:
            head = _area_piece(metric, 0.0, 1.0, _RADIAL_TOL)
            tail = adaptive_quad(
                lambda sig: 2 * np.pi * np.exp(2 * fr(1.0 / sig)) / sig**3, 0.0, 1.0, _RADIAL_TOL
            ).value
            return head + tail
        R = radius_for_distance(metric, t)
        return _area_piece(metric, 0.0, R, _RADIAL_TOL)
    edge = _boundary_values(dist.grid, dist.values)
    if np.any(edge[np.isfinite(edge)] < t):
        raise DomainError(f"ball of radius {t:g} reaches the grid boundary")
    return region_integral(dist.grid, dist.values, t, metric.area_density, above=False)


def radius_for_distance(metric: ConformalMetric, t: float) -> float:
    """Euclidean radius ``R`` with ``r(R) = t`` (radial metrics)."""
    _require_radial(metric)
    hi = 1.0
    r_hi = radial_distance(metric, hi)
    while r_hi < t:
        if hi >= _R_LIMIT:
            raise DomainError(f"distance {t:g} not reached below |x| = {_R_LIMIT:g}")
        lo_r, lo = r_hi, hi
        hi *= 10.0
        r_hi = lo_r + _length_piece(metric, lo, hi, _RADIAL_TOL)
    lo = 0.0
    return brentq(lambda R: radial_distance(metric, R) - t, lo, hi, xtol=1e-14 * hi, rtol=1e-13)


@dataclass
class AvrReport:
    """Two estimates of the asymptotic volume ratio and their gap."""

    beta_area: float
    beta_gb: float | None
    gap: float | None
    method: str
    ts: np.ndarray = field(repr=False, default=None)
    ratios: np.ndarray = field(repr=False, default=None)
    fit_residual: float = 0.0
    notes: list = field(default_factory=list)


def _radial_ratio_samples(metric, tmax, n_t):
    # geometric ladder of Euclidean radii, then evaluate distance/area there
    R = 1.0
    r_prev, a_prev = radial_profile(metric, [R])
    r_cur, a_cur = float(r_prev[0]), float(a_prev[0])
    knots = [(R, r_cur, a_cur)]
    while r_cur < tmax and R < _R_LIMIT:
        R_next = R * 10.0
        r_cur += _length_piece(metric, R, R_next, _RADIAL_TOL)
        a_cur += _area_piece(metric, R, R_next, _RADIAL_TOL)
        R = R_next
        knots.append((R, r_cur, a_cur))
    if r_cur < tmax:
        tmax = r_cur
    ts = np.geomspace(tmax / 10.0, tmax, n_t)
    areas = []
    for t in ts:
        # bracket in the knot table, then solve inside the piece
        k = next(i for i, kn in enumerate(knots) if kn[1] >= t)
        if k == 0:
            Rt = radius_for_distance(metric, t)
            areas.append(_area_piece(metric, 0.0, Rt, _RADIAL_TOL))
            continue
        R0, r0, a0 = knots[k - 1]
        R1 = knots[k][0]
        Rt = brentq(lambda x: r0 + _length_piece(metric, R0, x, _RADIAL_TOL) - t, R0, R1, rtol=1e-13)
        areas.append(a0 + _area_piece(metric, R0, Rt, _RADIAL_TOL))
    return ts, np.array(areas), tmax


def avr(metric: ConformalMetric, tmax: float | None = None, tol: float = 1e-8, method: str = "auto", grid: GridSpec | None = None, base=None, n_t: int = 12) -> AvrReport:
    """Asymptotic volume ratio from ball growth and from Gauss-Bonnet.

    ``beta_area`` is the intercept of a linear fit of ``Area/(π t^2)``
    against ``1/t`` over ``[tmax/10, tmax]``.  ``beta_gb = 1 - ∫K dg / 2π``
    is only meaningful on the full plane; for punctured-plane metrics it is
    reported as ``None``.
    """
    notes = []
    if method == "auto":
        method = "radial" if (metric.radial and metric.domain == "plane") else "eikonal"
    if method == "radial":
        _require_radial(metric)
        if not is_complete(metric):
            raise CompletenessError(f"{metric.label}: finite diameter, no asymptotic volume ratio")
        tmax = 1e3 if tmax is None else float(tmax)
        ts, areas, used = _radial_ratio_samples(metric, tmax, n_t)
        if used < tmax:
            notes.append(f"tmax reduced to {used:g} (radius limit)")
    elif method == "eikonal":
        if grid is None:
            if metric.domain == "punctured-plane":
                # base in the middle of a log-polar strip that starts at the cutoff
                span = 1.05 * (100.0 if tmax is None else float(tmax)) + 1.0
                inner = max(metric.inner_cutoff, 1e-12) * 1.001
                grid = GridSpec.log_polar(inner, inner * math.exp(2 * span), 512)
                if base is None:
                    base = (inner * math.exp(span), 0.0)
            else:
                grid = GridSpec.box(10.0 if tmax is None else 1.05 * float(tmax), 512)
        if base is None:
            base = (0.0, 0.0)
        dist = eikonal_distance(metric, grid, base)
        edge = _boundary_values(grid, dist.values)
        reach = float(np.nanmin(edge))
        tmax = 0.98 * reach if tmax is None else min(float(tmax), 0.98 * reach)
        ts = np.geomspace(tmax / 10.0, tmax, n_t)
        areas = np.array([ball_area(dist, t) for t in ts])
    else:
        raise UsageError(f"unknown avr method {method!r}")

    ratios = areas / (np.pi * ts**2)
    coef = np.polyfit(1.0 / ts, ratios, 1)
    resid = ratios - np.polyval(coef, 1.0 / ts)
    beta_area = float(coef[1])

    beta_gb = None
    gap = None
    if metric.domain == "plane":
        beta_gb = 1.0 - total_gauss_curvature(metric, tol) / (2.0 * np.pi)
        gap = abs(beta_area - beta_gb)
    else:
        notes.append("Gauss-Bonnet estimate not applicable off the full plane")
    for est in (beta_area, beta_gb):
        if est is not None and not -0.05 <= est <= 1.05:
            warnings.warn(f"asymptotic volume ratio estimate {est:.4g} outside [0, 1]", RuntimeWarning, stacklevel=2)
    return AvrReport(beta_area, beta_gb, gap, method, ts, ratios, float(np.sqrt(np.mean(resid**2))), notes)


def distance_slope(metric: ConformalMetric, radii=None, dist: DistanceField | None = None, n_angles: int = 32) -> float:
    """Least-squares slope of ``ln r(x)`` against ``ln|x|``.

    Radial metrics use the exact oracle; otherwise ``dist`` must be given
    and the angular mean of ``ln r`` over circles is fitted.
    """
    radii = np.geomspace(1e8, 1e12, 9) if radii is None else np.asarray(radii, dtype=float)
    if dist is None:
        _require_radial(metric)
        r = radial_profile(metric, np.sort(radii))[0]
        lr = np.log(r)
    else:
        pts = polar_ring(radii, n_angles)
        lr = np.log(dist(pts)).mean(axis=1)
    return float(np.polyfit(np.log(radii if dist is not None else np.sort(radii)), lr, 1)[0])
