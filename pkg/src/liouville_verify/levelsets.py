"""Upper level sets ``{u > t}``: contours, metric length and area, and the
quantities along the threshold sweep (isoperimetric ratio, ``F(t)``, flux,
the differential inequality for ``F^2``).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import simpson
from scipy.ndimage import map_coordinates
from skimage.measure import find_contours

from .errors import DomainError, LevelSetError, UsageError
from .fields import GridSpec, SampledField, ScalarField, gradient_fd, polar_ring, region_integral
from .metrics import ConformalMetric
from .quadrature import integrate_polar
from .solutions import LiouvilleSolution

DEFAULT_RESOLUTION = 512
ADVISORY_TRUNCATION = 0.01


@dataclass(eq=False)
class Contour:
    """One polyline of a level set.

    ``chart`` holds chart coordinates on ``grid`` and ``plane`` the matching
    plane points.  The region ``{u > t}`` lies to the left of the direction
    of travel.  ``closed`` means the first and last plane points coincide.
    """

    chart: np.ndarray
    plane: np.ndarray
    grid: GridSpec | None = None
    closed: bool = True

    def __len__(self):
        return len(self.plane)


def _grid_values(u, grid: GridSpec):
    if isinstance(u, SampledField):
        return u.values
    if isinstance(u, ScalarField):
        return u.sample(grid).values
    vals = np.asarray(u, dtype=float)
    if vals.shape != (grid.resolution, grid.resolution):
        raise UsageError("sample array does not match the grid shape")
    return vals


def extract_levelset(u, grid: GridSpec, t: float) -> list[Contour]:
    """Marching-squares contours of ``{u > t}`` with linear interpolation.

    ``u`` may be a :class:`ScalarField`, a :class:`SampledField` or a node
    array on ``grid``.  The angle axis of polar grids is wrapped so contours
    cross the seam.
    """
    vals = _grid_values(u, grid)
    finite = np.isfinite(vals)
    if not np.any(finite):
        raise LevelSetError("no finite samples on the grid")
    lo, hi = np.min(vals[finite]), np.max(vals[finite])
    if t >= hi:
        raise LevelSetError(f"level {t:g} at or above the sampled maximum {hi:g}: empty set")
    if t <= lo:
        raise LevelSetError(f"level {t:g} at or below the sampled minimum {lo:g}: whole grid")

    if grid.periodic:
        vals = np.concatenate([vals, vals[:, :1]], axis=1)
        finite = np.concatenate([finite, finite[:, :1]], axis=1)
    work = np.where(finite, vals, lo - 1.0)
    raw = find_contours(work, t, mask=finite)

    xi, eta = grid.axes()
    dxi, deta = grid.spacing()
    gi, gj = np.gradient(work, dxi, deta)
    out = []
    for c in raw:
        if len(c) < 2:
            continue
        # orientation: {u > t} must sit on the left of each segment
        mid = 0.5 * (c[1:] + c[:-1])
        seg = np.diff(c, axis=0) * np.array([dxi, deta])
        g0 = map_coordinates(gi, mid.T, order=1, mode="nearest")
        g1 = map_coordinates(gj, mid.T, order=1, mode="nearest")
        if np.sum(-seg[:, 1] * g0 + seg[:, 0] * g1) < 0:
            c = c[::-1]
        chart = np.column_stack([xi[0] + c[:, 0] * dxi, eta[0] + c[:, 1] * deta])
        px, py = grid.to_plane(chart[:, 0], chart[:, 1])
        plane = np.column_stack([px, py])
        closed = bool(np.allclose(plane[0], plane[-1], rtol=0, atol=1e-9 * max(1.0, np.abs(plane).max())))
        out.append(Contour(chart, plane, grid, closed))
    return out


def metric_length(contour, metric: ConformalMetric) -> float:
    """``Σ e^{f(midpoint)} |segment|`` over one contour, a list of contours or a raw polyline.

    Contours that carry a chart are measured in chart coordinates with the
    factor ``e^{f + j}``; raw ``(n, 2)`` plane arrays are treated as closed.
    """
    if isinstance(contour, (list, tuple)):
        return float(sum(metric_length(c, metric) for c in contour))
    if isinstance(contour, Contour) and contour.grid is not None:
        ch = contour.chart
        mid = 0.5 * (ch[1:] + ch[:-1])
        ds = np.hypot(*np.diff(ch, axis=0).T)
        mx, my = contour.grid.to_plane(mid[:, 0], mid[:, 1])
        j = contour.grid.log_scale(mid[:, 0], mid[:, 1])
        return float(np.sum(np.exp(metric.f.evaluate(mx, my) + j) * ds))
    p = np.asarray(contour.plane if isinstance(contour, Contour) else contour, dtype=float)
    if not np.allclose(p[0], p[-1]):
        p = np.vstack([p, p[:1]])
    mid = 0.5 * (p[1:] + p[:-1])
    ds = np.hypot(*np.diff(p, axis=0).T)
    return float(np.sum(metric.length_density(mid[:, 0], mid[:, 1]) * ds))


def metric_area(u, grid: GridSpec, t: float, metric: ConformalMetric) -> float:
    """Metric area of ``{u > t}`` inside the grid."""
    return region_integral(grid, _grid_values(u, grid), t, metric.area_density)


def euclidean_flux(contours, u: ScalarField, power: float = 1.0, weight=None) -> float:
    """``∫ w |∇u|^power ds`` along contours (plane arc length)."""
    total = 0.0
    for c in contours:
        p = c.plane
        mid = 0.5 * (p[1:] + p[:-1])
        ds = np.hypot(*np.diff(p, axis=0).T)
        g = np.linalg.norm(gradient_fd(u, mid), axis=-1)
        w = 1.0 if weight is None else weight(mid[:, 0], mid[:, 1])
        total += float(np.sum(w * g**power * ds))
    return total


def _boundary_truncation(grid: GridSpec, vals, t: float, metric: ConformalMetric, inner: bool = True) -> float:
    """Metric length of the grid boundary lying inside ``{u > t}``.

    ``inner=False`` skips the inner circle of a polar grid (a cut-out disk).
    """
    xi, eta = grid.axes()
    if grid.periodic:
        edges = [(np.full_like(eta, xi[-1]), eta, vals[-1])]
        if inner:
            edges.append((np.full_like(eta, xi[0]), eta, vals[0]))
    else:
        edges = [
            (np.full_like(eta, xi[0]), eta, vals[0]),
            (np.full_like(eta, xi[-1]), eta, vals[-1]),
            (xi, np.full_like(xi, eta[0]), vals[:, 0]),
            (xi, np.full_like(xi, eta[-1]), vals[:, -1]),
        ]
    total = 0.0
    for a, b, v in edges:
        if grid.periodic:  # close the circle across the seam
            a = np.append(a, a[0])
            b = np.append(b, b[0] + 2 * np.pi)
            v = np.append(v, v[0])
        phi = v - t
        ok = np.isfinite(phi[:-1]) & np.isfinite(phi[1:])
        p0, p1 = phi[:-1], phi[1:]
        frac = np.where((p0 > 0) & (p1 > 0), 1.0, 0.0)
        cut = ((p0 > 0) != (p1 > 0)) & ok
        frac = np.where(cut, np.maximum(p0, p1) / np.where(cut, np.abs(p1 - p0), 1.0), frac)
        frac = np.where(ok, frac, 0.0)
        ma, mb = 0.5 * (a[:-1] + a[1:]), 0.5 * (b[:-1] + b[1:])
        ds = np.hypot(np.diff(a), np.diff(b))
        mx, my = grid.to_plane(ma, mb)
        j = grid.log_scale(ma, mb)
        total += float(np.sum(frac * ds * np.exp(metric.f.evaluate(mx, my) + j)))
    return total


def _ray_extent(sol: LiouvilleSolution, t: float, n_dir: int = 16):
    """Radii bracketing ``{u > t}`` along sample rays.

    Returns ``(r_first, r_in, r_out)``: the first exit radius (smallest over
    rays), the smallest and the largest radius inside the set (``r_out`` is
    None when the set reaches the scan limit).
    """
    rho = np.geomspace(max(sol.metric.inner_cutoff, 1e-8) * 1.01, 1e8, 1601)
    th = 2 * np.pi * (np.arange(n_dir) + 0.5) / n_dir
    X = rho[None, :] * np.cos(th)[:, None]
    Y = rho[None, :] * np.sin(th)[:, None]
    inside = sol.u.evaluate(X, Y) > t
    if not np.any(inside):
        raise LevelSetError(f"level {t:g} not reached along sample rays: empty set")
    cols = np.nonzero(inside.any(axis=0))[0]
    r_in = rho[max(cols[0] - 1, 0)]
    r_out = None if cols[-1] == len(rho) - 1 else rho[cols[-1] + 1]
    first = np.argmin(inside, axis=1)
    r_first = float(rho[first[inside[:, 0]]].min()) if np.any(inside[:, 0]) else 0.0
    return r_first, r_in, r_out


@dataclass(frozen=True)
class LevelGrid:
    """Grid for one threshold; ``disk`` is the radius of a centred disk inside
    the set that is integrated by quadrature instead of on the grid."""

    grid: GridSpec
    disk: float = 0.0


def level_grid(sol: LiouvilleSolution, t: float, resolution: int = DEFAULT_RESOLUTION, max_radius: float = 1e6) -> LevelGrid:
    """Log-polar grid fitted to ``{u > t}``.

    When the set contains a disk about the origin (plane solutions), that
    disk is cut out and handled by quadrature, which keeps both the centre
    and the far rim resolved.
    """
    r_first, r_in, r_out = _ray_extent(sol, t)
    r_out = max_radius if r_out is None else r_out
    if sol.metric.domain == "plane" and not sol.u.singularities and r_first > 0:
        disk = 0.5 * r_first
        return LevelGrid(GridSpec.log_polar(disk, 1.25 * r_out, resolution), disk)
    width = max(math.log(r_out / r_in), 1.0)
    inner = max(r_in * math.exp(-0.15 * width), max(sol.metric.inner_cutoff, 1e-12) * 1.001)
    outer = r_out * math.exp(0.15 * width)
    return LevelGrid(GridSpec.log_polar(inner, outer, resolution))


def _disk_integral(density, radius):
    if radius <= 0:
        return 0.0
    return integrate_polar(density, 0.0, radius, 1e-12).value


@dataclass
class LevelSetProfile:
    """Per-threshold level-set quantities; arrays share the length of ``ts``."""

    label: str
    ts: np.ndarray
    area: np.ndarray
    length: np.ndarray
    F: np.ndarray | None = None
    flux: np.ndarray | None = None
    ratio: np.ndarray | None = None
    ratio_error: np.ndarray | None = None
    truncation: np.ndarray | None = None
    dF: np.ndarray | None = None
    coarea: np.ndarray | None = None
    beta: float | None = None
    status: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    def rows(self):
        keys = ["ts", "area", "length", "F", "flux", "ratio", "truncation", "dF", "coarea"]
        cols = {k: getattr(self, k) for k in keys if getattr(self, k) is not None}
        for i in range(len(self.ts)):
            row = {k: float(v[i]) for k, v in cols.items()}
            row["t"] = row.pop("ts")
            if self.status:
                row["status"] = self.status[i]
            yield row


def default_thresholds(sol: LiouvilleSolution, n: int = 40):
    """``n`` thresholds spanning ``[u_max - 8, u_max - 0.2]``.

    On the punctured plane the lower end is raised so that every ``Ω_t``
    stays clear of the cutoff circle and of the scan limit.
    """
    try:
        top = sol.u_max()
    except UsageError:
        grid = GridSpec.log_polar(max(sol.metric.inner_cutoff, 1e-6) * 1.01, 1e4, 256)
        vals = sol.u.sample(grid).values
        top = float(np.nanmax(vals))
    bottom = top - 8.0
    if sol.metric.domain != "plane":
        ring = polar_ring([1.5 * sol.metric.inner_cutoff, 1e6], 64)
        bottom = max(bottom, float(np.max(sol.u(ring))) + 0.05)
    return np.linspace(bottom, top - 0.2, n)


def _level_geometry(sol, t, resolution):
    lg = level_grid(sol, t, resolution)
    grid = lg.grid
    vals = _grid_values(sol.u, grid)
    if lg.disk > 0 and not np.all(vals[0] > t):
        raise LevelSetError("inner disk not contained in the level set")
    contours = extract_levelset(vals, grid, t)
    L = metric_length(contours, sol.metric)
    A = region_integral(grid, vals, t, sol.metric.area_density) + _disk_integral(sol.metric.area_density, lg.disk)
    trunc = _boundary_truncation(grid, vals, t, sol.metric, inner=lg.disk == 0)
    return lg, vals, contours, L, A, trunc


def isoperimetric_check(sol: LiouvilleSolution, beta: float, ts=None, resolution: int = DEFAULT_RESOLUTION) -> LevelSetProfile:
    """``L^2 / (4π β A)`` on each ``∂Ω_t``.

    ``ratio_error`` is the change of the ratio between the given resolution
    and half of it, a discretisation margin.  ``beta <= 0`` makes the
    inequality vacuous; the profile then carries that status and no ratios.
    """
    ts = default_thresholds(sol) if ts is None else np.asarray(ts, dtype=float)
    n = len(ts)
    area, length, ratio, err, trunc = (np.full(n, np.nan) for _ in range(5))
    status = []
    if beta <= 0:
        prof = LevelSetProfile(sol.label, ts, area, length, ratio=ratio, beta=beta)
        prof.status = ["vacuous"] * n
        prof.notes.append("beta = 0: 4πβA vanishes, inequality vacuous")
        return prof
    for i, t in enumerate(ts):
        _, _, _, L, A, tr = _level_geometry(sol, t, resolution)
        _, _, _, L2, A2, _ = _level_geometry(sol, t, resolution // 2)
        area[i], length[i], trunc[i] = A, L, tr
        ratio[i] = L**2 / (4 * np.pi * beta * A)
        err[i] = abs(ratio[i] - L2**2 / (4 * np.pi * beta * A2))
        status.append("advisory" if tr > ADVISORY_TRUNCATION * L else "ok")
    return LevelSetProfile(sol.label, ts, area, length, ratio=ratio, ratio_error=err, truncation=trunc, beta=beta, status=status)


def f_profile(sol: LiouvilleSolution, ts=None, resolution: int = DEFAULT_RESOLUTION, delta: float = 0.02, beta: float | None = None) -> LevelSetProfile:
    """``F(t) = ∫_{Ω_t} e^{2u} dg`` beside the flux ``∫_{∂Ω_t} |∇u| ds``.

    By conformal invariance in two dimensions the flux is a Euclidean contour
    integral.  ``dF`` is the central difference of ``F`` at ``t ± delta`` on
    the same grid; ``coarea`` is ``∫_{∂Ω_t} e^{2f} |∇u|^{-1} ds``, so that
    ``F'(t) = -e^{2t} coarea(t)``.
    """
    ts = default_thresholds(sol) if ts is None else np.asarray(ts, dtype=float)
    n = len(ts)
    arrays = {k: np.full(n, np.nan) for k in ("area", "length", "F", "flux", "truncation", "dF", "coarea")}
    density = sol.density.evaluate
    ratio = np.full(n, np.nan) if beta and beta > 0 else None
    status = []
    for i, t in enumerate(ts):
        lg, vals, contours, L, A, tr = _level_geometry(sol, t, resolution)
        core = _disk_integral(density, lg.disk)
        F, Fp, Fm = core + region_integral(lg.grid, vals, [t, t + delta, t - delta], density)
        arrays["area"][i] = A
        arrays["length"][i] = L
        arrays["F"][i] = F
        arrays["flux"][i] = euclidean_flux(contours, sol.u)
        arrays["truncation"][i] = tr
        arrays["dF"][i] = (Fp - Fm) / (2 * delta)
        arrays["coarea"][i] = euclidean_flux(contours, sol.u, power=-1.0, weight=sol.metric.area_density)
        if ratio is not None:
            ratio[i] = L**2 / (4 * np.pi * beta * A)
        status.append("advisory" if tr > ADVISORY_TRUNCATION * L else "ok")
    return LevelSetProfile(sol.label, ts, ratio=ratio, beta=beta, status=status, **arrays)


def ode_inequality_check(profile: LevelSetProfile, beta: float):
    """Margins ``RHS - LHS`` of ``(F^2)' <= -8π β e^{2t} A(Ω_t)`` per threshold.

    Returns ``(margin, rhs)``; a relative margin ``margin / |rhs|`` below
    minus the slack is a violation.
    """
    if profile.F is None or profile.dF is None:
        raise UsageError("profile lacks F(t); build it with f_profile")
    lhs = 2.0 * profile.F * profile.dF
    rhs = -8.0 * np.pi * beta * np.exp(2.0 * profile.ts) * profile.area
    return rhs - lhs, rhs


def coarea_consistency(profile: LevelSetProfile):
    """``F'(t)`` from the area side against ``-e^{2t} ∫_{∂Ω_t} e^{2f}/|∇u| ds``.

    Pointwise per threshold, so the result does not depend on how densely the
    thresholds are spaced.
    """
    if profile.dF is None or profile.coarea is None:
        raise UsageError("profile lacks F(t); build it with f_profile")
    return profile.dF, -np.exp(2.0 * profile.ts) * profile.coarea


def coarea_integrated(profile: LevelSetProfile):
    """``F(t_0) - F(t_k)`` against the Simpson integral of ``e^{2t} coarea``."""
    ts = profile.ts
    g = np.exp(2.0 * ts) * profile.coarea
    lhs = profile.F[0] - profile.F[1:]
    rhs = np.array([simpson(g[: k + 1], x=ts[: k + 1]) if k >= 2 else np.trapezoid(g[: k + 1], ts[: k + 1]) for k in range(1, len(ts))])
    return lhs, rhs


@dataclass
class IntegratedInequality:
    """Truncated integrated form of the ``F^2`` inequality plus the total-mass bound."""

    lhs: float
    rhs: float
    total_mass: float
    bound: float
    excluded_tail: float
    holds: bool


def integrated_inequality(profile: LevelSetProfile, beta: float, total_mass: float, slack: float = 0.03) -> IntegratedInequality:
    """``F(t_0)^2 - F(t_1)^2 >= 8πβ ∫ e^{2t} A dt`` over the sampled range.

    The mass of ``{u <= t_0}`` is reported as the excluded tail; the limiting
    statement is ``total mass >= 4πβ``.
    """
    ts = profile.ts
    lhs = profile.F[0] ** 2 - profile.F[-1] ** 2
    rhs = 8 * np.pi * beta * simpson(np.exp(2 * ts) * profile.area, x=ts)
    bound = 4 * np.pi * beta
    ok = (lhs >= rhs * (1 - slack)) and (total_mass >= bound * (1 - slack))
    return IntegratedInequality(float(lhs), float(rhs), float(total_mass), float(bound), float(total_mass - profile.F[0]), bool(ok))
