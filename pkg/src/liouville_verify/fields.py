"""Planar scalar fields, structured grids and finite-difference operators.

Two grid charts are supported.  A Cartesian grid is the identity chart.  A
polar grid with logarithmic radial spacing is the chart
``(xi, eta) = (ln|x - c|, arg(x - c))``, which is conformal: the flat plane
metric reads ``e^{2 xi} (d xi^2 + d eta^2)`` there.  Every grid-based
computation in the package (eikonal solves, level sets, region integrals)
works in chart coordinates and carries the conformal factor ``e^{j}`` with
``j = log_scale(xi, eta)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError, EvaluationError, UsageError

_MARKER_EPS = 1e-12
DEFAULT_STEP_FACTOR = 1e-3


@dataclass(frozen=True)
class GridSpec:
    """A structured grid: Cartesian box or polar annulus around ``center``.

    ``bounds`` is the half-width of the box or the outer radius of the annulus.
    """

    kind: str = "cartesian"
    bounds: float = 1.0
    resolution: int = 256
    inner_radius: float = 0.0
    log_radial: bool = False
    center: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if self.kind not in ("cartesian", "polar"):
            raise UsageError(f"unknown grid kind {self.kind!r}")
        if int(self.resolution) != self.resolution or self.resolution < 8:
            raise UsageError("grid resolution must be an integer >= 8")
        if not self.bounds > 0:
            raise UsageError("grid bounds must be positive")
        if self.kind == "polar":
            if self.inner_radius < 0 or self.inner_radius >= self.bounds:
                raise UsageError("polar grid needs 0 <= inner_radius < bounds")
            if self.log_radial and self.inner_radius <= 0:
                raise UsageError("logarithmic radial spacing needs inner_radius > 0")

    @classmethod
    def box(cls, half_width, resolution=256, center=(0.0, 0.0)):
        return cls("cartesian", float(half_width), int(resolution), center=tuple(center))

    @classmethod
    def log_polar(cls, inner, outer, resolution=256, center=(0.0, 0.0)):
        return cls("polar", float(outer), int(resolution), float(inner), True, tuple(center))

    @property
    def periodic(self) -> bool:
        """Whether the second chart axis wraps around (polar angle)."""
        return self.kind == "polar"

    @property
    def conformal(self) -> bool:
        return self.kind == "cartesian" or self.log_radial

    def axes(self):
        n = self.resolution
        cx, cy = self.center
        if self.kind == "cartesian":
            b = self.bounds
            return cx + np.linspace(-b, b, n), cy + np.linspace(-b, b, n)
        if self.log_radial:
            xi = np.linspace(np.log(self.inner_radius), np.log(self.bounds), n)
        else:
            xi = np.linspace(self.inner_radius, self.bounds, n)
        return xi, 2.0 * np.pi * np.arange(n) / n

    def spacing(self):
        xi, eta = self.axes()
        return xi[1] - xi[0], eta[1] - eta[0]

    def nodes(self):
        """Chart coordinates of all nodes, each of shape ``(n, n)``, 'ij' indexing."""
        xi, eta = self.axes()
        return np.meshgrid(xi, eta, indexing="ij")

    def to_plane(self, xi, eta):
        xi = np.asarray(xi, dtype=float)
        eta = np.asarray(eta, dtype=float)
        if self.kind == "cartesian":
            return xi, eta
        rho = np.exp(xi) if self.log_radial else xi
        cx, cy = self.center
        return cx + rho * np.cos(eta), cy + rho * np.sin(eta)

    def from_plane(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if self.kind == "cartesian":
            return x, y
        cx, cy = self.center
        rho = np.hypot(x - cx, y - cy)
        eta = np.mod(np.arctan2(y - cy, x - cx), 2.0 * np.pi)
        with np.errstate(divide="ignore"):
            xi = np.log(rho) if self.log_radial else rho
        return xi, eta

    def log_scale(self, xi, eta):
        """``j`` with plane metric ``e^{2j}(d xi^2 + d eta^2)`` in chart coordinates."""
        xi = np.asarray(xi, dtype=float)
        if self.kind == "cartesian":
            return np.zeros(np.broadcast(xi, np.asarray(eta)).shape)
        if not self.log_radial:
            raise UsageError("uniform polar grids are not conformal charts")
        return xi + 0.0 * np.asarray(eta, dtype=float)

    def plane_nodes(self):
        return self.to_plane(*self.nodes())

    def contains(self, point) -> bool:
        x, y = float(point[0]), float(point[1])
        cx, cy = self.center
        if self.kind == "cartesian":
            return abs(x - cx) <= self.bounds and abs(y - cy) <= self.bounds
        rho = np.hypot(x - cx, y - cy)
        return self.inner_radius <= rho <= self.bounds


def _as_points(points):
    p = np.asarray(points, dtype=float)
    if p.shape[-1] != 2:
        raise UsageError(f"points must have trailing dimension 2, got shape {p.shape}")
    return p


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Real function on the plane, evaluated through a vectorized ``func(x, y)``.

    ``singularities`` are excluded points; evaluating there raises
    :class:`DomainError`.  ``cutoff`` is the radius around each marker that
    grid operations mask out.  ``scale`` sets the default finite-difference
    step (``1e-3 * scale * max(1, |x|)``, clipped by the distance to markers).
    """

    func: Callable[[np.ndarray, np.ndarray], np.ndarray]
    singularities: tuple = ()
    name: str = "field"
    scale: float = 1.0
    cutoff: float = 0.0
    box: float | None = None

    def evaluate(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        for mx, my in self.singularities:
            d = np.hypot(x - mx, y - my)
            if np.any(d <= _MARKER_EPS * max(1.0, abs(mx), abs(my))):
                raise DomainError(f"{self.name}: evaluation at singular point ({mx}, {my})")
        if self.box is not None and (np.any(np.abs(x) > self.box) or np.any(np.abs(y) > self.box)):
            raise DomainError(f"{self.name}: point outside the domain box {self.box}")
        with np.errstate(all="ignore"):
            out = np.asarray(self.func(x, y), dtype=float)
        out = np.broadcast_to(out, np.broadcast(x, y).shape)
        if not np.all(np.isfinite(out)):
            raise EvaluationError(f"{self.name}: non-finite value")
        return out

    def __call__(self, points):
        p = _as_points(points)
        out = self.evaluate(p[..., 0], p[..., 1])
        return float(out) if out.ndim == 0 else out

    def marker_distance(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        d = np.full(np.broadcast(x, y).shape, np.inf)
        for mx, my in self.singularities:
            d = np.minimum(d, np.hypot(x - mx, y - my))
        if self.box is not None:
            d = np.minimum(d, np.minimum(self.box - np.abs(x), self.box - np.abs(y)))
        return d

    def default_step(self, points):
        p = _as_points(points)
        r = np.hypot(p[..., 0], p[..., 1])
        local = self.scale * np.maximum(1.0, r)
        local = np.minimum(local, self.marker_distance(p[..., 0], p[..., 1]))
        return DEFAULT_STEP_FACTOR * local

    def sample(self, grid: GridSpec) -> "SampledField":
        X, Y = grid.plane_nodes()
        mask = np.zeros(X.shape, dtype=bool)
        for mx, my in self.singularities:
            mask |= np.hypot(X - mx, Y - my) <= max(self.cutoff, _MARKER_EPS)
        if self.box is not None:
            mask |= (np.abs(X) > self.box) | (np.abs(Y) > self.box)
        values = np.full(X.shape, np.nan)
        values[~mask] = self.evaluate(X[~mask], Y[~mask])
        return SampledField(grid, values, mask, name=self.name)

    def translated(self, shift) -> "ScalarField":
        """The field ``x -> self(x - shift)``."""
        sx, sy = float(shift[0]), float(shift[1])
        func = self.func
        return ScalarField(
            lambda x, y: func(x - sx, y - sy),
            tuple((mx + sx, my + sy) for mx, my in self.singularities),
            name=f"{self.name}@shift",
            scale=self.scale,
            cutoff=self.cutoff,
        )

    def __add__(self, other: "ScalarField") -> "ScalarField":
        f, g = self.func, other.func
        return ScalarField(
            lambda x, y: f(x, y) + g(x, y),
            tuple(dict.fromkeys(self.singularities + other.singularities)),
            name=f"({self.name}+{other.name})",
            scale=min(self.scale, other.scale),
            cutoff=max(self.cutoff, other.cutoff),
        )


def constant_field(c: float, name: str = "const") -> ScalarField:
    return ScalarField(lambda x, y: np.full(np.broadcast(x, y).shape, float(c)), name=name)


@dataclass(frozen=True, eq=False)
class SampledField:
    """Samples of a field on a :class:`GridSpec`; masked nodes carry NaN."""

    grid: GridSpec
    values: np.ndarray
    mask: np.ndarray = dc_field(default=None)
    name: str = "sampled"

    def __post_init__(self):
        if self.mask is None:
            object.__setattr__(self, "mask", ~np.isfinite(self.values))

    def interpolate(self, points):
        """Bilinear interpolation in chart coordinates."""
        p = _as_points(points)
        xi, eta = self.grid.from_plane(p[..., 0], p[..., 1])
        ax, ay = self.grid.axes()
        dx, dy = self.grid.spacing()
        fi = (xi - ax[0]) / dx
        fj = (eta - ay[0]) / dy
        n = self.grid.resolution
        values = self.values
        if self.grid.periodic:
            values = np.concatenate([values, values[:, :1]], axis=1)
        else:
            if np.any((fj < -1e-9) | (fj > n - 1 + 1e-9)):
                raise DomainError("point outside the sampled grid")
        if np.any((fi < -1e-9) | (fi > n - 1 + 1e-9)):
            raise DomainError("point outside the sampled grid")
        i0 = np.clip(np.floor(fi).astype(int), 0, n - 2)
        j0 = np.clip(np.floor(fj).astype(int), 0, values.shape[1] - 2)
        ti = fi - i0
        tj = fj - j0
        out = (
            values[i0, j0] * (1 - ti) * (1 - tj)
            + values[i0 + 1, j0] * ti * (1 - tj)
            + values[i0, j0 + 1] * (1 - ti) * tj
            + values[i0 + 1, j0 + 1] * ti * tj
        )
        if not np.all(np.isfinite(out)):
            raise DomainError("interpolation touches a masked node")
        return float(out) if out.ndim == 0 else out

    __call__ = interpolate

    def laplacian(self):
        """Grid-native 5-point Laplacian (plane Laplacian, chart factor included).

        Boundary rows (and masked neighbourhoods) come back as NaN.
        """
        v = self.values
        dx, dy = self.grid.spacing()
        out = np.full(v.shape, np.nan)
        if self.grid.periodic:
            lap = (v[2:, :] - 2 * v[1:-1, :] + v[:-2, :]) / dx**2 + (
                np.roll(v, -1, axis=1)[1:-1] - 2 * v[1:-1] + np.roll(v, 1, axis=1)[1:-1]
            ) / dy**2
            out[1:-1, :] = lap
        else:
            out[1:-1, 1:-1] = (v[2:, 1:-1] - 2 * v[1:-1, 1:-1] + v[:-2, 1:-1]) / dx**2 + (
                v[1:-1, 2:] - 2 * v[1:-1, 1:-1] + v[1:-1, :-2]
            ) / dy**2
        if self.grid.kind == "polar":
            if not self.grid.log_radial:
                raise UsageError("grid-native Laplacian needs a conformal chart")
            xi, _ = self.grid.nodes()
            out = out * np.exp(-2.0 * xi)
        return out

    def node_index(self, point, atol=1e-9):
        xi, eta = self.grid.from_plane(point[0], point[1])
        ax, ay = self.grid.axes()
        dx, dy = self.grid.spacing()
        fi, fj = (xi - ax[0]) / dx, (eta - ay[0]) / dy
        i, j = int(round(float(fi))), int(round(float(fj))) % self.grid.resolution
        if abs(fi - round(float(fi))) > atol * self.grid.resolution or abs(
            fj - round(float(fj))
        ) > atol * self.grid.resolution:
            raise UsageError("sampled-field stencils are only defined at grid nodes")
        return i, j


def _stencil_step(field, p, h):
    if h is None:
        h = field.default_step(p)
    h = np.broadcast_to(np.asarray(h, dtype=float), p.shape[:-1])
    if np.any(h <= 0):
        raise UsageError("finite-difference step must be positive")
    d = field.marker_distance(p[..., 0], p[..., 1])
    if np.any(d <= 2 * h):
        raise DomainError(f"{field.name}: stencil within 2h of a singularity or boundary")
    return h


def laplacian_fd(field, point, h=None):
    """Second-order 5-point Laplacian of ``field`` at ``point`` (or an (N, 2) array).

    On a :class:`SampledField` the grid-native stencil is used and ``point``
    must be a grid node.
    """
    if isinstance(field, SampledField):
        i, j = field.node_index(point)
        val = field.laplacian()[i, j]
        if not np.isfinite(val):
            raise DomainError("node on the grid boundary or next to a masked node")
        return float(val)
    p = _as_points(point)
    h = _stencil_step(field, p, h)
    x, y = p[..., 0], p[..., 1]
    c = field.evaluate(x, y)
    s = (
        field.evaluate(x + h, y)
        + field.evaluate(x - h, y)
        + field.evaluate(x, y + h)
        + field.evaluate(x, y - h)
    )
    out = (s - 4.0 * c) / h**2
    return float(out) if out.ndim == 0 else out


def gradient_fd(field, point, h=None):
    """Central-difference gradient; returns shape ``(..., 2)``."""
    if isinstance(field, SampledField):
        i, j = field.node_index(point)
        v = field.values
        n = field.grid.resolution
        if not 0 < i < n - 1 or (not field.grid.periodic and not 0 < j < n - 1):
            raise DomainError("node on the grid boundary")
        dx, dy = field.grid.spacing()
        jp, jm = (j + 1) % n, (j - 1) % n
        g = np.array([(v[i + 1, j] - v[i - 1, j]) / (2 * dx), (v[i, jp] - v[i, jm]) / (2 * dy)])
        if field.grid.kind == "polar":
            # chart gradient -> plane gradient
            xi, eta = field.grid.from_plane(point[0], point[1])
            e = np.exp(-float(xi))
            c, s = np.cos(eta), np.sin(eta)
            g = e * np.array([c * g[0] - s * g[1], s * g[0] + c * g[1]])
        if not np.all(np.isfinite(g)):
            raise DomainError("stencil touches a masked node")
        return g
    p = _as_points(point)
    h = _stencil_step(field, p, h)
    x, y = p[..., 0], p[..., 1]
    gx = (field.evaluate(x + h, y) - field.evaluate(x - h, y)) / (2 * h)
    gy = (field.evaluate(x, y + h) - field.evaluate(x, y - h)) / (2 * h)
    return np.stack([gx, gy], axis=-1)


# --- region integrals over super-level sets of grid data -------------------

_G2 = 0.5 / np.sqrt(3.0)
_GAUSS2 = ((0.5 - _G2, 0.5 - _G2), (0.5 + _G2, 0.5 - _G2), (0.5 - _G2, 0.5 + _G2), (0.5 + _G2, 0.5 + _G2))


def _wrapped(grid: GridSpec, values: np.ndarray):
    xi, eta = grid.axes()
    if grid.periodic:
        values = np.concatenate([values, values[:, :1]], axis=1)
        eta = np.append(eta, eta[0] + 2.0 * np.pi)
    return xi, eta, values


def _clip_triangles(P, phi):
    """Area and centroid of ``{phi > 0}`` inside each triangle (linear phi).

    ``P``: (m, 3, 2) vertices, ``phi``: (m, 3).  Returns (area, centroid).
    """
    def tri_area(a, b, c):
        return 0.5 * np.abs((b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (c[:, 0] - a[:, 0]) * (b[:, 1] - a[:, 1]))

    pos = phi > 0
    npos = pos.sum(axis=1)
    full_area = tri_area(P[:, 0], P[:, 1], P[:, 2])
    full_cent = P.mean(axis=1)
    area = np.where(npos == 3, full_area, 0.0)
    cent = full_cent.copy()

    for target, lone_positive in ((1, True), (2, False)):
        sel = npos == target
        if not np.any(sel):
            continue
        Ps, ph, ps = P[sel], phi[sel], pos[sel]
        # index of the vertex that is alone on its side
        lone = np.argmax(ps if lone_positive else ~ps, axis=1)
        k = np.arange(len(lone))
        a = Ps[k, lone]
        b = Ps[k, (lone + 1) % 3]
        c = Ps[k, (lone + 2) % 3]
        fa, fb, fc = ph[k, lone], ph[k, (lone + 1) % 3], ph[k, (lone + 2) % 3]
        tb = (fa / (fa - fb))[:, None]
        tc = (fa / (fa - fc))[:, None]
        qb = a + tb * (b - a)
        qc = a + tc * (c - a)
        small = tri_area(a, qb, qc)
        small_c = (a + qb + qc) / 3.0
        if lone_positive:
            area[sel] = small
            cent[sel] = small_c
        else:
            fa_ = full_area[sel]
            rest = np.maximum(fa_ - small, 0.0)
            area[sel] = rest
            with np.errstate(invalid="ignore", divide="ignore"):
                cc = (fa_[:, None] * full_cent[sel] - small[:, None] * small_c) / rest[:, None]
            cent[sel] = np.where(rest[:, None] > 0, cc, full_cent[sel])
    return area, cent


def region_integral(grid: GridSpec, values: np.ndarray, level, weight=None, above=True):
    """Integral of ``weight`` (a plane density) over ``{values > level}``.

    ``values`` are node samples on ``grid`` (NaN = masked; cells touching a
    masked node are dropped).  Cells entirely inside the region use a 2x2
    Gauss rule; cut cells are split into two triangles, clipped against the
    linear interpolant, and weighted at the centroid of the clipped piece.
    ``weight=None`` integrates plane area.  ``above=False`` integrates over
    ``{values < level}`` instead.  A sequence of levels returns an array and
    shares the full-cell work between them.
    """
    xi, eta, v = _wrapped(grid, np.asarray(values, dtype=float))
    levels = np.atleast_1d(np.asarray(level, dtype=float))
    dx, dy = xi[1] - xi[0], eta[1] - eta[0]

    def density(cx, cy):
        j = grid.log_scale(cx, cy)
        x, y = grid.to_plane(cx, cy)
        w = np.exp(2.0 * j)
        if weight is not None:
            w = w * weight(x, y)
        return w

    sgn = 1.0 if above else -1.0
    c00, c10, c01, c11 = v[:-1, :-1], v[1:, :-1], v[:-1, 1:], v[1:, 1:]
    valid = np.isfinite(c00) & np.isfinite(c10) & np.isfinite(c01) & np.isfinite(c11)
    if above:
        lowest = np.minimum(np.minimum(c00, c10), np.minimum(c01, c11))
    else:
        lowest = -np.maximum(np.maximum(c00, c10), np.maximum(c01, c11))
    lowest = np.where(valid, lowest, -np.inf)
    # cells full for the loosest level get their Gauss sums once
    loosest = np.min(sgn * levels)
    cand = valid & (lowest > loosest)
    I, J = np.nonzero(cand)
    cell = np.zeros(len(I))
    for gx, gy in _GAUSS2:
        cell += density(xi[I] + gx * dx, eta[J] + gy * dy)
    cell *= 0.25 * dx * dy
    cand_low = lowest[I, J]

    out = np.empty(len(levels))
    for k, lev in enumerate(levels):
        phi = sgn * (v - lev)
        p00, p10, p01, p11 = phi[:-1, :-1], phi[1:, :-1], phi[:-1, 1:], phi[1:, 1:]
        full = valid & (p00 > 0) & (p10 > 0) & (p01 > 0) & (p11 > 0)
        none = valid & (p00 <= 0) & (p10 <= 0) & (p01 <= 0) & (p11 <= 0)
        cut = valid & ~full & ~none
        total = float(cell[cand_low > sgn * lev].sum())
        Ic, Jc = np.nonzero(cut)
        if len(Ic):
            q00 = np.stack([xi[Ic], eta[Jc]], -1)
            q10 = np.stack([xi[Ic + 1], eta[Jc]], -1)
            q01 = np.stack([xi[Ic], eta[Jc + 1]], -1)
            q11 = np.stack([xi[Ic + 1], eta[Jc + 1]], -1)
            tris = np.concatenate([np.stack([q00, q10, q11], 1), np.stack([q00, q11, q01], 1)])
            vals = np.concatenate(
                [np.stack([p00[Ic, Jc], p10[Ic, Jc], p11[Ic, Jc]], 1), np.stack([p00[Ic, Jc], p11[Ic, Jc], p01[Ic, Jc]], 1)]
            )
            area, cent = _clip_triangles(tris, vals)
            keep = area > 0
            if np.any(keep):
                total += float(np.sum(area[keep] * density(cent[keep, 0], cent[keep, 1])))
        out[k] = total
    return float(out[0]) if np.ndim(level) == 0 else out


def polar_ring(points_radii: Sequence[float], n_angles: int = 32, center=(0.0, 0.0)):
    """Points on circles: shape ``(len(radii), n_angles, 2)``."""
    r = np.asarray(points_radii, dtype=float)[:, None]
    th = 2.0 * np.pi * (np.arange(n_angles) + 0.5) / n_angles
    return np.stack([center[0] + r * np.cos(th), center[1] + r * np.sin(th)], axis=-1)
