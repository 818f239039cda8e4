"""Named verification campaigns: each maps claims to module operations and
returns :class:`VerificationReport` rows in a fixed order."""
from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .errors import UsageError
from .fields import GridSpec
from .geodesics import avr, distance_slope, eikonal_distance
from .levelsets import coarea_consistency, coarea_integrated, default_thresholds, f_profile, integrated_inequality, ode_inequality_check
from .metrics import metric_cylinder_pullback, metric_flat, metric_gamma
from .potential import (
    average_upper_bound_check,
    conjugacy_check,
    laplacian_of_potential,
    liminf_ratio,
    mean_value_identity_check,
    p1_check,
    potential_upper_bound_check,
    prop_lower_check,
    slope_estimate,
)
from .quadrature import alpha_of, total_mass
from .reports import VerificationReport, emit_report, make_report
from .solutions import (
    LiouvilleSolution,
    cone_order_fit,
    kelvin_solution,
    parse_solution,
    pde_residual,
    sample_points,
    solution_cylinder,
    solution_gamma,
    solution_spherical,
)

CAMPAIGNS = ("theorem2-equality", "sharpness", "cylinder", "full")
MEAN_VALUE_PAIRS = (((0.0, 0.0), 1.0), ((2.0, 0.0), 0.5), ((0.5, 0.5), 0.3), ((-1.0, 2.0), 1.0), ((3.0, 3.0), 2.0))


@dataclass
class CampaignConfig:
    """Campaign settings; every field can be set from a ``key = value`` file."""

    campaign: str = "full"
    solution: str | None = None
    metric: str | None = None
    resolution: int = 512
    tol: float = 1e-6
    thresholds: int = 40
    residual_points: int = 200
    seed: int = 0
    workers: int = 1
    out: str | None = None
    formats: tuple = ("csv",)

    def __post_init__(self):
        if self.campaign not in CAMPAIGNS:
            raise UsageError(f"unknown campaign {self.campaign!r}; valid names: {', '.join(CAMPAIGNS)}")
        if not self.tol > 0:
            raise UsageError("tolerances must be positive")
        if self.resolution < 64:
            raise UsageError("grid resolution must be at least 64")
        if self.workers < 1:
            raise UsageError("workers must be at least 1")
        if self.thresholds < 3:
            raise UsageError("need at least three thresholds")

    @classmethod
    def from_file(cls, path, **overrides) -> "CampaignConfig":
        kinds = {f.name: f.type for f in fields(cls)}
        values = {}
        for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key = value")
            key, val = (s.strip() for s in line.split("=", 1))
            if key not in kinds:
                raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
            values[key] = _coerce(key, val)
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)


def _coerce(key, val):
    if key in ("resolution", "thresholds", "residual_points", "seed", "workers"):
        return int(val)
    if key == "tol":
        return float(val)
    if key == "formats":
        return tuple(v.strip() for v in val.split(",") if v.strip())
    return val


class _Rows:
    """Collects report rows and times each claim."""

    def __init__(self):
        self.rows: list[VerificationReport] = []
        self.profiles = []
        self.slopes = []
        self._t = time.perf_counter()

    def add(self, *args, **kw):
        now = time.perf_counter()
        kw.setdefault("runtime", now - self._t)
        self._t = now
        self.rows.append(make_report(*args, **kw))

    def info(self, claim_id, computed, note, provenance="derived"):
        self.rows.append(VerificationReport(claim_id, float(computed), None, provenance, math.inf, "none", "advisory", 0.0, note))

    def vacuous(self, claim_id, note, provenance="paper"):
        self.rows.append(VerificationReport(claim_id, math.nan, None, provenance, math.inf, "none", "vacuous", 0.0, note))


def _residual_points(n, seed):
    # inversion-symmetric annulus 1/4 <= |x| <= 4
    return sample_points(n, 0.25, 4.0, seed)


def residual_rows(rows: _Rows, sol: LiouvilleSolution, cfg: CampaignConfig, prefix="T1"):
    pts = _residual_points(cfg.residual_points, cfg.seed)
    r1 = np.abs(pde_residual(sol, pts))
    h = sol.u.default_step(pts)
    r2 = np.abs(pde_residual(sol, pts, 0.5 * h))
    rows.add(f"{prefix}.residual[{sol.label}]", r1.max(), 0.0, "derived", 1e-4, "le")
    # compare at the worst point: elsewhere roundoff can swamp the h^2 term
    i = int(np.argmax(r1))
    ratio = r1[i] / r2[i]
    rows.add(f"{prefix}.richardson[{sol.label}]", ratio, 4.0, "derived", 0.2, rel=True)


def _alpha_beta_rows(rows, sol, beta, provenance_alpha, alpha_ref):
    alpha = alpha_of(sol)
    rows.add(f"T2.alpha[{sol.label}]", alpha, alpha_ref, provenance_alpha, 0.01)
    rows.add(f"PropUpper.alpha_le_m2beta[{sol.label}]", -2 * beta - alpha, 0.0, "paper", 0.03, "ge",
             note="computed is the margin -2β - α")
    return alpha


def hlt_rows(rows, metric, beta_ref, provenance, cfg):
    rep = avr(metric, tol=cfg.tol)
    slope = distance_slope(metric)
    lab = metric.label
    rows.add(f"HLT.beta_gb[{lab}]", rep.beta_gb, beta_ref, provenance, 0.01)
    rows.add(f"HLT.beta_area[{lab}]", rep.beta_area, beta_ref, "derived", 0.03)
    rows.add(f"HLT.gap[{lab}]", rep.gap, 0.0, "paper", 0.03, "le")
    rows.add(f"HLT.slope_gap[{lab}]", abs(slope - rep.beta_gb), 0.0, "paper", 0.03, "le")
    return rep


def levelset_rows(rows, sol, beta, cfg, equality=False):
    ts = default_thresholds(sol, cfg.thresholds)
    prof = f_profile(sol, ts, cfg.resolution, beta=beta if beta > 0 else None)
    rows.profiles.append(prof)
    lab = sol.label
    rows.add(f"PropUpper.F_flux[{lab}]", np.max(np.abs(prof.F - prof.flux) / prof.F), 0.0, "paper", 0.02, "le")
    lhs, rhs = coarea_consistency(prof)
    rows.add(f"PropUpper.coarea[{lab}]", np.max(np.abs(lhs - rhs) / np.abs(rhs)), 0.0, "paper", 0.03, "le")
    if len(ts) >= 20:
        # integrated over t needs dense thresholds for Simpson to resolve it
        lhs, rhs = coarea_integrated(prof)
        rows.add(f"PropUpper.coarea_integrated[{lab}]", np.max(np.abs(lhs - rhs) / np.abs(lhs)), 0.0, "paper", 0.03, "le")
    if beta > 0:
        ratio = prof.ratio
        if equality:
            rows.add(f"Brendle.ratio_min[{lab}]", ratio.min(), 1.0, "paper", 0.02)
            rows.add(f"Brendle.ratio_max[{lab}]", ratio.max(), 1.0, "paper", 0.02)
        else:
            rows.add(f"Brendle.ratio_min[{lab}]", ratio.min(), 1.0, "paper", 0.02, "ge")
        margin, r = ode_inequality_check(prof, beta)
        rel = margin / np.abs(r)
        rows.add(f"PropUpper.ode_margin[{lab}]", rel.min(), 0.0, "paper", 0.03, "ge")
        if equality:
            rows.add(f"PropUpper.ode_equality[{lab}]", np.max(np.abs(rel)), 0.0, "derived", 0.03, "le")
    else:
        rows.vacuous(f"Brendle.ratio[{lab}]", "beta = 0: inequality vacuous")
    mass = total_mass(sol, cfg.tol).value
    integ = integrated_inequality(prof, beta, mass)
    bound = 4 * np.pi * beta
    if beta > 0:
        rows.add(f"PropUpper.integrated[{lab}]", integ.lhs / integ.rhs, 1.0, "paper", 0.03, "ge")
        rows.add(f"PropUpper.mass_ge_4pibeta[{lab}]", mass, bound, "paper", 0.02 * bound, "ge")
        if equality:
            rows.add(f"PropUpper.mass_equality[{lab}]", mass, bound, "derived", 0.02, rel=True)
    rows.info(f"PropUpper.excluded_tail[{lab}]", integ.excluded_tail, "mass of {u <= t_min}, outside the sampled thresholds")
    return prof


def potential_rows(rows, sol, cfg):
    lab = sol.label
    conj = conjugacy_check(sol)
    rows.add(f"Lemma.conjugacy[{lab}]", conj.deviation, 0.0, "derived", 1e-2, "le")
    ub = potential_upper_bound_check(sol)
    rows.add(f"Lemma.claim1_increment[{lab}]", ub.increments[-1], 0.0, "derived", 1e-2, "le")
    mv = max(mean_value_identity_check(sol, x, rho) for x, rho in MEAN_VALUE_PAIRS)
    rows.add(f"Lemma.mean_value[{lab}]", mv, 0.0, "derived", 1e-3, "le")
    av = average_upper_bound_check(sol, sigma=1.0, eps=0.1)
    rows.add(f"Lemma.average_bound[{lab}]", av.increments[-1], 0.0, "paper", 1e-2, "le")
    rows.info(f"Lemma.claim3_residual[{lab}]", max(av.extra["residual_terms"]), "raw ∫_B ψ ln(|y|/|x-y|), no bound asserted")


def theorem2_equality(cfg: CampaignConfig, rows: _Rows):
    sol = solution_spherical()
    flat = metric_flat()
    rep = hlt_rows(rows, flat, 1.0, "trivial", cfg)
    beta = rep.beta_gb
    alpha = _alpha_beta_rows(rows, sol, beta, "derived", -2.0)
    rows.add(f"T2.alpha_plus_2beta[{sol.label}]", alpha + 2 * beta, 0.0, "paper", 0.02)
    est = slope_estimate(sol.u, "ln-euclid")
    rows.slopes.append(est)
    rows.add(f"ChengLin.slope_euclid[{sol.label}]", est.slope, alpha, "derived", 0.02, rel=True)
    pl = prop_lower_check(slope_estimate(sol.u, flat).slope, alpha, beta)
    rows.add(f"PropLower.consistent[{sol.label}]", float(pl.consistent and pl.hypothesis), 1.0, "paper", 0.5,
             note="hypothesis holds and α >= -2β")
    rows.add(f"P1.liminf[{sol.label}]", liminf_ratio(sol.u, flat), alpha / beta, "paper", 0.05, "ge")
    levelset_rows(rows, sol, beta, cfg, equality=True)


def sharpness(cfg: CampaignConfig, rows: _Rows, gamma: float | None = None):
    if gamma is None:
        sel = cfg.solution or "gamma:0.75"
        sol = parse_solution(sel)
        if sol.family != "gamma":
            raise UsageError("the sharpness campaign needs a gamma solution")
        gamma = sol.params[0]
    sol = solution_gamma(gamma)
    metric = sol.metric
    b_ref = 2 * gamma - 1
    rep = hlt_rows(rows, metric, b_ref, "paper", cfg)
    beta = rep.beta_gb
    alpha = _alpha_beta_rows(rows, sol, beta, "paper", -2 * gamma)
    s_int = slope_estimate(sol.u, metric)
    s_euc = slope_estimate(sol.u, "ln-euclid")
    rows.slopes.append(s_int)
    rows.add(f"Sharp.slope_intrinsic[{sol.label}]", s_int.slope, -2 * gamma / (2 * gamma - 1), "paper", 0.05, rel=True)
    rows.add(f"Sharp.slope_euclid[{sol.label}]", s_euc.slope, -2 * gamma, "paper", 0.03, rel=True)
    pl = prop_lower_check(s_int.slope, alpha, beta)
    rows.add(f"PropLower.consistent[{sol.label}]", float(pl.consistent), 1.0, "paper", 0.5,
             note="hypothesis fails (slope < -2), no conclusion required" if not pl.hypothesis else "")
    rows.add(f"P1.liminf[{sol.label}]", liminf_ratio(sol.u, metric), alpha / beta, "paper", 0.05, "ge")
    return sol, beta


def cylinder(cfg: CampaignConfig, rows: _Rows, b: float | None = None, mu: float | None = None, levels=True):
    if b is None:
        sol = parse_solution(cfg.solution or "cylinder:0:0")
        if sol.family != "cylinder":
            raise UsageError("the cylinder campaign needs a cylinder solution")
        b, mu = sol.params
    sol = solution_cylinder(b, mu)
    lab = sol.label
    residual_rows(rows, sol, cfg)
    residual_rows(rows, kelvin_solution(sol), cfg)
    mass = total_mass(sol, cfg.tol).value
    rows.add(f"T1.mass[{lab}]", mass, 4 * np.pi * (b + 1), "derived", 0.01, rel=True)
    alpha = -mass / (2 * np.pi)
    rows.add(f"PropUpper.alpha_le_m2beta[{lab}]", -alpha, 0.0, "paper", 0.03, "ge", note="beta = 0; margin is -α")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        est = cone_order_fit(sol.w)
    rows.add(f"T1.cone_beta1[{lab}]", est.beta1, b, "paper", 0.05 * max(1.0, abs(b)))
    rows.add(f"T1.cone_beta2[{lab}]", est.beta2, -b - 2, "paper", 0.05, rel=True)
    if mu == 0:
        rep = avr(metric_cylinder_pullback())
        rows.add(f"HLT.beta_area[{lab}]", rep.beta_area, 0.0, "derived", 0.02)
        grid = GridSpec.log_polar(1.001 * sol.metric.inner_cutoff, math.exp(22.0), cfg.resolution)
        dist = eikonal_distance(sol.metric, grid, (1.0, 0.0))
        est = slope_estimate(sol.u, dist, radii=np.exp(np.linspace(5.0, 20.0, 9)), abscissa="linear")
        rows.slopes.append(est)
        rows.add(f"T1.linear_decay_slope[{lab}]", est.slope, -(b + 1), "paper", 0.03, rel=True)
    if levels:
        levelset_rows(rows, sol, 0.0, cfg)


def _sec_residuals(cfg, rows):
    for sol in [solution_spherical()] + [solution_gamma(g) for g in (0.5, 0.6, 0.75, 0.9)]:
        residual_rows(rows, sol, cfg)
        residual_rows(rows, kelvin_solution(sol), cfg)


def _sec_cylinders(cfg, rows):
    for b in (0, 1, 2):
        cylinder(cfg, rows, b, 0.0, levels=(b == 0))
    for m in (0.5, 2.0):
        cylinder(cfg, rows, 1, m, levels=False)


def _sec_gamma(cfg, rows, g):
    sol, beta = sharpness(cfg, rows, g)
    levelset_rows(rows, sol, beta, cfg)


def _sec_potential(cfg, rows):
    for sol in (solution_spherical(), solution_gamma(0.75)):
        potential_rows(rows, sol, cfg)
    pts = sample_points(5, 0.3, 3.0, seed=cfg.seed + 11)
    rel, _ = laplacian_of_potential(solution_spherical().density, pts)
    rows.add("Lemma.laplacian_v[spherical]", rel.max(), 0.0, "derived", 0.05, "le")


FULL_SECTIONS = (
    (_sec_residuals, ()),
    (_sec_cylinders, ()),
    (theorem2_equality, ()),
    (_sec_gamma, (0.6,)),
    (_sec_gamma, (0.75,)),
    (_sec_gamma, (0.9,)),
    (_sec_potential, ()),
)


def _run_section(cfg, idx):
    fn, args = FULL_SECTIONS[idx]
    rows = _Rows()
    fn(cfg, rows, *args)
    return rows


def full(cfg: CampaignConfig, rows: _Rows):
    # sections share no state; results are merged in declaration order
    idx = range(len(FULL_SECTIONS))
    if cfg.workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(cfg.workers) as pool:
            parts = list(pool.map(_run_section, [cfg] * len(idx), idx))
    else:
        parts = [_run_section(cfg, i) for i in idx]
    for part in parts:
        rows.rows += part.rows
        rows.profiles += part.profiles
        rows.slopes += part.slopes


def run_campaign(cfg: CampaignConfig) -> list[VerificationReport]:
    """Run the selected campaign and write reports when ``cfg.out`` is set.

    ``cfg.out`` is a path stem; one file per format is written next to it.
    """
    rows = _Rows()
    if cfg.campaign == "theorem2-equality":
        theorem2_equality(cfg, rows)
    elif cfg.campaign == "sharpness":
        sol, beta = sharpness(cfg, rows)
        levelset_rows(rows, sol, beta, cfg)
    elif cfg.campaign == "cylinder":
        cylinder(cfg, rows)
    else:
        full(cfg, rows)
    if cfg.out:
        stem = Path(cfg.out)
        for fmt in cfg.formats:
            suffix = ".svg" if fmt.startswith("svg") else f".{fmt}"
            emit_report(rows.rows, fmt, stem.with_suffix(suffix), rows.profiles, rows.slopes)
    run_campaign.last_extras = (rows.profiles, rows.slopes)
    return rows.rows
