"""``liouville-verify`` command line."""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import campaigns as cp
from .errors import CompletenessError, UsageError, VerificationError
from .fields import GridSpec
from .geodesics import avr, distance_slope, eikonal_distance, is_complete
from .levelsets import default_thresholds, f_profile, ode_inequality_check
from .metrics import parse_metric
from .potential import slope_estimate
from .quadrature import alpha_of, integrate_plane, total_gauss_curvature
from .reports import VerificationReport, emit_report, make_report
from .solutions import parse_solution

OUT_ENV = "LIOUVILLE_VERIFY_OUT"
FORMATS = ("csv", "json", "svg")


def beta_reference(metric):
    """Exact asymptotic volume ratio for the built-in families, else ``None``."""
    if metric.name == "flat":
        return 1.0
    if metric.name == "gamma":
        return 2.0 * metric.params[0] - 1.0
    if metric.name == "cylinder":
        return 0.0
    return None


def alpha_reference(sol):
    if sol.family == "spherical":
        return -2.0
    if sol.family == "gamma":
        return -2.0 * sol.params[0]
    if sol.family == "cylinder":
        return -2.0 * (sol.params[0] + 1.0)
    return None


def _row(claim_id, computed, reference, provenance, tol, comparison="abs", note=""):
    if reference is None:
        return VerificationReport(claim_id, float(computed), None, provenance, math.inf, "none", "advisory", 0.0, note)
    return make_report(claim_id, computed, reference, provenance, tol, comparison, note=note)


def _config(args) -> cp.CampaignConfig:
    overrides = dict(
        solution=args.solution,
        metric=args.metric,
        resolution=args.grid,
        tol=args.tol,
        thresholds=args.thresholds,
        workers=getattr(args, "workers", None),
        seed=getattr(args, "seed", None),
    )
    name = getattr(args, "name", None)
    if name is not None:
        overrides["campaign"] = name
    if getattr(args, "config", None):
        return cp.CampaignConfig.from_file(args.config, **overrides)
    return cp.CampaignConfig(**{k: v for k, v in overrides.items() if v is not None})


def _need(args, what):
    val = getattr(args, what)
    if val is None:
        raise UsageError(f"--{what} is required for this command")
    return val


def cmd_residual(args):
    cfg = _config(args)
    sol = parse_solution(_need(args, "solution"))
    rows = cp._Rows()
    cp.residual_rows(rows, sol, cfg)
    return rows


def cmd_alpha(args):
    sol = parse_solution(_need(args, "solution"))
    tol = args.tol or 1e-8
    res = integrate_plane(sol.density, tol)
    rows = cp._Rows()
    if res.diverged:
        rows.rows.append(VerificationReport(f"T2.alpha[{sol.label}]", math.nan, None, "derived", math.inf, "none", "fail", 0.0,
                                            f"total curvature diverges, mass growth exponent {res.growth_exponent:.3g}"))
        return rows
    alpha = alpha_of(sol, tol)
    note = f"error={res.error:.3g} panels={res.panels}"
    prov = "paper" if sol.family == "gamma" else "derived"
    rows.rows.append(_row(f"T2.alpha[{sol.label}]", alpha, alpha_reference(sol), prov, 0.01, note=note))
    return rows


def cmd_total_curvature(args):
    metric = parse_metric(_need(args, "metric"))
    tot = total_gauss_curvature(metric, args.tol or 1e-8)
    rows = cp._Rows()
    rows.rows.append(_row(f"HLT.total_curvature[{metric.label}]", tot, None, "derived", 0.0))
    if metric.domain == "plane":
        b = 1.0 - tot / (2.0 * math.pi)
        rows.rows.append(_row(f"HLT.beta_gb[{metric.label}]", b, beta_reference(metric), "derived", 0.01))
    return rows


def cmd_avr(args):
    metric = parse_metric(_need(args, "metric"))
    rows = cp._Rows()
    rep = avr(metric, tmax=args.tmax, tol=args.tol or 1e-8, method=args.method)
    ref = beta_reference(metric)
    lab = metric.label
    note = f"method={rep.method} fit_residual={rep.fit_residual:.3g}"
    rows.rows.append(_row(f"HLT.beta_area[{lab}]", rep.beta_area, ref, "derived", 0.03, note=note))
    if rep.beta_gb is not None:
        rows.rows.append(_row(f"HLT.beta_gb[{lab}]", rep.beta_gb, ref, "derived", 0.01))
        rows.add(f"HLT.gap[{lab}]", rep.gap, 0.0, "paper", 0.03, "le")
    return rows


def cmd_distance_slope(args):
    metric = parse_metric(_need(args, "metric"))
    rows = cp._Rows()
    method = args.method
    if method == "auto":
        method = "radial" if metric.radial and metric.domain == "plane" else "eikonal"
    if method == "radial" and not is_complete(metric):
        raise CompletenessError(f"{metric.label} is not complete")
    dist = None
    if method == "eikonal":
        # log-polar chart reaching past the fitting radii 1e8..1e12
        inner = max(metric.inner_cutoff, 1e-3) * 1.001
        grid = GridSpec.log_polar(inner, 1e13, args.grid or 512)
        dist = eikonal_distance(metric, grid, (max(1.0, 2 * inner), 0.0))
    s = distance_slope(metric, dist=dist)
    ref, note = beta_reference(metric), f"method={method}"
    if ref == 0.0:
        # r ~ ln|x| here, so the log-log slope only decays like 1/ln|x|
        ref, note = None, note + " zero-ratio limit approached like 1/ln|x|"
    rows.rows.append(_row(f"HLT.distance_slope[{metric.label}]", s, ref, "derived", 0.03, note=note))
    return rows


def _profile(args, beta):
    sol = parse_solution(_need(args, "solution"))
    n = args.thresholds or 40
    ts = default_thresholds(sol, n)
    return sol, f_profile(sol, ts, args.grid or 512, beta=beta if beta and beta > 0 else None)


def _solution_beta(args):
    sol = parse_solution(_need(args, "solution"))
    return beta_reference(sol.metric)


def cmd_isoperimetric_scan(args):
    beta = _solution_beta(args)
    sol, prof = _profile(args, beta)
    table = []
    margin = None
    if beta is not None and beta > 0:
        margin, _ = ode_inequality_check(prof, beta)
    for i, row in enumerate(prof.rows()):
        out = {k: row.get(k, math.nan) for k in ("t", "area", "length", "F", "flux", "ratio")}
        out["margin"] = float(margin[i]) if margin is not None else math.nan
        table.append(out)
    rows = cp._Rows()
    rows.profiles.append(prof)
    rows.table = table
    if beta and beta > 0:
        rows.add(f"Brendle.ratio_min[{sol.label}]", prof.ratio.min(), 1.0, "paper", 0.02, "ge")
    else:
        rows.vacuous(f"Brendle.ratio[{sol.label}]", "beta = 0: inequality vacuous")
    return rows


def cmd_f_profile(args):
    cfg = _config(args)
    sol = parse_solution(_need(args, "solution"))
    beta = beta_reference(sol.metric) or 0.0
    rows = cp._Rows()
    cp.levelset_rows(rows, sol, beta, cfg, equality=sol.family == "spherical")
    return rows


def cmd_potential_check(args):
    cfg = _config(args)
    sol = parse_solution(_need(args, "solution"))
    rows = cp._Rows()
    cp.potential_rows(rows, sol, cfg)
    return rows


def cmd_slopes(args):
    sol = parse_solution(_need(args, "solution"))
    against = args.against
    rows = cp._Rows()
    if against == "euclid":
        est = slope_estimate(sol.u, "ln-euclid")
        ref = alpha_reference(sol) if sol.family != "cylinder" else None
        cid = f"Sharp.slope_euclid[{sol.label}]"
    else:
        metric = sol.metric
        if metric.domain == "plane":
            est = slope_estimate(sol.u, metric)
        else:
            res = args.grid or 512
            grid = GridSpec.log_polar(1.001 * metric.inner_cutoff, math.exp(22.0), res)
            dist = eikonal_distance(metric, grid, (1.0, 0.0))
            est = slope_estimate(sol.u, dist, radii=np.exp(np.linspace(5.0, 20.0, 9)), abscissa="linear")
        if sol.family == "gamma":
            g = sol.params[0]
            ref = -2 * g / (2 * g - 1) if g > 0.5 else None
        elif sol.family == "spherical":
            ref = -2.0
        elif sol.family == "cylinder" and sol.params[1] == 0:
            ref = -(sol.params[0] + 1.0)
        else:
            ref = None
        cid = f"Sharp.slope_intrinsic[{sol.label}]"
    rows.slopes.append(est)
    if ref is None:
        rows.rows.append(_row(cid, est.slope, None, "derived", 0.0, note=f"band={est.band:.3g}"))
    else:
        rows.add(cid, est.slope, ref, "paper", 0.05, rel=True, note=f"band={est.band:.3g}")
    rows.table = [
        {
            "abscissa": float(a),
            "ordinate": float(o),
            "fit": float(est.intercept + est.slope * a),
            "slope": float(est.slope),
            "intercept": float(est.intercept),
            "band": float(est.band),
        }
        for a, o in zip(est.abscissa, est.ordinate)
    ]
    return rows


def cmd_campaign(args):
    cfg = _config(args)
    rows = cp._Rows()
    rows.rows = cp.run_campaign(cfg)
    rows.profiles, rows.slopes = cp.run_campaign.last_extras
    return rows


COMMANDS = {
    "residual": cmd_residual,
    "alpha": cmd_alpha,
    "total-curvature": cmd_total_curvature,
    "avr": cmd_avr,
    "distance-slope": cmd_distance_slope,
    "isoperimetric-scan": cmd_isoperimetric_scan,
    "f-profile": cmd_f_profile,
    "potential-check": cmd_potential_check,
    "slopes": cmd_slopes,
    "campaign": cmd_campaign,
}


def _table_text(table, fmt):
    if fmt == "json":
        return json.dumps(table, indent=2) + "\n"
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(table[0]), lineterminator="\n")
    w.writeheader()
    for row in table:
        w.writerow({k: f"{v:.10g}" if isinstance(v, float) else v for k, v in row.items()})
    return buf.getvalue()


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--metric", help="metric selector, e.g. gamma:0.75")
    common.add_argument("--solution", help="solution selector, e.g. cylinder:1:0")
    common.add_argument("--grid", type=int, help="grid resolution N (N x N)")
    common.add_argument("--tol", type=float, help="quadrature tolerance")
    common.add_argument("--out", help=f"output file; default is stdout, or a file under ${OUT_ENV}")
    common.add_argument("--format", choices=FORMATS, default="csv")
    common.add_argument("--tmax", type=float, help="largest geodesic radius for avr fits")
    common.add_argument("--thresholds", type=int, help="number of level-set thresholds")
    common.add_argument("--against", choices=("euclid", "intrinsic"), default="intrinsic")
    common.add_argument("--method", choices=("auto", "radial", "eikonal"), default="auto")

    p = argparse.ArgumentParser(prog="liouville-verify", description="Numerical checks for Liouville-equation solutions on conformal surfaces.")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name, parents=[common])
        if name == "campaign":
            sp.add_argument("name", nargs="?", choices=cp.CAMPAIGNS, default=None)
            sp.add_argument("--config", help="key = value campaign file")
            sp.add_argument("--workers", type=int)
            sp.add_argument("--seed", type=int)
        if name in ("residual", "potential-check", "f-profile"):
            sp.add_argument("--seed", type=int)
    return p


def _destination(args):
    if args.out:
        return Path(args.out)
    base = os.environ.get(OUT_ENV)
    if base:
        return Path(base) / f"{args.command}.{args.format}"
    return None


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        rows = COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except VerificationError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    dest = _destination(args)
    table = getattr(rows, "table", None)
    if table and args.format != "svg":
        text = _table_text(table, args.format)
        if dest is not None:
            dest.parent.mkdir(parents=True, exist_ok=True)
            dest.write_text(text)
    else:
        text = emit_report(rows.rows, args.format, dest, rows.profiles, rows.slopes)
    if dest is None:
        sys.stdout.write(text)
    if dest is not None or table:
        # summary on stderr so stdout stays clean when piping
        for r in rows.rows:
            print(f"{r.status:8s} {r.claim_id}", file=sys.stderr)
    return 1 if any(r.failed for r in rows.rows) else 0


if __name__ == "__main__":
    sys.exit(main())
