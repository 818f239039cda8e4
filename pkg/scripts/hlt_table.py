"""Print the asymptotic volume ratio table for the flat and gamma metrics.

Both estimates (area fit and total curvature) plus the distance slope.

    python3 scripts/hlt_table.py --gammas 0.55 0.6 0.75 0.9
"""
import argparse

from liouville_verify.geodesics import avr, distance_slope
from liouville_verify.metrics import metric_flat, metric_gamma


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--gammas", type=float, nargs="+", default=[0.6, 0.75, 0.9])
    args = ap.parse_args()
    rows = [("flat", metric_flat(), 1.0)] + [(f"gamma:{g:g}", metric_gamma(g), 2 * g - 1) for g in args.gammas]
    print(f"{'metric':12s} {'expected':>9s} {'beta_area':>10s} {'beta_gb':>10s} {'slope':>10s} {'gap':>9s}")
    for name, metric, ref in rows:
        rep = avr(metric)
        slope = distance_slope(metric)
        print(f"{name:12s} {ref:9.4f} {rep.beta_area:10.5f} {rep.beta_gb:10.5f} {slope:10.5f} {rep.gap:9.2e}")


if __name__ == "__main__":
    main()
