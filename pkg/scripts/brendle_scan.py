"""Sweep upper level sets and print the isoperimetric ratio L²/(4πβA).

    python3 scripts/brendle_scan.py --solution gamma:0.75 --thresholds 40
"""
import argparse

import numpy as np

from liouville_verify.levelsets import default_thresholds, isoperimetric_check
from liouville_verify.solutions import parse_solution


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--solution", default="gamma:0.75")
    ap.add_argument("--beta", type=float, help="defaults to the family's asymptotic volume ratio")
    ap.add_argument("--thresholds", type=int, default=40)
    ap.add_argument("--grid", type=int, default=512)
    args = ap.parse_args()
    sol = parse_solution(args.solution)
    beta = args.beta
    if beta is None:
        from liouville_verify.cli import beta_reference

        beta = beta_reference(sol.metric)
    if not beta or beta <= 0:
        raise SystemExit(f"ratio undefined for beta={beta}")
    prof = isoperimetric_check(sol, beta, default_thresholds(sol, args.thresholds), args.grid)
    print(f"{'t':>10s} {'area':>12s} {'length':>12s} {'ratio':>9s}")
    for t, a, l, r in zip(prof.ts, prof.area, prof.length, prof.ratio):
        print(f"{t:10.4f} {a:12.5g} {l:12.5g} {r:9.5f}")
    print(f"min ratio {np.min(prof.ratio):.5f}")


if __name__ == "__main__":
    main()
