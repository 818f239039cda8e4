"""Run every named campaign and write CSV/JSON/SVG reports.

    python3 scripts/run_campaigns.py --out results/
    python3 scripts/run_campaigns.py --update-golden
"""
import argparse
import sys
import time
from pathlib import Path

from liouville_verify.campaigns import CAMPAIGNS, CampaignConfig, run_campaign
from liouville_verify.reports import to_csv

GOLDEN = Path(__file__).resolve().parents[1] / "tests" / "golden" / "full_campaign.csv"


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="results")
    ap.add_argument("--only", choices=CAMPAIGNS)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--update-golden", action="store_true", help="rewrite the regression golden from the full campaign")
    args = ap.parse_args()

    if args.update_golden:
        rows = run_campaign(CampaignConfig(campaign="full", workers=args.workers))
        GOLDEN.write_text(to_csv(rows))
        print(f"wrote {GOLDEN} ({len(rows)} rows)")
        return 0

    failed = 0
    for name in [args.only] if args.only else CAMPAIGNS:
        t0 = time.perf_counter()
        cfg = CampaignConfig(campaign=name, out=str(Path(args.out) / name), formats=("csv", "json", "svg"), workers=args.workers)
        rows = run_campaign(cfg)
        bad = [r.claim_id for r in rows if r.failed]
        failed += len(bad)
        print(f"{name:18s} {len(rows):4d} rows  {len(bad)} failed  {time.perf_counter() - t0:6.1f}s")
        for cid in bad:
            print(f"    FAIL {cid}")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
