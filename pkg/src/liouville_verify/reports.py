"""Verification report rows and their CSV / JSON / SVG emitters."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import UsageError

PROVENANCE = ("paper", "derived", "trivial")
STATUSES = ("pass", "fail", "advisory", "vacuous")
COMPARISONS = ("abs", "le", "ge", "none")
CSV_FIELDS = ("claim_id", "computed", "reference", "provenance", "tolerance", "comparison", "status", "note")


@dataclass
class VerificationReport:
    """One checked claim.

    ``tolerance`` is always absolute.  ``comparison`` says how computed and
    reference relate when the row passes: ``abs`` means
    ``|computed - reference| <= tolerance``, ``le`` means
    ``computed <= reference + tolerance`` and ``ge`` means
    ``computed >= reference - tolerance``.  ``runtime`` is kept in memory but
    never written, so emitted files are reproducible.
    """

    claim_id: str
    computed: float
    reference: float | None
    provenance: str
    tolerance: float
    comparison: str = "abs"
    status: str = "pass"
    runtime: float = 0.0
    note: str = ""
    extra: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.provenance not in PROVENANCE:
            raise UsageError(f"provenance must be one of {PROVENANCE}")
        if self.status not in STATUSES:
            raise UsageError(f"status must be one of {STATUSES}")
        if self.comparison not in COMPARISONS:
            raise UsageError(f"comparison must be one of {COMPARISONS}")

    @property
    def failed(self) -> bool:
        return self.status == "fail"


def judge(computed: float, reference: float, tolerance: float, comparison: str = "abs") -> str:
    if not math.isfinite(computed):
        return "fail"
    if comparison == "abs":
        ok = abs(computed - reference) <= tolerance
    elif comparison == "le":
        ok = computed <= reference + tolerance
    elif comparison == "ge":
        ok = computed >= reference - tolerance
    else:
        raise UsageError(f"cannot judge comparison {comparison!r}")
    return "pass" if ok else "fail"


def make_report(claim_id, computed, reference, provenance, tolerance, comparison="abs", rel=False, runtime=0.0, note="", status=None, **extra) -> VerificationReport:
    """Build a row; ``rel=True`` turns a relative tolerance into an absolute one."""
    computed = float(computed)
    tol = float(tolerance) * abs(float(reference)) if rel else float(tolerance)
    if tol <= 0:
        raise UsageError("tolerance must be positive")
    if status is None:
        status = judge(computed, float(reference), tol, comparison)
    return VerificationReport(claim_id, computed, None if reference is None else float(reference), provenance, tol, comparison, status, runtime, note, extra)


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        return f"{x:.10g}"
    return str(x)


def report_rows(reports):
    for r in reports:
        yield {k: _fmt(getattr(r, k)) for k in CSV_FIELDS}


def to_csv(reports) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
    w.writeheader()
    for row in report_rows(reports):
        w.writerow(row)
    return buf.getvalue()


def to_json(reports) -> str:
    rows = []
    for r in reports:
        d = asdict(r)
        d.pop("runtime")
        d.pop("extra")
        for k in ("computed", "reference", "tolerance"):
            if isinstance(d[k], float):
                d[k] = float(_fmt(d[k])) if math.isfinite(d[k]) else None
        rows.append(d)
    return json.dumps(rows, indent=2, sort_keys=True) + "\n"


def _svg_summary(reports, profiles=(), slopes=()) -> str:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    matplotlib.rcParams["svg.hashsalt"] = "liouville-verify"
    panels = 1 + len(profiles) + len(slopes)
    fig, axes = plt.subplots(panels, 1, figsize=(7, 3 * panels), squeeze=False)
    ax = axes[0, 0]
    ids = [r.claim_id for r in reports]
    score = []
    for r in reports:
        if r.reference is None or r.tolerance <= 0:
            score.append(0.0)
        else:
            score.append((r.computed - r.reference) / r.tolerance)
    colors = ["tab:red" if r.failed else "tab:blue" for r in reports]
    ax.barh(range(len(ids)), score, color=colors)
    ax.set_yticks(range(len(ids)), ids, fontsize=6)
    ax.axvline(-1, color="k", lw=0.5)
    ax.axvline(1, color="k", lw=0.5)
    ax.set_xlabel("(computed - reference) / tolerance")
    k = 1
    for prof in profiles:
        ax = axes[k, 0]
        k += 1
        if prof.F is not None:
            ax.plot(prof.ts, prof.F, "o-", ms=2, label="F(t)")
            ax.plot(prof.ts, prof.flux, "x--", ms=3, label="flux(t)")
        if prof.ratio is not None:
            ax2 = ax.twinx()
            ax2.plot(prof.ts, prof.ratio, "g.-", ms=2, label="L²/(4πβA)")
            ax2.set_ylabel("isoperimetric ratio")
        ax.set_xlabel("t")
        ax.set_title(prof.label, fontsize=8)
        ax.legend(fontsize=6)
    for est in slopes:
        ax = axes[k, 0]
        k += 1
        ax.plot(est.abscissa, est.ordinate, "o", ms=3)
        xs = np.array([est.abscissa.min(), est.abscissa.max()])
        ax.plot(xs, est.intercept + est.slope * xs, "-", lw=1)
        ax.set_xlabel(est.against)
        ax.set_title(f"slope {est.slope:.4g} ± {est.band:.2g}", fontsize=8)
    fig.tight_layout()
    buf = io.StringIO()
    fig.savefig(buf, format="svg", metadata={"Date": None})
    plt.close(fig)
    return buf.getvalue()


def emit_report(reports, fmt: str = "csv", out=None, profiles=(), slopes=()):
    """Serialise report rows; writes ``out`` when given and returns the text."""
    reports = list(reports)
    if fmt == "csv":
        text = to_csv(reports)
    elif fmt == "json":
        text = to_json(reports)
    elif fmt in ("svg", "svg-plot"):
        text = _svg_summary(reports, profiles, slopes)
    else:
        raise UsageError(f"unknown report format {fmt!r}; valid: csv, json, svg")
    if out is not None:
        path = Path(out)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    return text
