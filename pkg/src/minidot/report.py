"""Report rendering: delimited output plus figures for suite runs."""

from __future__ import annotations

import csv
import os
from typing import List

from .harness import SuiteReport


def write_csv(reports: List[SuiteReport], path: str) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["suite", "total", "violations", "ok"])
        for r in reports:
            w.writerow([r.name, r.total, len(r.violations), r.ok])


def write_rows_csv(report: SuiteReport, path: str) -> None:
    if not report.rows:
        return
    keys = sorted({k for row in report.rows for k in row})
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=keys)
        w.writeheader()
        for row in report.rows:
            w.writerow(row)


def write_figures(reports: List[SuiteReport], outdir: str) -> List[str]:
    """Terms-by-size and outcome-distribution figures for suites with rows."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    written = []
    for r in reports:
        if not r.rows:
            continue
        sizes = [row["size"] for row in r.rows if "size" in row]
        outcomes = [row["outcome"] for row in r.rows if "outcome" in row]
        if sizes:
            fig, ax = plt.subplots(figsize=(5, 3.2))
            lo, hi = min(sizes), max(sizes)
            ax.hist(sizes, bins=range(lo, hi + 2), align="left",
                    rwidth=0.8, color="#4878a8")
            ax.set_xlabel("term size")
            ax.set_ylabel("well-typed terms")
            ax.set_title(r.name)
            fig.tight_layout()
            p = os.path.join(outdir, f"{_slug(r.name)}_sizes.png")
            fig.savefig(p, dpi=120)
            plt.close(fig)
            written.append(p)
        if outcomes:
            counts = {}
            for o in outcomes:
                counts[o] = counts.get(o, 0) + 1
            fig, ax = plt.subplots(figsize=(5, 3.2))
            ax.bar(list(counts), list(counts.values()), color="#a85448")
            ax.set_ylabel("terms")
            ax.set_title(f"{r.name}: outcomes")
            fig.tight_layout()
            p = os.path.join(outdir, f"{_slug(r.name)}_outcomes.png")
            fig.savefig(p, dpi=120)
            plt.close(fig)
            written.append(p)
    return written


def _slug(name: str) -> str:
    return "".join(c if c.isalnum() else "_" for c in name)
