from __future__ import annotations
import csv
import io
from typing import Iterable, List

from .model import RunRecord, Summary

CSV_COLUMNS = ("run", "seed", "status", "iters", "resid", "merit_grad", "err", "class", "ms")


def _float(v: float) -> str:
    return "%.17g" % v


def _row(rec: RunRecord) -> List[str]:
    return [
        str(rec.run),
        str(rec.seed),
        rec.status,
        str(rec.iterations),
        _float(rec.resid),
        _float(rec.merit_grad),
        _float(rec.err),
        rec.label,
        "%.3f" % rec.ms,
    ]


def records_to_csv(records: Iterable[RunRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for rec in records:
        writer.writerow(_row(rec))
    return buf.getvalue()


def write_csv(records: Iterable[RunRecord], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(records_to_csv(records))


def format_summary(summary: Summary) -> str:
    lines = [
        f"problem            {summary.problem}",
        f"runs               {summary.runs}",
        f"converged          {summary.converged} ({100.0 * summary.converged / max(summary.runs, 1):.1f}%)",
        f"merit-stationary   {summary.stationary}",
        f"errors             {summary.errors}",
        f"iterations         mean {summary.mean_iterations:.2f}, median {summary.median_iterations:.1f}",
        f"mean primal error  {summary.mean_error:.3e}",
        f"mean wall time     {summary.mean_ms:.2f} ms",
    ]
    if summary.status_counts:
        lines.append("status             " + ", ".join(f"{k}={v}" for k, v in sorted(summary.status_counts.items())))
    if summary.label_counts:
        lines.append("class              " + ", ".join(f"{k}={v}" for k, v in sorted(summary.label_counts.items())))
    return "\n".join(lines) + "\n"
