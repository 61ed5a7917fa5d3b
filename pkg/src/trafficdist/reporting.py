"""Report rendering: validation results to JSON/CSV/Markdown, and the
figures (mean-correlation bars, bag-size bucket curves) the report
subcommand writes next to the delimited output.

All renderers are deterministic: rows are sorted, correlations rounded to
4 decimals, and the same inputs produce byte-identical text.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

from .errors import FormatError, UsageError
from .harness import MetricResult

__all__ = [
    "report_rows",
    "render_report",
    "parse_report",
    "render_figures",
    "FORMATS",
]

FORMATS = ("json", "csv", "md")


def _round(x: float) -> float:
    return round(float(x), 4)


def report_rows(results: list[MetricResult]) -> list[dict]:
    """Convert results into the report schema, sorted for determinism."""
    rows = []
    for res in results:
        rows.append(
            {
                "metric": res.metric,
                "manipulation": res.manipulation,
                "mean_rho": _round(res.mean_rho),
                "median_rho": _round(res.median_rho),
                "n_tasks": res.n_tasks,
                "n_failed": res.n_failed,
                "n_degenerate": res.n_degenerate,
                "buckets": [
                    {"range": b.range, "mean_rho": _round(b.mean_rho), "n": b.n}
                    for b in res.buckets
                ],
            }
        )
    rows.sort(key=lambda r: (r["metric"], r["manipulation"]))
    return rows


def _bucket_order(rows: list[dict]) -> list[str]:
    ranges = {b["range"] for r in rows for b in r["buckets"]}
    return sorted(ranges, key=lambda s: int(s.split("-")[0]))


def _render_json(rows: list[dict]) -> str:
    return json.dumps({"results": rows}, indent=2, sort_keys=True) + "\n"


def _render_csv(rows: list[dict]) -> str:
    buckets = _bucket_order(rows)
    header = ["metric", "manipulation", "mean_rho", "median_rho", "n_tasks", "n_failed", "n_degenerate"]
    for b in buckets:
        header += [f"bucket_{b}_mean_rho", f"bucket_{b}_n"]
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(header)
    for r in rows:
        by_range = {b["range"]: b for b in r["buckets"]}
        row = [
            r["metric"],
            r["manipulation"],
            r["mean_rho"],
            r["median_rho"],
            r["n_tasks"],
            r["n_failed"],
            r["n_degenerate"],
        ]
        for b in buckets:
            stat = by_range.get(b)
            row += [stat["mean_rho"] if stat else "", stat["n"] if stat else ""]
        writer.writerow(row)
    return out.getvalue()


def _render_md(rows: list[dict]) -> str:
    lines = [
        "| metric | manipulation | mean_rho | median_rho | n_tasks | n_failed | n_degenerate |",
        "| --- | --- | --- | --- | --- | --- | --- |",
    ]
    for r in rows:
        lines.append(
            f"| {r['metric']} | {r['manipulation']} | {r['mean_rho']} | {r['median_rho']} "
            f"| {r['n_tasks']} | {r['n_failed']} | {r['n_degenerate']} |"
        )
    buckets = _bucket_order(rows)
    if buckets:
        lines.append("")
        lines.append("| metric | manipulation | " + " | ".join(buckets) + " |")
        lines.append("| --- | --- |" + " --- |" * len(buckets))
        for r in rows:
            by_range = {b["range"]: b for b in r["buckets"]}
            cells = [
                str(by_range[b]["mean_rho"]) if b in by_range else ""
                for b in buckets
            ]
            lines.append(f"| {r['metric']} | {r['manipulation']} | " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"


def render_report(rows_or_results, fmt: str) -> str:
    """Render report rows (or MetricResults) in the requested format."""
    if rows_or_results and isinstance(rows_or_results[0], MetricResult):
        rows = report_rows(rows_or_results)
    else:
        rows = sorted(rows_or_results, key=lambda r: (r["metric"], r["manipulation"]))
    if fmt == "json":
        return _render_json(rows)
    if fmt == "csv":
        return _render_csv(rows)
    if fmt == "md":
        return _render_md(rows)
    raise UsageError(f"unknown report format {fmt!r}; expected one of {FORMATS}")


def parse_report(path: str | Path) -> list[dict]:
    """Parse a JSON report back into rows, validating the schema."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid report JSON at position {exc.pos}: {exc.msg}") from None
    if not isinstance(data, dict) or not isinstance(data.get("results"), list):
        raise FormatError("report must be an object with a 'results' list")
    required = {"metric", "manipulation", "mean_rho", "n_tasks", "n_failed", "buckets"}
    for i, row in enumerate(data["results"]):
        if not isinstance(row, dict) or not required.issubset(row):
            missing = required - set(row) if isinstance(row, dict) else required
            raise FormatError(f"report row {i} missing keys: {sorted(missing)}")
    return data["results"]


def render_figures(rows: list[dict], out_base: Path) -> list[Path]:
    """Render the report figures next to the delimited output.

    Writes <base>_mean_rho.png (per-metric bars grouped by manipulation)
    and, when bucket data exists, <base>_buckets.png (mean correlation per
    reference-bag-size bucket, one line per metric). Returns written paths.
    """
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    written: list[Path] = []
    if not rows:
        return written
    metrics = sorted({r["metric"] for r in rows})
    manipulations = sorted({r["manipulation"] for r in rows})
    by_key = {(r["metric"], r["manipulation"]): r for r in rows}

    fig, ax = plt.subplots(figsize=(max(6.0, 1.1 * len(metrics)), 4.0))
    width = 0.8 / len(manipulations)
    for mi, manip in enumerate(manipulations):
        xs = [i + mi * width for i in range(len(metrics))]
        ys = [by_key.get((m, manip), {}).get("mean_rho", 0.0) for m in metrics]
        ax.bar(xs, ys, width=width, label=manip)
    ax.set_xticks([i + 0.4 - width / 2 for i in range(len(metrics))])
    ax.set_xticklabels(metrics, rotation=45, ha="right")
    ax.set_ylabel("mean Spearman correlation")
    ax.set_ylim(-1.0, 1.05)
    ax.axhline(0.0, color="gray", linewidth=0.6)
    ax.legend(fontsize=8)
    fig.tight_layout()
    path = out_base.with_name(out_base.name + "_mean_rho.png")
    fig.savefig(path, dpi=120)
    plt.close(fig)
    written.append(path)

    buckets = _bucket_order(rows)
    if buckets:
        fig, axes = plt.subplots(
            1, len(manipulations), figsize=(4.5 * len(manipulations), 3.6), squeeze=False
        )
        for mi, manip in enumerate(manipulations):
            ax = axes[0][mi]
            for metric in metrics:
                row = by_key.get((metric, manip))
                if row is None:
                    continue
                by_range = {b["range"]: b["mean_rho"] for b in row["buckets"]}
                xs = [i for i, b in enumerate(buckets) if b in by_range]
                ys = [by_range[buckets[i]] for i in xs]
                if xs:
                    ax.plot(xs, ys, marker="o", label=metric)
            ax.set_xticks(range(len(buckets)))
            ax.set_xticklabels(buckets, rotation=45, ha="right")
            ax.set_title(manip, fontsize=9)
            ax.set_ylim(-1.0, 1.05)
            if mi == 0:
                ax.set_ylabel("mean Spearman correlation")
                ax.legend(fontsize=7)
        fig.tight_layout()
        path = out_base.with_name(out_base.name + "_buckets.png")
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(path)
    return written
