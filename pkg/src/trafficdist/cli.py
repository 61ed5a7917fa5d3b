"""Command-line interface.

Four subcommands: `score` computes bag-to-bag metrics between a reference
and a generated corpus; `validate` runs the manipulation-based metric
validation harness; `compare` judges two generated corpora against a
reference with tie thresholds; `report` re-renders a JSON validation report
as CSV/Markdown and draws the accompanying figures.

Exit codes: 0 success, 1 usage/config error, 2 data format error,
3 more than 10% of validation tasks failed.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from pathlib import Path

from .corpus import downsample_bag, load_corpus, load_embeddings
from .errors import (
    DimensionError,
    FormatError,
    SpanError,
    TrafficdistError,
    UsageError,
)
from .harness import (
    HarnessConfig,
    MetricResult,
    calibrate_tie_threshold,
    compare_bags,
    evaluate_metric,
)
from .manipulations import (
    build_ranking,
    load_lexicon,
    load_plan,
    plan_families,
    resources_for_context,
)
from .metrics import METRIC_NAMES, MetricConfig, requires_embeddings, score_bags
from .reporting import FORMATS, parse_report, render_figures, render_report, report_rows
from .seeding import derive_seed

FAILURE_EXIT_FRACTION = 0.10


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-bag-size", type=int, default=100)
    p.add_argument("--dbscan-eps", type=float, default=0.4)
    p.add_argument("--dbscan-min-pts", type=int, default=2)
    p.add_argument("--kn-discount", type=float, default=0.75)
    p.add_argument("--embeddings", help="embedding JSONL for the sbert metrics")
    p.add_argument("--out", help="output file (default: stdout)")
    p.add_argument("--format", choices=FORMATS, default="json")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="trafficdist", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("score", help="score generated bags against reference bags")
    p.add_argument("--references", required=True)
    p.add_argument("--generated", required=True)
    p.add_argument("--metrics", required=True, help="comma-separated metric names")
    _add_common(p)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("validate", help="run the manipulation-based validation harness")
    p.add_argument("--references", required=True)
    p.add_argument("--plan", required=True, help="manipulation plan JSON")
    p.add_argument("--metrics", required=True)
    p.add_argument("--levels", type=int, default=None, help="override the plan's levels")
    p.add_argument("--lexicon", help="synonym lexicon JSONL for EDA replacement")
    _add_common(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("compare", help="compare two generated corpora against a reference")
    p.add_argument("--references", required=True)
    p.add_argument("--generated", required=True, help="corpus A")
    p.add_argument("--generated-b", required=True, help="corpus B")
    p.add_argument("--metrics", required=True)
    p.add_argument("--tie-threshold", type=float, default=None)
    p.add_argument("--tie-rate", type=float, default=None, help="calibrate thresholds to this tie fraction")
    _add_common(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("report", help="render a JSON validation report as CSV/Markdown + figures")
    p.add_argument("input", help="JSON report produced by `validate`")
    p.add_argument("--no-figures", action="store_true")
    _add_common(p)
    p.set_defaults(func=cmd_report)
    return parser


def _require_files(args, *fields: str) -> None:
    # Runs can take minutes; surface missing inputs before any computation.
    for field in fields:
        value = getattr(args, field, None)
        if value and not Path(value).is_file():
            raise UsageError(f"{field.replace('_', '-')}: file not found: {value}")


def _parse_metrics(arg: str) -> list[str]:
    names = [m.strip() for m in arg.split(",") if m.strip()]
    if not names:
        raise UsageError("no metrics given")
    unknown = [m for m in names if m not in METRIC_NAMES]
    if unknown:
        raise UsageError(
            f"unknown metric(s) {', '.join(unknown)}; available: {', '.join(METRIC_NAMES)}"
        )
    return names


def _metric_config(args, metrics: list[str]) -> MetricConfig:
    embeddings = None
    needs = [m for m in metrics if requires_embeddings(m)]
    if needs:
        if not args.embeddings:
            raise UsageError(
                f"metric(s) {', '.join(needs)} need --embeddings"
            )
        embeddings = load_embeddings(args.embeddings)
    elif args.embeddings:
        embeddings = load_embeddings(args.embeddings)
    return MetricConfig(
        embeddings=embeddings,
        dbscan_eps=args.dbscan_eps,
        dbscan_min_pts=args.dbscan_min_pts,
        kn_discount=args.kn_discount,
        seed=args.seed,
    )


def _threads() -> int:
    raw = os.environ.get("TRAFFICDIST_THREADS", "").strip()
    if not raw:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        raise UsageError(f"TRAFFICDIST_THREADS must be an integer, got {raw!r}")


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _csv_table(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _md_table(header: list[str], rows: list[list]) -> str:
    lines = ["| " + " | ".join(header) + " |", "|" + " --- |" * len(header)]
    lines.extend("| " + " | ".join(str(c) for c in row) + " |" for row in rows)
    return "\n".join(lines) + "\n"


def cmd_score(args) -> int:
    _require_files(args, "references", "generated", "embeddings")
    metrics = _parse_metrics(args.metrics)
    config = HarnessConfig(
        metric_config=_metric_config(args, metrics),
        max_bag_size=args.max_bag_size,
        seed=args.seed,
        threads=_threads(),
    )
    references = load_corpus(args.references)
    generated = load_corpus(args.generated)
    shared = sorted(set(references.contexts) & set(generated.contexts))
    if not shared:
        raise UsageError("the reference and generated corpora share no context ids")
    skipped = {
        "references_only": sorted(set(references.contexts) - set(generated.contexts)),
        "generated_only": sorted(set(generated.contexts) - set(references.contexts)),
    }
    score_rows = []
    for cid in shared:
        ref = downsample_bag(
            references.contexts[cid], args.max_bag_size, derive_seed(args.seed, "cap", cid, "ref")
        )
        gen = downsample_bag(
            generated.contexts[cid], args.max_bag_size, derive_seed(args.seed, "cap", cid, "gen")
        )
        for metric in metrics:
            value = score_bags(metric, gen, ref, config.metric_config)
            score_rows.append({"context_id": cid, "metric": metric, "score": round(value, 6)})

    if args.format == "json":
        text = json.dumps({"scores": score_rows, "skipped": skipped}, indent=2, sort_keys=True) + "\n"
    else:
        table = [[r["context_id"], r["metric"], r["score"], "ok"] for r in score_rows]
        for key in ("references_only", "generated_only"):
            table.extend([[cid, "", "", f"skipped_{key}"] for cid in skipped[key]])
        header = ["context_id", "metric", "score", "status"]
        text = _csv_table(header, table) if args.format == "csv" else _md_table(header, table)
    _emit(text, args.out)
    return 0


def _empty_result(metric: str, manipulation: str) -> MetricResult:
    return MetricResult(metric=metric, manipulation=manipulation)


def run_validation(
    corpus, plan, metrics: list[str], config: HarnessConfig, levels: int | None = None, lexicon=None
) -> tuple[list[MetricResult], dict[str, list[str]]]:
    """Build ranking tasks for every plan family and evaluate each metric.

    Returns the results plus per-family task construction failures (which
    count as failed tasks for every metric)."""
    families = plan_families(plan)
    n_levels = levels or plan.levels
    context_ids = sorted(corpus.contexts)
    resources_by_context = {
        cid: resources_for_context(corpus, cid, lexicon=lexicon) for cid in context_ids
    }
    results: list[MetricResult] = []
    build_failures: dict[str, list[str]] = {}
    for family in families:
        label = family[0]
        tasks = []
        failures = []
        for cid in context_ids:
            try:
                tasks.append(
                    build_ranking(
                        corpus.contexts[cid],
                        family,
                        derive_seed(config.seed, "rank", label, cid),
                        resources_by_context[cid],
                        levels=n_levels,
                    )
                )
            except TrafficdistError as exc:
                failures.append(f"{cid}: {exc}")
        build_failures[label] = failures
        for metric in metrics:
            if tasks:
                result = evaluate_metric(metric, tasks, config)
            else:
                result = _empty_result(metric, label)
            result.n_failed += len(failures)
            result.failures = failures + result.failures
            results.append(result)
    return results, build_failures


def cmd_validate(args) -> int:
    _require_files(args, "references", "plan", "embeddings", "lexicon")
    metrics = _parse_metrics(args.metrics)
    config = HarnessConfig(
        metric_config=_metric_config(args, metrics),
        max_bag_size=args.max_bag_size,
        seed=args.seed,
        threads=_threads(),
    )
    corpus = load_corpus(args.references)
    plan = load_plan(args.plan)
    levels = args.levels or plan.levels
    if levels < 2:
        raise UsageError("--levels must be at least 2")
    if plan.mode == "strength" and levels > 5:
        raise UsageError("strength mode supports at most 5 levels")
    if plan.mode == "incremental" and len(plan.manipulations) < levels:
        raise UsageError(
            f"incremental plan lists {len(plan.manipulations)} manipulations but "
            f"{levels} levels were requested"
        )
    lexicon = load_lexicon(args.lexicon) if args.lexicon else None
    results, build_failures = run_validation(
        corpus, plan, metrics, config, levels=args.levels, lexicon=lexicon
    )

    rows = report_rows(results)
    if args.format == "json":
        payload = {
            "results": rows,
            "failures": {k: sorted(v) for k, v in sorted(build_failures.items()) if v},
        }
        text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    else:
        text = render_report(rows, args.format)
    _emit(text, args.out)

    worst = 0.0
    for res in results:
        attempted = res.n_tasks + res.n_failed
        if attempted:
            worst = max(worst, res.n_failed / attempted)
    if worst > FAILURE_EXIT_FRACTION:
        for res in results:
            for msg in res.failures[:5]:
                print(f"failed [{res.manipulation}/{res.metric}]: {msg}", file=sys.stderr)
        print(
            f"error: {worst:.0%} of tasks failed (> {FAILURE_EXIT_FRACTION:.0%})",
            file=sys.stderr,
        )
        return 3
    return 0


def cmd_compare(args) -> int:
    _require_files(args, "references", "generated", "generated_b", "embeddings")
    if args.tie_threshold is not None and args.tie_rate is not None:
        raise UsageError("--tie-threshold and --tie-rate are mutually exclusive")
    metrics = _parse_metrics(args.metrics)
    config = HarnessConfig(
        metric_config=_metric_config(args, metrics),
        max_bag_size=args.max_bag_size,
        seed=args.seed,
        threads=_threads(),
    )
    references = load_corpus(args.references)
    gen_a = load_corpus(args.generated)
    gen_b = load_corpus(args.generated_b)
    shared = sorted(set(references.contexts) & set(gen_a.contexts) & set(gen_b.contexts))
    if not shared:
        raise UsageError("no context ids shared by the reference and both generated corpora")

    verdict_rows = []
    thresholds = {}
    for metric in metrics:
        # First pass scores everything so --tie-rate can calibrate on the
        # observed score differences, mirroring the human-tie-rate protocol.
        scored = []
        for cid in shared:
            _, sa, sb = compare_bags(
                metric, references.contexts[cid], gen_a.contexts[cid], gen_b.contexts[cid], 0.0, config
            )
            scored.append((cid, sa, sb))
        if args.tie_rate is not None:
            tie = calibrate_tie_threshold(
                [abs(sa - sb) for _, sa, sb in scored], args.tie_rate, metric=metric
            )
            threshold = tie.threshold
        else:
            threshold = args.tie_threshold or 0.0
        thresholds[metric] = {
            "threshold": round(threshold, 9),
            "target_rate": args.tie_rate,
        }
        for cid, sa, sb in scored:
            if abs(sa - sb) <= threshold:
                verdict = "TIE"
            else:
                verdict = "A" if sa > sb else "B"
            verdict_rows.append(
                {
                    "context_id": cid,
                    "metric": metric,
                    "score_a": round(sa, 6),
                    "score_b": round(sb, 6),
                    "verdict": verdict,
                }
            )

    if args.format == "json":
        text = json.dumps(
            {"verdicts": verdict_rows, "thresholds": thresholds}, indent=2, sort_keys=True
        ) + "\n"
    else:
        header = ["context_id", "metric", "score_a", "score_b", "verdict", "threshold"]
        table = [
            [r["context_id"], r["metric"], r["score_a"], r["score_b"], r["verdict"],
             thresholds[r["metric"]]["threshold"]]
            for r in verdict_rows
        ]
        text = _csv_table(header, table) if args.format == "csv" else _md_table(header, table)
    _emit(text, args.out)
    return 0


def cmd_report(args) -> int:
    _require_files(args, "input")
    rows = parse_report(args.input)
    text = render_report(rows, args.format)
    _emit(text, args.out)
    if args.out and not args.no_figures:
        base = Path(args.out)
        base = base.with_suffix("") if base.suffix else base
        for path in render_figures(rows, base):
            print(f"wrote {path}", file=sys.stderr)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (FormatError, SpanError, DimensionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except TrafficdistError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
