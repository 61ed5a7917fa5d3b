"""Automatic metric-validation pipeline.

Ranking tasks pair a reference bag with manipulated candidates of known
noise order; each metric scores the candidates and is judged by the
Spearman correlation between its induced ranking and the true one. Results
aggregate into per-metric means plus bag-size buckets. The same machinery
calibrates tie thresholds for two-bag comparisons.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

from .corpus import Bag, downsample_bag
from .errors import TrafficdistError
from .manipulations import RankingTask
from .metrics import MetricConfig, score_bags
from .seeding import derive_seed

__all__ = [
    "SpearmanResult",
    "spearman",
    "BucketStat",
    "MetricResult",
    "HarnessConfig",
    "DEFAULT_BUCKETS",
    "evaluate_metric",
    "TieThreshold",
    "calibrate_tie_threshold",
    "compare_bags",
]

DEFAULT_BUCKETS = ((1, 2), (3, 5), (6, 10), (11, 25), (26, 50), (51, 100))


@dataclass
class SpearmanResult:
    rho: float
    degenerate: bool = False


def _average_ranks(values: Sequence[float], descending: bool) -> list[float]:
    n = len(values)
    order = sorted(range(n), key=lambda i: -values[i] if descending else values[i])
    ranks = [0.0] * n
    i = 0
    while i < n:
        j = i
        while j + 1 < n and values[order[j + 1]] == values[order[i]]:
            j += 1
        avg = (i + j) / 2 + 1
        for t in range(i, j + 1):
            ranks[order[t]] = avg
        i = j + 1
    return ranks


def spearman(predicted_scores: Sequence[float], true_ranks: Sequence[int]) -> SpearmanResult:
    """Spearman rank correlation between metric scores and true noise ranks.

    Scores rank descending (higher score = less noisy = better rank); ties
    get average ranks. Constant score vectors are undefined and reported as
    rho 0 with the degenerate flag set.
    """
    if len(predicted_scores) != len(true_ranks):
        raise ValueError("predicted_scores and true_ranks must have equal length")
    if len(predicted_scores) < 2:
        raise ValueError("need at least two items to correlate")
    if len(set(predicted_scores)) == 1 or len(set(true_ranks)) == 1:
        return SpearmanResult(rho=0.0, degenerate=True)
    rp = _average_ranks(list(predicted_scores), descending=True)
    rt = _average_ranks([float(t) for t in true_ranks], descending=False)
    n = len(rp)
    mp = math.fsum(rp) / n
    mt = math.fsum(rt) / n
    cov = math.fsum((a - mp) * (b - mt) for a, b in zip(rp, rt))
    var_p = math.fsum((a - mp) ** 2 for a in rp)
    var_t = math.fsum((b - mt) ** 2 for b in rt)
    rho = cov / math.sqrt(var_p * var_t)
    return SpearmanResult(rho=max(-1.0, min(1.0, rho)))


@dataclass
class BucketStat:
    range: str
    mean_rho: float
    n: int


@dataclass
class MetricResult:
    """Aggregated validation outcome for one metric on one task family."""

    metric: str
    manipulation: str
    rhos: list[float] = field(default_factory=list)
    mean_rho: float = 0.0
    median_rho: float = 0.0
    n_tasks: int = 0
    n_failed: int = 0
    n_degenerate: int = 0
    buckets: list[BucketStat] = field(default_factory=list)
    failures: list[str] = field(default_factory=list)


@dataclass
class HarnessConfig:
    """Evaluation settings: bag cap, bucket edges, parallelism."""

    metric_config: MetricConfig = field(default_factory=MetricConfig)
    max_bag_size: int = 100
    seed: int = 0
    buckets: tuple[tuple[int, int], ...] = DEFAULT_BUCKETS
    threads: int = 1


def _bucket_label(size: int, buckets: Sequence[tuple[int, int]]) -> str:
    for lo, hi in buckets:
        if lo <= size <= hi:
            return f"{lo}-{hi}"
    lo, hi = buckets[-1]
    return f"{lo}-{hi}"


def _median(values: Sequence[float]) -> float:
    if not values:
        return 0.0
    ordered = sorted(values)
    n = len(ordered)
    mid = n // 2
    if n % 2:
        return ordered[mid]
    return (ordered[mid - 1] + ordered[mid]) / 2


def _score_task(
    metric: str, task: RankingTask, config: HarnessConfig
) -> tuple[SpearmanResult | None, str | None]:
    try:
        cap = config.max_bag_size
        ref = downsample_bag(
            task.reference,
            cap,
            derive_seed(config.seed, "cap", task.manipulation, task.context_id, "ref"),
        )
        scores = []
        for level, candidate in enumerate(task.candidates, start=1):
            capped = downsample_bag(
                candidate,
                cap,
                derive_seed(config.seed, "cap", task.manipulation, task.context_id, level),
            )
            scores.append(
                score_bags(
                    metric,
                    capped,
                    ref,
                    config.metric_config,
                    seed=derive_seed(config.seed, metric, task.manipulation, task.context_id, level),
                )
            )
        return spearman(scores, task.true_ranks), None
    except TrafficdistError as exc:
        return None, f"{task.context_id}: {exc}"


def evaluate_metric(
    metric: str, tasks: Sequence[RankingTask], config: HarnessConfig | None = None
) -> MetricResult:
    """Validate one metric over a family of ranking tasks.

    Candidate bags (and the reference) are capped at max_bag_size before
    scoring. Failed tasks are excluded from the aggregates and counted;
    degenerate (constant-score) tasks contribute rho = 0. Results are
    independent of task order and of the number of worker threads.
    """
    if not tasks:
        raise ValueError("tasks must be non-empty")
    config = config or HarnessConfig()
    ordered = sorted(tasks, key=lambda t: (t.manipulation, t.context_id))
    if config.threads > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            outcomes = list(pool.map(lambda t: _score_task(metric, t, config), ordered))
    else:
        outcomes = [_score_task(metric, t, config) for t in ordered]

    result = MetricResult(metric=metric, manipulation=ordered[0].manipulation)
    by_bucket: dict[str, list[float]] = {}
    for task, (res, failure) in zip(ordered, outcomes):
        if failure is not None:
            result.n_failed += 1
            result.failures.append(failure)
            continue
        result.rhos.append(res.rho)
        if res.degenerate:
            result.n_degenerate += 1
        by_bucket.setdefault(
            _bucket_label(len(task.reference), config.buckets), []
        ).append(res.rho)
    result.n_tasks = len(result.rhos)
    if result.rhos:
        result.mean_rho = math.fsum(result.rhos) / len(result.rhos)
        result.median_rho = _median(result.rhos)
    for lo, hi in config.buckets:
        label = f"{lo}-{hi}"
        if label in by_bucket:
            rhos = by_bucket[label]
            result.buckets.append(
                BucketStat(range=label, mean_rho=math.fsum(rhos) / len(rhos), n=len(rhos))
            )
    return result


@dataclass
class TieThreshold:
    """Minimum score difference below which two bags count as equally good."""

    metric: str
    threshold: float
    target_rate: float


def calibrate_tie_threshold(
    score_diffs: Sequence[float], target_rate: float, metric: str = ""
) -> TieThreshold:
    """Pick the threshold as the target_rate quantile (lower interpolation)
    of the absolute score differences, so the tie fraction matches the
    target within one item. A target of 0 keeps the threshold at 0."""
    if not score_diffs:
        raise ValueError("score_diffs must be non-empty")
    if not 0.0 <= target_rate <= 1.0:
        raise ValueError("target_rate must be in [0, 1]")
    diffs = sorted(abs(d) for d in score_diffs)
    if target_rate == 0.0:
        return TieThreshold(metric=metric, threshold=0.0, target_rate=target_rate)
    idx = int(math.floor(target_rate * (len(diffs) - 1) + 1e-12))
    return TieThreshold(metric=metric, threshold=diffs[idx], target_rate=target_rate)


def compare_bags(
    metric: str,
    reference: Bag,
    a: Bag,
    b: Bag,
    tie: TieThreshold | float,
    config: HarnessConfig | None = None,
) -> tuple[str, float, float]:
    """Score two generated bags against the reference and return the
    verdict 'A', 'B' or 'TIE' along with both scores."""
    config = config or HarnessConfig()
    cap = config.max_bag_size
    ref = downsample_bag(
        reference, cap, derive_seed(config.seed, "cap", reference.context_id, "ref")
    )
    threshold = tie.threshold if isinstance(tie, TieThreshold) else float(tie)
    scores = []
    for label, bag in (("a", a), ("b", b)):
        capped = downsample_bag(
            bag, cap, derive_seed(config.seed, "cap", reference.context_id, label)
        )
        scores.append(
            score_bags(
                metric,
                capped,
                ref,
                config.metric_config,
                seed=derive_seed(config.seed, metric, reference.context_id, label),
            )
        )
    score_a, score_b = scores
    if abs(score_a - score_b) <= threshold:
        return "TIE", score_a, score_b
    return ("A", score_a, score_b) if score_a > score_b else ("B", score_a, score_b)
