"""Registry of the bag-to-bag metrics exposed on the CLI.

All metrics score a generated bag G against a reference bag R; higher is
more similar. Pairwise/alignment variants exist for each sentence
similarity; the embedding-based ones need an external embedding table.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .alignment import align_score, pair_score
from .clustering import DEFAULT_EPS, DEFAULT_MIN_PTS, clus_score
from .corpus import Bag, EmbeddingTable
from .distributional import cos_bags, inv_kl
from .errors import UsageError
from .ngram_lm import DEFAULT_DISCOUNT, inv_pp
from .seeding import derive_seed
from .sentence_sim import similarity_fn

__all__ = ["METRIC_NAMES", "MetricConfig", "score_bags", "requires_embeddings"]

_PAIRWISE = {
    "pair_bleu3": "bleu3",
    "pair_rouge_l": "rouge_l",
    "pair_cider": "cider",
    "pair_sbert": "embed_cos",
}
_ALIGNED = {
    "align_bleu3": "bleu3",
    "align_rouge_l": "rouge_l",
    "align_cider": "cider",
    "align_sbert": "embed_cos",
}

METRIC_NAMES = (
    "pair_bleu3",
    "pair_rouge_l",
    "pair_cider",
    "pair_sbert",
    "align_bleu3",
    "align_rouge_l",
    "align_cider",
    "align_sbert",
    "cos_tf",
    "cos_tfidf",
    "clus_tf",
    "inv_pp",
    "inv_kl",
)


@dataclass
class MetricConfig:
    """Knobs shared by all metrics."""

    embeddings: EmbeddingTable | None = None
    dbscan_eps: float = DEFAULT_EPS
    dbscan_min_pts: int = DEFAULT_MIN_PTS
    kn_discount: float = DEFAULT_DISCOUNT
    seed: int = 0
    extra: dict = field(default_factory=dict)


def requires_embeddings(name: str) -> bool:
    return name in ("pair_sbert", "align_sbert")


def _sim_for(kind: str, reference: Bag, config: MetricConfig):
    if kind == "embed_cos" and config.embeddings is None:
        raise UsageError("embedding-based metrics need an embedding table (--embeddings)")
    return similarity_fn(kind, reference_bag=reference, embeddings=config.embeddings)


def score_bags(
    name: str,
    g: Bag,
    r: Bag,
    config: MetricConfig | None = None,
    seed: int | None = None,
) -> float:
    """Score bag G against reference bag R with the named metric.

    `seed` feeds the size equalization of alignment metrics; when omitted
    it is derived from the config seed and the bags' identities so repeated
    runs are reproducible.
    """
    config = config or MetricConfig()
    if name not in METRIC_NAMES:
        raise UsageError(
            f"unknown metric {name!r}; available: {', '.join(METRIC_NAMES)}"
        )
    if seed is None:
        seed = derive_seed(config.seed, name, r.context_id, len(g), len(r))
    if name in _PAIRWISE:
        sim = _sim_for(_PAIRWISE[name], r, config)
        return pair_score(g, r, sim)
    if name in _ALIGNED:
        sim = _sim_for(_ALIGNED[name], r, config)
        return align_score(g, r, sim, seed)
    if name == "cos_tf":
        return cos_bags(g, r, "tf")
    if name == "cos_tfidf":
        return cos_bags(g, r, "tfidf")
    if name == "clus_tf":
        return clus_score(g, r, "tf", eps=config.dbscan_eps, min_pts=config.dbscan_min_pts)
    if name == "inv_pp":
        return inv_pp(g, r, discount=config.kn_discount)
    if name == "inv_kl":
        return inv_kl(g, r)
    raise UsageError(f"metric {name!r} has no implementation")  # unreachable
