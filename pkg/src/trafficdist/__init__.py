"""trafficdist: bag-to-bag text similarity metrics for synthetic traffic
generation, plus a manipulation-based harness that validates how well each
metric ranks noisy bags."""

from .alignment import Alignment, align_score, max_weight_matching, pair_score
from .clustering import ClusterAssignment, clus_score, dbscan
from .corpus import (
    Bag,
    Corpus,
    EmbeddingTable,
    Sentence,
    downsample_bag,
    equalize_sizes,
    load_corpus,
    load_embeddings,
    save_corpus,
    save_embeddings,
    text_id,
    tokenize,
)
from .distributional import cos_bags, inv_kl, tf_vector, tfidf_vector, unigram_dist
from .harness import (
    HarnessConfig,
    MetricResult,
    TieThreshold,
    calibrate_tie_threshold,
    compare_bags,
    evaluate_metric,
    spearman,
)
from .manipulations import (
    ManipulationSpec,
    RankingTask,
    build_ranking,
    cps,
    eda,
    ism,
    nti,
    tdm,
)
from .metrics import METRIC_NAMES, MetricConfig, score_bags
from .ngram_lm import NGramLM, inv_pp, perplexity, train_lm
from .sentence_sim import bleu3, build_idf, cider, embed_cos, rouge_l, similarity_fn

__version__ = "0.1.0"
