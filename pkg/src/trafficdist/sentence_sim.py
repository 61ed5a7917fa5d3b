"""Sentence-to-sentence similarity functions.

These are the `sim(g, r)` plugged into the pairwise and alignment bag
metrics: BLEU-3, ROUGE-L, CIDEr and embedding cosine. All of them return
values in [0, 1]. BLEU and CIDEr are directional; the convention throughout
is sim(g, r) with g the candidate and r the reference.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Iterable, Sequence

import numpy as np

from .corpus import Bag, EmbeddingTable, Sentence

__all__ = [
    "bleu3",
    "rouge_l",
    "IdfTable",
    "build_idf",
    "build_idf_from_documents",
    "cider",
    "embed_cos",
    "SimilarityFn",
    "similarity_fn",
    "SIM_KINDS",
]

SIM_KINDS = ("bleu3", "rouge_l", "cider", "embed_cos")


@lru_cache(maxsize=65536)
def _ngram_counts(tokens: tuple[str, ...], n: int) -> Counter:
    return Counter(tokens[i : i + n] for i in range(len(tokens) - n + 1))


def bleu3(candidate: Sentence, reference: Sentence) -> float:
    """Sentence-level BLEU-3: geometric mean of 1-, 2-, 3-gram modified
    precisions, with add-one smoothing whenever an order >= 2 has zero
    matches, times the brevity penalty exp(1 - |r|/|c|) for short candidates.
    """
    c, r = candidate.tokens, reference.tokens
    precisions = []
    for n in (1, 2, 3):
        c_counts = _ngram_counts(c, n)
        denom = max(len(c) - n + 1, 0)
        if not c_counts:
            matches = 0
        else:
            r_counts = _ngram_counts(r, n)
            matches = sum(min(cnt, r_counts[g]) for g, cnt in c_counts.items())
        if n == 1:
            precisions.append(matches / denom)
        elif matches == 0:
            precisions.append(1.0 / (denom + 1))
        else:
            precisions.append(matches / denom)
    geo = (precisions[0] * precisions[1] * precisions[2]) ** (1.0 / 3.0)
    bp = math.exp(1.0 - len(r) / len(c)) if len(c) < len(r) else 1.0
    return bp * geo


def _lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    # Classic O(|a|*|b|) DP with a rolling row.
    if len(a) < len(b):
        a, b = b, a
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b, start=1):
            if x == y:
                cur.append(prev[j - 1] + 1)
            else:
                cur.append(max(prev[j], cur[j - 1]))
        prev = cur
    return prev[-1]


def rouge_l(candidate: Sentence, reference: Sentence) -> float:
    """ROUGE-L F1 over the longest common subsequence (beta = 1)."""
    lcs = _lcs_length(candidate.tokens, reference.tokens)
    if lcs == 0:
        return 0.0
    p = lcs / len(candidate.tokens)
    r = lcs / len(reference.tokens)
    return 2 * p * r / (p + r)


@dataclass
class IdfTable:
    """IDF weights over n-grams, smoothed as log((N+1)/(df+1)) with N the
    number of documents; unseen n-grams get the maximum weight log(N+1)."""

    n_documents: int
    max_n: int
    weights: dict = field(default_factory=dict)

    def idf(self, ngram: tuple[str, ...]) -> float:
        return self.weights.get(ngram, math.log(self.n_documents + 1))


def build_idf_from_documents(
    documents: Iterable[tuple[str, ...]], max_n: int = 4
) -> IdfTable:
    """Build an IdfTable treating each token tuple as one document."""
    docs = list(documents)
    df: Counter = Counter()
    for tokens in docs:
        grams = set()
        for n in range(1, max_n + 1):
            grams.update(_ngram_counts(tokens, n))
        df.update(grams)
    n_docs = len(docs)
    weights = {g: math.log((n_docs + 1) / (cnt + 1)) for g, cnt in df.items()}
    return IdfTable(n_documents=n_docs, max_n=max_n, weights=weights)


def build_idf(reference_bag: Bag, max_n: int = 4) -> IdfTable:
    """IDF from a reference bag, one document per distinct sentence."""
    return build_idf_from_documents(
        (s.tokens for s in reference_bag.distinct()), max_n=max_n
    )


def cider(candidate: Sentence, reference: Sentence, idf: IdfTable) -> float:
    """Single-reference CIDEr without the x10 display scaling: the mean over
    n = 1..4 of the cosine similarity between idf-weighted n-gram count
    vectors. Orders where either vector is all-zero contribute 0."""
    total = 0.0
    for n in range(1, idf.max_n + 1):
        c_counts = _ngram_counts(candidate.tokens, n)
        r_counts = _ngram_counts(reference.tokens, n)
        c_vec = {g: cnt * idf.idf(g) for g, cnt in c_counts.items()}
        r_vec = {g: cnt * idf.idf(g) for g, cnt in r_counts.items()}
        c_norm = math.sqrt(sum(w * w for w in c_vec.values()))
        r_norm = math.sqrt(sum(w * w for w in r_vec.values()))
        if c_norm == 0.0 or r_norm == 0.0:
            continue
        dot = sum(w * r_vec[g] for g, w in c_vec.items() if g in r_vec)
        total += dot / (c_norm * r_norm)
    score = total / idf.max_n
    return min(max(score, 0.0), 1.0)


def embed_cos(a: Sentence, b: Sentence, table: EmbeddingTable) -> float:
    """Cosine similarity of the two sentence embeddings rescaled from
    [-1, 1] into [0, 1], so it can serve as a nonnegative alignment weight.

    Raises MissingEmbeddingError when either id is absent from the table.
    """
    va = table.get(a.id)
    vb = table.get(b.id)
    na = float(np.linalg.norm(va))
    nb = float(np.linalg.norm(vb))
    cos = float(np.dot(va, vb) / (na * nb)) if na > 0.0 and nb > 0.0 else 0.0
    cos = min(max(cos, -1.0), 1.0)
    return (cos + 1.0) / 2.0


@dataclass
class SimilarityFn:
    """A sentence similarity function with its parameters bound.

    `matrix` evaluates the function over the cross product of two occurrence
    lists, computing each distinct raw-text pair only once.
    """

    kind: str
    fn: Callable[[Sentence, Sentence], float]

    def __call__(self, g: Sentence, r: Sentence) -> float:
        return self.fn(g, r)

    def matrix(self, g_items: Sequence[Sentence], r_items: Sequence[Sentence]) -> np.ndarray:
        cache: dict[tuple[str, str], float] = {}
        out = np.empty((len(g_items), len(r_items)))
        for i, g in enumerate(g_items):
            for j, r in enumerate(r_items):
                key = (g.raw, r.raw)
                val = cache.get(key)
                if val is None:
                    val = self.fn(g, r)
                    cache[key] = val
                out[i, j] = val
        return out


def similarity_fn(
    kind: str,
    *,
    reference_bag: Bag | None = None,
    embeddings: EmbeddingTable | None = None,
) -> SimilarityFn:
    """Construct a SimilarityFn by kind.

    `cider` requires the reference bag its IDF table is built from; the
    embedding kind requires an embedding table.
    """
    if kind == "bleu3":
        return SimilarityFn(kind, bleu3)
    if kind == "rouge_l":
        return SimilarityFn(kind, rouge_l)
    if kind == "cider":
        if reference_bag is None:
            raise ValueError("cider similarity needs the reference bag for IDF")
        idf = build_idf(reference_bag)
        return SimilarityFn(kind, lambda g, r: cider(g, r, idf))
    if kind == "embed_cos":
        if embeddings is None:
            raise ValueError("embedding similarity needs an embedding table")
        return SimilarityFn(kind, lambda g, r: embed_cos(g, r, embeddings))
    raise ValueError(f"unknown similarity kind {kind!r}; expected one of {SIM_KINDS}")
