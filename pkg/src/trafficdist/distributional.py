"""Document-style bag metrics over unigram statistics.

A whole bag is collapsed into a single sparse term vector (TF or TF-IDF) or
a smoothed unigram distribution; bags are then compared with cosine
similarity or inverse KL divergence.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass

from .corpus import Bag
from .errors import DegenerateVectorError
from .sentence_sim import IdfTable, build_idf_from_documents

__all__ = [
    "TermVector",
    "UnigramDist",
    "tf_vector",
    "build_pair_idf",
    "tfidf_vector",
    "cos_bags",
    "unigram_dist",
    "inv_kl",
    "INV_KL_EPS",
]

# Caps InvKL when the smoothed distributions coincide (KL = 0).
INV_KL_EPS = 1e-6


@dataclass
class TermVector:
    """Sparse nonnegative token weights with a cached Euclidean norm.
    All-zero vectors are rejected (cosine would be undefined)."""

    weights: dict[str, float]
    norm: float

    @classmethod
    def from_weights(cls, weights: dict[str, float]) -> "TermVector":
        nonzero = {t: w for t, w in weights.items() if w != 0.0}
        if not nonzero:
            raise DegenerateVectorError(
                "all token weights are zero (every token has zero idf?)"
            )
        norm = math.sqrt(sum(w * w for w in nonzero.values()))
        return cls(weights=nonzero, norm=norm)

    def dot(self, other: "TermVector") -> float:
        a, b = self.weights, other.weights
        if len(b) < len(a):
            a, b = b, a
        return sum(w * b[t] for t, w in a.items() if t in b)

    def cosine(self, other: "TermVector") -> float:
        return self.dot(other) / (self.norm * other.norm)


@dataclass
class UnigramDist:
    """Add-one smoothed unigram distribution over a fixed vocabulary."""

    probs: dict[str, float]
    vocabulary: frozenset


def tf_vector(bag: Bag) -> TermVector:
    """Token counts summed over every occurrence of the bag."""
    counts: Counter = Counter()
    for s in bag.items:
        counts.update(s.tokens)
    return TermVector.from_weights({t: float(c) for t, c in counts.items()})


def build_pair_idf(g: Bag, r: Bag) -> IdfTable:
    """Unigram IDF over the union of the two bags being compared, one
    document per distinct sentence, so the metric is self-contained."""
    seen: dict[str, tuple[str, ...]] = {}
    for bag in (g, r):
        for s in bag.distinct():
            seen.setdefault(s.raw, s.tokens)
    docs = [seen[raw] for raw in sorted(seen)]
    return build_idf_from_documents(docs, max_n=1)


def tfidf_vector(bag: Bag, idf: IdfTable) -> TermVector:
    """TF weights multiplied by unigram IDF. Tokens present in every
    document get weight 0; raises DegenerateVectorError if all do."""
    counts: Counter = Counter()
    for s in bag.items:
        counts.update(s.tokens)
    return TermVector.from_weights(
        {t: c * idf.idf((t,)) for t, c in counts.items()}
    )


def cos_bags(g: Bag, r: Bag, weighting: str = "tf") -> float:
    """Cosine similarity of the two bag vectors under TF or TF-IDF
    weighting (IDF computed over the union of both bags)."""
    if weighting == "tf":
        vg, vr = tf_vector(g), tf_vector(r)
    elif weighting == "tfidf":
        idf = build_pair_idf(g, r)
        vg, vr = tfidf_vector(g, idf), tfidf_vector(r, idf)
    else:
        raise ValueError(f"unknown weighting {weighting!r}; expected 'tf' or 'tfidf'")
    return vg.cosine(vr)


def unigram_dist(bag: Bag, vocab: set[str]) -> UnigramDist:
    """Add-one smoothed unigram distribution:
    p(w) = (count(w) + 1) / (total + |vocab|)."""
    counts: Counter = Counter()
    for s in bag.items:
        counts.update(s.tokens)
    missing = set(counts) - set(vocab)
    if missing:
        raise ValueError(f"vocab must cover the bag; missing {sorted(missing)[:5]}")
    total = sum(counts.values())
    denom = total + len(vocab)
    probs = {w: (counts[w] + 1) / denom for w in vocab}
    return UnigramDist(probs=probs, vocabulary=frozenset(vocab))


def inv_kl(g: Bag, r: Bag) -> float:
    """Inverse KL divergence of smoothed unigram distributions,
    (D_KL(G||R) + eps)^-1 in nats, computed over the union vocabulary.

    Identical smoothed distributions hit the 1/eps cap.
    """
    vocab = g.vocabulary() | r.vocabulary()
    pg = unigram_dist(g, vocab).probs
    pr = unigram_dist(r, vocab).probs
    kl = sum(p * math.log(p / pr[w]) for w, p in pg.items())
    return 1.0 / (max(kl, 0.0) + INV_KL_EPS)
