"""4-gram language model with interpolated Kneser-Ney smoothing, and the
inverse-perplexity bag metric built on it (train on G, score R).

Conventions, fixed so that perplexities are reproducible:

- Each sentence is padded with three begin markers and one end marker; the
  end marker is scored, the begin markers only provide context.
- N-grams of every order are counted at scored positions only, so no
  counted n-gram ends with a begin marker and begin markers never receive
  probability mass.
- The top order uses raw counts; lower orders use continuation counts
  (number of distinct left extensions among the next-higher-order types).
- A single discount D (default 0.75) is subtracted from every positive
  count and recycled as interpolation mass for the next-lower order; the
  lowest level interpolates with a uniform distribution over the
  vocabulary plus the unknown marker, which is how unseen test tokens keep
  nonzero probability.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

from .corpus import Bag

__all__ = ["BOS", "EOS", "UNK", "NGramLM", "train_lm", "perplexity", "inv_pp"]

BOS = "<s>"
EOS = "</s>"
UNK = "<unk>"

ORDER = 4
DEFAULT_DISCOUNT = 0.75


@dataclass
class NGramLM:
    """Immutable Kneser-Ney model. `counts[k]` maps a (k-1)-token context to
    the per-word counts used at order k: raw counts at the top order,
    continuation counts below."""

    discount: float
    vocab: frozenset
    order: int = ORDER
    counts: dict = field(default_factory=dict, repr=False)
    totals: dict = field(default_factory=dict, repr=False)
    distinct: dict = field(default_factory=dict, repr=False)

    @property
    def predictable_vocab(self) -> frozenset:
        """Every token the model can assign probability to."""
        return self.vocab | {EOS, UNK}

    def _map_token(self, token: str) -> str:
        if token == BOS or token in self.vocab or token == EOS:
            return token
        return UNK

    def prob(self, word: str, context: tuple[str, ...]) -> float:
        """p(word | context), with contexts shorter than order-1 padded on
        the left with begin markers and unknown tokens mapped to UNK."""
        word = self._map_token(word)
        ctx = tuple(self._map_token(t) for t in context)[-(self.order - 1):]
        ctx = (BOS,) * (self.order - 1 - len(ctx)) + ctx
        d = self.discount
        base = 1.0 / len(self.predictable_vocab)
        p = base
        for k in range(1, self.order + 1):
            sub = ctx[self.order - k:]
            total = self.totals[k].get(sub, 0)
            if total == 0:
                continue
            count = self.counts[k][sub].get(word, 0)
            n_types = self.distinct[k][sub]
            p = max(count - d, 0.0) / total + (d * n_types / total) * p
        return p

    def sentence_logprob(self, tokens: tuple[str, ...]) -> tuple[float, int]:
        """Natural-log probability of a sentence including its end marker,
        plus the number of scored tokens."""
        seq = (BOS,) * (self.order - 1) + tuple(tokens) + (EOS,)
        logp = 0.0
        for pos in range(self.order - 1, len(seq)):
            logp += math.log(self.prob(seq[pos], seq[pos - self.order + 1: pos]))
        return logp, len(tokens) + 1


def train_lm(g: Bag, discount: float = DEFAULT_DISCOUNT) -> NGramLM:
    """Train the 4-gram Kneser-Ney model on every occurrence of the bag
    (duplicate sentences contribute their counts once per occurrence)."""
    if not 0.0 < discount < 1.0:
        raise ValueError("discount must be in (0, 1)")
    order = ORDER
    vocab = set()
    top_counts: dict[tuple, Counter] = {}
    type_sets: dict[int, set] = {k: set() for k in range(1, order)}  # distinct k+1-grams
    for s in g.items:
        vocab.update(s.tokens)
        seq = (BOS,) * (order - 1) + s.tokens + (EOS,)
        for pos in range(order - 1, len(seq)):
            top = seq[pos - order + 1: pos + 1]
            top_counts.setdefault(top[:-1], Counter())[top[-1]] += 1
            for k in range(1, order):
                type_sets[k].add(seq[pos - k: pos + 1])

    counts: dict[int, dict] = {order: {c: dict(w) for c, w in top_counts.items()}}
    for k in range(1, order):
        level: dict[tuple, dict] = {}
        for gram in type_sets[k]:
            ctx, word = gram[1:-1], gram[-1]
            slot = level.setdefault(ctx, {})
            slot[word] = slot.get(word, 0) + 1
        counts[k] = level

    totals = {k: {c: sum(w.values()) for c, w in counts[k].items()} for k in counts}
    distinct = {k: {c: len(w) for c, w in counts[k].items()} for k in counts}
    return NGramLM(
        discount=discount,
        vocab=frozenset(vocab),
        order=order,
        counts=counts,
        totals=totals,
        distinct=distinct,
    )


def perplexity(lm: NGramLM, r: Bag) -> float:
    """exp of the average negative log-likelihood per scored token over all
    occurrences of the bag (end markers included)."""
    total_logp = 0.0
    total_tokens = 0
    cache: dict[tuple, tuple[float, int]] = {}
    for s in r.items:
        if s.tokens not in cache:
            cache[s.tokens] = lm.sentence_logprob(s.tokens)
        logp, n = cache[s.tokens]
        total_logp += logp
        total_tokens += n
    return math.exp(-total_logp / total_tokens)


def inv_pp(g: Bag, r: Bag, discount: float = DEFAULT_DISCOUNT) -> float:
    """Inverse perplexity of R under a model trained on G; always in (0, 1]."""
    return 1.0 / perplexity(train_lm(g, discount=discount), r)
