"""Synthetic shopping-utterance corpus generator.

Builds fully annotated contexts from carrier-phrase x itemname templates
with Zipf-distributed occurrence counts, which is enough to exercise every
manipulation (intents and carrier spans for substitution, item spans and
attributes for specificity changes, cross-intent texts as distractors).
Also provides a deterministic token-hash sentence embedder for tests of the
embedding-based metrics.
"""

from __future__ import annotations

import math
import random

import numpy as np

from .corpus import Bag, Corpus, EmbeddingTable, Sentence, tokenize
from .seeding import derive_seed

__all__ = ["make_corpus", "synth_embeddings", "corpus_raws"]

CARRIERS = {
    "search": [
        "search for",
        "look for",
        "find",
        "show me",
        "can you find",
        "search",
        "do you have",
        "i want to find",
    ],
    "buy": [
        "buy",
        "purchase",
        "order",
        "i want to buy",
        "get me",
        "i would like to buy",
        "please order",
    ],
    "add_to_cart": [
        "add",
        "add to my cart",
        "put in my cart",
        "add to the cart",
        "throw in",
    ],
    "check_price": [
        "how much is",
        "what is the price of",
        "price of",
        "check the price of",
        "how much for",
    ],
}

PRODUCTS = [
    "running shoes",
    "laptop",
    "headphones",
    "phone case",
    "water bottle",
    "backpack",
    "coffee maker",
    "desk lamp",
    "yoga mat",
    "usb drive",
    "keyboard",
    "monitor",
    "blender",
    "toothbrush",
    "charger",
    "camera",
]

BRANDS = ["nike", "apex", "sony", "lumina", "orbit", "vertex", "polar", "numo"]

ATTRIBUTES = [
    "blue",
    "red",
    "black",
    "large",
    "small",
    "wireless",
    "portable",
    "waterproof",
    "ergonomic",
    "compact",
    "foldable",
    "noise cancelling",
    "16 gb",
    "4k",
    "rechargeable",
]


def _zipf_counts(size: int, n_distinct: int, a: float, rng: random.Random) -> list[int]:
    # Every distinct text keeps at least one occurrence; the remainder is
    # split by Zipf rank weights with largest-remainder rounding.
    weights = [1.0 / (i + 1) ** a for i in range(n_distinct)]
    total_w = sum(weights)
    spare = size - n_distinct
    raw = [spare * w / total_w for w in weights]
    counts = [1 + int(x) for x in raw]
    remainder = size - sum(counts)
    order = sorted(range(n_distinct), key=lambda i: raw[i] - int(raw[i]), reverse=True)
    for i in order[:remainder]:
        counts[i] += 1
    # Give the head a clear margin over the tail, so flattening the
    # distribution is never a no-op on small bags.
    i = n_distinct - 1
    while counts[0] - min(counts) < 3 and i > 0:
        if counts[i] >= 2:
            counts[i] -= 1
            counts[0] += 1
        else:
            i -= 1
    return counts


def _item_variants(
    brand: str, product: str, attrs: list[str], rng: random.Random
) -> list[tuple[str, tuple[str, ...]]]:
    """Itemname strings with the attribute strings they contain."""
    variants: list[tuple[str, tuple[str, ...]]] = [(product, ())]
    variants.append((f"{brand} {product}", ()))
    for a in attrs:
        variants.append((f"{a} {product}", (a,)))
        variants.append((f"{brand} {a} {product}", (a,)))
    if len(attrs) >= 2:
        a1, a2 = attrs[0], attrs[1]
        variants.append((f"{a1} {a2} {product}", (a1, a2)))
    return variants


def make_corpus(
    n_contexts: int = 200,
    seed: int = 0,
    max_bag_size: int = 50,
    min_bag_size: int = 6,
    zipf_a: float = 1.4,
) -> Corpus:
    """Generate a corpus of `n_contexts` annotated reference bags."""
    rng = random.Random(seed)
    contexts: dict[str, Bag] = {}
    intents = sorted(CARRIERS)
    for idx in range(n_contexts):
        intent = intents[idx % len(intents)]
        product = rng.choice(PRODUCTS)
        brand = rng.choice(BRANDS)
        attrs = rng.sample(ATTRIBUTES, k=3)
        size = int(
            round(
                math.exp(
                    rng.uniform(math.log(min_bag_size), math.log(max_bag_size))
                )
            )
        )
        size = max(min_bag_size, min(max_bag_size, size))
        carriers = CARRIERS[intent]
        items = _item_variants(brand, product, attrs, rng)
        combos = [(c, it) for c in carriers for it in items]
        # Head-heavy bags: noticeably fewer distinct texts than occurrences,
        # like real traffic, so distribution reshaping has room to act.
        n_distinct = min(max(2, int(size * 0.55)), rng.randint(6, 10), len(combos))
        chosen = rng.sample(combos, n_distinct)
        counts = _zipf_counts(size, n_distinct, zipf_a, rng)
        sentences = []
        for (carrier, (item, item_attrs)), count in zip(chosen, counts):
            carrier_tokens = tokenize(carrier)
            item_tokens = tokenize(item)
            sent = Sentence(
                raw=f"{carrier} {item}",
                intent=intent,
                carrier_span=(0, len(carrier_tokens)),
                item_span=(len(carrier_tokens), len(carrier_tokens) + len(item_tokens)),
                attributes=item_attrs,
            )
            sentences.extend([sent] * count)
        contexts[f"ctx{idx:04d}"] = Bag(f"ctx{idx:04d}", tuple(sentences))
    return Corpus(contexts=contexts)


def corpus_raws(corpus: Corpus) -> list[str]:
    """Every distinct raw text of the corpus (contexts plus distractors)."""
    raws = {s.raw for bag in corpus.contexts.values() for s in bag.items}
    raws.update(s.raw for s in corpus.distractors)
    return sorted(raws)


def synth_embeddings(raws, dim: int = 32, seed: int = 0) -> EmbeddingTable:
    """Deterministic token-hash sentence embeddings for testing.

    Each unigram and token bigram hashes to a signed coordinate, so texts
    sharing tokens get similar vectors while any wording change (including
    reorderings) moves the vector. Vectors are unit-normalized.
    """
    from .corpus import text_id

    vectors: dict[str, np.ndarray] = {}
    for raw in raws:
        tokens = tokenize(raw)
        features: list[str] = list(tokens)
        features.extend(f"{a}~{b}" for a, b in zip(tokens, tokens[1:]))
        vec = np.zeros(dim)
        for feat in features:
            h = derive_seed(seed, "feat", feat)
            sign = 1.0 if (h >> 8) & 1 else -1.0
            vec[h % dim] += sign
        norm = float(np.linalg.norm(vec))
        if norm == 0.0:
            vec[derive_seed(seed, "fallback", raw) % dim] = 1.0
            norm = 1.0
        vectors[text_id(raw)] = vec / norm
    return EmbeddingTable(dim=dim, vectors=vectors, model=f"token-hash-{dim}")
