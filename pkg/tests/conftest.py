"""Shared test helpers and fixtures."""

from __future__ import annotations

import random

import pytest

from trafficdist.corpus import Bag, Sentence


def make_bag(context_id: str, *texts: str, intent: str | None = None) -> Bag:
    """Bag from raw strings; repeat a string to add occurrences."""
    return Bag(context_id, tuple(Sentence(raw=t, intent=intent) for t in texts))


def random_token_list(rng: random.Random, vocab, min_len=1, max_len=6) -> list[str]:
    return [rng.choice(vocab) for _ in range(rng.randint(min_len, max_len))]


def random_bag(rng: random.Random, context_id: str, vocab, max_sentences=6, max_tokens=6) -> Bag:
    n = rng.randint(1, max_sentences)
    texts = [
        " ".join(random_token_list(rng, vocab, 1, max_tokens)) for _ in range(n)
    ]
    return make_bag(context_id, *texts)


VOCAB = ["search", "for", "nike", "running", "shoes", "buy", "blue", "laptop", "the", "find"]


@pytest.fixture
def rng():
    return random.Random(12345)
