"""Data model and ingestion: sentences, bags, corpora, embeddings.

A Bag is a multiset of sentences tied to one prompt/context; duplicates carry
frequency information, so all operations here treat bags as multisets keyed
by raw text. File formats are JSONL (see README for the schemas).
"""

from __future__ import annotations

import json
import random
import re
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    DimensionError,
    EmptyTextError,
    FormatError,
    SpanError,
)

__all__ = [
    "Sentence",
    "Bag",
    "Corpus",
    "EmbeddingTable",
    "tokenize",
    "text_id",
    "load_corpus",
    "save_corpus",
    "load_embeddings",
    "downsample_bag",
    "equalize_sizes",
]

# Reserved context id for serializing the optional distractor pool.
DISTRACTOR_CONTEXT = "__distractors__"

_TOKEN_RE = re.compile(r"\w+|[^\w\s]")


def tokenize(raw: str) -> list[str]:
    """Deterministic tokenization: NFKC, lowercase, whitespace split with
    punctuation isolated into standalone tokens.

    Raises EmptyTextError on empty/whitespace-only input.
    """
    text = unicodedata.normalize("NFKC", raw).lower()
    tokens = _TOKEN_RE.findall(text)
    if not tokens:
        raise EmptyTextError(f"empty or whitespace-only text: {raw!r}")
    return tokens


def text_id(raw: str) -> str:
    """Stable content-hash id for a raw text (shared with the embedding
    exporter, which must produce identical keys)."""
    import hashlib

    return hashlib.sha256(raw.encode("utf-8")).hexdigest()[:16]


def _check_span(
    span: tuple[int, int] | None, n_tokens: int, name: str
) -> None:
    if span is None:
        return
    start, end = span
    if not (0 <= start < end <= n_tokens):
        raise SpanError(
            f"{name} span [{start}, {end}) out of bounds for {n_tokens} tokens"
        )


@dataclass(frozen=True)
class Sentence:
    """One user/generated text with tokens and optional annotations.

    `tokens` and `id` are derived from `raw` on construction; spans are
    token-index ranges, end-exclusive, and must be in-bounds and disjoint.
    """

    raw: str
    intent: str | None = None
    carrier_span: tuple[int, int] | None = None
    item_span: tuple[int, int] | None = None
    attributes: tuple[str, ...] = ()
    tokens: tuple[str, ...] = field(init=False, compare=False)
    id: str = field(init=False, compare=False)

    def __post_init__(self):
        toks = tuple(tokenize(self.raw))
        object.__setattr__(self, "tokens", toks)
        object.__setattr__(self, "id", text_id(self.raw))
        if self.carrier_span is not None:
            object.__setattr__(self, "carrier_span", tuple(self.carrier_span))
        if self.item_span is not None:
            object.__setattr__(self, "item_span", tuple(self.item_span))
        object.__setattr__(self, "attributes", tuple(self.attributes))
        _check_span(self.carrier_span, len(toks), "carrier")
        _check_span(self.item_span, len(toks), "item")
        if self.carrier_span is not None and self.item_span is not None:
            c0, c1 = self.carrier_span
            i0, i1 = self.item_span
            if c0 < i1 and i0 < c1:
                raise SpanError(
                    f"carrier span [{c0},{c1}) overlaps item span [{i0},{i1})"
                )

    def sort_key(self):
        """Total order used to canonicalize occurrence lists before any
        seeded sampling, making results independent of input order."""
        return (
            self.raw,
            self.intent or "",
            self.carrier_span or (-1, -1),
            self.item_span or (-1, -1),
            self.attributes,
        )


@dataclass(frozen=True, eq=False)
class Bag:
    """A multiset of sentences for one context. Two bags are equal iff their
    occurrence counts per raw text are equal, regardless of order."""

    context_id: str
    items: tuple[Sentence, ...]

    def __post_init__(self):
        object.__setattr__(self, "items", tuple(self.items))
        if len(self.items) == 0:
            raise ValueError(f"bag {self.context_id!r} must contain at least one sentence")

    def __len__(self) -> int:
        return len(self.items)

    def __iter__(self):
        return iter(self.items)

    def counts(self) -> Counter:
        """Occurrence count per raw text."""
        return Counter(s.raw for s in self.items)

    def distinct(self) -> list[Sentence]:
        """One representative per raw text, sorted by raw text."""
        seen: dict[str, Sentence] = {}
        for s in sorted(self.items, key=lambda s: s.sort_key()):
            seen.setdefault(s.raw, s)
        return list(seen.values())

    def sorted_items(self) -> list[Sentence]:
        return sorted(self.items, key=lambda s: s.sort_key())

    def vocabulary(self) -> set[str]:
        return {t for s in self.items for t in s.tokens}

    def __eq__(self, other) -> bool:
        if not isinstance(other, Bag):
            return NotImplemented
        return self.counts() == other.counts()


@dataclass
class Corpus:
    """Map of context id to reference bag, plus an optional distractor pool
    (sentences from other contexts/intents, used by noisy-text injection)."""

    contexts: dict[str, Bag]
    distractors: tuple[Sentence, ...] = ()

    def __post_init__(self):
        self.distractors = tuple(self.distractors)
        for cid, bag in self.contexts.items():
            if bag.context_id != cid:
                raise ValueError(
                    f"bag context_id {bag.context_id!r} does not match key {cid!r}"
                )

    def __eq__(self, other) -> bool:
        if not isinstance(other, Corpus):
            return NotImplemented
        return (
            self.contexts == other.contexts
            and Counter(s.raw for s in self.distractors)
            == Counter(s.raw for s in other.distractors)
        )


def _sentence_from_record(rec: dict, line_no: int) -> tuple[str, int, Sentence]:
    if not isinstance(rec, dict):
        raise FormatError("record is not a JSON object", line_no)
    try:
        context_id = rec["context_id"]
        raw = rec["text"]
    except KeyError as exc:
        raise FormatError(f"missing required field {exc}", line_no) from None
    if not isinstance(context_id, str) or not isinstance(raw, str):
        raise FormatError("context_id and text must be strings", line_no)
    count = rec.get("count", 1)
    if not isinstance(count, int) or isinstance(count, bool) or count < 1:
        raise FormatError(f"count must be an integer >= 1, got {count!r}", line_no)
    intent = rec.get("intent")
    if intent is not None and not isinstance(intent, str):
        raise FormatError("intent must be a string", line_no)
    spans = rec.get("spans") or {}
    if not isinstance(spans, dict):
        raise FormatError("spans must be an object", line_no)

    def span_of(key: str):
        v = spans.get(key)
        if v is None:
            return None
        if not (isinstance(v, list) and len(v) == 2 and all(isinstance(x, int) for x in v)):
            raise FormatError(f"{key} span must be [start, end]", line_no)
        return (v[0], v[1])

    attributes = rec.get("attributes") or []
    if not (isinstance(attributes, list) and all(isinstance(a, str) for a in attributes)):
        raise FormatError("attributes must be a list of strings", line_no)
    try:
        sentence = Sentence(
            raw=raw,
            intent=intent,
            carrier_span=span_of("carrier"),
            item_span=span_of("item"),
            attributes=tuple(attributes),
        )
    except SpanError as exc:
        raise SpanError(f"line {line_no}: {exc}") from None
    except EmptyTextError as exc:
        raise FormatError(str(exc), line_no) from None
    return context_id, count, sentence


def load_corpus(path: str | Path) -> Corpus:
    """Load a corpus from JSONL. One object per line:

    {"context_id": str, "text": str, "count": int>=1 (default 1),
     "intent": str?, "spans": {"carrier": [s,e], "item": [s,e]}?,
     "attributes": [str]?}

    The `count` field expands to that many occurrences. Lines whose
    context_id is "__distractors__" populate the distractor pool.
    """
    path = Path(path)
    groups: dict[str, list[Sentence]] = {}
    distractors: list[Sentence] = []
    with path.open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(f"invalid JSON ({exc.msg})", line_no) from None
            context_id, count, sentence = _sentence_from_record(rec, line_no)
            if context_id == DISTRACTOR_CONTEXT:
                distractors.extend([sentence] * count)
            else:
                groups.setdefault(context_id, []).extend([sentence] * count)
    if not groups:
        raise FormatError(f"no corpus records in {path}")
    contexts = {cid: Bag(cid, tuple(items)) for cid, items in groups.items()}
    return Corpus(contexts=contexts, distractors=tuple(distractors))


def _record_for(sentence: Sentence, context_id: str, count: int) -> dict:
    rec: dict = {"context_id": context_id, "text": sentence.raw}
    if count != 1:
        rec["count"] = count
    if sentence.intent is not None:
        rec["intent"] = sentence.intent
    spans = {}
    if sentence.carrier_span is not None:
        spans["carrier"] = list(sentence.carrier_span)
    if sentence.item_span is not None:
        spans["item"] = list(sentence.item_span)
    if spans:
        rec["spans"] = spans
    if sentence.attributes:
        rec["attributes"] = list(sentence.attributes)
    return rec


def save_corpus(corpus: Corpus, path: str | Path) -> None:
    """Write a corpus back to JSONL, grouping identical occurrences into
    `count` fields. Deterministic: contexts and texts are sorted."""
    path = Path(path)
    lines = []
    for cid in sorted(corpus.contexts):
        bag = corpus.contexts[cid]
        grouped = Counter(bag.items)
        for sentence in sorted(grouped, key=lambda s: s.sort_key()):
            lines.append(_record_for(sentence, cid, grouped[sentence]))
    grouped = Counter(corpus.distractors)
    for sentence in sorted(grouped, key=lambda s: s.sort_key()):
        lines.append(_record_for(sentence, DISTRACTOR_CONTEXT, grouped[sentence]))
    with path.open("w", encoding="utf-8") as fh:
        for rec in lines:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


@dataclass
class EmbeddingTable:
    """Dense vector per sentence id, all with one dimension."""

    dim: int
    vectors: dict[str, np.ndarray]
    model: str | None = None
    n_duplicates: int = 0

    def __contains__(self, sentence_id: str) -> bool:
        return sentence_id in self.vectors

    def __len__(self) -> int:
        return len(self.vectors)

    def get(self, sentence_id: str) -> np.ndarray:
        from .errors import MissingEmbeddingError

        try:
            return self.vectors[sentence_id]
        except KeyError:
            raise MissingEmbeddingError(sentence_id) from None


def load_embeddings(path: str | Path) -> EmbeddingTable:
    """Load an embedding table from JSONL of {"id": str, "vec": [float...]}.

    An optional first line {"model": str, ...} without an "id" key is
    treated as a provenance header. Duplicate ids: last one wins, with the
    duplicate count reported on the table. Inconsistent dimensions raise
    DimensionError; non-finite values raise ValueError.
    """
    path = Path(path)
    vectors: dict[str, np.ndarray] = {}
    model = None
    dim: int | None = None
    n_duplicates = 0
    with path.open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(f"invalid JSON ({exc.msg})", line_no) from None
            if not isinstance(rec, dict):
                raise FormatError("record is not a JSON object", line_no)
            if "id" not in rec:
                if line_no == 1 and "model" in rec:
                    model = rec["model"]
                    continue
                raise FormatError("missing 'id' field", line_no)
            if "vec" not in rec:
                raise FormatError("missing 'vec' field", line_no)
            vec = np.asarray(rec["vec"], dtype=float)
            if vec.ndim != 1 or vec.size == 0:
                raise FormatError("vec must be a non-empty flat array", line_no)
            if not np.all(np.isfinite(vec)):
                raise ValueError(f"line {line_no}: non-finite value in vec")
            if dim is None:
                dim = int(vec.size)
            elif vec.size != dim:
                raise DimensionError(
                    f"line {line_no}: vector has dim {vec.size}, expected {dim}"
                )
            if rec["id"] in vectors:
                n_duplicates += 1
            vectors[str(rec["id"])] = vec
    if dim is None:
        raise FormatError(f"no embedding entries in {path}")
    return EmbeddingTable(dim=dim, vectors=vectors, model=model, n_duplicates=n_duplicates)


def save_embeddings(table: EmbeddingTable, path: str | Path) -> None:
    """Write an embedding table to JSONL, with a provenance header line when
    the table has a model identifier. Deterministic: ids are sorted."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        if table.model is not None:
            fh.write(json.dumps({"model": table.model, "dim": table.dim}) + "\n")
        for sid in sorted(table.vectors):
            vec = [float(x) for x in table.vectors[sid]]
            fh.write(json.dumps({"id": sid, "vec": vec}) + "\n")


def downsample_bag(bag: Bag, cap: int, seed: int) -> Bag:
    """Uniformly sample without replacement down to `cap` occurrences.

    Bags at or under the cap are returned unchanged. Deterministic for
    (bag, cap, seed) and independent of the input occurrence order.
    """
    if cap < 1:
        raise ValueError("cap must be >= 1")
    if len(bag) <= cap:
        return bag
    rng = random.Random(seed)
    picked = rng.sample(bag.sorted_items(), cap)
    return Bag(bag.context_id, tuple(picked))


def equalize_sizes(g: Bag, r: Bag, seed: int) -> tuple[Bag, Bag]:
    """Upsample the smaller bag (uniform with replacement) until both bags
    have size max(|G|, |R|). The larger bag is returned unchanged."""
    if len(g) == len(r):
        return g, r
    rng = random.Random(seed)

    def upsample(bag: Bag, target: int) -> Bag:
        extra = rng.choices(bag.sorted_items(), k=target - len(bag))
        return Bag(bag.context_id, tuple(bag.items) + tuple(extra))

    target = max(len(g), len(r))
    if len(g) < target:
        return upsample(g, target), r
    return g, upsample(r, target)
