"""Controlled noise manipulations of a reference bag, and construction of
ground-truth noisy rankings from them.

Every manipulation is deterministic given (bag, parameters, seed) and
independent of the input occurrence order: occurrences are canonicalized by
sorting before any seeded sampling. The number of modified occurrences
follows a linear schedule in strength with a 50% ceiling,
k = ceil(strength/5 * |bag| * rho), so even level-5 bags stay recognizably
related to the reference.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import Bag, Corpus, Sentence, tokenize
from .errors import (
    AnnotationRequiredError,
    FormatError,
    MissingDistractorsError,
    NotApplicableError,
    UsageError,
)
from .seeding import derive_seed

__all__ = [
    "KINDS",
    "DEFAULT_RHO",
    "ManipulationSpec",
    "ManipulationResources",
    "Plan",
    "RankingTask",
    "modified_count",
    "tdm",
    "nti",
    "eda",
    "cps",
    "ism",
    "apply_manipulation",
    "build_ranking",
    "plan_families",
    "load_plan",
    "load_lexicon",
    "resources_for_context",
]

KINDS = (
    "tdm_peaked",
    "tdm_flat",
    "nti",
    "eda",
    "cps",
    "ism_broader",
    "ism_specific",
)

DEFAULT_RHO = 0.5
MAX_STRENGTH = 5


@dataclass(frozen=True)
class ManipulationSpec:
    """One manipulation kind with its fixed parameters."""

    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise UsageError(f"unknown manipulation kind {self.kind!r}; expected one of {KINDS}")


@dataclass
class ManipulationResources:
    """Context-specific inputs the annotation/pool-dependent manipulations
    draw from."""

    distractors: tuple[Sentence, ...] = ()
    carrier_pool: dict[str, list[str]] = field(default_factory=dict)
    attribute_source: dict[str, list[str]] = field(default_factory=dict)
    lexicon: dict[str, list[str]] | None = None
    vocab: set[str] | None = None


@dataclass
class RankingTask:
    """A reference bag plus manipulated candidates ordered by construction
    noise; true_ranks[i] = i+1, rank 1 being the least noisy."""

    context_id: str
    reference: Bag
    candidates: list[Bag]
    true_ranks: list[int]
    manipulation: str

    def __post_init__(self):
        if len(self.candidates) != len(self.true_ranks):
            raise ValueError("candidates and true_ranks must have equal length")


def _check_strength(strength: int) -> None:
    if not 1 <= strength <= MAX_STRENGTH:
        raise ValueError(f"strength must be in 1..{MAX_STRENGTH}, got {strength}")


def modified_count(strength: int, size: int, rho: float = DEFAULT_RHO) -> int:
    """Number of occurrences modified at the given strength."""
    _check_strength(strength)
    if not 0.0 < rho <= 1.0:
        raise ValueError("rho must be in (0, 1]")
    return math.ceil(strength / MAX_STRENGTH * size * rho)


def _representatives(bag: Bag) -> dict[str, Sentence]:
    reps: dict[str, Sentence] = {}
    for s in bag.sorted_items():
        reps.setdefault(s.raw, s)
    return reps


def tdm(bag: Bag, direction: str, strength: int, seed: int = 0) -> Bag:
    """Text distribution manipulation: reshape occurrence counts, keeping
    the total bag size unchanged.

    peaked: the k lowest-frequency distinct texts lose all their
    occurrences to the most frequent text, k growing with strength.
    flat: occurrences move one at a time from the currently most frequent
    text to the currently least frequent until, at strength 5, the spread
    max - min is at most 1. Both directions are deterministic; the seed is
    accepted for interface uniformity.
    """
    _check_strength(strength)
    counts = dict(bag.counts())
    if len(counts) < 2:
        raise NotApplicableError(
            f"bag {bag.context_id!r} has a single distinct text; distribution reshaping needs >= 2"
        )
    if direction == "peaked":
        head = min(counts, key=lambda t: (-counts[t], t))
        tail = sorted((t for t in counts if t != head), key=lambda t: (counts[t], t))
        k = math.ceil(strength / MAX_STRENGTH * len(tail))
        for text in tail[:k]:
            counts[head] += counts.pop(text)
    elif direction == "flat":
        moves = []
        work = dict(counts)
        while max(work.values()) - min(work.values()) > 1:
            donor = min(work, key=lambda t: (-work[t], t))
            recipient = min(work, key=lambda t: (work[t], t))
            work[donor] -= 1
            work[recipient] += 1
            moves.append((donor, recipient))
        n_moves = math.ceil(strength / MAX_STRENGTH * len(moves))
        for donor, recipient in moves[:n_moves]:
            counts[donor] -= 1
            counts[recipient] += 1
    else:
        raise ValueError(f"direction must be 'peaked' or 'flat', got {direction!r}")
    reps = _representatives(bag)
    items: list[Sentence] = []
    for text in sorted(counts):
        items.extend([reps[text]] * counts[text])
    return Bag(bag.context_id, tuple(items))


def nti(
    bag: Bag,
    distractors: tuple[Sentence, ...] | list[Sentence],
    strength: int,
    seed: int,
    rho: float = DEFAULT_RHO,
) -> Bag:
    """Replace k(strength) occurrences with uniform draws from a pool of
    texts from other contexts/intents."""
    bag_raws = {s.raw for s in bag.items}
    pool = sorted((d for d in distractors if d.raw not in bag_raws), key=lambda s: s.sort_key())
    if not pool:
        raise MissingDistractorsError(
            f"no distractors available for bag {bag.context_id!r}"
        )
    k = modified_count(strength, len(bag), rho)
    items = bag.sorted_items()
    rng = random.Random(seed)
    positions = rng.sample(range(len(items)), k)
    replacements = rng.choices(pool, k=k)
    for pos, repl in zip(positions, replacements):
        items[pos] = repl
    return Bag(bag.context_id, tuple(items))


def _edit_once(s: Sentence, rng: random.Random, lexicon, vocab_list) -> Sentence:
    tokens = list(s.tokens)
    ops = ["swap", "replace", "delete", "insert"] if len(tokens) >= 2 else ["replace", "insert"]
    op = rng.choice(ops)
    if op == "swap":
        i, j = rng.sample(range(len(tokens)), 2)
        tokens[i], tokens[j] = tokens[j], tokens[i]
    elif op == "replace":
        i = rng.randrange(len(tokens))
        choices = list((lexicon or {}).get(tokens[i], []))
        if not choices:
            choices = [t for t in vocab_list if t != tokens[i]]
        if choices:
            tokens[i] = rng.choice(choices)
    elif op == "delete":
        del tokens[rng.randrange(len(tokens))]
    else:
        tokens.insert(rng.randrange(len(tokens) + 1), rng.choice(vocab_list))
    # Random edits invalidate span annotations.
    return Sentence(raw=" ".join(tokens), intent=s.intent)


def eda(
    bag: Bag,
    strength: int,
    seed: int,
    lexicon: dict[str, list[str]] | None = None,
    vocab: set[str] | None = None,
) -> Bag:
    """Easy-data-augmentation noise: k(strength) occurrences each get one
    random edit (token swap, replacement, deletion or insertion).

    Replacement draws from the synonym lexicon when one is provided,
    otherwise from the corpus vocabulary; insertion always draws from the
    vocabulary. 1-token texts only receive replacement/insertion.
    """
    vocab_list = sorted(vocab) if vocab else sorted(bag.vocabulary())
    k = modified_count(strength, len(bag))
    items = bag.sorted_items()
    rng = random.Random(seed)
    positions = rng.sample(range(len(items)), k)
    for pos in positions:
        items[pos] = _edit_once(items[pos], rng, lexicon, vocab_list)
    return Bag(bag.context_id, tuple(items))


def _shift_span(
    span: tuple[int, int] | None, at: int, delta: int
) -> tuple[int, int] | None:
    if span is None:
        return None
    start, end = span
    if start >= at:
        return (start + delta, end + delta)
    return span


def cps(
    bag: Bag,
    carrier_pool: dict[str, list[str]],
    strength: int,
    seed: int,
) -> Bag:
    """Carrier phrase substitution: k(strength) occurrences get their
    carrier-span tokens replaced by a random same-intent phrase; itemname
    tokens are preserved verbatim.

    Fails loudly (AnnotationRequired) when fewer than k occurrences carry
    the needed carrier_span/intent annotations or pool coverage.
    """
    items = bag.sorted_items()
    k = modified_count(strength, len(bag))
    eligible = [
        i
        for i, s in enumerate(items)
        if s.carrier_span is not None and s.intent is not None and carrier_pool.get(s.intent)
    ]
    if len(eligible) < k:
        culprit = next((i for i in range(len(items)) if i not in set(eligible)), 0)
        raise AnnotationRequiredError(
            f"carrier substitution needs {k} annotated occurrences, found {len(eligible)} "
            f"(e.g. sentence {items[culprit].id} of bag {bag.context_id!r})"
        )
    rng = random.Random(seed)
    positions = rng.sample(eligible, k)
    for pos in positions:
        s = items[pos]
        c0, c1 = s.carrier_span
        current = s.tokens[c0:c1]
        phrases = sorted(carrier_pool[s.intent])
        options = [p for p in phrases if tuple(tokenize(p)) != current]
        phrase_tokens = tokenize(rng.choice(options) if options else phrases[0])
        tokens = list(s.tokens[:c0]) + phrase_tokens + list(s.tokens[c1:])
        delta = len(phrase_tokens) - (c1 - c0)
        items[pos] = Sentence(
            raw=" ".join(tokens),
            intent=s.intent,
            carrier_span=(c0, c0 + len(phrase_tokens)),
            item_span=_shift_span(s.item_span, c1, delta),
            attributes=s.attributes,
        )
    return Bag(bag.context_id, tuple(items))


def _find_subsequence(haystack, needle, start: int, end: int) -> int:
    for i in range(start, end - len(needle) + 1):
        if tuple(haystack[i : i + len(needle)]) == tuple(needle):
            return i
    return -1


def ism(
    bag: Bag,
    direction: str,
    attribute_source: dict[str, list[str]],
    strength: int,
    seed: int,
) -> Bag:
    """Itemname specificity manipulation.

    broader: remove one annotated attribute token sequence from inside the
    itemname span. specific: insert one attribute from attribute_source
    immediately before the itemname head (its last token). Occurrences
    lacking item_span or usable attributes are never selected; if fewer
    than k(strength) are usable the manipulation fails loudly.
    """
    if direction not in ("broader", "specific"):
        raise ValueError(f"direction must be 'broader' or 'specific', got {direction!r}")
    items = bag.sorted_items()
    k = modified_count(strength, len(bag))

    def removable(s: Sentence) -> list[str]:
        if s.item_span is None:
            return []
        i0, i1 = s.item_span
        out = []
        for attr in sorted(set(s.attributes)):
            toks = tokenize(attr)
            if len(toks) < i1 - i0 and _find_subsequence(s.tokens, toks, i0, i1) >= 0:
                out.append(attr)
        return out

    def insertable(s: Sentence) -> list[str]:
        if s.item_span is None:
            return []
        pool = sorted(set(attribute_source.get(s.id, ())))
        if not pool:
            return []
        i0, i1 = s.item_span
        absent = [
            a for a in pool if _find_subsequence(s.tokens, tokenize(a), i0, i1) < 0
        ]
        return absent if absent else pool

    usable_of = removable if direction == "broader" else insertable
    eligible = [i for i, s in enumerate(items) if usable_of(s)]
    if len(eligible) < k:
        culprit = next((i for i in range(len(items)) if i not in set(eligible)), 0)
        raise AnnotationRequiredError(
            f"itemname manipulation ({direction}) needs {k} usable occurrences, found "
            f"{len(eligible)} (e.g. sentence {items[culprit].id} of bag {bag.context_id!r})"
        )
    rng = random.Random(seed)
    positions = rng.sample(eligible, k)
    for pos in positions:
        s = items[pos]
        i0, i1 = s.item_span
        attr = rng.choice(usable_of(s))
        attr_tokens = tokenize(attr)
        if direction == "broader":
            at = _find_subsequence(s.tokens, attr_tokens, i0, i1)
            tokens = list(s.tokens[:at]) + list(s.tokens[at + len(attr_tokens):])
            delta = -len(attr_tokens)
            attributes = tuple(a for a in s.attributes if a != attr)
        else:
            at = i1 - 1
            tokens = list(s.tokens[:at]) + attr_tokens + list(s.tokens[at:])
            delta = len(attr_tokens)
            attributes = s.attributes + (attr,)
        items[pos] = Sentence(
            raw=" ".join(tokens),
            intent=s.intent,
            carrier_span=_shift_span(s.carrier_span, i1, delta),
            item_span=(i0, i1 + delta),
            attributes=attributes,
        )
    return Bag(bag.context_id, tuple(items))


def apply_manipulation(
    spec: ManipulationSpec,
    bag: Bag,
    strength: int,
    seed: int,
    resources: ManipulationResources,
) -> Bag:
    """Dispatch one manipulation at the given strength."""
    kind = spec.kind
    if kind == "tdm_peaked":
        return tdm(bag, "peaked", strength, seed)
    if kind == "tdm_flat":
        return tdm(bag, "flat", strength, seed)
    if kind == "nti":
        rho = spec.params.get("rho", DEFAULT_RHO)
        return nti(bag, resources.distractors, strength, seed, rho=rho)
    if kind == "eda":
        return eda(bag, strength, seed, lexicon=resources.lexicon, vocab=resources.vocab)
    if kind == "cps":
        return cps(bag, resources.carrier_pool, strength, seed)
    if kind == "ism_broader":
        return ism(bag, "broader", resources.attribute_source, strength, seed)
    if kind == "ism_specific":
        return ism(bag, "specific", resources.attribute_source, strength, seed)
    raise UsageError(f"unknown manipulation kind {kind!r}")


@dataclass
class Plan:
    """Parsed manipulation plan.

    mode "strength": each listed manipulation forms its own task family,
    applied at strengths 1..levels. mode "incremental": one family where
    candidate i stacks manipulations 1..i, each at its fixed per-entry
    strength (default 3).
    """

    mode: str
    manipulations: list[ManipulationSpec]
    levels: int = 5


def load_plan(path: str | Path) -> Plan:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid plan JSON: {exc.msg}") from None
    if not isinstance(data, dict):
        raise FormatError("plan must be a JSON object")
    mode = data.get("mode")
    if mode not in ("strength", "incremental"):
        raise UsageError(f"plan mode must be 'strength' or 'incremental', got {mode!r}")
    raw_manips = data.get("manipulations")
    if not isinstance(raw_manips, list) or not raw_manips:
        raise UsageError("plan needs a non-empty 'manipulations' list")
    specs = []
    for m in raw_manips:
        if not isinstance(m, dict) or "kind" not in m:
            raise UsageError("each manipulation needs a 'kind'")
        specs.append(ManipulationSpec(kind=m["kind"], params=m.get("params", {})))
    levels = data.get("levels", 5)
    if not isinstance(levels, int) or levels < 2:
        raise UsageError("levels must be an integer >= 2")
    return Plan(mode=mode, manipulations=specs, levels=levels)


def load_lexicon(path: str | Path) -> dict[str, list[str]]:
    """Synonym lexicon JSONL: {"word": str, "synonyms": [str, ...]}."""
    lexicon: dict[str, list[str]] = {}
    with Path(path).open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(f"invalid JSON ({exc.msg})", line_no) from None
            if "word" not in rec or not isinstance(rec.get("synonyms"), list):
                raise FormatError("expected {'word', 'synonyms'}", line_no)
            lexicon[rec["word"]] = [str(s) for s in rec["synonyms"]]
    return lexicon


def plan_families(plan: Plan) -> list[tuple[str, str, list[ManipulationSpec]]]:
    """Expand a plan into task families: (label, mode, specs)."""
    if plan.mode == "strength":
        return [(spec.kind, "strength", [spec]) for spec in plan.manipulations]
    if len(plan.manipulations) < plan.levels:
        raise UsageError(
            f"incremental plan needs at least {plan.levels} manipulations, "
            f"got {len(plan.manipulations)}"
        )
    specs = plan.manipulations[: plan.levels]
    label = "incremental:" + "+".join(s.kind for s in specs)
    return [(label, "incremental", specs)]


def build_ranking(
    reference: Bag,
    family: tuple[str, str, list[ManipulationSpec]],
    seed: int,
    resources: ManipulationResources,
    levels: int = 5,
) -> RankingTask:
    """Construct one ranking task: `levels` candidates with strictly
    increasing construction noise and true ranks 1..levels."""
    label, mode, specs = family
    if levels < 2:
        raise UsageError("a ranking needs at least 2 levels")
    candidates: list[Bag] = []
    if mode == "strength":
        if levels > MAX_STRENGTH:
            raise UsageError(
                f"strength mode supports at most {MAX_STRENGTH} levels, got {levels}"
            )
        spec = specs[0]
        for strength in range(1, levels + 1):
            candidates.append(
                apply_manipulation(
                    spec, reference, strength, derive_seed(seed, label, strength), resources
                )
            )
    else:
        if len(specs) < levels:
            raise UsageError(
                f"incremental ranking with {levels} levels needs {levels} manipulations, "
                f"got {len(specs)}"
            )
        current = reference
        for step, spec in enumerate(specs[:levels], start=1):
            strength = spec.params.get("strength", 3)
            current = apply_manipulation(
                spec, current, strength, derive_seed(seed, label, step), resources
            )
            candidates.append(current)
    return RankingTask(
        context_id=reference.context_id,
        reference=reference,
        candidates=candidates,
        true_ranks=list(range(1, levels + 1)),
        manipulation=label,
    )


def resources_for_context(
    corpus: Corpus,
    context_id: str,
    lexicon: dict[str, list[str]] | None = None,
) -> ManipulationResources:
    """Assemble the pools a context's manipulations draw from.

    Distractors come from the corpus pool when present, otherwise from the
    other contexts (different intents preferred); texts occurring in the
    context's own bag are always excluded. The carrier pool collects every
    annotated carrier phrase per intent corpus-wide; the attribute source
    maps each sentence of the bag to the attributes seen in its context.
    """
    bag = corpus.contexts[context_id]
    bag_raws = {s.raw for s in bag.items}
    bag_intents = {s.intent for s in bag.items if s.intent is not None}

    if corpus.distractors:
        candidates = list(corpus.distractors)
    else:
        candidates = [
            s
            for cid, other in corpus.contexts.items()
            if cid != context_id
            for s in other.distinct()
        ]
    pool = []
    for s in candidates:
        if s.raw in bag_raws:
            continue
        if bag_intents and s.intent is not None and s.intent in bag_intents:
            continue
        pool.append(s)

    carrier_pool: dict[str, set] = {}
    vocab: set[str] = set()
    for other in corpus.contexts.values():
        for s in other.distinct():
            vocab.update(s.tokens)
            if s.intent is not None and s.carrier_span is not None:
                c0, c1 = s.carrier_span
                carrier_pool.setdefault(s.intent, set()).add(" ".join(s.tokens[c0:c1]))

    context_attributes = sorted({a for s in bag.items for a in s.attributes})
    attribute_source = {s.id: context_attributes for s in bag.distinct()}

    return ManipulationResources(
        distractors=tuple(sorted(set(pool), key=lambda s: s.sort_key())),
        carrier_pool={i: sorted(p) for i, p in carrier_pool.items()},
        attribute_source=attribute_source,
        lexicon=lexicon,
        vocab=vocab,
    )
