"""Seeded, exact-count corruption of training corpora.

Every strategy is parameterised by a single global fraction and a seed. Counts
use ``floor(fraction * n + 0.5)``; selection is a PCG32 Fisher-Yates shuffle of
document-ordered indices, taking the first ``k``. Entity spans are atomic: they
are kept, erased or relabelled whole, never truncated.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Any

from .conll_io import Dataset
from .errors import DegenerateScheme, EmptyDataset, EmptyOriginalWithNonemptyReduced
from .rng import MASK64, Pcg32, splitmix64
from .spans import SpanIndex, apply_spans, extract_spans

SWAP_DISTRIBUTION = "uniform-over-other-types"


class Strategy(str, enum.Enum):
    CAP_SENTENCES = "cap_sentences"
    CAP_LABELS = "cap_labels"
    SWAP_LABELS = "swap_labels"

    @classmethod
    def parse(cls, name: str) -> "Strategy":
        return cls(name.replace("-", "_"))

    @property
    def cli_name(self) -> str:
        return self.value.replace("_", "-")


@dataclass(frozen=True)
class CorruptionSpec:
    """``fraction`` is a keep fraction for the capping strategies and a corrupt fraction for swapping."""

    strategy: Strategy
    fraction: float
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "strategy", Strategy.parse(str(getattr(self.strategy, "value", self.strategy))))
        _check_fraction(self.fraction)
        if not 0 <= self.seed <= MASK64:
            raise ValueError(f"seed must fit in 64 unsigned bits, got {self.seed}")

    def apply(self, d: Dataset) -> Dataset:
        fn = {
            Strategy.CAP_SENTENCES: cap_sentences,
            Strategy.CAP_LABELS: cap_labels,
            Strategy.SWAP_LABELS: swap_labels,
        }[self.strategy]
        return fn(d, self.fraction, self.seed)


@dataclass(frozen=True)
class CorruptionRecord:
    """Bookkeeping for one corruption; serialised as the CLI's JSON sidecar."""

    strategy: str
    fractions: dict[str, float]
    seed: int
    spans_total: int
    spans_affected: int
    spans_original: int
    extra: dict[str, Any] = field(default_factory=dict)

    def to_json(self) -> dict[str, Any]:
        out: dict[str, Any] = {"strategy": self.strategy, **self.fractions, "seed": self.seed}
        out.update(
            spans_total=self.spans_total,
            spans_affected=self.spans_affected,
            spans_original=self.spans_original,
        )
        out.update(self.extra)
        return out


def _check_fraction(f: float) -> None:
    if not (isinstance(f, (int, float)) and 0.0 <= f <= 1.0) or math.isnan(f):
        raise ValueError(f"fraction must lie in [0, 1], got {f!r}")


def round_count(fraction: float, n: int) -> int:
    return math.floor(fraction * n + 0.5)


def sentences_kept(fraction: float, n_sentences: int) -> int:
    k = round_count(fraction, n_sentences)
    return max(1, k) if fraction > 0 else k


def cap_sentences(d: Dataset, keep_fraction: float, seed: int) -> Dataset:
    """Keep a seeded random subset of sentences, emitted in original order."""
    _check_fraction(keep_fraction)
    n = len(d.sentences)
    if n == 0:
        raise EmptyDataset("cannot cap sentences of an empty dataset")
    k = sentences_kept(keep_fraction, n)
    if k == n:
        return d
    order = Pcg32(seed).permutation(n)
    keep = sorted(order[:k])
    return d.with_sentences(d.sentences[i] for i in keep)


def _spans_or_empty_error(d: Dataset, what: str) -> SpanIndex:
    if not d.sentences:
        raise EmptyDataset(f"cannot {what} an empty dataset")
    return extract_spans(d)


def cap_labels(d: Dataset, keep_fraction: float, seed: int) -> Dataset:
    """Keep exactly ``floor(f*E + 0.5)`` entity spans across the whole corpus; the rest become O."""
    _check_fraction(keep_fraction)
    index = _spans_or_empty_error(d, "cap labels of")
    spans = index.spans
    e = len(spans)
    k = round_count(keep_fraction, e)
    if k == e:
        return d
    order = Pcg32(seed).permutation(e)
    kept = [spans[i] for i in sorted(order[:k])]
    return apply_spans(d, SpanIndex.from_spans(kept, len(d.sentences)), current=index)


def swap_labels(d: Dataset, corrupt_fraction: float, seed: int) -> Dataset:
    """Relabel exactly ``floor(f*E + 0.5)`` spans with a different type drawn uniformly.

    Selected spans are relabelled in document order from the same generator
    that drew the selection.
    """
    _check_fraction(corrupt_fraction)
    types = d.scheme.entity_types
    if len(types) < 2:
        raise DegenerateScheme(f"label swapping needs at least 2 entity types, scheme has {list(types)}")
    index = _spans_or_empty_error(d, "swap labels of")
    spans = list(index.spans)
    k = round_count(corrupt_fraction, len(spans))
    if k == 0:
        return d
    rng = Pcg32(seed)
    order = rng.permutation(len(spans))
    for i in sorted(order[:k]):
        sp = spans[i]
        others = [t for t in types if t != sp.entity_type]
        spans[i] = sp._replace(entity_type=others[rng.below(len(others))])
    return apply_spans(d, SpanIndex(tuple(spans), index.per_sentence), current=index)


def stage_seeds(seed: int) -> tuple[int, int]:
    """Seeds of the sentence stage and the label stage of a composed corruption."""
    s1, s2 = splitmix64(seed, 2)
    return s1, s2


def compose_quantity_quality(d: Dataset, sentence_keep: float, label_keep: float, seed: int) -> Dataset:
    """Drop sentences first, then erase labels within the surviving sentences."""
    _check_fraction(sentence_keep)
    _check_fraction(label_keep)
    s1, s2 = stage_seeds(seed)
    reduced = cap_sentences(d, sentence_keep, s1)
    if not reduced.sentences:
        return reduced
    return cap_labels(reduced, label_keep, s2)


def label_retention(original: Dataset, reduced: Dataset) -> float:
    """Fraction of the original entity spans still present in ``reduced`` (by count)."""
    e0 = len(extract_spans(original))
    e1 = len(extract_spans(reduced))
    if e0 == 0:
        if e1 == 0:
            return 0.0
        raise EmptyOriginalWithNonemptyReduced(
            f"original has no entities but reduced has {e1}", reduced_entities=e1
        )
    return e1 / e0


def corrupt_with_record(d: Dataset, spec: CorruptionSpec) -> tuple[Dataset, CorruptionRecord]:
    original = extract_spans(d).spans
    out = spec.apply(d)
    after = extract_spans(out).spans
    if spec.strategy is Strategy.SWAP_LABELS:
        affected = sum(a.entity_type != b.entity_type for a, b in zip(original, after))
        fracs = {"swap_fraction": spec.fraction}
        extra = {"swap_distribution": SWAP_DISTRIBUTION}
    else:
        affected = len(original) - len(after)
        key = "sentence_keep" if spec.strategy is Strategy.CAP_SENTENCES else "label_keep"
        fracs = {key: spec.fraction}
        extra = {"sentences_total": len(out.sentences)} if spec.strategy is Strategy.CAP_SENTENCES else {}
    record = CorruptionRecord(spec.strategy.value, fracs, spec.seed, len(after), affected, len(original), extra)
    return out, record


def compose_with_record(
    d: Dataset, sentence_keep: float, label_keep: float, seed: int
) -> tuple[Dataset, CorruptionRecord]:
    e0 = len(extract_spans(d))
    out = compose_quantity_quality(d, sentence_keep, label_keep, seed)
    e1 = len(extract_spans(out))
    record = CorruptionRecord(
        "combined",
        {"sentence_keep": sentence_keep, "label_keep": label_keep},
        seed,
        e1,
        e0 - e1,
        e0,
        {"sentences_total": len(out.sentences)},
    )
    return out, record
