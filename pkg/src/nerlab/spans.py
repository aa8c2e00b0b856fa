"""Conversion between token-level BIO tags and entity spans."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

from .conll_io import OUTSIDE, BioPolicy, Dataset, Sentence, Tag, Token, begin, inside
from .errors import InvalidBio, OverlappingSpans, SpanOutOfRange


class Span(NamedTuple):
    """Entity occupying tokens ``[start, end)`` of sentence ``sentence_index``."""

    sentence_index: int
    start: int
    end: int
    entity_type: str


@dataclass(frozen=True)
class SpanIndex:
    spans: tuple[Span, ...]
    # per_sentence[i]:per_sentence[i + 1] slices the spans of sentence i.
    per_sentence: tuple[int, ...]

    @classmethod
    def from_spans(cls, spans: Iterable[Span], n_sentences: int) -> "SpanIndex":
        ordered = sorted(spans)
        offsets = [0] * (n_sentences + 1)
        for sp in ordered:
            if not 0 <= sp.sentence_index < n_sentences:
                raise SpanOutOfRange(f"span {sp} refers to a missing sentence", span=list(sp))
            offsets[sp.sentence_index + 1] += 1
        for i in range(n_sentences):
            offsets[i + 1] += offsets[i]
        return cls(tuple(ordered), tuple(offsets))

    def __len__(self) -> int:
        return len(self.spans)

    def __iter__(self):
        return iter(self.spans)

    @property
    def n_sentences(self) -> int:
        return len(self.per_sentence) - 1

    def for_sentence(self, i: int) -> tuple[Span, ...]:
        return self.spans[self.per_sentence[i] : self.per_sentence[i + 1]]


def tags_to_spans(tags: Sequence[Tag], sentence_index: int = 0, permissive: bool = False) -> list[Span]:
    """Maximal ``B-X I-X*`` runs; an orphan I-X starts a span only when ``permissive``."""
    out: list[Span] = []
    start = -1
    etype: str | None = None
    for i, tag in enumerate(tags):
        if tag.kind == "I" and etype == tag.entity_type:
            continue
        if start >= 0:
            out.append(Span(sentence_index, start, i, etype))  # type: ignore[arg-type]
            start, etype = -1, None
        if tag.kind == "B":
            start, etype = i, tag.entity_type
        elif tag.kind == "I":
            if not permissive:
                raise InvalidBio(
                    f"sentence {sentence_index}, token {i}: orphan {tag}",
                    sentence=sentence_index,
                    token=i,
                )
            start, etype = i, tag.entity_type
    if start >= 0:
        out.append(Span(sentence_index, start, len(tags), etype))  # type: ignore[arg-type]
    return out


def extract_spans(d: Dataset) -> SpanIndex:
    permissive = d.scheme.bio_policy is BioPolicy.PERMISSIVE
    spans: list[Span] = []
    offsets = [0]
    for i, sentence in enumerate(d.sentences):
        spans.extend(tags_to_spans(sentence.tags, i, permissive))
        offsets.append(len(spans))
    return SpanIndex(tuple(spans), tuple(offsets))


def spans_to_tags(length: int, spans: Iterable[Span]) -> list[Tag]:
    tags = [OUTSIDE] * length
    last_end = 0
    for sp in sorted(spans, key=lambda s: (s.start, s.end)):
        if not 0 <= sp.start < sp.end <= length:
            raise SpanOutOfRange(f"span {tuple(sp)} does not fit a sentence of {length} tokens", span=list(sp))
        if sp.start < last_end:
            raise OverlappingSpans(f"span {tuple(sp)} overlaps a preceding span", span=list(sp))
        tags[sp.start] = begin(sp.entity_type)
        for j in range(sp.start + 1, sp.end):
            tags[j] = inside(sp.entity_type)
        last_end = sp.end
    return tags


def apply_spans(d_shape: Dataset, spans: SpanIndex | Iterable[Span], current: SpanIndex | None = None) -> Dataset:
    """Rebuild every tag of ``d_shape`` from ``spans``; tokens are reused untouched.

    ``current``, when given, must be ``extract_spans(d_shape)``; sentences whose
    spans are unchanged are then shared with the input instead of rebuilt.
    """
    n = len(d_shape.sentences)
    index = spans if isinstance(spans, SpanIndex) else SpanIndex.from_spans(spans, n)
    if index.n_sentences != n:
        if index.n_sentences > n and any(index.for_sentence(i) for i in range(n, index.n_sentences)):
            raise SpanOutOfRange("span index refers to sentences beyond the dataset")
    sentences = []
    for i, sentence in enumerate(d_shape.sentences):
        own = index.for_sentence(i) if i < index.n_sentences else ()
        if current is not None and own == current.for_sentence(i):
            sentences.append(sentence)
            continue
        if not own and all(t.tag.kind == "O" for t in sentence.tokens):
            sentences.append(sentence)
            continue
        tags = spans_to_tags(len(sentence), own)
        sentences.append(Sentence(tuple(Token(tok.text, tag) for tok, tag in zip(sentence.tokens, tags))))
    return Dataset(tuple(sentences), d_shape.scheme, d_shape.provenance)


def entity_count(d: Dataset) -> int:
    return len(extract_spans(d))
