"""Deterministic synthetic corpora with known entity spans.

The generator doubles as an oracle: ``generate_corpus`` returns the span list
it used to build every sentence, so extraction and tagging quality can be
checked against ground truth.
"""
from __future__ import annotations

from dataclasses import dataclass

from .conll_io import Dataset, Sentence, TagSchemeConfig, Token
from .rng import Pcg32
from .spans import Span, spans_to_tags

_ONSETS = ("b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "w", "z", "ch", "sh", "ny")
_VOWELS = ("a", "e", "i", "o", "u")
_TYPE_SUFFIX = {"PER": "o", "LOC": "ia", "ORG": "", "DATE": "", "MISC": "ist"}
_MONTHS = ("January", "February", "March", "April", "May", "June", "July",
           "August", "September", "October", "November", "December")


def _syllables(rng: Pcg32, n: int) -> str:
    return "".join(_ONSETS[rng.below(len(_ONSETS))] + _VOWELS[rng.below(len(_VOWELS))] for _ in range(n))


def _unique(rng: Pcg32, size: int, make, taken: set[str]) -> tuple[str, ...]:
    out: list[str] = []
    while len(out) < size:
        w = make()
        if w not in taken:
            taken.add(w)
            out.append(w)
    return tuple(out)


@dataclass(frozen=True)
class Vocabulary:
    outside: tuple[str, ...]
    by_type: dict[str, tuple[str, ...]]


def build_vocabulary(scheme: TagSchemeConfig, seed: int = 0, outside_size: int = 300, type_size: int = 80) -> Vocabulary:
    """Disjoint vocabularies: lowercase filler words plus one word list per entity type.

    Each type also carries a surface cue (capitalised ``-o`` names, ``-ia``
    places, upper-case organisations, numeric or month dates) so that unseen
    words of a type remain recognisable from shape and suffix features.
    """
    rng = Pcg32(seed)
    taken: set[str] = set()
    outside = _unique(rng, outside_size, lambda: _syllables(rng, 1 + rng.below(3)), taken)
    by_type: dict[str, tuple[str, ...]] = {}
    for etype in scheme.entity_types:
        if etype == "DATE":
            words = list(_MONTHS) + [str(1 + i) for i in range(31)] + [str(1950 + i) for i in range(75)]
            words = [w for w in words if w not in taken]
            taken.update(words)
            by_type[etype] = tuple(words[: max(type_size, len(_MONTHS))])
        elif etype == "ORG":
            by_type[etype] = _unique(rng, type_size, lambda: _syllables(rng, 2).upper(), taken)
        else:
            suffix = _TYPE_SUFFIX.get(etype, etype.lower()[:2])
            by_type[etype] = _unique(
                rng, type_size, lambda: (_syllables(rng, 1 + rng.below(2)) + suffix).capitalize(), taken
            )
    return Vocabulary(outside, by_type)


@dataclass(frozen=True)
class SyntheticCorpus:
    dataset: Dataset
    spans: tuple[Span, ...]


def generate_corpus(
    n_sentences: int,
    seed: int = 0,
    scheme: TagSchemeConfig | None = None,
    *,
    vocab_seed: int = 0,
    min_len: int = 5,
    max_len: int = 12,
    max_entities: int = 4,
    max_span_len: int = 3,
) -> SyntheticCorpus:
    """Sentences of filler words with 0..max_entities entities placed at uniform positions.

    Corpora drawn with the same ``vocab_seed`` but different ``seed`` share a
    vocabulary, which is what makes train/test pairs from one generator.
    """
    scheme = scheme or TagSchemeConfig()
    vocab = build_vocabulary(scheme, vocab_seed)
    types = scheme.entity_types
    rng = Pcg32(seed)
    sentences: list[Sentence] = []
    all_spans: list[Span] = []
    for s_i in range(n_sentences):
        n_filler = min_len + rng.below(max_len - min_len + 1)
        n_ent = rng.below(max_entities + 1)
        # Slot layout: entities interleaved with filler, each entity separated by >= 1 filler.
        slots = ["w"] * n_filler
        for _ in range(n_ent):
            slots.insert(rng.below(len(slots) + 1), "e")
        words: list[str] = []
        spans: list[Span] = []
        prev = ""
        for slot in slots:
            if slot == "e" and prev == "e":
                words.append(vocab.outside[rng.below(len(vocab.outside))])
            if slot == "e":
                etype = types[rng.below(len(types))]
                length = 1 + rng.below(max_span_len)
                pool = vocab.by_type[etype]
                start = len(words)
                words.extend(pool[rng.below(len(pool))] for _ in range(length))
                spans.append(Span(s_i, start, len(words), etype))
            else:
                words.append(vocab.outside[rng.below(len(vocab.outside))])
            prev = slot
        words.append(".")
        tags = spans_to_tags(len(words), spans)
        sentences.append(Sentence(tuple(Token(w, t) for w, t in zip(words, tags))))
        all_spans.extend(spans)
    dataset = Dataset(tuple(sentences), scheme, f"synthetic(n={n_sentences}, seed={seed}, vocab_seed={vocab_seed})")
    return SyntheticCorpus(dataset, tuple(all_spans))


def train_test_pair(n_train: int, n_test: int, seed: int = 0, scheme: TagSchemeConfig | None = None) -> tuple[Dataset, Dataset]:
    """Disjoint train and test draws from one generator (shared vocabulary)."""
    train = generate_corpus(n_train, seed=2 * seed + 1, scheme=scheme, vocab_seed=seed).dataset
    test = generate_corpus(n_test, seed=2 * seed + 2, scheme=scheme, vocab_seed=seed).dataset
    return train, test


def corpus_with_counts(
    sentences: int, tokens: int, entities: int, scheme: TagSchemeConfig | None = None, seed: int = 0
) -> Dataset:
    """A corpus with exactly the requested sentence, token and single-token-entity counts.

    Entities are dealt round-robin across sentences and tokens spread as evenly
    as possible; every sentence gets at least one filler token per entity.
    """
    scheme = scheme or TagSchemeConfig()
    if sentences < 1 or entities < 0 or tokens < sentences:
        raise ValueError("need sentences >= 1 and tokens >= sentences")
    per_sent_e = [entities // sentences + (1 if i < entities % sentences else 0) for i in range(sentences)]
    per_sent_t = [tokens // sentences + (1 if i < tokens % sentences else 0) for i in range(sentences)]
    if any(e > t for e, t in zip(per_sent_e, per_sent_t)):
        raise ValueError("too many entities for the token budget")
    vocab = build_vocabulary(scheme, seed)
    rng = Pcg32(seed)
    types = scheme.entity_types
    out: list[Sentence] = []
    for s_i in range(sentences):
        n_tok, n_ent = per_sent_t[s_i], per_sent_e[s_i]
        positions = sorted(rng.permutation(n_tok)[:n_ent])
        words, spans = [], []
        for pos in range(n_tok):
            words.append(vocab.outside[rng.below(len(vocab.outside))])
        for pos in positions:
            etype = types[rng.below(len(types))]
            pool = vocab.by_type[etype]
            words[pos] = pool[rng.below(len(pool))]
            spans.append(Span(s_i, pos, pos + 1, etype))
        tags = spans_to_tags(n_tok, spans)
        out.append(Sentence(tuple(Token(w, t) for w, t in zip(words, tags))))
    return Dataset(tuple(out), scheme, f"counts({sentences}, {tokens}, {entities})")
