from __future__ import annotations

import random
from pathlib import Path

import pytest

from nerlab.conll_io import Dataset, ParseOptions, Sentence, Tag, TagSchemeConfig, Token, read_conll
from nerlab.spans import Span

FIXTURES = Path(__file__).parent / "fixtures"

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def random_spans(rng: random.Random, length: int, types, sentence_index: int = 0, density: float = 0.35) -> list[Span]:
    """Non-overlapping random spans over a sentence of ``length`` tokens (test-side generator)."""
    spans = []
    i = 0
    while i < length:
        if rng.random() < density:
            end = min(length, i + rng.randint(1, 3))
            spans.append(Span(sentence_index, i, end, rng.choice(types)))
            i = end
        else:
            i += 1
    return spans


def tags_from_spans(length: int, spans) -> list[Tag]:
    tags = [Tag("O")] * length
    for sp in spans:
        tags[sp.start] = Tag("B", sp.entity_type)
        for j in range(sp.start + 1, sp.end):
            tags[j] = Tag("I", sp.entity_type)
    return tags


WORDS = ["Nairobi", "the", "of", "Kampala", "ሰላም", "Ọjọ́", "2021", "—", "#", "ACME", "said", "x"]


def random_dataset(
    rng: random.Random,
    n_sentences: int | None = None,
    scheme: TagSchemeConfig | None = None,
    max_len: int = 12,
    density: float | None = None,
) -> tuple[Dataset, list[Span]]:
    scheme = scheme or TagSchemeConfig()
    n = n_sentences if n_sentences is not None else rng.randint(1, 30)
    sentences, all_spans = [], []
    dens = rng.uniform(0.05, 0.6) if density is None else density
    for s in range(n):
        length = rng.randint(1, max_len)
        spans = random_spans(rng, length, scheme.entity_types, s, dens)
        words = [rng.choice(WORDS) + str(rng.randint(0, 9)) * rng.randint(0, 1) for _ in range(length)]
        sentences.append(Sentence(tuple(Token(w, t) for w, t in zip(words, tags_from_spans(length, spans)))))
        all_spans.extend(spans)
    return Dataset(tuple(sentences), scheme, "random"), all_spans


@pytest.fixture
def ten_sentences() -> Dataset:
    return read_conll(FIXTURES / "ten_sentences.conll", options=ParseOptions(drop_docstart=True))
