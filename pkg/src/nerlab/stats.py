"""Corpus statistics in the layout of a standard NER data table."""
from __future__ import annotations

from collections import Counter
from dataclasses import asdict, dataclass
from fractions import Fraction
from math import floor
from typing import Any

from .conll_io import Dataset
from .errors import EmptyDataset
from .spans import extract_spans


def round_half_up(value: Fraction | float | int, digits: int = 1) -> float:
    """Round-half-up on the exact value; ``Fraction`` inputs avoid binary-float ties."""
    scale = 10**digits
    q = Fraction(value) * scale
    return floor(q + Fraction(1, 2)) / scale


@dataclass(frozen=True)
class StatsReport:
    sentences: int
    tokens: int
    entities: int
    entities_per_sentence: float
    # entities / tokens, matching the published "% Entities in Tokens" column.
    entity_density: float
    per_type_counts: dict[str, int]
    # Fraction of tokens covered by some entity span (the literal reading of "density").
    entity_token_coverage: float
    entity_tokens: int

    @property
    def entities_per_sentence_display(self) -> float:
        return round_half_up(Fraction(self.entities, self.sentences))

    @property
    def entity_density_percent_display(self) -> float:
        return round_half_up(Fraction(100 * self.entities, self.tokens))

    def table_row(self) -> tuple[int, int, int, float, float]:
        return (
            self.sentences,
            self.tokens,
            self.entities,
            self.entities_per_sentence_display,
            self.entity_density_percent_display,
        )

    def to_json(self) -> dict[str, Any]:
        return asdict(self)

    def render_table(self, name: str = "corpus") -> str:
        header = ("Corpus", "# Sentences", "# Tokens", "# Entities", "Entities per Sentence", "% Entities in Tokens")
        s, t, e, eps, dens = self.table_row()
        row = (name, f"{s:,}", f"{t:,}", f"{e:,}", f"{eps:.1f}", f"{dens:.1f}")
        widths = [max(len(h), len(v)) for h, v in zip(header, row)]
        lines = [
            "  ".join(h.ljust(w) if i == 0 else h.rjust(w) for i, (h, w) in enumerate(zip(header, widths))),
            "  ".join(v.ljust(w) if i == 0 else v.rjust(w) for i, (v, w) in enumerate(zip(row, widths))),
        ]
        return "\n".join(lines) + "\n"


def compute_stats(d: Dataset) -> StatsReport:
    if not d.sentences:
        raise EmptyDataset("cannot compute statistics of an empty dataset")
    spans = extract_spans(d).spans
    tokens = d.token_count
    per_type = Counter({t: 0 for t in d.scheme.entity_types})
    per_type.update(sp.entity_type for sp in spans)
    covered = sum(sp.end - sp.start for sp in spans)
    n = len(d.sentences)
    return StatsReport(
        sentences=n,
        tokens=tokens,
        entities=len(spans),
        entities_per_sentence=len(spans) / n,
        entity_density=len(spans) / tokens,
        per_type_counts=dict(per_type),
        entity_token_coverage=covered / tokens,
        entity_tokens=covered,
    )
