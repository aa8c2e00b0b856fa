"""Exact-match entity-level precision/recall/F1 (conlleval semantics)."""
from __future__ import annotations

from collections import Counter
from dataclasses import asdict, dataclass
from typing import Any

from .conll_io import Dataset
from .errors import ShapeMismatch, ZeroBaseline
from .spans import extract_spans


@dataclass(frozen=True)
class PRF:
    tp: int
    pred_count: int
    gold_count: int
    precision: float
    recall: float
    f1: float

    @classmethod
    def from_counts(cls, tp: int, pred_count: int, gold_count: int) -> "PRF":
        p = tp / pred_count if pred_count else 0.0
        r = tp / gold_count if gold_count else 0.0
        f = 2 * p * r / (p + r) if p + r > 0 else 0.0
        return cls(tp, pred_count, gold_count, p, r, f)


@dataclass(frozen=True)
class ScoreReport:
    per_type: dict[str, PRF]
    micro: PRF

    def to_json(self) -> dict[str, Any]:
        return {"micro": asdict(self.micro), "per_type": {k: asdict(v) for k, v in self.per_type.items()}}


@dataclass(frozen=True)
class NormalizedScore:
    raw_f1: float
    baseline_f1: float
    normalized: float


def check_same_shape(gold: Dataset, pred: Dataset) -> None:
    if len(gold.sentences) != len(pred.sentences):
        raise ShapeMismatch(
            f"gold has {len(gold.sentences)} sentences, prediction has {len(pred.sentences)}",
            gold_sentences=len(gold.sentences),
            pred_sentences=len(pred.sentences),
        )
    for i, (g, p) in enumerate(zip(gold.sentences, pred.sentences)):
        if g.words != p.words:
            raise ShapeMismatch(f"sentence {i}: tokens differ between gold and prediction", sentence=i)


def score(gold: Dataset, pred: Dataset) -> ScoreReport:
    """Micro and per-type scores; a span counts only if sentence, boundaries and type all match."""
    check_same_shape(gold, pred)
    gold_spans = set(extract_spans(gold).spans)
    pred_spans = set(extract_spans(pred).spans)
    hits = gold_spans & pred_spans
    tp = Counter(sp.entity_type for sp in hits)
    n_gold = Counter(sp.entity_type for sp in gold_spans)
    n_pred = Counter(sp.entity_type for sp in pred_spans)
    types = list(gold.scheme.entity_types)
    types += sorted((set(n_gold) | set(n_pred)) - set(types))
    per_type = {t: PRF.from_counts(tp[t], n_pred[t], n_gold[t]) for t in types}
    micro = PRF.from_counts(len(hits), len(pred_spans), len(gold_spans))
    return ScoreReport(per_type, micro)


def normalize(raw: ScoreReport | float, baseline: ScoreReport | float) -> NormalizedScore:
    raw_f1 = raw.micro.f1 if isinstance(raw, ScoreReport) else float(raw)
    base_f1 = baseline.micro.f1 if isinstance(baseline, ScoreReport) else float(baseline)
    if not base_f1 > 0:
        raise ZeroBaseline("baseline F1 is zero; normalised F1 is undefined", baseline_f1=base_f1)
    return NormalizedScore(raw_f1, base_f1, raw_f1 / base_f1)
