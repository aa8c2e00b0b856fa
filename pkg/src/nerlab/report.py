"""Long-format CSV tables for the corruption-curve and quantity/quality plots."""
from __future__ import annotations

import statistics
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from .experiment import COMBINED, ExperimentResult, ResultRow, rows_to_csv


@dataclass(frozen=True)
class CurvePoint:
    strategy: str
    quality: float
    mean_normalized_f1: float
    sample_stddev: float
    n: int


@dataclass(frozen=True)
class LanguageCurvePoint:
    language: str
    strategy: str
    quality: float
    mean_normalized_f1: float
    sample_stddev: float
    n: int


@dataclass(frozen=True)
class MatrixCell:
    language: str
    sentence_keep: float
    label_keep: float
    mean_normalized_f1: float
    sample_stddev: float
    n: int


def _summ(values: list[float]) -> tuple[float, float, int]:
    sd = statistics.stdev(values) if len(values) > 1 else 0.0
    return statistics.fmean(values), sd, len(values)


def _valid(rows: Sequence[ResultRow]) -> list[ResultRow]:
    return [r for r in rows if r.normalized_f1 is not None]


def _curves(rows: Sequence[ResultRow]) -> dict[tuple[str, float], list[float]]:
    groups: dict[tuple[str, float], list[float]] = {}
    for r in _valid(rows):
        if r.strategy != COMBINED:
            groups.setdefault((r.strategy, r.quality), []).append(r.normalized_f1)
    return groups


def _ordered(keys):
    strategies = ["cap_sentences", "cap_labels", "swap_labels"]
    return sorted(keys, key=lambda k: (strategies.index(k[0]) if k[0] in strategies else 99, k[0], -k[1]))


def fig2_table(results: Mapping[str, ExperimentResult]) -> list[CurvePoint]:
    """Curves pooled over seeds, permutations and every supplied corpus."""
    pooled = [r for res in results.values() for r in res.rows]
    groups = _curves(pooled)
    return [CurvePoint(s, q, *_summ(groups[(s, q)])) for s, q in _ordered(groups)]


def fig3_table(results: Mapping[str, ExperimentResult]) -> list[LanguageCurvePoint]:
    out = []
    for language in sorted(results):
        groups = _curves(results[language].rows)
        out.extend(LanguageCurvePoint(language, s, q, *_summ(groups[(s, q)])) for s, q in _ordered(groups))
    return out


def fig4_table(results: Mapping[str, ExperimentResult]) -> list[MatrixCell]:
    out = []
    for language in sorted(results):
        groups: dict[tuple[float, float], list[float]] = {}
        for r in _valid(results[language].rows):
            if r.strategy == COMBINED:
                groups.setdefault((r.sentence_keep, r.label_keep), []).append(r.normalized_f1)
        for s, l in sorted(groups, key=lambda k: (-k[1], k[0])):
            out.append(MatrixCell(language, s, l, *_summ(groups[(s, l)])))
    return out


def write_reports(results: Mapping[str, ExperimentResult], out_dir: str | Path) -> dict[str, Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    tables = {
        "fig2.csv": (fig2_table(results), CurvePoint),
        "fig3_by_language.csv": (fig3_table(results), LanguageCurvePoint),
        "fig4_matrix.csv": (fig4_table(results), MatrixCell),
    }
    written = {}
    for name, (rows, kind) in tables.items():
        path = out_dir / name
        columns = list(kind.__dataclass_fields__)
        path.write_text(rows_to_csv(rows, columns), encoding="utf-8", newline="")
        written[name] = path
    return written
