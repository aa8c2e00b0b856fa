"""Corruption grid x seeds (x permutations) experiments and their aggregation.

Corruption seed material for a cell depends only on ``(strategy, seed,
permutation)``; the tagger is always trained with the run's seed. Cells can
therefore run in any order or in parallel and still produce identical tables.
Within one seed and permutation, the selections at different levels are
nested (the same shuffle truncated to different lengths).
"""
from __future__ import annotations

import csv
import io
import logging
import math
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Iterable, Sequence

from .conll_io import Dataset
from .corruption import (
    CorruptionSpec,
    Strategy,
    compose_with_record,
    corrupt_with_record,
    stage_seeds,
)
from .errors import InvalidGrid, NerLabError, ZeroBaseline
from .rng import SplitMix64, splitmix64
from .scoring import normalize, score
from .tagger import TrainConfig, predict, train

log = logging.getLogger(__name__)

DEFAULT_LEVELS = (1.0, 0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2, 0.1)
DEFAULT_SEEDS = (0, 1, 2)
COMBINED = "combined"

CSV_COLUMNS = (
    "strategy",
    "sentence_keep",
    "label_keep",
    "swap_fraction",
    "seed",
    "permutation",
    "raw_f1",
    "baseline_f1",
    "normalized_f1",
    "spans_total",
    "spans_affected",
    "train_sentences",
    "error",
)


@dataclass(frozen=True)
class ExperimentGrid:
    strategies: tuple[Strategy, ...] = tuple(Strategy)
    # Quality axis: keep fraction for capping, 1 - corrupt fraction for swapping.
    levels: tuple[float, ...] = DEFAULT_LEVELS
    seeds: tuple[int, ...] = DEFAULT_SEEDS
    permutations: int = 3
    combined: tuple[tuple[float, float], ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "strategies", tuple(Strategy.parse(str(getattr(s, "value", s))) for s in self.strategies))
        object.__setattr__(self, "levels", tuple(float(x) for x in self.levels))
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        object.__setattr__(self, "combined", tuple((float(a), float(b)) for a, b in self.combined))
        if not self.seeds:
            raise InvalidGrid("at least one seed is required")
        if any(not 0.0 <= x <= 1.0 for x in self.levels):
            raise InvalidGrid("levels must lie in [0, 1]", levels=list(self.levels))
        if self.strategies and 1.0 not in self.levels:
            raise InvalidGrid("levels must include 1.0 (the uncorrupted baseline)")
        if self.permutations < 1:
            raise InvalidGrid("permutations must be >= 1")
        if self.combined:
            if any(not (0.0 <= a <= 1.0 and 0.0 <= b <= 1.0) for a, b in self.combined):
                raise InvalidGrid("combined pairs must lie in [0, 1]^2")
            if (1.0, 1.0) not in self.combined:
                raise InvalidGrid("combined pairs must include (1.0, 1.0)")


@dataclass(frozen=True)
class Cell:
    strategy: str
    sentence_keep: float
    label_keep: float
    swap_fraction: float
    seed: int
    permutation: int

    @property
    def sort_key(self):
        order = [s.value for s in Strategy] + [COMBINED]
        return (order.index(self.strategy), -self.sentence_keep, -self.label_keep, self.swap_fraction,
                self.seed, self.permutation)


@dataclass(frozen=True)
class ResultRow:
    strategy: str
    sentence_keep: float
    label_keep: float
    swap_fraction: float
    seed: int
    permutation: int
    raw_f1: float | None
    baseline_f1: float | None
    normalized_f1: float | None
    spans_total: int | None
    spans_affected: int | None
    train_sentences: int | None
    error: str = ""

    @property
    def quality(self) -> float:
        """Position on the shared quality axis of the single-strategy curves."""
        if self.strategy == Strategy.CAP_SENTENCES.value:
            return self.sentence_keep
        if self.strategy == Strategy.CAP_LABELS.value:
            return self.label_keep
        if self.strategy == Strategy.SWAP_LABELS.value:
            return swap_to_quality(self.swap_fraction)
        return math.nan


@dataclass
class ExperimentResult:
    rows: list[ResultRow] = field(default_factory=list)

    def to_csv(self) -> str:
        return rows_to_csv(self.rows)

    def write_csv(self, path: str | Path) -> None:
        Path(path).write_text(self.to_csv(), encoding="utf-8", newline="")

    @classmethod
    def read_csv(cls, path: str | Path) -> "ExperimentResult":
        return cls(parse_results_csv(Path(path).read_text(encoding="utf-8")))


def quality_to_swap(q: float) -> float:
    return round(1.0 - q, 12)


def swap_to_quality(f: float) -> float:
    return round(1.0 - f, 12)


def cell_root_seed(seed: int, permutation: int) -> int:
    """Root seed of one (seed, permutation) replicate: the (permutation+1)-th SplitMix64 output."""
    sm = SplitMix64(seed)
    for _ in range(permutation):
        sm.next()
    return sm.next()


def strategy_seed(strategy: Strategy, root: int) -> int:
    # Sentence and label stages reuse the composed corruption's stage seeds, so
    # a combined (s, 1.0) or (1.0, l) cell equals the matching single-strategy cell.
    s1, s2 = stage_seeds(root)
    if strategy is Strategy.CAP_SENTENCES:
        return s1
    if strategy is Strategy.CAP_LABELS:
        return s2
    return splitmix64(root, 3)[2]


def grid_cells(grid: ExperimentGrid) -> list[Cell]:
    cells: list[Cell] = []
    for strategy in grid.strategies:
        n_perm = grid.permutations if strategy is Strategy.CAP_SENTENCES else 1
        for level in grid.levels:
            for seed in grid.seeds:
                for perm in range(n_perm):
                    if strategy is Strategy.CAP_SENTENCES:
                        cells.append(Cell(strategy.value, level, 1.0, 0.0, seed, perm))
                    elif strategy is Strategy.CAP_LABELS:
                        cells.append(Cell(strategy.value, 1.0, level, 0.0, seed, perm))
                    else:
                        cells.append(Cell(strategy.value, 1.0, 1.0, quality_to_swap(level), seed, perm))
    for s_keep, l_keep in grid.combined:
        for seed in grid.seeds:
            cells.append(Cell(COMBINED, s_keep, l_keep, 0.0, seed, 0))
    return sorted(set(cells), key=lambda c: c.sort_key)


def corrupt_cell(cell: Cell, train_set: Dataset):
    root = cell_root_seed(cell.seed, cell.permutation)
    if cell.strategy == COMBINED:
        return compose_with_record(train_set, cell.sentence_keep, cell.label_keep, root)
    strategy = Strategy(cell.strategy)
    fraction = {
        Strategy.CAP_SENTENCES: cell.sentence_keep,
        Strategy.CAP_LABELS: cell.label_keep,
        Strategy.SWAP_LABELS: cell.swap_fraction,
    }[strategy]
    return corrupt_with_record(train_set, CorruptionSpec(strategy, fraction, strategy_seed(strategy, root)))


@dataclass(frozen=True)
class _Outcome:
    raw_f1: float | None
    spans_total: int | None
    spans_affected: int | None
    train_sentences: int | None
    error: str = ""


def _evaluate(train_set: Dataset, test_set: Dataset, cfg: TrainConfig) -> float:
    model = train(train_set, cfg)
    return score(test_set, predict(model, test_set)).micro.f1


def _run_cell(cell: Cell, train_set: Dataset, test_set: Dataset, cfg: TrainConfig, baseline_f1: float | None) -> _Outcome:
    try:
        corrupted, record = corrupt_cell(cell, train_set)
    except NerLabError as exc:
        return _Outcome(None, None, None, None, exc.code)
    n_train = len(corrupted.sentences)
    try:
        if corrupted is train_set and baseline_f1 is not None:
            raw = baseline_f1
        else:
            raw = _evaluate(corrupted, test_set, replace(cfg, seed=cell.seed))
    except NerLabError as exc:
        return _Outcome(None, record.spans_total, record.spans_affected, n_train, exc.code)
    return _Outcome(raw, record.spans_total, record.spans_affected, n_train)


# Worker-process state for parallel execution.
_WORKER: dict = {}


def _init_worker(train_set: Dataset, test_set: Dataset, cfg: TrainConfig, baselines: dict[int, float]) -> None:
    _WORKER.update(train=train_set, test=test_set, cfg=cfg, baselines=baselines)


def _worker_cell(cell: Cell) -> _Outcome:
    w = _WORKER
    return _run_cell(cell, w["train"], w["test"], w["cfg"], w["baselines"].get(cell.seed))


def _run_cells(cells: Sequence[Cell], train_set: Dataset, test_set: Dataset, cfg: TrainConfig, jobs: int) -> ExperimentResult:
    seeds = sorted({c.seed for c in cells})
    baselines = {}
    for seed in seeds:
        log.info("baseline: seed %d", seed)
        baselines[seed] = _evaluate(train_set, test_set, replace(cfg, seed=seed))

    if jobs > 1:
        with ProcessPoolExecutor(jobs, initializer=_init_worker, initargs=(train_set, test_set, cfg, baselines)) as pool:
            outcomes = list(pool.map(_worker_cell, cells, chunksize=1))
    else:
        outcomes = []
        for n, cell in enumerate(cells, start=1):
            log.info("cell %d/%d: %s", n, len(cells), cell)
            outcomes.append(_run_cell(cell, train_set, test_set, cfg, baselines[cell.seed]))

    rows = []
    for cell, out in zip(cells, outcomes):
        base = baselines[cell.seed]
        normalized = None
        error = out.error
        if out.raw_f1 is not None:
            try:
                normalized = normalize(out.raw_f1, base).normalized
            except ZeroBaseline as exc:
                error = exc.code
        rows.append(
            ResultRow(
                cell.strategy, cell.sentence_keep, cell.label_keep, cell.swap_fraction, cell.seed, cell.permutation,
                out.raw_f1, base, normalized, out.spans_total, out.spans_affected, out.train_sentences, error,
            )
        )
    return ExperimentResult(rows)


def run_grid(
    train_set: Dataset,
    test_set: Dataset,
    grid: ExperimentGrid | None = None,
    cfg: TrainConfig | None = None,
    jobs: int = 1,
) -> ExperimentResult:
    """Train and score the tagger on every corrupted training set of the grid.

    The test set is never corrupted. Each row is normalised by the F1 of the
    same seed trained on the uncorrupted training set.
    """
    grid = grid or ExperimentGrid()
    cfg = cfg or TrainConfig()
    return _run_cells(grid_cells(grid), train_set, test_set, cfg, jobs)


def run_combined_matrix(
    train_set: Dataset,
    test_set: Dataset,
    pairs: Iterable[tuple[float, float]],
    seeds: Sequence[int] = DEFAULT_SEEDS,
    cfg: TrainConfig | None = None,
    jobs: int = 1,
) -> ExperimentResult:
    grid = ExperimentGrid(strategies=(), levels=(1.0,), seeds=tuple(seeds), combined=tuple(pairs))
    return run_grid(train_set, test_set, grid, cfg, jobs)


# -- aggregation -------------------------------------------------------------

@dataclass(frozen=True)
class SummaryRow:
    strategy: str
    level: float
    sentence_keep: float
    label_keep: float
    swap_fraction: float
    mean_normalized_f1: float | None
    sample_stddev: float | None
    n: int


def _group_key(row: ResultRow):
    return (row.strategy, row.sentence_keep, row.label_keep, row.swap_fraction)


def aggregate(result: ExperimentResult | Iterable[ResultRow]) -> list[SummaryRow]:
    """Mean and sample standard deviation of normalised F1 per grid point.

    Seeds and permutations are pooled; rows without a normalised value are
    left out. A group of one reports a standard deviation of 0 with ``n == 1``.
    """
    rows = result.rows if isinstance(result, ExperimentResult) else list(result)
    groups: dict[tuple, list[ResultRow]] = {}
    for row in rows:
        groups.setdefault(_group_key(row), []).append(row)
    out = []
    for key, members in groups.items():
        values = [r.normalized_f1 for r in members if r.normalized_f1 is not None]
        mean = statistics.fmean(values) if values else None
        sd = statistics.stdev(values) if len(values) > 1 else (0.0 if values else None)
        strategy, s_keep, l_keep, swap = key
        out.append(SummaryRow(strategy, members[0].quality, s_keep, l_keep, swap, mean, sd, len(values)))
    out.sort(key=lambda r: Cell(r.strategy, r.sentence_keep, r.label_keep, r.swap_fraction, 0, 0).sort_key)
    return out


def mean_normalized(result: ExperimentResult, **where) -> float:
    """Mean normalised F1 over the rows matching every ``column=value`` filter."""
    values = [
        r.normalized_f1
        for r in result.rows
        if r.normalized_f1 is not None and all(getattr(r, k) == v for k, v in where.items())
    ]
    if not values:
        raise KeyError(f"no rows match {where}")
    return statistics.fmean(values)


# -- CSV ---------------------------------------------------------------------

def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return "nan" if math.isnan(value) else repr(value)
    return str(value)


def rows_to_csv(rows: Iterable, columns: Sequence[str] | None = None) -> str:
    rows = list(rows)
    if columns is None:
        columns = [f.name for f in fields(rows[0])] if rows else list(CSV_COLUMNS)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(getattr(row, c)) for c in columns])
    return buf.getvalue()


def parse_results_csv(text: str) -> list[ResultRow]:
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None or tuple(reader.fieldnames) != CSV_COLUMNS:
        raise InvalidGrid("results file does not have the expected columns", columns=reader.fieldnames)

    def opt(cast, v):
        return cast(v) if v != "" else None

    rows = []
    for rec in reader:
        rows.append(
            ResultRow(
                rec["strategy"], float(rec["sentence_keep"]), float(rec["label_keep"]), float(rec["swap_fraction"]),
                int(rec["seed"]), int(rec["permutation"]), opt(float, rec["raw_f1"]), opt(float, rec["baseline_f1"]),
                opt(float, rec["normalized_f1"]), opt(int, rec["spans_total"]), opt(int, rec["spans_affected"]),
                opt(int, rec["train_sentences"]), rec["error"],
            )
        )
    return rows
