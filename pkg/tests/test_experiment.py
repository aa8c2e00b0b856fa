import csv
import io
import math
import statistics

import pytest

from nerlab.corruption import Strategy, cap_labels, sentences_kept
from nerlab.errors import InvalidGrid
from nerlab.experiment import (
    CSV_COLUMNS,
    ExperimentGrid,
    ExperimentResult,
    ResultRow,
    aggregate,
    grid_cells,
    mean_normalized,
    parse_results_csv,
    run_combined_matrix,
    run_grid,
)
from nerlab.report import fig2_table, fig3_table, fig4_table, write_reports
from nerlab.spans import extract_spans
from nerlab.synthetic import train_test_pair
from nerlab.tagger import TrainConfig

CFG = TrainConfig(epochs=3)


@pytest.fixture(scope="module")
def corpora():
    return train_test_pair(120, 60, seed=4)


@pytest.fixture(scope="module")
def small_result(corpora):
    grid = ExperimentGrid(levels=(1.0, 0.5, 0.1), seeds=(0, 1), permutations=2, combined=((1.0, 1.0), (0.5, 1.0), (1.0, 0.5)))
    return run_grid(*corpora, grid, CFG)


def _row(result, **where):
    rows = [r for r in result.rows if all(getattr(r, k) == v for k, v in where.items())]
    assert rows, where
    return rows


@pytest.mark.parametrize(
    "kwargs",
    [
        {"seeds": ()},
        {"levels": (0.5,)},
        {"levels": (1.0, 1.5)},
        {"permutations": 0},
        {"combined": ((0.5, 0.5),)},
        {"combined": ((1.0, 1.0), (2.0, 0.5))},
    ],
)
def test_grid_validation(kwargs):
    with pytest.raises(InvalidGrid):
        ExperimentGrid(**kwargs)


def test_default_grid_shape():
    g = ExperimentGrid()
    assert g.levels == (1.0, 0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2, 0.1)
    assert g.seeds == (0, 1, 2) and g.permutations == 3
    cells = grid_cells(g)
    assert len(cells) == 10 * 3 * 3 + 10 * 3 + 10 * 3
    swaps = sorted({c.swap_fraction for c in cells if c.strategy == "swap_labels"})
    assert swaps == [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]


def test_csv_columns_exact(small_result):
    header = small_result.to_csv().splitlines()[0]
    assert tuple(header.split(",")) == CSV_COLUMNS


def test_baseline_rows_normalise_to_one(small_result):
    base = [r for r in small_result.rows if r.sentence_keep == r.label_keep == 1.0 and r.swap_fraction == 0.0]
    assert len(base) == 2 * (2 + 1 + 1 + 1)
    assert all(r.normalized_f1 == 1.0 and r.raw_f1 == r.baseline_f1 for r in base)


def test_rows_normalised_by_matching_seed(small_result):
    baselines = {r.seed: r.raw_f1 for r in small_result.rows if r.strategy == "cap_labels" and r.label_keep == 1.0}
    for r in small_result.rows:
        assert r.baseline_f1 == baselines[r.seed]
        assert r.normalized_f1 == r.raw_f1 / r.baseline_f1


def test_label_budget_bookkeeping(corpora, small_result):
    e = len(extract_spans(corpora[0]))
    s = len(corpora[0].sentences)
    for r in small_result.rows:
        if r.strategy == "cap_labels":
            assert r.spans_total == math.floor(r.label_keep * e + 0.5)
            assert r.spans_affected == e - r.spans_total
        elif r.strategy == "swap_labels":
            assert r.spans_total == e
            assert r.spans_affected == math.floor(r.swap_fraction * e + 0.5)
        elif r.strategy == "cap_sentences":
            assert r.train_sentences == sentences_kept(r.sentence_keep, s)
            assert r.spans_total + r.spans_affected == e


def test_zero_label_level_predicts_nothing(corpora):
    res = run_grid(*corpora, ExperimentGrid(strategies=("cap_labels",), levels=(1.0, 0.0), seeds=(0,)), CFG)
    (row,) = _row(res, label_keep=0.0)
    assert row.raw_f1 == 0.0 and row.normalized_f1 == 0.0 and row.spans_total == 0


def test_empty_training_set_recorded_as_error(corpora):
    res = run_grid(*corpora, ExperimentGrid(strategies=("cap_sentences",), levels=(1.0, 0.0), seeds=(0,), permutations=1), CFG)
    (row,) = _row(res, sentence_keep=0.0)
    assert row.error == "EmptyDataset" and row.raw_f1 is None and row.normalized_f1 is None


def test_zero_baseline_flagged_not_dropped(corpora):
    bare = cap_labels(corpora[0], 0.0, 0)
    res = run_grid(bare, corpora[1], ExperimentGrid(strategies=("cap_labels", "swap_labels"), levels=(1.0, 0.5), seeds=(0,)), CFG)
    assert len(res.rows) == 4
    assert all(r.error == "ZeroBaseline" and r.normalized_f1 is None and r.raw_f1 == 0.0 for r in res.rows)


def test_combined_matrix_marginals_match_single_strategy_cells(small_result):
    diffs = []
    for seed in (0, 1):
        (c_s,) = _row(small_result, strategy="combined", sentence_keep=0.5, label_keep=1.0, seed=seed)
        (g_s,) = _row(small_result, strategy="cap_sentences", sentence_keep=0.5, seed=seed, permutation=0)
        (c_l,) = _row(small_result, strategy="combined", sentence_keep=1.0, label_keep=0.5, seed=seed)
        (g_l,) = _row(small_result, strategy="cap_labels", label_keep=0.5, seed=seed)
        diffs += [abs(c_s.normalized_f1 - g_s.normalized_f1), abs(c_l.normalized_f1 - g_l.normalized_f1)]
    assert statistics.fmean(diffs) <= 0.05


def test_run_combined_matrix(corpora):
    res = run_combined_matrix(*corpora, [(1.0, 1.0), (0.5, 0.5)], seeds=(3,), cfg=CFG)
    assert {r.strategy for r in res.rows} == {"combined"}
    (base,) = _row(res, sentence_keep=1.0, label_keep=1.0)
    assert base.normalized_f1 == 1.0
    with pytest.raises(InvalidGrid):
        run_combined_matrix(*corpora, [(0.5, 0.5)], seeds=(3,), cfg=CFG)


def test_grid_determinism_and_parallel_equivalence(corpora):
    grid = ExperimentGrid(levels=(1.0, 0.3), seeds=(5,), permutations=2, combined=((1.0, 1.0), (0.5, 0.5)))
    a = run_grid(*corpora, grid, CFG).to_csv()
    b = run_grid(*corpora, grid, CFG).to_csv()
    c = run_grid(*corpora, grid, CFG, jobs=2).to_csv()
    assert a == b == c


def test_csv_round_trip(small_result, tmp_path):
    path = tmp_path / "r.csv"
    small_result.write_csv(path)
    again = ExperimentResult.read_csv(path)
    assert again.rows == small_result.rows
    assert again.to_csv() == small_result.to_csv()
    with pytest.raises(InvalidGrid):
        parse_results_csv("a,b\n1,2\n")


def test_aggregate_matches_independent_recomputation(small_result):
    groups = {}
    for rec in csv.DictReader(io.StringIO(small_result.to_csv())):
        if rec["normalized_f1"]:
            key = (rec["strategy"], float(rec["sentence_keep"]), float(rec["label_keep"]), float(rec["swap_fraction"]))
            groups.setdefault(key, []).append(float(rec["normalized_f1"]))
    summary = aggregate(small_result)
    assert len(summary) == len(groups)
    for s in summary:
        values = groups[(s.strategy, s.sentence_keep, s.label_keep, s.swap_fraction)]
        n = len(values)
        mean = sum(values) / n
        sd = math.sqrt(sum((v - mean) ** 2 for v in values) / (n - 1)) if n > 1 else 0.0
        assert s.n == n
        assert abs(s.mean_normalized_f1 - mean) < 1e-12
        assert abs(s.sample_stddev - sd) < 1e-12


def _fake(strategy="cap_labels", label_keep=0.5, value=0.5, seed=0):
    return ResultRow(strategy, 1.0, label_keep, 0.0, seed, 0, value, 1.0, value, 1, 1, 1, "")


def test_aggregate_edge_cases():
    (single,) = aggregate([_fake(value=0.3)])
    assert (single.mean_normalized_f1, single.sample_stddev, single.n) == (0.3, 0.0, 1)
    (same,) = aggregate([_fake(seed=s) for s in range(3)])
    assert same.sample_stddev == 0.0 and same.n == 3
    assert same.level == 0.5


def test_mean_normalized_filter(small_result):
    assert mean_normalized(small_result, strategy="cap_labels", label_keep=1.0) == 1.0
    with pytest.raises(KeyError):
        mean_normalized(small_result, strategy="nope")


def test_report_tables(small_result, tmp_path):
    results = {"syn": small_result, "syn2": small_result}
    fig2 = fig2_table(results)
    assert [(p.strategy, p.quality) for p in fig2][:3] == [("cap_sentences", 1.0), ("cap_sentences", 0.5), ("cap_sentences", 0.1)]
    top = [p for p in fig2 if p.quality == 1.0]
    assert all(p.mean_normalized_f1 == 1.0 for p in top)
    assert {p.strategy for p in fig2} == {s.value for s in Strategy}
    assert fig2[0].n == 2 * 2 * 2  # files x seeds x permutations
    fig3 = fig3_table(results)
    assert {p.language for p in fig3} == {"syn", "syn2"}
    fig4 = fig4_table(results)
    assert {(c.sentence_keep, c.label_keep) for c in fig4} == {(1.0, 1.0), (0.5, 1.0), (1.0, 0.5)}
    written = write_reports(results, tmp_path)
    assert sorted(written) == ["fig2.csv", "fig3_by_language.csv", "fig4_matrix.csv"]
    assert (tmp_path / "fig4_matrix.csv").read_text().splitlines()[0] == (
        "language,sentence_keep,label_keep,mean_normalized_f1,sample_stddev,n"
    )
