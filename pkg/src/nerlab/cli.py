"""``nerlab`` command line: stats, corrupt, score, train, predict, experiment, report, generate.

Every subcommand is a thin wrapper over the library. Exit status is 0 on
success, 1 on domain or I/O errors and 2 on usage errors.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path
from typing import Any, Sequence

from . import __version__
from .conll_io import BioPolicy, Dataset, ParseOptions, TagSchemeConfig, parse_conll, serialize_conll
from .corruption import CorruptionSpec, Strategy, compose_with_record, corrupt_with_record
from .errors import NerLabError
from .experiment import ExperimentGrid, ExperimentResult, run_grid
from .report import write_reports
from .scoring import score
from .stats import compute_stats
from .synthetic import generate_corpus
from .tagger import TaggerModel, TrainConfig, predict, train

log = logging.getLogger("nerlab")

SEED_ENV = "NERLAB_SEED"


class CliError(NerLabError):
    """I/O failure surfaced as a domain error (exit 1)."""

    def __init__(self, code: str, message: str, **context: Any) -> None:
        super().__init__(message, **context)
        self._code = code

    @property
    def code(self) -> str:
        return self._code


@dataclass(frozen=True)
class GlobalConfig:
    scheme: TagSchemeConfig
    parse: ParseOptions
    verbosity: int
    seed_root: int

    def to_json(self) -> dict[str, Any]:
        return {
            "entity_types": list(self.scheme.entity_types),
            "bio_policy": self.scheme.bio_policy.value,
            "tag_column": self.parse.tag_column,
            "drop_docstart": self.parse.drop_docstart,
            "skip_comments": self.parse.skip_comments,
            "verbosity": self.verbosity,
            "seed_root": self.seed_root,
        }


# -- argument types ------------------------------------------------------------

def fraction(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0.0 <= value <= 1.0:
        raise argparse.ArgumentTypeError(f"fraction must lie in [0, 1], got {text}")
    return value


def seed_value(text: str) -> int:
    try:
        value = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer seed: {text!r}") from None
    if not 0 <= value < 1 << 64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return value


def positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def fraction_list(text: str) -> list[float]:
    return [fraction(t) for t in text.split(",") if t.strip()]


def seed_list(text: str) -> list[int]:
    return [seed_value(t) for t in text.split(",") if t.strip()]


def strategy_list(text: str) -> list[Strategy]:
    if text.strip().lower() in ("", "none"):
        return []
    out = []
    for name in text.split(","):
        try:
            out.append(Strategy.parse(name.strip()))
        except ValueError:
            raise argparse.ArgumentTypeError(f"unknown strategy {name!r}") from None
    return out


def pair_list(text: str) -> list[tuple[float, float]]:
    """``S:L`` pairs separated by commas, e.g. ``0.5:0.5,0.25:1.0``."""
    pairs = []
    for item in text.split(","):
        if not item.strip():
            continue
        s, sep, l = item.partition(":")
        if not sep:
            raise argparse.ArgumentTypeError(f"matrix cell {item!r} is not of the form S:L")
        pairs.append((fraction(s), fraction(l)))
    return pairs


def entity_types(text: str) -> tuple[str, ...]:
    types = tuple(t.strip() for t in text.split(",") if t.strip())
    try:
        TagSchemeConfig(types)
    except NerLabError as exc:
        raise argparse.ArgumentTypeError(exc.message) from None
    return types


# -- parser --------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("corpus format")
    g.add_argument("--entity-types", type=entity_types, default=("PER", "ORG", "LOC", "DATE"),
                   help="comma-separated entity types (default PER,ORG,LOC,DATE)")
    g.add_argument("--bio-policy", choices=[p.value for p in BioPolicy], default="strict")
    g.add_argument("--tag-column", type=int, default=-1, help="index of the tag column (default -1, the last)")
    g.add_argument("--drop-docstart", action="store_true", help="drop -DOCSTART- lines")
    g.add_argument("--skip-comments", action="store_true", help="skip lines whose first column starts with #")
    common.add_argument("--json", action="store_true", help="machine-readable output and errors")
    common.add_argument("-v", "--verbose", action="count", default=0)

    parser = argparse.ArgumentParser(prog="nerlab", description="Corruption experiments for BIO-tagged NER corpora.")
    parser.add_argument("--version", action="version", version=f"nerlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("stats", parents=[common], help="corpus statistics")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--table", action="store_true", help="table output (the default unless --json)")

    p = sub.add_parser("corrupt", parents=[common], help="apply one corruption to a corpus")
    p.add_argument("--strategy", type=lambda s: strategy_list(s)[0], help="cap-sentences | cap-labels | swap-labels")
    p.add_argument("--fraction", type=fraction, help="keep fraction (capping) or corrupt fraction (swapping)")
    p.add_argument("--sentence-keep", type=fraction)
    p.add_argument("--label-keep", type=fraction)
    p.add_argument("--seed", type=seed_value)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--sidecar", help="JSON sidecar path (default OUT.json)")

    p = sub.add_parser("score", parents=[common], help="entity-level P/R/F1")
    p.add_argument("--gold", required=True)
    p.add_argument("--pred", required=True)

    p = sub.add_parser("train", parents=[common], help="train the perceptron tagger")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--epochs", type=positive_int, default=10)
    p.add_argument("--seed", type=seed_value)

    p = sub.add_parser("predict", parents=[common], help="tag a corpus with a trained model")
    p.add_argument("--model", required=True)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("experiment", parents=[common], help="run a corruption grid")
    p.add_argument("--train", help="training corpus (default: bundled synthetic fixture)")
    p.add_argument("--test", help="test corpus (default: bundled synthetic fixture)")
    p.add_argument("--strategies", type=strategy_list, default=list(Strategy),
                   help="comma-separated strategies, or 'none' (default: all three)")
    p.add_argument("--levels", type=fraction_list, default=None, help="quality levels (default 1.0,0.9,...,0.1)")
    p.add_argument("--seeds", type=seed_list, default=None, help=f"seeds (default: three from ${SEED_ENV}, else 0,1,2)")
    p.add_argument("--permutations", type=positive_int, default=3)
    p.add_argument("--matrix", type=pair_list, default=None,
                   help="combined cells S:L,...; the 1.0:1.0 cell is added when missing")
    p.add_argument("--epochs", type=positive_int, default=10)
    p.add_argument("--jobs", type=positive_int, default=1)
    p.add_argument("--out", required=True)

    p = sub.add_parser("report", parents=[common], help="figure-ready CSVs from results files")
    p.add_argument("--results", action="append", required=True, metavar="[LANG=]FILE",
                   help="results CSV, optionally labelled with a language; repeatable")
    p.add_argument("--out-dir", required=True)

    p = sub.add_parser("generate", parents=[common], help="write a synthetic corpus")
    p.add_argument("--sentences", type=positive_int, required=True)
    p.add_argument("--seed", type=seed_value)
    p.add_argument("--vocab-seed", type=seed_value, default=0)
    p.add_argument("--out", required=True)
    return parser


# -- helpers -------------------------------------------------------------------

def _global_config(args: argparse.Namespace) -> GlobalConfig:
    raw = os.environ.get(SEED_ENV, "0")
    try:
        seed_root = seed_value(raw)
    except argparse.ArgumentTypeError:
        raise CliError("InvalidEnvironment", f"${SEED_ENV} is not a valid seed: {raw!r}") from None
    scheme = TagSchemeConfig(args.entity_types, BioPolicy(args.bio_policy))
    opts = ParseOptions(args.tag_column, args.drop_docstart, args.skip_comments)
    return GlobalConfig(scheme, opts, args.verbose, seed_root)


def _read_bytes(path: str | Path) -> bytes:
    try:
        return Path(path).read_bytes()
    except FileNotFoundError:
        raise CliError("FileNotFound", f"no such file: {path}", path=str(path)) from None
    except OSError as exc:
        raise CliError("IOError", f"cannot read {path}: {exc.strerror}", path=str(path)) from None


def _write(path: str | Path, data: bytes | str) -> None:
    try:
        Path(path).write_bytes(data.encode("utf-8") if isinstance(data, str) else data)
    except OSError as exc:
        raise CliError("IOError", f"cannot write {path}: {exc.strerror}", path=str(path)) from None


def load_corpus(path: str | Path, cfg: GlobalConfig) -> Dataset:
    return parse_conll(_read_bytes(path), cfg.scheme, replace(cfg.parse, source=str(path)))


def _bundled(name: str) -> bytes:
    return resources.files("nerlab").joinpath("data", name).read_bytes()


def _sidecar(path: str | Path, command: str, cfg: GlobalConfig, payload: dict[str, Any]) -> None:
    doc = {"tool": "nerlab", "version": __version__, "command": command, "config": cfg.to_json(), **payload}
    _write(path, json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _emit(args: argparse.Namespace, text: str) -> None:
    sys.stdout.write(text if text.endswith("\n") else text + "\n")


# -- subcommands ---------------------------------------------------------------

def cmd_stats(args, cfg: GlobalConfig) -> None:
    report = compute_stats(load_corpus(args.input, cfg))
    if args.json:
        _emit(args, json.dumps(report.to_json(), indent=2, sort_keys=True))
    else:
        _emit(args, report.render_table(Path(args.input).name))


def cmd_corrupt(args, cfg: GlobalConfig, parser: argparse.ArgumentParser) -> None:
    single = args.strategy is not None or args.fraction is not None
    combined = args.sentence_keep is not None or args.label_keep is not None
    if single == combined:
        parser.error("corrupt: give either --strategy/--fraction or --sentence-keep/--label-keep")
    if single and (args.strategy is None or args.fraction is None):
        parser.error("corrupt: --strategy and --fraction go together")
    seed = cfg.seed_root if args.seed is None else args.seed
    d = load_corpus(args.input, cfg)
    if single:
        out, record = corrupt_with_record(d, CorruptionSpec(args.strategy, args.fraction, seed))
    else:
        s = 1.0 if args.sentence_keep is None else args.sentence_keep
        l = 1.0 if args.label_keep is None else args.label_keep
        out, record = compose_with_record(d, s, l, seed)
    _write(args.out, serialize_conll(out))
    payload = {**record.to_json(), "input": args.input, "output": args.out}
    _sidecar(args.sidecar or f"{args.out}.json", "corrupt", cfg, payload)
    if args.json:
        _emit(args, json.dumps(record.to_json(), sort_keys=True))


def cmd_score(args, cfg: GlobalConfig) -> None:
    report = score(load_corpus(args.gold, cfg), load_corpus(args.pred, cfg))
    if args.json:
        _emit(args, json.dumps(report.to_json(), indent=2, sort_keys=True))
        return
    lines = [f"{'type':<8} {'prec':>7} {'rec':>7} {'f1':>7} {'gold':>6} {'pred':>6} {'tp':>6}"]
    for name, prf in [*report.per_type.items(), ("micro", report.micro)]:
        lines.append(
            f"{name:<8} {prf.precision:7.4f} {prf.recall:7.4f} {prf.f1:7.4f} "
            f"{prf.gold_count:6d} {prf.pred_count:6d} {prf.tp:6d}"
        )
    _emit(args, "\n".join(lines))


def cmd_train(args, cfg: GlobalConfig) -> None:
    seed = cfg.seed_root if args.seed is None else args.seed
    model = train(load_corpus(args.input, cfg), TrainConfig(epochs=args.epochs, seed=seed))
    _write(args.model, model.dumps())
    _sidecar(f"{args.model}.json", "train", cfg, {"input": args.input, "model": args.model, **model.metadata})


def cmd_predict(args, cfg: GlobalConfig) -> None:
    try:
        model = TaggerModel.loads(_read_bytes(args.model).decode("utf-8"))
    except UnicodeDecodeError:
        raise CliError("ModelFormatError", f"{args.model} is not UTF-8 text", path=args.model) from None
    # Inputs are read with the model's entity types.
    cfg = replace(cfg, scheme=TagSchemeConfig(model.scheme.entity_types, cfg.scheme.bio_policy))
    d = load_corpus(args.input, cfg)
    _write(args.out, serialize_conll(predict(model, d)))
    _sidecar(f"{args.out}.json", "predict", cfg, {"input": args.input, "model": args.model, "output": args.out,
                                                   "training_corpus_hash": model.metadata.get("training_corpus_hash")})


def cmd_experiment(args, cfg: GlobalConfig, parser: argparse.ArgumentParser) -> None:
    if (args.train is None) != (args.test is None):
        parser.error("experiment: --train and --test go together")
    if args.train is None:
        train_set = parse_conll(_bundled("synthetic_train.conll"), cfg.scheme, replace(cfg.parse, source="bundled:train"))
        test_set = parse_conll(_bundled("synthetic_test.conll"), cfg.scheme, replace(cfg.parse, source="bundled:test"))
    else:
        train_set, test_set = load_corpus(args.train, cfg), load_corpus(args.test, cfg)
    seeds = args.seeds or [(cfg.seed_root + i) % (1 << 64) for i in range(3)]
    matrix = list(args.matrix or [])
    if matrix and (1.0, 1.0) not in matrix:
        matrix.insert(0, (1.0, 1.0))
    grid = ExperimentGrid(
        strategies=tuple(args.strategies),
        levels=tuple(args.levels) if args.levels else ExperimentGrid().levels,
        seeds=tuple(seeds),
        permutations=args.permutations,
        combined=tuple(matrix),
    )
    result = run_grid(train_set, test_set, grid, TrainConfig(epochs=args.epochs), jobs=args.jobs)
    _write(args.out, result.to_csv())
    _sidecar(f"{args.out}.json", "experiment", cfg, {
        "train": train_set.provenance,
        "test": test_set.provenance,
        "grid": {
            "strategies": [s.value for s in grid.strategies],
            "levels": list(grid.levels),
            "seeds": list(grid.seeds),
            "permutations": grid.permutations,
            "combined": [list(p) for p in grid.combined],
        },
        "epochs": args.epochs,
        "rows": len(result.rows),
    })


def cmd_report(args, cfg: GlobalConfig) -> None:
    results: dict[str, ExperimentResult] = {}
    for item in args.results:
        label, sep, path = item.partition("=")
        if not sep:
            label, path = Path(item).stem, item
        _read_bytes(path)
        results[label] = ExperimentResult.read_csv(path)
    written = write_reports(results, args.out_dir)
    _sidecar(Path(args.out_dir) / "report.json", "report", cfg,
             {"inputs": args.results, "outputs": sorted(str(p) for p in written.values())})


def cmd_generate(args, cfg: GlobalConfig) -> None:
    seed = cfg.seed_root if args.seed is None else args.seed
    corpus = generate_corpus(args.sentences, seed=seed, scheme=cfg.scheme, vocab_seed=args.vocab_seed)
    _write(args.out, serialize_conll(corpus.dataset))


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    handlers = {
        "stats": cmd_stats,
        "score": cmd_score,
        "train": cmd_train,
        "predict": cmd_predict,
        "report": cmd_report,
        "generate": cmd_generate,
    }
    try:
        cfg = _global_config(args)
        log.info("nerlab %s %s config=%s", __version__, args.command, json.dumps(cfg.to_json(), sort_keys=True))
        if args.command == "corrupt":
            cmd_corrupt(args, cfg, parser)
        elif args.command == "experiment":
            cmd_experiment(args, cfg, parser)
        else:
            handlers[args.command](args, cfg)
    except SystemExit as exc:
        return int(exc.code or 0)
    except NerLabError as exc:
        if args.json:
            sys.stderr.write(json.dumps(exc.to_json(), sort_keys=True) + "\n")
        else:
            sys.stderr.write(f"nerlab: error: {exc.message}\n")
        return 1
    except ValueError as exc:
        # Contract violations from library calls (e.g. out-of-range fractions built internally).
        if args.json:
            sys.stderr.write(json.dumps({"code": "ValueError", "message": str(exc), "context": {}}) + "\n")
        else:
            sys.stderr.write(f"nerlab: error: {exc}\n")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
