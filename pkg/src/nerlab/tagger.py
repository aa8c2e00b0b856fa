"""Averaged structured perceptron with first-order Viterbi decoding.

Emission weights are indexed by (feature, tag); transition weights by
(previous tag, tag) plus a start vector. Transitions that would break BIO2
(``O -> I-X``, ``B-X -> I-Y``, sentence-initial ``I-X``) are excluded from the
lattice, so every decoded sequence is valid by construction.
"""
from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .conll_io import Dataset, Sentence, Tag, TagSchemeConfig, Token, is_valid_bio, serialize_conll
from .errors import EmptyDataset, EmptyInput, InvalidBio, ModelFormatError
from .rng import Pcg32

log = logging.getLogger(__name__)

MODEL_FORMAT = "nerlab-tagger"
MODEL_VERSION = 1
TRANS_PREFIX = "@trans:"
START_FEATURE = "@start"


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 10
    seed: int = 0
    averaging: bool = True

    def __post_init__(self) -> None:
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")


def word_shape(word: str) -> str:
    """Collapsed character-class pattern, e.g. ``Addis`` -> ``Xx``, ``12-03`` -> ``d-d``."""
    out: list[str] = []
    for ch in word:
        if ch.isupper():
            c = "X"
        elif ch.islower():
            c = "x"
        elif ch.isdigit():
            c = "d"
        elif ch.isalpha():
            c = "a"  # caseless scripts (e.g. Ethiopic)
        else:
            c = ch
        if not out or out[-1] != c:
            out.append(c)
    return "".join(out)


@lru_cache(maxsize=1 << 16)
def sentence_features(words: tuple[str, ...]) -> tuple[tuple[str, ...], ...]:
    """Binary feature names for every position of a sentence."""
    n = len(words)
    feats = []
    for i, w in enumerate(words):
        lw = w.lower()
        f = [
            "b",
            "w=" + w,
            "lw=" + lw,
            "shape=" + word_shape(w),
            "pw=" + (words[i - 1] if i > 0 else "<S>"),
            "nw=" + (words[i + 1] if i + 1 < n else "</S>"),
        ]
        for k in (1, 2, 3):
            if len(lw) >= k:
                f.append(f"p{k}=" + lw[:k])
                f.append(f"s{k}=" + lw[-k:])
        if i == 0:
            f.append("first")
        if i == n - 1:
            f.append("last")
        feats.append(tuple(f))
    return tuple(feats)


def transition_mask(tags: Sequence[Tag]) -> tuple[np.ndarray, np.ndarray]:
    """Additive masks (0 or -inf) for (prev, cur) transitions and for the first tag."""
    k = len(tags)
    trans = np.zeros((k, k))
    start = np.zeros(k)
    for j, cur in enumerate(tags):
        if cur.kind != "I":
            continue
        start[j] = -np.inf
        for i, prev in enumerate(tags):
            if prev.kind == "O" or prev.entity_type != cur.entity_type:
                trans[i, j] = -np.inf
    return trans, start


@dataclass
class TaggerModel:
    tag_set: list[Tag]
    features: list[str]
    emission: np.ndarray  # (n_features, n_tags)
    transitions: np.ndarray  # (n_tags, n_tags), row = previous tag
    start: np.ndarray  # (n_tags,)
    scheme: TagSchemeConfig
    metadata: dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.feature_index = {f: i for i, f in enumerate(self.features)}
        self._trans_mask, self._start_mask = transition_mask(self.tag_set)

    # -- decoding ---------------------------------------------------------
    def _feature_ids(self, words: tuple[str, ...]) -> tuple[np.ndarray, np.ndarray]:
        index = self.feature_index
        flat: list[int] = []
        offsets: list[int] = []
        for feats in sentence_features(words):
            offsets.append(len(flat))
            flat.extend(index[f] for f in feats if f in index)
            if len(flat) == offsets[-1]:
                # Keep reduceat well-defined for a token with no known feature.
                flat.append(-1)
        return np.asarray(flat, dtype=np.intp), np.asarray(offsets, dtype=np.intp)

    def decode_ids(self, flat: np.ndarray, offsets: np.ndarray) -> list[int]:
        if self.emission.shape[0] == 0:
            em = np.zeros((len(offsets), len(self.tag_set)))
        else:
            rows = self.emission[flat]
            rows[flat < 0] = 0.0
            em = np.add.reduceat(rows, offsets, axis=0)
        trans = self.transitions + self._trans_mask
        n, k = em.shape
        score = self.start + self._start_mask + em[0]
        back = np.empty((n, k), dtype=np.intp)
        cols = np.arange(k)
        for t in range(1, n):
            cand = score[:, None] + trans
            best = cand.argmax(axis=0)
            back[t] = best
            score = cand[best, cols] + em[t]
        j = int(score.argmax())
        path = [j]
        for t in range(n - 1, 0, -1):
            j = int(back[t, j])
            path.append(j)
        path.reverse()
        return path

    def predict_words(self, words: Sequence[str]) -> list[Tag]:
        words = tuple(words)
        if not words:
            raise EmptyInput("cannot tag an empty sentence")
        flat, offsets = self._feature_ids(words)
        return [self.tag_set[j] for j in self.decode_ids(flat, offsets)]

    def weights(self) -> dict[tuple[str, str], float]:
        """Nonzero weights as ``{(feature, tag): value}``, transitions included."""
        return dict(_weight_items(self))

    # -- persistence ------------------------------------------------------
    def dumps(self) -> str:
        lines = [f"#{MODEL_FORMAT}\t{MODEL_VERSION}"]
        lines.append("#entity_types\t" + ",".join(self.scheme.entity_types))
        for key in sorted(self.metadata):
            lines.append(f"#meta\t{key}\t{self.metadata[key]}")
        body = sorted(f"{feat}\t{tag}\t{value!r}" for (feat, tag), value in _weight_items(self))
        return "\n".join(lines + body) + "\n"

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps(), encoding="utf-8")

    @classmethod
    def loads(cls, text: str) -> "TaggerModel":
        lines = text.splitlines()
        if not lines or lines[0] != f"#{MODEL_FORMAT}\t{MODEL_VERSION}":
            raise ModelFormatError("not a nerlab tagger model (bad header)")
        scheme = None
        metadata: dict[str, str] = {}
        entries: list[tuple[str, str, float]] = []
        for n, line in enumerate(lines[1:], start=2):
            parts = line.split("\t")
            if parts[0] == "#entity_types":
                scheme = TagSchemeConfig(tuple(parts[1].split(",")))
            elif parts[0] == "#meta" and len(parts) == 3:
                metadata[parts[1]] = parts[2]
            elif len(parts) == 3 and not parts[0].startswith("#"):
                try:
                    entries.append((parts[0], parts[1], float(parts[2])))
                except ValueError:
                    raise ModelFormatError(f"line {n}: bad weight {parts[2]!r}") from None
            else:
                raise ModelFormatError(f"line {n}: unrecognised model line")
        if scheme is None:
            raise ModelFormatError("model lacks an #entity_types line")
        tag_set = scheme.tags()
        tag_index = {str(t): i for i, t in enumerate(tag_set)}
        k = len(tag_set)
        features = sorted({f for f, _, _ in entries if not f.startswith("@")})
        f_index = {f: i for i, f in enumerate(features)}
        emission = np.zeros((len(features), k))
        transitions = np.zeros((k, k))
        start = np.zeros(k)
        for feat, tag, value in entries:
            if tag not in tag_index:
                raise ModelFormatError(f"unknown tag {tag!r} in model")
            j = tag_index[tag]
            if feat == START_FEATURE:
                start[j] = value
            elif feat.startswith(TRANS_PREFIX):
                prev = feat[len(TRANS_PREFIX) :]
                if prev not in tag_index:
                    raise ModelFormatError(f"unknown tag {prev!r} in model")
                transitions[tag_index[prev], j] = value
            else:
                emission[f_index[feat], j] = value
        return cls(tag_set, features, emission, transitions, start, scheme, metadata)

    @classmethod
    def load(cls, path: str | Path) -> "TaggerModel":
        return cls.loads(Path(path).read_text(encoding="utf-8"))


def _weight_items(m: TaggerModel) -> Iterable[tuple[tuple[str, str], float]]:
    names = [str(t) for t in m.tag_set]
    rows, cols = np.nonzero(m.emission)
    for i, j in zip(rows.tolist(), cols.tolist()):
        yield (m.features[i], names[j]), float(m.emission[i, j])
    for j in np.nonzero(m.start)[0].tolist():
        yield (START_FEATURE, names[j]), float(m.start[j])
    rows, cols = np.nonzero(m.transitions)
    for i, j in zip(rows.tolist(), cols.tolist()):
        yield (TRANS_PREFIX + names[i], names[j]), float(m.transitions[i, j])


def corpus_hash(d: Dataset) -> str:
    return hashlib.sha256(serialize_conll(d)).hexdigest()


def train(d: Dataset, cfg: TrainConfig | None = None) -> TaggerModel:
    """Fit an averaged perceptron; deterministic for identical (corpus, config)."""
    cfg = cfg or TrainConfig()
    if not d.sentences:
        raise EmptyDataset("cannot train on an empty dataset")
    tag_set = d.scheme.tags()
    tag_index = {t: i for i, t in enumerate(tag_set)}
    k = len(tag_set)

    feature_index: dict[str, int] = {}
    examples: list[tuple[np.ndarray, np.ndarray, list[int]]] = []
    for s_i, sentence in enumerate(d.sentences):
        tags = sentence.tags
        if not is_valid_bio(tags):
            raise InvalidBio(f"training sentence {s_i} is not valid BIO2", sentence=s_i)
        flat: list[int] = []
        offsets: list[int] = []
        for feats in sentence_features(sentence.words):
            offsets.append(len(flat))
            for f in feats:
                idx = feature_index.get(f)
                if idx is None:
                    idx = feature_index[f] = len(feature_index)
                flat.append(idx)
        examples.append(
            (np.asarray(flat, dtype=np.intp), np.asarray(offsets, dtype=np.intp), [tag_index[t] for t in tags])
        )

    features = list(feature_index)
    n_feat = len(features)
    model = TaggerModel(tag_set, features, np.zeros((n_feat, k)), np.zeros((k, k)), np.zeros(k), d.scheme)
    # Running sums for the averaging trick: avg = w - u / c.
    u_em = np.zeros_like(model.emission)
    u_tr = np.zeros_like(model.transitions)
    u_st = np.zeros_like(model.start)

    rng = Pcg32(cfg.seed)
    order = list(range(len(examples)))
    c = 1
    for epoch in range(cfg.epochs):
        rng.shuffle(order)
        mistakes = 0
        for idx in order:
            flat, offsets, gold = examples[idx]
            pred = model.decode_ids(flat, offsets)
            if pred != gold:
                mistakes += 1
                _update(model, u_em, u_tr, u_st, flat, offsets, gold, pred, c)
            c += 1
        log.debug("epoch %d: %d/%d sentences mis-tagged", epoch + 1, mistakes, len(examples))

    if cfg.averaging:
        model.emission -= u_em / c
        model.transitions -= u_tr / c
        model.start -= u_st / c
    return _canonical(model, cfg, d)


def _update(model: TaggerModel, u_em, u_tr, u_st, flat, offsets, gold, pred, c: int) -> None:
    bounds = list(offsets) + [len(flat)]
    for t, (g, p) in enumerate(zip(gold, pred)):
        if g != p:
            ids = flat[bounds[t] : bounds[t + 1]]
            np.add.at(model.emission, (ids, g), 1.0)
            np.add.at(model.emission, (ids, p), -1.0)
            np.add.at(u_em, (ids, g), c)
            np.add.at(u_em, (ids, p), -c)
    if gold[0] != pred[0]:
        model.start[gold[0]] += 1.0
        model.start[pred[0]] -= 1.0
        u_st[gold[0]] += c
        u_st[pred[0]] -= c
    for t in range(1, len(gold)):
        gp, gc, pp, pc = gold[t - 1], gold[t], pred[t - 1], pred[t]
        if (gp, gc) != (pp, pc):
            model.transitions[gp, gc] += 1.0
            model.transitions[pp, pc] -= 1.0
            u_tr[gp, gc] += c
            u_tr[pp, pc] -= c


def _canonical(model: TaggerModel, cfg: TrainConfig, d: Dataset) -> TaggerModel:
    """Sort features and drop all-zero rows so in-memory and reloaded models agree exactly."""
    keep = [i for i in np.nonzero(np.any(model.emission != 0.0, axis=1))[0].tolist()]
    keep.sort(key=lambda i: model.features[i])
    features = [model.features[i] for i in keep]
    emission = model.emission[keep] if keep else np.zeros((0, len(model.tag_set)))
    metadata = {
        "epochs": str(cfg.epochs),
        "seed": str(cfg.seed),
        "averaging": str(cfg.averaging).lower(),
        "training_corpus_hash": corpus_hash(d),
    }
    return TaggerModel(
        model.tag_set, features, emission, model.transitions.copy(), model.start.copy(), model.scheme, metadata
    )


def predict(model: TaggerModel, sentences: Dataset | Iterable[Sequence[str]]) -> Dataset:
    """Tag every sentence; input may be a Dataset (its tags are ignored) or token lists."""
    if isinstance(sentences, Dataset):
        word_lists = [s.words for s in sentences.sentences]
        provenance = sentences.provenance
    else:
        word_lists = [tuple(ws) for ws in sentences]
        provenance = ""
    if not word_lists:
        raise EmptyInput("nothing to tag")
    out = []
    for words in word_lists:
        tags = model.predict_words(words)
        out.append(Sentence(tuple(Token(w, t) for w, t in zip(words, tags))))
    return Dataset(tuple(out), model.scheme, provenance)
