"""In-memory NER corpus model and the whitespace-column CoNLL reader/writer."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

from .errors import (
    EmptyInput,
    EncodingError,
    InvalidBio,
    InvalidScheme,
    MalformedLine,
    UnknownEntityType,
)

DEFAULT_ENTITY_TYPES = ("PER", "ORG", "LOC", "DATE")


class BioPolicy(str, enum.Enum):
    STRICT = "strict"
    REPAIR = "repair"
    PERMISSIVE = "permissive"


class Tag(NamedTuple):
    """A BIO tag: ``kind`` is ``"O"``, ``"B"`` or ``"I"``; ``entity_type`` is None iff kind is O."""

    kind: str
    entity_type: str | None = None

    def __str__(self) -> str:
        return "O" if self.kind == "O" else f"{self.kind}-{self.entity_type}"

    @property
    def is_outside(self) -> bool:
        return self.kind == "O"

    @property
    def is_begin(self) -> bool:
        return self.kind == "B"

    @property
    def is_inside(self) -> bool:
        return self.kind == "I"


OUTSIDE = Tag("O")


def begin(entity_type: str) -> Tag:
    return Tag("B", entity_type)


def inside(entity_type: str) -> Tag:
    return Tag("I", entity_type)


class Token(NamedTuple):
    text: str
    tag: Tag


@dataclass(frozen=True)
class TagSchemeConfig:
    entity_types: tuple[str, ...] = DEFAULT_ENTITY_TYPES
    # Ingestion setting only; two datasets with the same types compare equal.
    bio_policy: BioPolicy = field(default=BioPolicy.STRICT, compare=False)

    def __post_init__(self) -> None:
        types = tuple(self.entity_types)
        object.__setattr__(self, "entity_types", types)
        object.__setattr__(self, "bio_policy", BioPolicy(self.bio_policy))
        if not types:
            raise InvalidScheme("entity type set is empty")
        if len(set(types)) != len(types):
            raise InvalidScheme("duplicate entity type names", entity_types=list(types))
        for name in types:
            if not name or "-" in name or any(c.isspace() for c in name):
                raise InvalidScheme(f"illegal entity type name {name!r}")

    @classmethod
    def from_csv(cls, text: str, bio_policy: BioPolicy | str = BioPolicy.STRICT) -> "TagSchemeConfig":
        return cls(tuple(t.strip() for t in text.split(",") if t.strip()), BioPolicy(bio_policy))

    def tags(self) -> list[Tag]:
        """All tags of the scheme: O first, then B-X, I-X per type in declared order."""
        out = [OUTSIDE]
        for t in self.entity_types:
            out.extend((begin(t), inside(t)))
        return out


@dataclass(frozen=True)
class Sentence:
    tokens: tuple[Token, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "tokens", tuple(self.tokens))

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def words(self) -> tuple[str, ...]:
        return tuple(t.text for t in self.tokens)

    @property
    def tags(self) -> tuple[Tag, ...]:
        return tuple(t.tag for t in self.tokens)

    @classmethod
    def from_pairs(cls, words: Sequence[str], tags: Sequence[Tag]) -> "Sentence":
        if len(words) != len(tags):
            raise ValueError("words and tags differ in length")
        return cls(tuple(Token(w, t) for w, t in zip(words, tags)))


@dataclass(frozen=True)
class Dataset:
    sentences: tuple[Sentence, ...]
    scheme: TagSchemeConfig = field(default_factory=TagSchemeConfig)
    provenance: str = field(default="", compare=False)
    # Number of orphan I- tags rewritten by the repair policy at load time.
    repairs: int = field(default=0, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "sentences", tuple(self.sentences))

    def __len__(self) -> int:
        return len(self.sentences)

    @property
    def token_count(self) -> int:
        return sum(len(s) for s in self.sentences)

    def with_sentences(self, sentences: Iterable[Sentence], provenance: str | None = None) -> "Dataset":
        return Dataset(tuple(sentences), self.scheme, self.provenance if provenance is None else provenance)


@dataclass(frozen=True)
class ParseOptions:
    tag_column: int = -1
    drop_docstart: bool = False
    skip_comments: bool = False
    source: str = "<bytes>"


def is_valid_bio(tags: Sequence[Tag]) -> bool:
    """True when every I-X directly follows B-X or I-X (BIO2)."""
    prev = OUTSIDE
    for tag in tags:
        if tag.kind == "I" and (prev.kind == "O" or prev.entity_type != tag.entity_type):
            return False
        prev = tag
    return True


def repair_bio(tags: Sequence[Tag]) -> tuple[list[Tag], int]:
    """Rewrite orphan I-X to B-X; returns the new tags and the number of rewrites."""
    out: list[Tag] = []
    repairs = 0
    prev = OUTSIDE
    for tag in tags:
        if tag.kind == "I" and (prev.kind == "O" or prev.entity_type != tag.entity_type):
            tag = begin(tag.entity_type)  # type: ignore[arg-type]
            repairs += 1
        out.append(tag)
        prev = tag
    return out, repairs


def parse_tag(raw: str, scheme: TagSchemeConfig, line_no: int) -> Tag:
    if raw == "O":
        return OUTSIDE
    prefix, sep, etype = raw.partition("-")
    if not sep or prefix not in ("B", "I") or not etype:
        raise MalformedLine(f"line {line_no}: unrecognised tag {raw!r}", line=line_no, tag=raw)
    if etype not in scheme.entity_types:
        raise UnknownEntityType(
            f"line {line_no}: entity type {etype!r} not in scheme {list(scheme.entity_types)}",
            line=line_no,
            entity_type=etype,
        )
    return Tag(prefix, etype)


def parse_conll(
    data: bytes | str,
    scheme: TagSchemeConfig | None = None,
    options: ParseOptions | None = None,
) -> Dataset:
    """Parse CoNLL-style token/tag columns; blank lines separate sentences.

    Raises EncodingError for non-UTF-8 bytes, MalformedLine / UnknownEntityType
    for bad lines, InvalidBio under the strict policy, and EmptyInput when no
    token is found.
    """
    scheme = scheme or TagSchemeConfig()
    options = options or ParseOptions()
    if isinstance(data, bytes):
        try:
            text = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise EncodingError(
                f"{options.source}: input is not valid UTF-8 (byte offset {exc.start})",
                offset=exc.start,
            ) from None
    else:
        text = data
    if text.startswith("\ufeff"):
        text = text[1:]

    sentences: list[Sentence] = []
    repairs = 0
    words: list[str] = []
    tags: list[Tag] = []
    line_nos: list[int] = []

    def flush() -> None:
        nonlocal repairs, words, tags, line_nos
        if not words:
            return
        seq = tags
        if not is_valid_bio(seq):
            if scheme.bio_policy is BioPolicy.STRICT:
                bad = _first_orphan(seq)
                raise InvalidBio(
                    f"line {line_nos[bad]}: orphan {seq[bad]} (BIO2 requires a preceding B-/I- of the same type)",
                    line=line_nos[bad],
                )
            if scheme.bio_policy is BioPolicy.REPAIR:
                seq, n = repair_bio(seq)
                repairs += n
        sentences.append(Sentence(tuple(Token(w, t) for w, t in zip(words, seq))))
        words, tags, line_nos = [], [], []

    for line_no, line in enumerate(text.split("\n"), start=1):
        cols = line.split()
        if not cols:
            flush()
            continue
        if options.skip_comments and cols[0].startswith("#"):
            continue
        if options.drop_docstart and cols[0] == "-DOCSTART-":
            flush()
            continue
        if len(cols) < 2:
            raise MalformedLine(f"line {line_no}: expected at least 2 columns, got {len(cols)}", line=line_no)
        try:
            raw_tag = cols[options.tag_column]
        except IndexError:
            raise MalformedLine(
                f"line {line_no}: no tag column {options.tag_column} in {len(cols)} columns", line=line_no
            ) from None
        if options.tag_column in (0, -len(cols)):
            raise MalformedLine(f"line {line_no}: tag column overlaps the token column", line=line_no)
        line_nos.append(line_no)
        words.append(cols[0])
        tags.append(parse_tag(raw_tag, scheme, line_no))
    flush()

    if not sentences:
        raise EmptyInput(f"{options.source}: no tokens found")
    return Dataset(tuple(sentences), scheme, options.source, repairs)


def _first_orphan(tags: Sequence[Tag]) -> int:
    prev = OUTSIDE
    for i, tag in enumerate(tags):
        if tag.kind == "I" and (prev.kind == "O" or prev.entity_type != tag.entity_type):
            return i
        prev = tag
    raise AssertionError("no orphan in sequence")


def serialize_conll(d: Dataset) -> bytes:
    """Canonical form: ``token tag`` per line, a blank line after every sentence."""
    parts: list[str] = []
    for sentence in d.sentences:
        for token in sentence.tokens:
            parts.append(f"{token.text} {token.tag}\n")
        parts.append("\n")
    return "".join(parts).encode("utf-8")


def read_conll(path, scheme: TagSchemeConfig | None = None, options: ParseOptions | None = None) -> Dataset:
    path = Path(path)
    options = replace(options or ParseOptions(), source=str(path))
    return parse_conll(path.read_bytes(), scheme, options)


def write_conll(d: Dataset, path) -> None:
    Path(path).write_bytes(serialize_conll(d))


def validate_dataset(d: Dataset, require_bio: bool = True) -> None:
    """Check the structural invariants of ``d``; raises ValueError naming the first violation."""
    types = set(d.scheme.entity_types)
    for i, sentence in enumerate(d.sentences):
        if not sentence.tokens:
            raise ValueError(f"sentence {i} is empty")
        for j, tok in enumerate(sentence.tokens):
            if not tok.text or any(c.isspace() for c in tok.text):
                raise ValueError(f"sentence {i}, token {j}: text {tok.text!r} is empty or contains whitespace")
            if (tok.tag.kind == "O") != (tok.tag.entity_type is None) or tok.tag.kind not in ("O", "B", "I"):
                raise ValueError(f"sentence {i}, token {j}: malformed tag {tok.tag!r}")
            if tok.tag.entity_type is not None and tok.tag.entity_type not in types:
                raise ValueError(f"sentence {i}, token {j}: entity type {tok.tag.entity_type!r} not in scheme")
        if require_bio and not is_valid_bio(sentence.tags):
            raise ValueError(f"sentence {i} is not valid BIO2")
