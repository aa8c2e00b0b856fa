import random

import pytest
from hypothesis import given, settings, strategies as st

from conftest import FIXTURES, random_dataset
from nerlab.conll_io import (
    BioPolicy,
    Dataset,
    ParseOptions,
    Sentence,
    Tag,
    TagSchemeConfig,
    Token,
    is_valid_bio,
    parse_conll,
    repair_bio,
    serialize_conll,
    validate_dataset,
)
from nerlab.errors import EmptyInput, EncodingError, InvalidBio, InvalidScheme, MalformedLine, UnknownEntityType

STRICT = TagSchemeConfig()
REPAIR = TagSchemeConfig(bio_policy=BioPolicy.REPAIR)
PERMISSIVE = TagSchemeConfig(bio_policy="permissive")


def test_minimal_file():
    d = parse_conll(b"Paris B-LOC\n\n")
    assert len(d.sentences) == 1
    assert d.sentences[0].tokens == (Token("Paris", Tag("B", "LOC")),)


def test_repair_orphan_inside():
    d = parse_conll(b"a O\nb I-PER\n", REPAIR)
    assert d.sentences[0].tags == (Tag("O"), Tag("B", "PER"))
    assert d.repairs == 1


def test_repair_type_mismatch_counts_as_orphan():
    d = parse_conll(b"a B-LOC\nb I-PER\nc I-PER\n", REPAIR)
    assert [str(t) for t in d.sentences[0].tags] == ["B-LOC", "B-PER", "I-PER"]
    assert d.repairs == 1


def test_strict_rejects_orphan_with_line_number():
    with pytest.raises(InvalidBio) as exc:
        parse_conll(b"x O\n\na O\nb I-PER\n")
    assert exc.value.context["line"] == 4


def test_permissive_keeps_orphans():
    d = parse_conll(b"a O\nb I-PER\n", PERMISSIVE)
    assert d.sentences[0].tags == (Tag("O"), Tag("I", "PER"))
    assert d.repairs == 0


def test_blank_lines_collapse_and_trailing_newline_optional():
    d = parse_conll(b"\n\na O\n\n\n\nb B-PER\n   \nc O")
    assert [s.words for s in d.sentences] == [("a",), ("b",), ("c",)]


def test_crlf_input():
    d = parse_conll(b"a B-PER\r\nb I-PER\r\n\r\nc O\r\n")
    assert [s.words for s in d.sentences] == [("a", "b"), ("c",)]


def test_docstart_only_dropped_when_asked():
    text = b"-DOCSTART- O\n\na B-ORG\n"
    assert len(parse_conll(text).sentences) == 2
    d = parse_conll(text, options=ParseOptions(drop_docstart=True))
    assert [s.words for s in d.sentences] == [("a",)]


def test_comments_only_skipped_when_asked():
    text = b"# O\nb O\n"
    assert parse_conll(text).sentences[0].words == ("#", "b")
    assert parse_conll(text, options=ParseOptions(skip_comments=True)).sentences[0].words == ("b",)


def test_tag_column_selection():
    text = b"EU NNP B-NP B-ORG\nrejects VBZ B-VP O\n"
    d = parse_conll(text)
    assert [str(t) for t in d.sentences[0].tags] == ["B-ORG", "O"]
    with pytest.raises(MalformedLine):
        parse_conll(text, options=ParseOptions(tag_column=1))  # "NNP" is not a tag
    d2 = parse_conll(b"EU B-ORG NNP\n", options=ParseOptions(tag_column=1))
    assert str(d2.sentences[0].tags[0]) == "B-ORG"


@pytest.mark.parametrize(
    "text, error, line",
    [
        (b"a O\nb B-MISC\n", UnknownEntityType, 2),
        (b"a O\nlonely\n", MalformedLine, 2),
        (b"a E-PER\n", MalformedLine, 1),
        (b"a B-\n", MalformedLine, 1),
        (b"a B-PER-X\n", UnknownEntityType, 1),
    ],
)
def test_line_errors(text, error, line):
    with pytest.raises(error) as exc:
        parse_conll(text)
    assert exc.value.context["line"] == line


def test_missing_tag_column_is_malformed():
    with pytest.raises(MalformedLine):
        parse_conll(b"a b O\n", options=ParseOptions(tag_column=5))


@pytest.mark.parametrize("text", [b"", b"\n\n  \n", b"-DOCSTART- O\n\n"])
def test_empty_input(text):
    with pytest.raises(EmptyInput):
        parse_conll(text, options=ParseOptions(drop_docstart=True))


def test_non_utf8_is_hard_error():
    with pytest.raises(EncodingError):
        parse_conll("Addis B-LOC\n".encode("utf-16"))
    with pytest.raises(EncodingError):
        parse_conll(b"caf\xe9 O\n")


def test_fidel_script_survives():
    text = "አዲስ B-LOC\nአበባ I-LOC\n".encode("utf-8")
    d = parse_conll(text)
    assert d.sentences[0].words == ("አዲስ", "አበባ")
    assert serialize_conll(d) == text + b"\n"


def test_custom_entity_types_for_conll2003():
    scheme = TagSchemeConfig(("PER", "ORG", "LOC", "MISC"))
    d = parse_conll(b"German B-MISC\n", scheme)
    assert d.sentences[0].tags[0] == Tag("B", "MISC")
    with pytest.raises(UnknownEntityType):
        parse_conll(b"Monday B-DATE\n", scheme)


@pytest.mark.parametrize("types", [(), ("PER", "PER"), ("B-X",), ("A B",)])
def test_invalid_scheme(types):
    with pytest.raises(InvalidScheme):
        TagSchemeConfig(types)


def test_serialize_naming_and_layout():
    d = parse_conll(b"Monday B-DATE\n\nx O\n")
    assert serialize_conll(d) == b"Monday B-DATE\n\nx O\n\n"


def test_single_sentence_byte_identical_after_one_cycle():
    once = serialize_conll(parse_conll(b"a   NNP\tB-PER\nb x I-PER\n"))
    assert serialize_conll(parse_conll(once)) == once


def test_fixture_round_trip(ten_sentences):
    assert len(ten_sentences.sentences) == 10
    from nerlab.spans import extract_spans

    assert len(extract_spans(ten_sentences)) == 14
    again = parse_conll(serialize_conll(ten_sentences))
    assert again == ten_sentences


def test_fixture_matches_committed_golden(ten_sentences):
    golden = (FIXTURES / "ten_sentences.golden.conll").read_bytes()
    assert serialize_conll(ten_sentences) == golden
    assert serialize_conll(parse_conll(golden)) == golden


def test_equality_ignores_provenance_and_policy():
    a = parse_conll(b"a B-PER\n", options=ParseOptions(source="one"))
    b = parse_conll(b"a B-PER\n", REPAIR, ParseOptions(source="two"))
    assert a == b


def test_repair_idempotent_on_valid_sequences():
    rng = random.Random(3)
    for _ in range(200):
        d, _ = random_dataset(rng)
        for s in d.sentences:
            fixed, n = repair_bio(s.tags)
            assert n == 0 and tuple(fixed) == s.tags


def test_counts_preserved_under_every_policy():
    text = b"a I-PER\nb I-PER\n\nc O\nd I-LOC\ne B-LOC\n\n"
    counts = set()
    for scheme in (REPAIR, PERMISSIVE):
        d = parse_conll(text, scheme)
        counts.add((len(d.sentences), d.token_count))
        again = parse_conll(serialize_conll(d), scheme)
        counts.add((len(again.sentences), again.token_count))
        validate_dataset(d, require_bio=scheme is REPAIR)
    assert counts == {(2, 5)}


def test_validate_dataset_catches_violations():
    bad = Dataset((Sentence((Token("a b", Tag("O")),)),))
    with pytest.raises(ValueError):
        validate_dataset(bad)
    bad_type = Dataset((Sentence((Token("a", Tag("B", "MISC")),)),))
    with pytest.raises(ValueError):
        validate_dataset(bad_type)
    assert not is_valid_bio([Tag("I", "PER")])


token_text = st.text(min_size=1, max_size=8).filter(
    lambda s: not any(c.isspace() for c in s) and "\ufeff" not in s
)


@st.composite
def datasets(draw):
    types = ("PER", "ORG", "LOC", "DATE")
    sentences = []
    for _ in range(draw(st.integers(1, 6))):
        n = draw(st.integers(1, 8))
        words = draw(st.lists(token_text, min_size=n, max_size=n))
        tags, prev = [], Tag("O")
        for _ in range(n):
            kind = draw(st.sampled_from("OBI" if prev.kind != "O" else "OB"))
            if kind == "O":
                tag = Tag("O")
            elif kind == "B":
                tag = Tag("B", draw(st.sampled_from(types)))
            else:
                tag = Tag("I", prev.entity_type)
            tags.append(tag)
            prev = tag
        sentences.append(Sentence.from_pairs(words, tags))
    return Dataset(tuple(sentences))


@settings(max_examples=300)
@given(datasets())
def test_round_trip_property(d):
    assert parse_conll(serialize_conll(d)) == d
