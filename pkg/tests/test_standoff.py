import pytest
from hypothesis import given, settings

from medmine.corpus import from_token_records, to_token_records
from medmine.errors import AnnotationError, MalformedLine, MissingDocHeader, OffsetOutOfBounds
from medmine.model import AnnotationSet, Document, EntitySpan, Fragment
from medmine.standoff import (load_corpus_dir, load_predictions, parse_standoff, parse_token_tags, read_standoff_pair,
                              write_corpus_dir, write_standoff, write_token_tags)

from conftest import tagged_documents

TEXT = "take aspirin daily"


def test_single_line():
    ann = parse_standoff(TEXT, "T1\tDrug 5 12\taspirin\n")
    assert ann.spans == (EntitySpan.make("T1", "Drug", (5, 12), surface="aspirin"),)


def test_discontinuous_line():
    ann = parse_standoff("rash and itch here", "T2\tADE 0 4;9 13\trash itch\n")
    assert ann.spans[0].fragments == (Fragment(0, 4), Fragment(9, 13))
    assert write_standoff(ann) == "T2\tADE 0 4;9 13\trash itch\n"


def test_spaces_instead_of_tabs_is_malformed():
    with pytest.raises(MalformedLine) as err:
        parse_standoff(TEXT, "T3 Drug 5 12 aspirin")
    assert err.value.line == 1


def test_error_carries_line_number():
    with pytest.raises(OffsetOutOfBounds) as err:
        parse_standoff(TEXT, "T1\tDrug 5 12\taspirin\nT2\tDrug 15 40\tx\n", doc_id="d9")
    assert err.value.line == 2 and "d9" in str(err.value)


@pytest.mark.parametrize("line", ["T1\tDrug\tx", "T1\tDrug 5\tx", "T1\tDrug a b\tx", "T1\t 5 12\tx",
                                  "T1\tDrug 5 12;\tx"])
def test_bad_ranges(line):
    with pytest.raises(MalformedLine):
        parse_standoff(TEXT, line)


def test_non_entity_lines_are_counted():
    ann = parse_standoff(TEXT, "T1\tDrug 5 12\taspirin\nR1\tReason-Drug Arg1:T1 Arg2:T1\n#1\tNote T1\tok\n")
    assert len(ann) == 1 and ann.skipped == 2


def test_empty_set_writes_empty_string():
    assert write_standoff(AnnotationSet("d", "gold")) == ""


def test_crlf_ann_lines():
    ann = parse_standoff(TEXT, "T1\tDrug 5 12\taspirin\r\n")
    assert ann.spans[0].surface == "aspirin"


def test_token_tags_basic():
    docs, repairs = parse_token_tags("# doc_id = d1\naspirin\t0\t7\tB-Drug\nsulfate\t8\t15\tI-Drug\ndaily\t16\t21\tO\n")
    assert repairs == 0
    assert [r.tag for r in docs["d1"]] == ["B-Drug", "I-Drug", "O"]
    doc = Document("d1", "aspirin sulfate daily")
    ann = from_token_records(doc, docs["d1"], "m")
    assert [(s.label, s.extent, s.surface) for s in ann.spans] == [("Drug", (0, 15), "aspirin sulfate")]


def test_orphan_inside_is_repaired():
    docs, repairs = parse_token_tags("# doc_id = d1\npo\t0\t2\tI-Route\nqd\t3\t5\tI-Frequency\n")
    assert repairs == 2
    assert [r.tag for r in docs["d1"]] == ["B-Route", "B-Frequency"]


def test_missing_header():
    with pytest.raises(MissingDocHeader):
        parse_token_tags("aspirin\t0\t7\tB-Drug\n")


@pytest.mark.parametrize("body", ["a\t0\t1", "a\t0\t1\tX-Drug", "a\t3\t1\tO", "a\tx\t1\tO"])
def test_token_tags_malformed(body):
    with pytest.raises(MalformedLine):
        parse_token_tags("# doc_id = d\n" + body + "\n")


def test_duplicate_doc_header():
    with pytest.raises(MalformedLine):
        parse_token_tags("# doc_id = d\na\t0\t1\tO\n\n# doc_id = d\n")


@settings(max_examples=200, deadline=None)
@given(tagged_documents(allow_discontinuous=True))
def test_standoff_round_trip(case):
    doc, ann = case
    back = parse_standoff(doc.text, write_standoff(ann), doc_id=ann.doc_id)
    assert back == ann


@settings(max_examples=200, deadline=None)
@given(tagged_documents())
def test_token_tag_round_trip(case):
    doc, ann = case
    records = {doc.doc_id: to_token_records(doc, ann)}
    text = write_token_tags(records)
    parsed, repairs = parse_token_tags(text)
    assert repairs == 0
    assert parsed == records
    assert write_token_tags(parsed) == text


@settings(max_examples=300, deadline=None)
@given(tagged_documents())
def test_parser_never_fails_outside_its_error_types(case):
    # feed garbage built from the document text; only AnnotationError may escape
    doc, _ = case
    for junk in (doc.text, doc.text.replace(" ", "\t"), "T1\t" + doc.text, "# doc_id = x\n" + doc.text):
        for fn in (lambda s: parse_standoff(doc.text, s), parse_token_tags):
            try:
                fn(junk)
            except AnnotationError:
                pass


def test_directory_round_trip(tmp_path, letter):
    doc, gold = letter
    write_corpus_dir(tmp_path / "c", [doc], {doc.doc_id: gold})
    d2, g2 = read_standoff_pair(tmp_path / "c" / f"{doc.doc_id}.txt")
    assert d2 == doc and g2 == gold
    corpus = load_corpus_dir(tmp_path / "c")
    assert corpus.doc_ids == [doc.doc_id]

    (tmp_path / "p.tags").write_text(write_token_tags({doc.doc_id: to_token_records(doc, gold)}), encoding="utf-8")
    preds = load_predictions(tmp_path / "p.tags", corpus)
    assert [(s.label, s.extent) for s in preds[doc.doc_id].spans] == [(s.label, s.extent) for s in gold.spans]


def test_crlf_text_offsets_survive(tmp_path):
    doc = Document("w", "Aspirin\r\nPO daily")
    ann = AnnotationSet("w", "gold", (EntitySpan.make("T1", "Route", (9, 11), surface="PO"),))
    write_corpus_dir(tmp_path, [doc], {"w": ann})
    d2, g2 = read_standoff_pair(tmp_path / "w.txt", strict=True)
    assert d2.text == doc.text and g2 == ann
