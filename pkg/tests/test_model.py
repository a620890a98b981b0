import warnings

import pytest

from medmine.errors import (DocMismatch, DuplicateSpanId, FragmentOverlap, OffsetOutOfBounds, SurfaceMismatch,
                            SurfaceMismatchWarning, UnknownLabelWarning)
from medmine.model import (ENTITY_LABELS, AnnotationSet, Corpus, Document, EntitySpan, Fragment, parse_label,
                           renumber, sort_labels, validate_span)


def test_parse_label_is_case_insensitive():
    assert parse_label("drug") == "Drug"
    assert parse_label("ADE") == "ADE"
    assert parse_label("ade") == "ADE"
    assert parse_label(" Frequency ") == "Frequency"


def test_unknown_label_is_carried_with_warning():
    with pytest.warns(UnknownLabelWarning):
        assert parse_label("Temporal") == "Temporal"


def test_sort_labels_puts_unknown_then_o_last():
    assert sort_labels(["O", "Zeta", "ADE", "Drug"]) == ["Drug", "ADE", "Zeta", "O"]
    assert sort_labels(ENTITY_LABELS[::-1]) == list(ENTITY_LABELS)


def test_validate_recomputes_surface():
    span = validate_span(Document("d", "take aspirin daily"), EntitySpan.make("T1", "Drug", (5, 12)))
    assert span.surface == "aspirin"
    assert span.extent == (5, 12)


def test_empty_fragment_is_out_of_bounds():
    with pytest.raises(OffsetOutOfBounds):
        validate_span("take aspirin daily", EntitySpan.make("T1", "Drug", (10, 10)))
    with pytest.raises(OffsetOutOfBounds):
        validate_span("short", EntitySpan.make("T1", "Drug", (2, 9)))


def test_overlapping_fragments_rejected():
    with pytest.raises(FragmentOverlap):
        validate_span("abcdefghijkl", EntitySpan.make("T1", "ADE", (0, 4), (3, 8)))


def test_fragments_are_sorted_and_joined_with_space():
    span = validate_span("rash and itch", EntitySpan.make("T1", "ADE", (9, 13), (0, 4)))
    assert span.fragments == (Fragment(0, 4), Fragment(9, 13))
    assert span.surface == "rash itch"
    assert span.extent == (0, 13)
    assert span.length == 8


def test_surface_mismatch_warns_or_raises():
    span = EntitySpan.make("T1", "Drug", (5, 12), surface="aspirn")
    with pytest.warns(SurfaceMismatchWarning):
        assert validate_span("take aspirin daily", span).surface == "aspirin"
    with pytest.raises(SurfaceMismatch):
        validate_span("take aspirin daily", span, strict=True)


def test_whitespace_only_surface_difference_is_silent():
    span = EntitySpan.make("T1", "Drug", (0, 6), surface="a b c")
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert validate_span("a\nb  c xx", span).surface == "a\nb  c"


def test_offsets_are_code_points():
    text = "naïve Ωmega dose"
    span = validate_span(text, EntitySpan.make("T1", "Drug", (6, 11)))
    assert span.surface == "Ωmega"


def test_annotation_set_is_order_independent():
    a = EntitySpan.make("T1", "Drug", (0, 4))
    b = EntitySpan.make("T2", "Route", (5, 7))
    assert AnnotationSet("d", "gold", (a, b)) == AnnotationSet("d", "gold", (b, a))


def test_duplicate_span_ids_raise():
    a = EntitySpan.make("T1", "Drug", (0, 4))
    with pytest.raises(DuplicateSpanId):
        AnnotationSet("d", "gold", (a, EntitySpan.make("T1", "Route", (5, 7))))


def test_source_is_not_part_of_equality():
    a = EntitySpan.make("T1", "Drug", (0, 4))
    from dataclasses import replace
    assert replace(a, source="m1") == a


def test_renumber_uses_canonical_order():
    spans = renumber([EntitySpan.make("x", "Drug", (5, 7)), EntitySpan.make("y", "Drug", (0, 2))])
    assert [(s.id, s.start) for s in spans] == [("T1", 0), ("T2", 5)]


def test_corpus_rejects_stray_and_duplicate_docs():
    docs = (Document("a", "x"), Document("b", "y"))
    with pytest.raises(DocMismatch):
        Corpus(docs, {"c": AnnotationSet("c", "gold")})
    with pytest.raises(DocMismatch):
        Corpus(docs + (Document("a", "z"),))
    c = Corpus(docs, {"a": AnnotationSet("a", "gold")})
    assert c.subset(["b"]).doc_ids == ["b"]
    assert len(c.gold_for("b")) == 0
