"""Domain types: labels, fragments, entity spans, documents and corpora.

Offsets are 0-based, half-open ``[start, end)`` and count Unicode code
points (Python ``str`` indices), never bytes.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

from .errors import (
    DocMismatch,
    DuplicateSpanId,
    FragmentOverlap,
    OffsetOutOfBounds,
    SurfaceMismatch,
    SurfaceMismatchWarning,
    UnknownLabelWarning,
)

# n2c2-2018 track 2 entity labels, in reporting order.
ENTITY_LABELS: tuple[str, ...] = (
    "Drug",
    "Strength",
    "Form",
    "Frequency",
    "Route",
    "Dosage",
    "Duration",
    "Reason",
    "ADE",
)
# The seven labels the original Med7 model emits.
MED7_LABELS: tuple[str, ...] = ENTITY_LABELS[:7]
OUTSIDE = "O"

_CANONICAL = {name.lower(): name for name in ENTITY_LABELS + (OUTSIDE,)}


def parse_label(name: str) -> str:
    """Return the canonical spelling of ``name``.

    Matching is case-insensitive.  Unknown names are returned verbatim (after
    stripping whitespace) and an :class:`UnknownLabelWarning` is emitted.
    """
    key = name.strip()
    canonical = _CANONICAL.get(key.lower())
    if canonical is None:
        warnings.warn(f"unknown label {key!r} carried verbatim", UnknownLabelWarning, stacklevel=2)
        return key
    return canonical


def is_known_label(name: str) -> bool:
    return name in ENTITY_LABELS


def label_sort_key(name: str) -> tuple[int, str]:
    """Canonical report order: known entity labels, then unknown ones, then O."""
    if name == OUTSIDE:
        return (len(ENTITY_LABELS) + 1, name)
    if name in ENTITY_LABELS:
        return (ENTITY_LABELS.index(name), name)
    return (len(ENTITY_LABELS), name)


def sort_labels(labels: Iterable[str]) -> list[str]:
    return sorted(set(labels), key=label_sort_key)


@dataclass(frozen=True, order=True)
class Fragment:
    start: int
    end: int

    def __len__(self) -> int:
        return self.end - self.start


@dataclass(frozen=True)
class EntitySpan:
    """One annotated entity.

    ``fragments`` holds one range for a contiguous mention and several for a
    discontinuous one.  ``source`` records provenance after merging and is
    ignored by equality.
    """

    id: str
    label: str
    fragments: tuple[Fragment, ...]
    surface: str = ""
    source: str | None = field(default=None, compare=False)

    def __post_init__(self):
        frags = tuple(f if isinstance(f, Fragment) else Fragment(*f) for f in self.fragments)
        object.__setattr__(self, "fragments", frags)

    @classmethod
    def make(cls, id: str, label: str, *ranges: tuple[int, int], surface: str = "") -> "EntitySpan":
        return cls(id, label, tuple(Fragment(s, e) for s, e in ranges), surface)

    @property
    def start(self) -> int:
        return min(f.start for f in self.fragments)

    @property
    def end(self) -> int:
        return max(f.end for f in self.fragments)

    @property
    def extent(self) -> tuple[int, int]:
        return (self.start, self.end)

    @property
    def length(self) -> int:
        """Number of characters covered by the fragments."""
        return sum(len(f) for f in self.fragments)

    def shifted(self, delta: int) -> "EntitySpan":
        return replace(self, fragments=tuple(Fragment(f.start + delta, f.end + delta) for f in self.fragments))


def _normalize_ws(s: str) -> str:
    return " ".join(s.split())


@dataclass(frozen=True)
class Document:
    doc_id: str
    text: str


def surface_of(text: str, fragments: Sequence[Fragment]) -> str:
    return " ".join(text[f.start:f.end] for f in fragments)


def validate_span(doc: Document | str, span: EntitySpan, *, strict: bool = False) -> EntitySpan:
    """Check a span against its document text and recompute its surface.

    Fragments are sorted by start.  A surface that disagrees with the text
    (after whitespace normalization) raises :class:`SurfaceMismatch` when
    ``strict`` is set and only warns otherwise; an empty surface is never a
    mismatch.  With ``strict`` the comparison is exact.
    """
    text = doc.text if isinstance(doc, Document) else doc
    if not span.fragments:
        raise OffsetOutOfBounds(f"span {span.id} has no fragments")
    frags = tuple(sorted(span.fragments))
    for f in frags:
        if not (0 <= f.start < f.end <= len(text)):
            raise OffsetOutOfBounds(
                f"span {span.id}: fragment ({f.start},{f.end}) outside [0,{len(text)}] or empty"
            )
    for a, b in zip(frags, frags[1:]):
        if b.start < a.end:
            raise FragmentOverlap(f"span {span.id}: fragments ({a.start},{a.end}) and ({b.start},{b.end}) overlap")
    surface = surface_of(text, frags)
    if span.surface and span.surface != surface:
        if strict:
            raise SurfaceMismatch(f"span {span.id}: surface {span.surface!r} != text {surface!r}")
        if _normalize_ws(span.surface) != _normalize_ws(surface):
            warnings.warn(
                f"span {span.id}: surface {span.surface!r} != text {surface!r}",
                SurfaceMismatchWarning,
                stacklevel=2,
            )
    return replace(span, fragments=frags, surface=surface)


def _span_order(span: EntitySpan) -> tuple:
    return (span.start, span.end, span.fragments, span.label, span.id)


@dataclass(frozen=True)
class AnnotationSet:
    """All entity spans of one document from one source ("gold" or a model name).

    Spans are kept in a canonical order (by extent, then label, then id) so
    equality does not depend on input order.  ``skipped`` counts non-entity
    lines dropped by the stand-off parser and does not take part in equality.
    """

    doc_id: str
    source: str
    spans: tuple[EntitySpan, ...] = ()
    skipped: int = field(default=0, compare=False)

    def __post_init__(self):
        spans = tuple(sorted(self.spans, key=_span_order))
        ids = [s.id for s in spans]
        if len(set(ids)) != len(ids):
            dupes = sorted({i for i in ids if ids.count(i) > 1})
            raise DuplicateSpanId(f"duplicate span ids {dupes}", doc_id=self.doc_id)
        object.__setattr__(self, "spans", spans)

    def __len__(self) -> int:
        return len(self.spans)

    def __iter__(self):
        return iter(self.spans)

    def labels(self) -> set[str]:
        return {s.label for s in self.spans}

    def validated(self, doc: Document, *, strict: bool = False) -> "AnnotationSet":
        return replace(self, spans=tuple(validate_span(doc, s, strict=strict) for s in self.spans))

    def with_spans(self, spans: Iterable[EntitySpan]) -> "AnnotationSet":
        return replace(self, spans=tuple(spans))

    def without_labels(self, labels: Iterable[str]) -> "AnnotationSet":
        drop = set(labels)
        return self.with_spans(s for s in self.spans if s.label not in drop)


def renumber(spans: Iterable[EntitySpan], prefix: str = "T") -> list[EntitySpan]:
    """Assign fresh ids ``T1..Tn`` in canonical span order."""
    ordered = sorted(spans, key=lambda s: (s.start, s.end, s.fragments, s.label))
    return [replace(s, id=f"{prefix}{i}") for i, s in enumerate(ordered, 1)]


@dataclass(frozen=True)
class Corpus:
    """Documents plus gold annotations and any number of prediction sources."""

    documents: tuple[Document, ...]
    gold: Mapping[str, AnnotationSet] = field(default_factory=dict)
    predictions: Mapping[str, Mapping[str, AnnotationSet]] = field(default_factory=dict)

    def __post_init__(self):
        docs = tuple(self.documents)
        object.__setattr__(self, "documents", docs)
        ids = [d.doc_id for d in docs]
        if len(set(ids)) != len(ids):
            raise DocMismatch("duplicate doc_id in corpus")
        known = set(ids)
        stray = [k for k in self.gold if k not in known]
        for preds in self.predictions.values():
            stray += [k for k in preds if k not in known]
        if stray:
            raise DocMismatch(f"annotations for unknown documents: {sorted(set(stray))}")

    def __len__(self) -> int:
        return len(self.documents)

    @property
    def doc_ids(self) -> list[str]:
        return [d.doc_id for d in self.documents]

    def document(self, doc_id: str) -> Document:
        for d in self.documents:
            if d.doc_id == doc_id:
                return d
        raise KeyError(doc_id)

    def gold_for(self, doc_id: str) -> AnnotationSet:
        return self.gold.get(doc_id) or AnnotationSet(doc_id, "gold")

    def predictions_for(self, source: str, doc_id: str) -> AnnotationSet:
        return self.predictions.get(source, {}).get(doc_id) or AnnotationSet(doc_id, source)

    def subset(self, doc_ids: Iterable[str]) -> "Corpus":
        keep = list(doc_ids)
        wanted = set(keep)
        by_id = {d.doc_id: d for d in self.documents}
        return Corpus(
            documents=tuple(by_id[i] for i in keep),
            gold={k: v for k, v in self.gold.items() if k in wanted},
            predictions={src: {k: v for k, v in p.items() if k in wanted} for src, p in self.predictions.items()},
        )
