"""Corpus utilities: splitting, tokenizing, chunking, BIO conversion,
label statistics and oversampling.
"""

from __future__ import annotations

import bisect
import json
import math
import random
import re
import warnings
from collections import Counter
from dataclasses import dataclass, field, replace
from typing import Iterable, NamedTuple, Sequence

from .errors import BadChunkParams, BadSplitSpec, EmptyCorpus, LabelAbsent, OverlapResolvedWarning, ParameterError
from .model import (
    OUTSIDE,
    AnnotationSet,
    Corpus,
    Document,
    EntitySpan,
    Fragment,
    renumber,
    sort_labels,
    surface_of,
)
from .standoff import TokenTagRecord, repair_iob2

# ---------------------------------------------------------------- splitting


@dataclass(frozen=True)
class SplitSpec:
    ratios: tuple[float, float, float] = (0.70, 0.15, 0.15)
    seed: int = 0

    def __post_init__(self):
        r = tuple(float(x) for x in self.ratios)
        if len(r) != 3 or any(x < 0 for x in r) or abs(sum(r) - 1.0) > 1e-9:
            raise BadSplitSpec(f"ratios must be three non-negative fractions summing to 1, got {self.ratios}")
        object.__setattr__(self, "ratios", r)


def split_sizes(n: int, ratios: Sequence[float]) -> tuple[int, int, int]:
    """Split ``n`` items by ``ratios``.

    Each split first gets ``floor(n * ratio)``; train keeps its floor and the
    leftover documents go round-robin to dev then test (skipping zero-ratio
    splits).  505 documents at 70/15/15 give (353, 76, 76).
    """
    eps = 1e-9
    sizes = [math.floor(n * r + eps) for r in ratios]
    surplus = n - sum(sizes)
    receivers = [i for i in (1, 2) if ratios[i] > 0] or [0]
    i = 0
    while surplus > 0:
        sizes[receivers[i % len(receivers)]] += 1
        surplus -= 1
        i += 1
    return sizes[0], sizes[1], sizes[2]


def split_corpus(corpus: Corpus, spec: SplitSpec = SplitSpec()) -> tuple[Corpus, Corpus, Corpus]:
    """Shuffle documents under ``spec.seed`` and cut into train/dev/test."""
    if not len(corpus):
        raise EmptyCorpus("cannot split an empty corpus")
    ids = sorted(corpus.doc_ids)
    random.Random(spec.seed).shuffle(ids)
    n_train, n_dev, _ = split_sizes(len(ids), spec.ratios)
    parts = ids[:n_train], ids[n_train:n_train + n_dev], ids[n_train + n_dev:]
    return tuple(corpus.subset(sorted(p)) for p in parts)  # type: ignore[return-value]


# --------------------------------------------------------------- tokenizing


class Token(NamedTuple):
    text: str
    start: int
    end: int


_TOKEN_RE = re.compile(r"[^\W_]+|\S")


def tokenize(doc: Document | str) -> list[Token]:
    """Maximal runs of letters/digits; every other non-space char is its own token."""
    text = doc.text if isinstance(doc, Document) else doc
    return [Token(m.group(), m.start(), m.end()) for m in _TOKEN_RE.finditer(text)]


# ----------------------------------------------------------------- chunking


@dataclass(frozen=True)
class Chunk:
    doc_id: str
    index: int
    token_start: int
    token_end: int
    char_offset_base: int
    char_end: int
    text: str = field(repr=False)

    @property
    def chunk_id(self) -> str:
        return f"{self.doc_id}__chunk{self.index:03d}"

    @property
    def n_tokens(self) -> int:
        return self.token_end - self.token_start

    def to_parent(self, offset: int) -> int:
        return offset + self.char_offset_base

    def to_document(self) -> Document:
        return Document(self.chunk_id, self.text)


def chunk_document(doc: Document, max_tokens: int = 512, overlap: int = 0) -> list[Chunk]:
    """Cut a document into windows of at most ``max_tokens`` tokens.

    Consecutive windows share ``overlap`` tokens, so the stride is
    ``max_tokens - overlap``.  Each chunk's text runs from its first token's
    start to its last token's end.
    """
    if not (isinstance(max_tokens, int) and isinstance(overlap, int)) or not max_tokens > overlap >= 0:
        raise BadChunkParams(f"need max_tokens > overlap >= 0, got {max_tokens}/{overlap}")
    tokens = tokenize(doc)
    stride = max_tokens - overlap
    chunks = []
    start = 0
    while start < len(tokens):
        stop = min(start + max_tokens, len(tokens))
        base, end = tokens[start].start, tokens[stop - 1].end
        chunks.append(Chunk(doc.doc_id, len(chunks), start, stop, base, end, doc.text[base:end]))
        if stop == len(tokens):
            break
        start += stride
    return chunks


def chunk_annotations(ann: AnnotationSet, chunks: Sequence[Chunk]) -> list[AnnotationSet]:
    """Project spans onto each chunk, in chunk-local offsets.

    A span crossing a chunk edge is clipped to the part inside the chunk.
    """
    out = []
    for chunk in chunks:
        local = []
        for span in ann.spans:
            frags = []
            for f in span.fragments:
                s, e = max(f.start, chunk.char_offset_base), min(f.end, chunk.char_end)
                if s < e:
                    frags.append(Fragment(s - chunk.char_offset_base, e - chunk.char_offset_base))
            if frags:
                frags_t = tuple(frags)
                local.append(replace(span, fragments=frags_t, surface=surface_of(chunk.text, frags_t)))
        out.append(AnnotationSet(chunk.chunk_id, ann.source, tuple(local)))
    return out


def unchunk_annotations(doc: Document, chunk_sets: Sequence[AnnotationSet], chunks: Sequence[Chunk],
                        source: str | None = None) -> AnnotationSet:
    """Map chunk-local spans back to parent offsets.

    Identical spans produced by overlapping windows are kept once; ids are
    reassigned.
    """
    seen = {}
    for chunk, local in zip(chunks, chunk_sets):
        for span in local.spans:
            parent = span.shifted(chunk.char_offset_base)
            parent = replace(parent, surface=surface_of(doc.text, parent.fragments))
            seen.setdefault((parent.label, parent.fragments), parent)
    src = source or (chunk_sets[0].source if chunk_sets else "gold")
    return AnnotationSet(doc.doc_id, src, tuple(renumber(seen.values())))


# ---------------------------------------------------------- BIO conversion


def _token_hits(tokens: Sequence[Token], ends: list[int], span: EntitySpan) -> list[int]:
    hits = []
    for f in span.fragments:
        i = bisect.bisect_right(ends, f.start)  # first token ending after f.start
        while i < len(tokens) and tokens[i].start < f.end:
            hits.append(i)
            i += 1
    return sorted(set(hits))


def spans_to_bio(tokens: Sequence[Token], spans: Iterable[EntitySpan]) -> list[str]:
    """Tag each token ``B-X``/``I-X``/``O``.

    When spans compete for a token, the span covering more characters wins
    (ties: earlier start, then label name) and the loser is dropped entirely
    with an :class:`OverlapResolvedWarning`.
    """
    tags = [OUTSIDE] * len(tokens)
    owner: list[EntitySpan | None] = [None] * len(tokens)
    ends = [t.end for t in tokens]
    for span in sorted(spans, key=lambda s: (-s.length, s.start, s.label, s.id)):
        hits = _token_hits(tokens, ends, span)
        clash = [owner[i] for i in hits if owner[i] is not None]
        if clash:
            warnings.warn(
                f"span {span.id} ({span.label}) overlaps {clash[0].id} ({clash[0].label}); dropped from BIO",
                OverlapResolvedWarning,
                stacklevel=2,
            )
            continue
        for k, i in enumerate(hits):
            owner[i] = span
            tags[i] = ("B-" if k == 0 else "I-") + span.label
    return tags


def bio_to_spans(tokens: Sequence[Token], tags: Sequence[str], text: str | None = None,
                 prefix: str = "T") -> list[EntitySpan]:
    """Turn maximal B/I runs into single-fragment spans (orphan I- starts a run)."""
    if len(tokens) != len(tags):
        raise ParameterError(f"{len(tokens)} tokens but {len(tags)} tags")
    tags, _ = repair_iob2(list(tags))
    runs: list[tuple[str, int, int]] = []
    for tok, tag in zip(tokens, tags):
        if tag.startswith("B-"):
            runs.append((tag[2:], tok.start, tok.end))
        elif tag.startswith("I-"):
            label, s, _ = runs[-1]
            runs[-1] = (label, s, tok.end)
    spans = []
    for n, (label, s, e) in enumerate(runs, 1):
        surface = text[s:e] if text is not None else ""
        spans.append(EntitySpan(f"{prefix}{n}", label, (Fragment(s, e),), surface))
    return spans


def to_token_records(doc: Document, ann: AnnotationSet) -> list[TokenTagRecord]:
    tokens = tokenize(doc)
    tags = spans_to_bio(tokens, ann.spans)
    return [TokenTagRecord(t.text, t.start, t.end, tag) for t, tag in zip(tokens, tags)]


def from_token_records(doc: Document, records: Sequence[TokenTagRecord], source: str) -> AnnotationSet:
    tokens = [Token(r.token, r.start, r.end) for r in records]
    spans = bio_to_spans(tokens, [r.tag for r in records], doc.text)
    return AnnotationSet(doc.doc_id, source, tuple(spans))


# --------------------------------------------------------------- statistics


@dataclass(frozen=True)
class LabelStats:
    counts: dict[str, int]
    doc_freq: dict[str, int]
    n_docs: int

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def to_tsv(self) -> str:
        lines = ["label\tcount\tdoc_freq"]
        for label in sort_labels(self.counts):
            lines.append(f"{label}\t{self.counts[label]}\t{self.doc_freq.get(label, 0)}")
        lines.append(f"total\t{self.total}\t{self.n_docs}")
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        labels = sort_labels(self.counts)
        payload = {
            "counts": {k: self.counts[k] for k in labels},
            "doc_freq": {k: self.doc_freq.get(k, 0) for k in labels},
            "total": self.total,
            "n_docs": self.n_docs,
        }
        return json.dumps(payload, indent=2) + "\n"


def label_stats(corpus: Corpus) -> LabelStats:
    counts: Counter[str] = Counter()
    doc_freq: Counter[str] = Counter()
    for doc_id in corpus.doc_ids:
        labels = [s.label for s in corpus.gold_for(doc_id).spans]
        counts.update(labels)
        doc_freq.update(set(labels))
    return LabelStats(dict(counts), dict(doc_freq), len(corpus))


# ------------------------------------------------------------- oversampling


def oversample(corpus: Corpus, label: str, factor: float, seed: int = 0) -> Corpus:
    """Duplicate documents containing ``label`` until its gold count reaches
    ``factor`` times the original.

    Copies get ids ``<doc_id>.dup<k>``; gold and predictions are copied with
    them.  Documents are drawn with replacement under ``seed``.
    """
    if factor < 1:
        raise ParameterError(f"factor must be >= 1, got {factor}")
    per_doc = {d: sum(s.label == label for s in corpus.gold_for(d).spans) for d in corpus.doc_ids}
    candidates = sorted(d for d, c in per_doc.items() if c)
    if not candidates:
        raise LabelAbsent(f"no document contains label {label!r}")
    original = sum(per_doc.values())
    target = factor * original
    if original >= target:
        return corpus

    rng = random.Random(seed)
    documents = list(corpus.documents)
    gold = dict(corpus.gold)
    predictions = {src: dict(p) for src, p in corpus.predictions.items()}
    taken = set(corpus.doc_ids)
    dup_index: Counter[str] = Counter()
    count = original
    while count < target:
        src_id = rng.choice(candidates)
        dup_index[src_id] += 1
        new_id = f"{src_id}.dup{dup_index[src_id]}"
        while new_id in taken:
            dup_index[src_id] += 1
            new_id = f"{src_id}.dup{dup_index[src_id]}"
        taken.add(new_id)
        documents.append(Document(new_id, corpus.document(src_id).text))
        gold[new_id] = replace(corpus.gold_for(src_id), doc_id=new_id)
        for src, preds in corpus.predictions.items():
            if src_id in preds:
                predictions[src][new_id] = replace(preds[src_id], doc_id=new_id)
        count += per_doc[src_id]
    return Corpus(tuple(documents), gold, predictions)
