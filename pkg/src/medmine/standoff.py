"""Readers and writers for the two interchange formats.

Stand-off (BRAT-style) entity lines::

    T1<TAB>Drug 5 12<TAB>aspirin
    T2<TAB>ADE 0 4;10 14<TAB>rash itch

Token-tag files, one block per document::

    # doc_id = 100-01
    Aspirin<TAB>0<TAB>7<TAB>B-Drug
    81<TAB>8<TAB>10<TAB>B-Strength

Blocks are separated by blank lines.
"""

from __future__ import annotations

import logging
import re
from pathlib import Path
from typing import Iterable, Mapping, NamedTuple

from .errors import AnnotationError, MalformedLine, MedMineError, MissingDocHeader
from .model import AnnotationSet, Document, EntitySpan, Fragment, OUTSIDE, parse_label, validate_span

log = logging.getLogger(__name__)

ENTITY_PREFIX = "T"


def _lines(content: str) -> list[str]:
    return [line.rstrip("\r") for line in content.split("\n")]


def _parse_ranges(spec: str) -> tuple[Fragment, ...]:
    frags = []
    for part in spec.split(";"):
        bits = part.split()
        if len(bits) != 2:
            raise ValueError(f"bad range {part!r}")
        frags.append(Fragment(int(bits[0]), int(bits[1])))
    return tuple(frags)


def parse_standoff(
    text_content: str,
    ann_content: str,
    *,
    doc_id: str = "",
    source: str = "gold",
    strict: bool = False,
) -> AnnotationSet:
    """Parse one ``.ann`` file against its ``.txt`` content.

    Lines whose id does not start with ``T`` (relations, attributes, notes)
    are skipped and counted in ``AnnotationSet.skipped``.  Every failure is
    raised as an :class:`AnnotationError` carrying the 1-based line number.
    """
    spans: list[EntitySpan] = []
    skipped = 0
    seen: set[str] = set()
    for lineno, line in enumerate(_lines(ann_content), 1):
        if not line.strip():
            continue
        parts = line.split("\t", 2)
        if not parts[0].startswith(ENTITY_PREFIX):
            skipped += 1
            continue
        if len(parts) != 3:
            raise MalformedLine("expected 'ID<TAB>LABEL RANGES<TAB>SURFACE'", line=lineno, doc_id=doc_id)
        ent_id, body, surface = parts
        label_name, _, ranges = body.strip().partition(" ")
        try:
            fragments = _parse_ranges(ranges)
        except ValueError as exc:
            raise MalformedLine(f"cannot parse ranges {ranges!r}: {exc}", line=lineno, doc_id=doc_id) from None
        if not label_name or ent_id in seen:
            what = "missing label" if not label_name else f"duplicate id {ent_id}"
            raise MalformedLine(what, line=lineno, doc_id=doc_id)
        seen.add(ent_id)
        span = EntitySpan(ent_id, parse_label(label_name), fragments, surface)
        try:
            spans.append(validate_span(text_content, span, strict=strict))
        except AnnotationError as exc:
            raise exc.located(line=lineno, doc_id=doc_id)
    return AnnotationSet(doc_id, source, tuple(spans), skipped=skipped)


def _format_ranges(span: EntitySpan) -> str:
    return ";".join(f"{f.start} {f.end}" for f in span.fragments)


def write_standoff(ann: AnnotationSet) -> str:
    """Serialize entity spans; newlines inside surfaces become spaces."""
    out = []
    for span in ann.spans:
        surface = span.surface.replace("\r", " ").replace("\n", " ")
        out.append(f"{span.id}\t{span.label} {_format_ranges(span)}\t{surface}\n")
    return "".join(out)


class TokenTagRecord(NamedTuple):
    token: str
    start: int
    end: int
    tag: str


_HEADER = re.compile(r"^#[ ]*doc_id[ ]*=[ ]*(?P<doc_id>[^\t]*?)[ ]*$")


def _parse_tag(tag: str) -> str:
    if tag == OUTSIDE:
        return tag
    prefix, sep, label = tag.partition("-")
    if not sep or prefix not in ("B", "I") or not label:
        raise ValueError(f"tag {tag!r} is not O, B-X or I-X")
    return f"{prefix}-{parse_label(label)}"


def repair_iob2(tags: list[str]) -> tuple[list[str], int]:
    """Promote every orphan ``I-X`` (not after ``B-X``/``I-X``) to ``B-X``."""
    out = []
    repairs = 0
    prev = OUTSIDE
    for tag in tags:
        if tag.startswith("I-") and (prev == OUTSIDE or prev[2:] != tag[2:]):
            tag = "B-" + tag[2:]
            repairs += 1
        out.append(tag)
        prev = tag
    return out, repairs


def parse_token_tags(content: str) -> tuple[dict[str, list[TokenTagRecord]], int]:
    """Parse a token-tag file.

    Returns the records grouped by doc_id (in file order) and the number of
    IOB2 repairs performed.
    """
    docs: dict[str, list[TokenTagRecord]] = {}
    current: str | None = None
    for lineno, line in enumerate(_lines(content), 1):
        if not line.strip():
            current = None
            continue
        header = _HEADER.match(line)
        if header:
            current = header.group("doc_id")
            if not current or current in docs:
                what = "empty doc_id" if not current else f"duplicate doc_id {current!r}"
                raise MalformedLine(what, line=lineno)
            docs[current] = []
            continue
        if current is None:
            raise MissingDocHeader("token line outside a '# doc_id = X' block", line=lineno)
        parts = line.split("\t")
        if len(parts) != 4:
            raise MalformedLine("expected 'token<TAB>start<TAB>end<TAB>tag'", line=lineno, doc_id=current)
        token, start, end, tag = parts
        try:
            s, e = int(start), int(end)
            if not 0 <= s < e:
                raise ValueError(f"bad offsets ({start},{end})")
            tag = _parse_tag(tag.strip())
        except ValueError as exc:
            raise MalformedLine(str(exc), line=lineno, doc_id=current) from None
        docs[current].append(TokenTagRecord(token, s, e, tag))

    repairs = 0
    for doc_id, records in docs.items():
        fixed, n = repair_iob2([r.tag for r in records])
        if n:
            log.warning("%s: repaired %d orphan I- tags", doc_id, n)
            docs[doc_id] = [r._replace(tag=t) for r, t in zip(records, fixed)]
            repairs += n
    return docs, repairs


def write_token_tags(docs: Mapping[str, Iterable[TokenTagRecord]]) -> str:
    blocks = []
    for doc_id, records in docs.items():
        lines = [f"# doc_id = {doc_id}"]
        lines += [f"{r.token}\t{r.start}\t{r.end}\t{r.tag}" for r in records]
        blocks.append("\n".join(lines) + "\n")
    return "\n".join(blocks)


def read_text(path: Path) -> str:
    """Read a UTF-8 file, reporting undecodable bytes as a data error."""
    try:
        return Path(path).read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise MedMineError(f"{path}: not valid UTF-8 ({exc.reason} at byte {exc.start})") from None


def read_document(txt_path: Path) -> Document:
    txt_path = Path(txt_path)
    # newline="" keeps \r\n intact so offsets match the file on disk
    with open(txt_path, encoding="utf-8", newline="") as fh:
        try:
            text = fh.read()
        except UnicodeDecodeError as exc:
            raise MedMineError(f"{txt_path}: not valid UTF-8 ({exc.reason})") from None
    return Document(txt_path.stem, text)


def read_standoff_pair(txt_path: Path, ann_path: Path | None = None, *, source: str = "gold",
                       strict: bool = False) -> tuple[Document, AnnotationSet]:
    doc = read_document(txt_path)
    ann_path = Path(ann_path) if ann_path else Path(txt_path).with_suffix(".ann")
    content = read_text(ann_path) if ann_path.exists() else ""
    try:
        ann = parse_standoff(doc.text, content, doc_id=doc.doc_id, source=source, strict=strict)
    except AnnotationError as exc:
        exc.message = f"{ann_path}: {exc.message}"
        raise exc.located()
    return doc, ann


# ------------------------------------------------------------ directories


def _map(fn, items, executor=None):
    return list(executor.map(fn, items)) if executor is not None else [fn(i) for i in items]


def load_corpus_dir(directory: Path, *, strict: bool = False, executor=None):
    """Load ``<id>.txt`` / ``<id>.ann`` pairs (a missing ``.ann`` means no gold).

    Documents come back sorted by doc_id regardless of ``executor``.
    """
    from .model import Corpus

    directory = Path(directory)
    if not directory.is_dir():
        raise MedMineError(f"{directory}: not a directory")
    txts = sorted(directory.glob("*.txt"))
    pairs = _map(lambda p: read_standoff_pair(p, strict=strict), txts, executor)
    return Corpus(tuple(d for d, _ in pairs), {a.doc_id: a for _, a in pairs})


def load_predictions(path: Path, corpus, *, source: str | None = None, strict: bool = False,
                     executor=None) -> dict[str, AnnotationSet]:
    """Read predictions for ``corpus`` from a directory of ``.ann`` files or a
    token-tag file.

    Documents without a prediction file get an empty set.  Predictions for
    documents that are not in the corpus raise :class:`DocMismatch`.
    """
    from .corpus import from_token_records
    from .errors import DocMismatch

    path = Path(path)
    source = source or path.stem
    known = {d.doc_id: d for d in corpus.documents}
    if path.is_dir():
        anns = sorted(path.glob("*.ann"))
        stray = [p.stem for p in anns if p.stem not in known]
        if stray:
            raise DocMismatch(f"{path}: predictions for unknown documents {stray}")

        def load(p: Path) -> AnnotationSet:
            try:
                return parse_standoff(known[p.stem].text, read_text(p), doc_id=p.stem, source=source, strict=strict)
            except AnnotationError as exc:
                exc.message = f"{p}: {exc.message}"
                raise exc.located()

        out = {a.doc_id: a for a in _map(load, anns, executor)}
    elif path.is_file():
        try:
            records, _ = parse_token_tags(read_text(path))
        except AnnotationError as exc:
            exc.message = f"{path}: {exc.message}"
            raise exc.located()
        stray = [d for d in records if d not in known]
        if stray:
            raise DocMismatch(f"{path}: predictions for unknown documents {stray}")
        out = {}
        for d, recs in records.items():
            try:
                out[d] = from_token_records(known[d], recs, source).validated(known[d], strict=strict)
            except AnnotationError as exc:
                exc.message = f"{path}: {exc.message}"
                raise exc.located(doc_id=d)
    else:
        raise MedMineError(f"{path}: no such file or directory")
    return {d: out.get(d) or AnnotationSet(d, source) for d in sorted(known)}


def write_corpus_dir(directory: Path, documents, annotations: Mapping[str, AnnotationSet] | None = None,
                     *, texts: bool = True) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for doc in documents:
        if texts:
            with open(directory / f"{doc.doc_id}.txt", "w", encoding="utf-8", newline="") as fh:
                fh.write(doc.text)
        if annotations is not None:
            ann = annotations.get(doc.doc_id) or AnnotationSet(doc.doc_id, "gold")
            with open(directory / f"{doc.doc_id}.ann", "w", encoding="utf-8", newline="") as fh:
                fh.write(write_standoff(ann))
