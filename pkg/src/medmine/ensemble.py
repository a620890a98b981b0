"""Merging prediction sets from several models into one.

None of these rules is learned; each is a deterministic, auditable policy.
Merged spans keep the name of the model they came from in ``span.source``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence, Union as _U

from .errors import DocMismatch, MissingDevReport, MissingLabel
from .matcher import MatchMode, classify_pair, overlap
from .metrics import PRF, EvaluationReport
from .model import AnnotationSet, EntitySpan, renumber, sort_labels


@dataclass(frozen=True)
class Union:
    """All spans of all sources; identical spans are kept once.

    Overlapping spans from different sources with different labels conflict;
    the span from the earlier source in ``priority`` (default: input order)
    wins.  Set ``resolve_conflicts=False`` to keep everything.
    """

    priority: tuple[str, ...] | None = None
    resolve_conflicts: bool = True


@dataclass(frozen=True)
class Intersection:
    """Spans of the first source that have a COR-matching span in every other source."""

    mode: MatchMode = MatchMode.TYPE


@dataclass(frozen=True)
class PerLabelBest:
    """For each label, trust only the source with the best dev F1 on it."""

    dev_reports: Mapping[str, EvaluationReport | Mapping[str, PRF]] = field(default_factory=dict)


@dataclass(frozen=True)
class Priority:
    """Everything from the first source, then spans of later sources that do
    not overlap anything already kept."""

    order: tuple[str, ...] = ()


MergeStrategy = _U[Union, Intersection, PerLabelBest, Priority]


def _check_docs(predictions: Mapping[str, AnnotationSet]) -> str:
    if not predictions:
        raise DocMismatch("nothing to merge")
    doc_ids = {a.doc_id for a in predictions.values()}
    if len(doc_ids) != 1:
        raise DocMismatch(f"prediction sets refer to different documents: {sorted(doc_ids)}")
    return doc_ids.pop()


def _ordered_sources(predictions: Mapping[str, AnnotationSet], order: Sequence[str] | None) -> list[str]:
    names = list(predictions)
    if not order:
        return names
    unknown = [s for s in order if s not in predictions]
    if unknown:
        raise DocMismatch(f"priority names unknown sources {unknown}")
    return list(order) + [s for s in names if s not in order]


def _tagged(ann: AnnotationSet, source: str) -> list[EntitySpan]:
    return [replace(s, source=s.source or source) for s in ann.spans]


def _finish(doc_id: str, spans: list[EntitySpan]) -> AnnotationSet:
    ids = [s.id for s in spans]
    if len(set(ids)) != len(ids):
        spans = renumber(spans)
    return AnnotationSet(doc_id, "merged", tuple(spans))


def _conflicts(span: EntitySpan, kept: Sequence[EntitySpan], *, cross_source_only: bool) -> bool:
    for k in kept:
        if cross_source_only and k.source == span.source:
            continue
        if k.label != span.label and overlap(k, span) > 0:
            return True
    return False


def _merge_union(predictions, strategy: Union) -> list[EntitySpan]:
    kept: list[EntitySpan] = []
    seen = set()
    for name in _ordered_sources(predictions, strategy.priority):
        for span in _tagged(predictions[name], name):
            key = (span.label, span.fragments)
            if key in seen:
                continue
            if strategy.resolve_conflicts and _conflicts(span, kept, cross_source_only=True):
                continue
            seen.add(key)
            kept.append(span)
    return kept


def _matches(span: EntitySpan, other: AnnotationSet, mode: MatchMode) -> bool:
    return any(overlap(span, o) > 0 and classify_pair(o, span, mode) == "cor" for o in other.spans)


def _merge_intersection(predictions, strategy: Intersection) -> list[EntitySpan]:
    names = list(predictions)
    first, rest = names[0], names[1:]
    return [s for s in _tagged(predictions[first], first)
            if all(_matches(s, predictions[n], strategy.mode) for n in rest)]


def _merge_priority(predictions, strategy: Priority) -> list[EntitySpan]:
    kept: list[EntitySpan] = []
    for name in _ordered_sources(predictions, strategy.order):
        additions = [s for s in _tagged(predictions[name], name) if not any(overlap(s, k) for k in kept)]
        kept.extend(additions)
    return kept


def _f1_table(report: EvaluationReport | Mapping[str, PRF]) -> dict[str, float]:
    rows = report.per_label if isinstance(report, EvaluationReport) else report
    return {label: (row.f1 if isinstance(row, PRF) else float(row)) for label, row in rows.items()}


def per_label_table(dev_reports: Mapping[str, EvaluationReport | Mapping[str, PRF]]) -> dict[str, str]:
    """Pick, for every label, the source with the highest dev F1.

    Ties go to the source listed first.  Every report must cover the same
    labels.
    """
    if not dev_reports:
        raise MissingDevReport("no dev reports given")
    tables = {src: _f1_table(r) for src, r in dev_reports.items()}
    labels = set().union(*tables.values())
    for src, t in tables.items():
        missing = labels - set(t)
        if missing:
            raise MissingLabel(f"dev report for {src} lacks labels {sort_labels(missing)}")
    choice = {}
    for label in sort_labels(labels):
        best = None
        for src, t in tables.items():
            if best is None or t[label] > tables[best][label]:
                best = src
        choice[label] = best
    return choice


def _merge_per_label_best(predictions, strategy: PerLabelBest) -> list[EntitySpan]:
    missing = [s for s in predictions if s not in strategy.dev_reports]
    if missing:
        raise MissingDevReport(f"no dev report for sources {missing}")
    reports = {s: strategy.dev_reports[s] for s in predictions}
    table = per_label_table(reports)
    f1 = {src: _f1_table(r) for src, r in reports.items()}
    order = list(predictions)

    chosen = []
    for name in order:
        for span in _tagged(predictions[name], name):
            if span.label not in table:
                raise MissingLabel(f"no dev score for label {span.label!r}")
            if table[span.label] == name:
                chosen.append(span)
    # higher dev F1 wins cross-source, cross-label overlaps
    chosen.sort(key=lambda s: (-f1[s.source][s.label], order.index(s.source), s.start, s.end, s.id))
    kept: list[EntitySpan] = []
    for span in chosen:
        if not _conflicts(span, kept, cross_source_only=True):
            kept.append(span)
    return kept


def merge(predictions: Mapping[str, AnnotationSet], strategy: MergeStrategy = Union()) -> AnnotationSet:
    """Merge per-source predictions for one document.

    ``predictions`` maps source name to its annotation set; insertion order is
    the default priority.
    """
    doc_id = _check_docs(predictions)
    if isinstance(strategy, Union):
        spans = _merge_union(predictions, strategy)
    elif isinstance(strategy, Intersection):
        spans = _merge_intersection(predictions, strategy)
    elif isinstance(strategy, Priority):
        spans = _merge_priority(predictions, strategy)
    elif isinstance(strategy, PerLabelBest):
        spans = _merge_per_label_best(predictions, strategy)
    else:
        raise TypeError(f"unknown merge strategy {strategy!r}")
    return _finish(doc_id, spans)


def provenance(merged: AnnotationSet) -> list[dict]:
    return [{"id": s.id, "label": s.label, "source": s.source} for s in merged.spans]


def provenance_json(merged_sets: Sequence[AnnotationSet]) -> str:
    payload = {a.doc_id: provenance(a) for a in sorted(merged_sets, key=lambda a: a.doc_id)}
    return json.dumps(payload, indent=2) + "\n"
