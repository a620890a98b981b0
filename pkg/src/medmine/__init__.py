"""Medication-entity corpus tools and SemEval-2013 style NER evaluation."""

__version__ = "0.1.0"

from .errors import MedMineError
from .matcher import ALL_MODES, Alignment, MatchCounts, MatchMode, align, classify, overlap, score_corpus
from .metrics import PRF, EvaluationReport, aggregate, build_report, filter_and_reaggregate, prf_from_counts, \
    render_report, token_accuracy
from .model import ENTITY_LABELS, MED7_LABELS, AnnotationSet, Corpus, Document, EntitySpan, Fragment, parse_label, \
    validate_span

__all__ = [
    "ALL_MODES", "Alignment", "AnnotationSet", "Corpus", "Document", "ENTITY_LABELS", "EntitySpan",
    "EvaluationReport", "Fragment", "MED7_LABELS", "MatchCounts", "MatchMode", "MedMineError", "PRF",
    "aggregate", "align", "build_report", "classify", "filter_and_reaggregate", "overlap", "parse_label",
    "prf_from_counts", "render_report", "score_corpus", "token_accuracy", "validate_span",
]
