"""Precision/recall/F1 reports with micro, macro and weighted averages."""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from dataclasses import dataclass, field
from typing import Mapping, NamedTuple, Sequence, Union

from .errors import AllLabelsExcluded, EmptyReport, LengthMismatch, MedMineError
from .matcher import MatchCounts, MatchMode, sum_counts
from .model import parse_label, sort_labels

PARTIAL_CREDIT = 0.5


@dataclass(frozen=True)
class PRF:
    precision: float
    recall: float
    f1: float
    support: int
    # set when a zero denominator forced a score to 0
    undefined: bool = field(default=False, compare=False)

    @classmethod
    def from_pr(cls, precision: float, recall: float, support: int, undefined: bool = False) -> "PRF":
        return cls(precision, recall, harmonic_mean(precision, recall), support, undefined)


def harmonic_mean(p: float, r: float) -> float:
    return 2 * p * r / (p + r) if p + r > 0 else 0.0


def prf_from_counts(c: MatchCounts, mode: MatchMode | str = MatchMode.TYPE) -> PRF:
    """Precision = credit/ACTUAL, recall = credit/POSSIBLE.

    Credit is COR, plus half of PAR in partial mode.
    """
    mode = MatchMode.parse(mode)
    credit = c.cor + (PARTIAL_CREDIT * c.par if mode is MatchMode.PARTIAL else 0)
    undefined = c.actual == 0 or c.possible == 0
    p = credit / c.actual if c.actual else 0.0
    r = credit / c.possible if c.possible else 0.0
    return PRF.from_pr(p, r, c.possible, undefined)


Row = Union[MatchCounts, PRF]


class Aggregates(NamedTuple):
    micro: PRF | None
    macro: PRF
    weighted: PRF


def _as_prf(row: Row, mode: MatchMode) -> PRF:
    return row if isinstance(row, PRF) else prf_from_counts(row, mode)


def _included(rows: Mapping[str, Row]) -> dict[str, Row]:
    # count-based labels with neither gold nor predicted spans carry no information
    return {k: v for k, v in rows.items() if isinstance(v, PRF) or v.possible or v.actual}


def aggregate(rows: Mapping[str, Row], mode: MatchMode | str = MatchMode.TYPE) -> Aggregates:
    """Micro, macro and weighted averages over per-label rows.

    Rows may be raw :class:`MatchCounts` or already-computed :class:`PRF`
    (e.g. rows copied from a published table).  Macro averages each of P, R
    and F1 separately; weighted uses gold support as weights.  Micro needs
    counts, so it is ``None`` unless every row is a ``MatchCounts``.
    """
    mode = MatchMode.parse(mode)
    rows = _included(rows)
    prfs = {k: _as_prf(v, mode) for k, v in rows.items()}
    total = sum(p.support for p in prfs.values())
    if not prfs or total <= 0:
        raise EmptyReport("no label with positive support")

    n = len(prfs)
    macro = PRF(
        sum(p.precision for p in prfs.values()) / n,
        sum(p.recall for p in prfs.values()) / n,
        sum(p.f1 for p in prfs.values()) / n,
        total,
    )
    weighted = PRF(
        sum(p.precision * p.support for p in prfs.values()) / total,
        sum(p.recall * p.support for p in prfs.values()) / total,
        sum(p.f1 * p.support for p in prfs.values()) / total,
        total,
    )
    micro = None
    if all(isinstance(v, MatchCounts) for v in rows.values()):
        micro = prf_from_counts(sum_counts(rows.values()), mode)  # type: ignore[arg-type]
    return Aggregates(micro, macro, weighted)


@dataclass(frozen=True)
class EvaluationReport:
    mode: MatchMode
    per_label: dict[str, PRF]
    micro: PRF | None
    macro: PRF
    weighted: PRF
    total_support: int
    token_accuracy: float | None = None
    token_count: int | None = None
    counts: dict[str, MatchCounts] | None = None
    excluded: tuple[str, ...] = ()

    def labels(self) -> list[str]:
        return sort_labels(self.per_label)


def build_report(rows: Mapping[str, Row], mode: MatchMode | str = MatchMode.TYPE, *,
                 token_accuracy: float | None = None, token_count: int | None = None,
                 excluded: Sequence[str] = ()) -> EvaluationReport:
    mode = MatchMode.parse(mode)
    kept = _included(rows)
    micro, macro, weighted = aggregate(kept, mode)
    per_label = {k: _as_prf(v, mode) for k, v in kept.items()}
    counts = {k: v for k, v in kept.items() if isinstance(v, MatchCounts)} or None
    return EvaluationReport(
        mode=mode,
        per_label=per_label,
        micro=micro,
        macro=macro,
        weighted=weighted,
        total_support=sum(p.support for p in per_label.values()),
        token_accuracy=token_accuracy,
        token_count=token_count,
        counts=counts,
        excluded=tuple(sort_labels(excluded)),
    )


def filter_and_reaggregate(rows: Mapping[str, Row], excluded: Sequence[str] | set[str] = (),
                           mode: MatchMode | str = MatchMode.TYPE, **kwargs) -> EvaluationReport:
    """Drop the rows of ``excluded`` labels and recompute every average.

    Excluded labels that are not present are ignored.  For count rows this
    removes the label's gold spans from POSSIBLE and its spurious predictions
    from ACTUAL; to also drop predictions of an excluded label that were
    aligned to another label's gold, filter spans before scoring
    (``score_corpus(..., exclude=...)``).
    """
    drop = set(excluded)
    kept = {k: v for k, v in rows.items() if k not in drop}
    if not _included(kept):
        raise AllLabelsExcluded(f"excluding {sorted(drop)} leaves no labels")
    return build_report(kept, mode, excluded=sorted(drop & set(rows)) or (), **kwargs)


def token_accuracy(gold_tags: Sequence, pred_tags: Sequence) -> float:
    """Fraction of tokens whose full tag string matches (O included).

    Accepts a flat tag list or a list of per-document tag lists.
    """
    if gold_tags and isinstance(gold_tags[0], str):
        gold_tags, pred_tags = [gold_tags], [pred_tags]
    if len(gold_tags) != len(pred_tags):
        raise LengthMismatch(f"{len(gold_tags)} gold documents vs {len(pred_tags)} predicted")
    right = total = 0
    for n, (g, p) in enumerate(zip(gold_tags, pred_tags)):
        if len(g) != len(p):
            raise LengthMismatch(f"document {n}: {len(g)} gold tags vs {len(p)} predicted")
        right += sum(a == b for a, b in zip(g, p))
        total += len(g)
    return right / total if total else 0.0


# ---------------------------------------------------------------- rendering

FOOTER_ROWS = ("micro avg", "macro avg", "weighted avg")


def _fmt(x: float, percent: bool) -> str:
    return f"{100 * x:.2f}%" if percent else f"{x:.4f}"


def _table_rows(report: EvaluationReport, percent: bool) -> tuple[list[list[str]], list[list[str]]]:
    body = []
    for label in report.labels():
        p = report.per_label[label]
        body.append([label, _fmt(p.precision, percent), _fmt(p.recall, percent), _fmt(p.f1, percent), str(p.support)])
    footer = []
    if report.token_accuracy is not None:
        n = report.token_count if report.token_count is not None else report.total_support
        footer.append(["accuracy", "", "", _fmt(report.token_accuracy, percent), str(n)])
    for name, row in zip(FOOTER_ROWS, (report.micro, report.macro, report.weighted)):
        if row is not None:
            footer.append([name, _fmt(row.precision, percent), _fmt(row.recall, percent),
                           _fmt(row.f1, percent), str(row.support)])
    return body, footer


HEADER = ["label", "precision", "recall", "f1", "support"]


def report_to_dict(report: EvaluationReport) -> dict:
    def prf(p: PRF | None):
        if p is None:
            return None
        return {"precision": p.precision, "recall": p.recall, "f1": p.f1, "support": p.support}

    out = {
        "mode": report.mode.value,
        "excluded": list(report.excluded),
        "per_label": {k: prf(report.per_label[k]) for k in report.labels()},
        "micro": prf(report.micro),
        "macro": prf(report.macro),
        "weighted": prf(report.weighted),
        "total_support": report.total_support,
        "token_accuracy": report.token_accuracy,
        "token_count": report.token_count,
    }
    if report.counts:
        out["counts"] = {k: report.counts[k].as_dict() for k in sort_labels(report.counts)}
    return out


def report_from_dict(data: Mapping) -> EvaluationReport:
    def prf(d):
        return None if d is None else PRF(d["precision"], d["recall"], d["f1"], d["support"])

    counts = None
    if data.get("counts"):
        counts = {k: MatchCounts(v["COR"], v["INC"], v["PAR"], v["MIS"], v["SPU"]) for k, v in data["counts"].items()}
    return EvaluationReport(
        mode=MatchMode.parse(data["mode"]),
        per_label={k: prf(v) for k, v in data["per_label"].items()},
        micro=prf(data.get("micro")),
        macro=prf(data["macro"]),
        weighted=prf(data["weighted"]),
        total_support=data["total_support"],
        token_accuracy=data.get("token_accuracy"),
        token_count=data.get("token_count"),
        counts=counts,
        excluded=tuple(data.get("excluded", ())),
    )


def render_report(report: EvaluationReport, format: str = "tsv", *, percent: bool = False) -> str:
    """Render as ``tsv``, ``json`` or ``markdown``.  Output is deterministic."""
    if format == "json":
        return json.dumps(report_to_dict(report), indent=2) + "\n"
    body, footer = _table_rows(report, percent)
    if format == "tsv":
        return "\n".join("\t".join(r) for r in [HEADER] + body + footer) + "\n"
    if format in ("markdown", "md"):
        lines = [f"Evaluation: {report.mode.value}", ""]
        if report.excluded:
            lines[0] += f" (excluding {', '.join(report.excluded)})"
        lines.append("| " + " | ".join(HEADER) + " |")
        lines.append("|" + "|".join([":---"] + ["---:"] * 4) + "|")
        for r in body + footer:
            lines.append("| " + " | ".join(r) + " |")
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown report format {format!r}")


_FOOTER_NAMES = {"micro avg", "macro avg", "weighted avg", "accuracy", "total"}


def read_rows(path: str | Path) -> dict[str, PRF]:
    """Per-label rows from a TSV (label, precision, recall, f1, support) or a JSON report."""
    from .standoff import read_text

    text = read_text(Path(path))
    if Path(path).suffix == ".json":
        try:
            return dict(report_from_dict(json.loads(text)).per_label)
        except (KeyError, TypeError, ValueError) as exc:
            raise MedMineError(f"{path}: not a report JSON ({exc})") from None
    rows = {}
    reader = csv.reader(io.StringIO(text), delimiter="\t")
    header = next(reader, None)
    if not header or [h.strip().lower() for h in header[:5]] != ["label", "precision", "recall", "f1", "support"]:
        raise MedMineError(f"{path}: expected header 'label precision recall f1 support'")
    for lineno, rec in enumerate(reader, 2):
        if not rec or not rec[0].strip() or rec[0].strip().lower() in _FOOTER_NAMES:
            continue
        try:
            label = parse_label(rec[0])
            p, r, f = (float(x.rstrip("%")) / (100 if x.endswith("%") else 1) for x in rec[1:4])
            rows[label] = PRF(p, r, f, int(rec[4]))
        except (ValueError, IndexError):
            raise MedMineError(f"{path}: line {lineno}: malformed row {rec!r}") from None
    return rows
