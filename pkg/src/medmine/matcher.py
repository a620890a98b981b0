"""Gold/prediction alignment and SemEval-2013 style classification.

Each aligned (gold, pred) pair is classified per matching mode:

========  ==========================================  ====================
mode      COR when                                    otherwise
========  ==========================================  ====================
strict    same fragments and same label               INC
exact     same fragments                              INC
partial   same fragments                              PAR
type      same label (overlap is given by alignment)  INC
========  ==========================================  ====================

Unmatched gold spans are MIS and unmatched predictions SPU in every mode.
Per-label cells count pairs and MIS under the gold label, SPU under the
predicted label, so a label's POSSIBLE equals its gold support.
"""

from __future__ import annotations

import enum
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .model import AnnotationSet, EntitySpan


class MatchMode(str, enum.Enum):
    STRICT = "strict"
    EXACT = "exact"
    PARTIAL = "partial"
    TYPE = "type"

    @classmethod
    def parse(cls, value: "str | MatchMode") -> "MatchMode":
        if isinstance(value, MatchMode):
            return value
        try:
            return cls(value.strip().lower())
        except ValueError:
            raise ValueError(f"unknown match mode {value!r}; expected one of strict, exact, partial, type") from None

    def __str__(self) -> str:
        return self.value


ALL_MODES = (MatchMode.STRICT, MatchMode.EXACT, MatchMode.PARTIAL, MatchMode.TYPE)


@dataclass(frozen=True)
class MatchCounts:
    cor: int = 0
    inc: int = 0
    par: int = 0
    mis: int = 0
    spu: int = 0

    @property
    def possible(self) -> int:
        return self.cor + self.inc + self.par + self.mis

    @property
    def actual(self) -> int:
        return self.cor + self.inc + self.par + self.spu

    def __add__(self, other: "MatchCounts") -> "MatchCounts":
        if not isinstance(other, MatchCounts):
            return NotImplemented
        return MatchCounts(
            self.cor + other.cor,
            self.inc + other.inc,
            self.par + other.par,
            self.mis + other.mis,
            self.spu + other.spu,
        )

    def as_dict(self) -> dict[str, int]:
        return {"COR": self.cor, "INC": self.inc, "PAR": self.par, "MIS": self.mis, "SPU": self.spu}


def sum_counts(counts: Iterable[MatchCounts]) -> MatchCounts:
    total = MatchCounts()
    for c in counts:
        total = total + c
    return total


def merge_label_counts(tables: Iterable[Mapping[str, MatchCounts]]) -> dict[str, MatchCounts]:
    """Sum per-label tables (associative and commutative)."""
    out: dict[str, MatchCounts] = defaultdict(MatchCounts)
    for table in tables:
        for label, c in table.items():
            out[label] = out[label] + c
    return dict(out)


def overlap(a: EntitySpan, b: EntitySpan) -> int:
    """Characters shared by the fragment unions of ``a`` and ``b``."""
    total = 0
    for fa in a.fragments:
        for fb in b.fragments:
            total += max(0, min(fa.end, fb.end) - max(fa.start, fb.start))
    return total


@dataclass(frozen=True)
class Alignment:
    pairs: tuple[tuple[EntitySpan, EntitySpan], ...] = ()
    unmatched_gold: tuple[EntitySpan, ...] = ()
    unmatched_pred: tuple[EntitySpan, ...] = ()

    @property
    def total_overlap(self) -> int:
        return sum(overlap(g, p) for g, p in self.pairs)


def align(gold: Sequence[EntitySpan], pred: Sequence[EntitySpan]) -> Alignment:
    """Greedy one-to-one alignment of overlapping spans.

    Candidate pairs are taken in order of larger overlap, then same label,
    then earlier gold start, then earlier prediction start.  Remaining ties
    are broken on span content (end, fragments, label) so the result does not
    depend on input order.
    """
    gold = list(gold)
    pred = list(pred)
    candidates = []
    for i, g in enumerate(gold):
        for j, p in enumerate(pred):
            ov = overlap(g, p)
            if ov > 0:
                candidates.append((-ov, g.label != p.label, g.start, p.start, g.end, p.end,
                                   g.fragments, p.fragments, g.label, p.label, i, j))
    candidates.sort()
    used_g, used_p = set(), set()
    pairs = []
    for *_, i, j in candidates:
        if i in used_g or j in used_p:
            continue
        used_g.add(i)
        used_p.add(j)
        pairs.append((i, j))
    pairs.sort()
    return Alignment(
        pairs=tuple((gold[i], pred[j]) for i, j in pairs),
        unmatched_gold=tuple(g for i, g in enumerate(gold) if i not in used_g),
        unmatched_pred=tuple(p for j, p in enumerate(pred) if j not in used_p),
    )


def classify_pair(g: EntitySpan, p: EntitySpan, mode: MatchMode) -> str:
    """Return ``"cor"``, ``"inc"`` or ``"par"`` for an aligned pair."""
    same_bounds = g.fragments == p.fragments
    same_label = g.label == p.label
    if mode is MatchMode.STRICT:
        return "cor" if same_bounds and same_label else "inc"
    if mode is MatchMode.EXACT:
        return "cor" if same_bounds else "inc"
    if mode is MatchMode.PARTIAL:
        return "cor" if same_bounds else "par"
    return "cor" if same_label else "inc"


def classify(alignment: Alignment, mode: MatchMode | str) -> tuple[dict[str, MatchCounts], MatchCounts]:
    """Count COR/INC/PAR/MIS/SPU per label and overall."""
    mode = MatchMode.parse(mode)
    cells: dict[str, dict[str, int]] = defaultdict(lambda: dict.fromkeys(("cor", "inc", "par", "mis", "spu"), 0))
    for g, p in alignment.pairs:
        cells[g.label][classify_pair(g, p, mode)] += 1
    for g in alignment.unmatched_gold:
        cells[g.label]["mis"] += 1
    for p in alignment.unmatched_pred:
        cells[p.label]["spu"] += 1
    per_label = {label: MatchCounts(**c) for label, c in cells.items()}
    return per_label, sum_counts(per_label.values())


@dataclass
class CorpusScore:
    """Per-label counts for every requested mode, summed over documents."""

    counts: dict[MatchMode, dict[str, MatchCounts]] = field(default_factory=dict)
    n_docs: int = 0

    def total(self, mode: MatchMode | str) -> MatchCounts:
        return sum_counts(self.counts[MatchMode.parse(mode)].values())


def score_document(gold: AnnotationSet, pred: AnnotationSet, modes: Sequence[MatchMode] = ALL_MODES,
                   exclude: Iterable[str] = ()) -> dict[MatchMode, dict[str, MatchCounts]]:
    """Align one document once and classify it under each mode.

    Spans whose label is in ``exclude`` are removed from both sides before
    alignment.
    """
    drop = set(exclude)
    g = [s for s in gold.spans if s.label not in drop]
    p = [s for s in pred.spans if s.label not in drop]
    alignment = align(g, p)
    return {MatchMode.parse(m): classify(alignment, m)[0] for m in modes}


def score_corpus(gold: Mapping[str, AnnotationSet], pred: Mapping[str, AnnotationSet], *,
                 modes: Sequence[MatchMode | str] = ALL_MODES, exclude: Iterable[str] = (),
                 executor=None) -> CorpusScore:
    """Score every gold document against its prediction (missing ones count as empty).

    ``executor`` is an optional :class:`concurrent.futures.Executor`; results
    do not depend on it because per-label sums are order-independent.
    """
    modes = [MatchMode.parse(m) for m in modes]
    exclude = frozenset(exclude)
    doc_ids = sorted(gold)
    jobs = [(gold[d], pred.get(d) or AnnotationSet(d, "pred")) for d in doc_ids]
    if executor is None:
        results = [score_document(g, p, modes, exclude) for g, p in jobs]
    else:
        results = list(executor.map(lambda gp: score_document(gp[0], gp[1], modes, exclude), jobs))
    score = CorpusScore(n_docs=len(doc_ids))
    for m in modes:
        score.counts[m] = merge_label_counts(r[m] for r in results)
    return score
