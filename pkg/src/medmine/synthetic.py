"""Seeded synthetic letters and simulated model predictions.

``generate`` builds a corpus whose per-label gold counts are known exactly
(the generation ledger).  ``perturb`` derives a simulated prediction from gold
by deleting, jittering, relabeling and inventing spans, recording every action
so that the expected COR/INC/PAR/MIS/SPU counts can be computed from the
ledger alone, without running the matcher.
"""

from __future__ import annotations

import json
import random
import re
from collections import Counter
from dataclasses import asdict, dataclass, field
from typing import Mapping, Sequence

from .corpus import tokenize
from .errors import ParameterError, TemplateMissingLabel
from .matcher import MatchCounts, MatchMode
from .model import ENTITY_LABELS, AnnotationSet, Corpus, Document, EntitySpan, Fragment, sort_labels

# Gold support per label on the 76-letter test split (Med7+ table).
REFERENCE_SUPPORT: dict[str, int] = {
    "Drug": 3954,
    "Form": 1696,
    "Strength": 1639,
    "Frequency": 1564,
    "Route": 1341,
    "Dosage": 1039,
    "Reason": 927,
    "ADE": 242,
    "Duration": 139,
}

VOCABULARY: dict[str, tuple[str, ...]] = {
    "Drug": ("aspirin", "metoprolol", "lisinopril", "warfarin", "heparin", "insulin glargine",
             "furosemide", "vancomycin", "amoxicillin", "atorvastatin", "prednisone", "oxycodone"),
    "Strength": ("81 mg", "25 mg", "10 mg", "500 mg", "40 units", "5 mg/mL", "0.5 mg", "1 g"),
    "Form": ("tablet", "capsule", "solution", "patch", "inhaler", "suspension"),
    "Frequency": ("daily", "twice a day", "q8h", "every morning", "BID", "as needed", "TID"),
    "Route": ("PO", "IV", "by mouth", "subcutaneously", "topically", "IM"),
    "Dosage": ("1 tablet", "2 puffs", "one capsule", "two tablets", "10 units", "15 mL"),
    "Duration": ("7 days", "2 weeks", "10 days", "one month", "3 days"),
    "Reason": ("hypertension", "atrial fibrillation", "pain", "pneumonia", "infection", "edema"),
    "ADE": ("rash", "GI bleed", "hypotension", "nausea", "hyperkalemia", "angioedema"),
}

DEFAULT_TEMPLATES: tuple[str, ...] = (
    "Started {Drug} {Strength} {Form} {Route} {Frequency} for {Duration} .",
    "Continue {Drug} {Dosage} {Route} {Frequency} for {Reason} .",
    "Patient developed {ADE} after {Drug} , which was stopped .",
    "Home medications include {Drug} {Strength} {Frequency} .",
    "Give {Dosage} of {Drug} {Form} {Route} .",
    "{Drug} was held because of {ADE} .",
    "Treated with {Drug} for {Reason} .",
    "Resume {Drug} at discharge .",
    "The {Form} should be taken as directed .",
    "Dose is {Strength} .",
    "Take it {Frequency} with food .",
    "Administer {Route} only .",
    "Take {Dosage} at bedtime .",
    "Course length is {Duration} .",
    "Indication : {Reason} .",
    "Noted {ADE} on day two .",
    "No changes were made to the regimen today .",
    "Follow up with the primary care physician .",
)

_SLOT = re.compile(r"\{([A-Za-z_]+)\}")


def scaled_targets(total: int, weights: Mapping[str, int] = REFERENCE_SUPPORT) -> dict[str, int]:
    """Scale ``weights`` to sum to ``total`` (largest-remainder rounding)."""
    wsum = sum(weights.values())
    raw = {k: total * w / wsum for k, w in weights.items()}
    out = {k: int(v) for k, v in raw.items()}
    short = total - sum(out.values())
    for k in sorted(raw, key=lambda k: (out[k] - raw[k], k))[:short]:
        out[k] += 1
    return out


@dataclass(frozen=True)
class GenSpec:
    seed: int = 0
    n_docs: int = 76
    targets: Mapping[str, int] | None = None
    templates: Sequence[str] = DEFAULT_TEMPLATES
    vocabulary: Mapping[str, Sequence[str]] = field(default_factory=lambda: dict(VOCABULARY))

    def resolved_targets(self) -> dict[str, int]:
        targets = dict(REFERENCE_SUPPORT if self.targets is None else self.targets)
        if any(v < 0 for v in targets.values()):
            raise ParameterError("target counts must be >= 0")
        return targets


@dataclass
class GenerationLedger:
    seed: int
    counts: dict[str, int]
    per_doc: dict[str, dict[str, int]]

    def to_json(self) -> str:
        labels = sort_labels(self.counts)
        payload = {
            "seed": self.seed,
            "counts": {k: self.counts[k] for k in labels},
            "total": sum(self.counts.values()),
            "per_doc": {d: {k: c[k] for k in sort_labels(c)} for d, c in sorted(self.per_doc.items())},
        }
        return json.dumps(payload, indent=2) + "\n"


def _template_slots(template: str) -> list[str]:
    return _SLOT.findall(template)


def _plan_sentences(targets: dict[str, int], templates: Sequence[str], rng: random.Random) -> list[str]:
    covered = {label for t in templates for label in _template_slots(t)}
    missing = [k for k, v in targets.items() if v > 0 and k not in covered]
    if missing:
        raise TemplateMissingLabel(f"no template has a slot for {sort_labels(missing)}")
    slot_counts = [Counter(_template_slots(t)) for t in templates]
    remaining = Counter({k: v for k, v in targets.items() if v > 0})
    chosen = []
    filler = [t for t, c in zip(templates, slot_counts) if not c]
    while sum(remaining.values()):
        fitting = [t for t, c in zip(templates, slot_counts) if c and all(remaining[k] >= n for k, n in c.items())]
        if not fitting:
            raise TemplateMissingLabel(f"templates cannot realize remaining counts {dict(+remaining)}")
        t = rng.choices(fitting, weights=[len(_template_slots(f)) for f in fitting])[0]
        remaining -= Counter(_template_slots(t))
        chosen.append(t)
        if filler and rng.random() < 0.1:
            chosen.append(rng.choice(filler))
    return chosen


def generate(spec: GenSpec = GenSpec()) -> tuple[Corpus, GenerationLedger]:
    """Build a synthetic corpus whose gold label counts equal the targets exactly."""
    if spec.n_docs < 1:
        raise ParameterError("n_docs must be >= 1")
    rng = random.Random(spec.seed)
    targets = spec.resolved_targets()
    sentences = _plan_sentences(targets, spec.templates, rng)
    rng.shuffle(sentences)

    width = max(4, len(str(spec.n_docs)))
    doc_ids = [f"synth-{i:0{width}d}" for i in range(1, spec.n_docs + 1)]
    buckets: list[list[str]] = [[] for _ in doc_ids]
    for i, s in enumerate(sentences):
        buckets[i % spec.n_docs].append(s)

    documents, gold = [], {}
    counts: Counter[str] = Counter()
    per_doc = {}
    for doc_id, templates in zip(doc_ids, buckets):
        pieces: list[str] = [f"Discharge summary {doc_id} ."]
        length = len(pieces[0])
        spans = []
        for n, template in enumerate(templates):
            sep = "\n" if n % 4 == 0 else " "
            pieces.append(sep)
            length += 1
            pos = 0
            for m in _SLOT.finditer(template):
                literal = template[pos:m.start()]
                pieces.append(literal)
                length += len(literal)
                label = m.group(1)
                surface = rng.choice(spec.vocabulary[label])
                spans.append(EntitySpan(f"T{len(spans) + 1}", label, (Fragment(length, length + len(surface)),), surface))
                pieces.append(surface)
                length += len(surface)
                pos = m.end()
            pieces.append(template[pos:])
            length += len(template) - pos
        pieces.append("\n")
        documents.append(Document(doc_id, "".join(pieces)))
        gold[doc_id] = AnnotationSet(doc_id, "gold", tuple(spans))
        doc_counts = Counter(s.label for s in spans)
        counts.update(doc_counts)
        per_doc[doc_id] = dict(doc_counts)
    full_counts = {k: counts.get(k, 0) for k in targets}
    return Corpus(tuple(documents), gold), GenerationLedger(spec.seed, full_counts, per_doc)


# ---------------------------------------------------------------- perturbation


@dataclass(frozen=True)
class NoiseSpec:
    """Noise applied independently to each gold span.

    ``deletion`` is one probability or a per-label map.  ``confusion`` maps a
    gold label to a row-stochastic distribution over predicted labels (labels
    without a row keep their label).  ``spurious_rate`` is the expected number
    of invented spans per document.
    """

    deletion: float | Mapping[str, float] = 0.0
    jitter: float = 0.0
    max_jitter: int = 3
    confusion: Mapping[str, Mapping[str, float]] | None = None
    spurious_rate: float = 0.0
    spurious_labels: tuple[str, ...] = ENTITY_LABELS
    seed: int = 0

    def __post_init__(self):
        probs = list(self.deletion.values()) if isinstance(self.deletion, Mapping) else [self.deletion]
        if any(not 0 <= p <= 1 for p in probs + [self.jitter]):
            raise ParameterError("probabilities must lie in [0, 1]")
        if self.max_jitter < 1 or self.spurious_rate < 0:
            raise ParameterError("max_jitter must be >= 1 and spurious_rate >= 0")
        for label, row in (self.confusion or {}).items():
            if any(p < 0 for p in row.values()) or abs(sum(row.values()) - 1) > 1e-9:
                raise ParameterError(f"confusion row for {label} is not a distribution")

    def deletion_p(self, label: str) -> float:
        if isinstance(self.deletion, Mapping):
            return self.deletion.get(label, 0.0)
        return self.deletion


@dataclass(frozen=True)
class SpanAction:
    gold_id: str
    gold_label: str
    deleted: bool
    pred_id: str | None = None
    pred_label: str | None = None
    boundary_changed: bool = False


@dataclass
class PerturbationLedger:
    doc_id: str
    actions: list[SpanAction] = field(default_factory=list)
    spurious: list[tuple[str, str]] = field(default_factory=list)  # (pred_id, label)

    def as_dict(self) -> dict:
        return {
            "doc_id": self.doc_id,
            "actions": [asdict(a) for a in self.actions],
            "spurious": [{"pred_id": i, "label": l} for i, l in self.spurious],
        }


def _sample_label(row: Mapping[str, float], rng: random.Random) -> str:
    u = rng.random()
    acc = 0.0
    items = sorted(row.items())
    for label, p in items:
        acc += p
        if u < acc:
            return label
    return next(label for label, p in reversed(items) if p > 0)


def _jitter(span: EntitySpan, lo: int, hi: int, max_jitter: int, rng: random.Random) -> tuple[Fragment, ...]:
    """Move the outer boundaries by up to ``max_jitter`` chars inside [lo, hi].

    The result never becomes empty and always overlaps the original.  If no
    different boundary is available the fragments are returned unchanged.
    """
    frags = span.fragments
    first, last = frags[0], frags[-1]
    starts = range(max(lo, first.start - max_jitter), min(first.end - 1, first.start + max_jitter) + 1)
    ends = range(max(last.start + 1, last.end - max_jitter), min(hi, last.end + max_jitter) + 1)
    options = []
    for ns in starts:
        for ne in ends:
            if (ns, ne) == (first.start, last.end):
                continue
            if len(frags) == 1 and not (ns < ne and max(ns, first.start) < min(ne, first.end)):
                continue
            options.append((ns, ne))
    if not options:
        return frags
    ns, ne = rng.choice(options)
    if len(frags) == 1:
        return (Fragment(ns, ne),)
    return (Fragment(ns, first.end),) + frags[1:-1] + (Fragment(last.start, ne),)


def perturb(doc: Document, gold: AnnotationSet, noise: NoiseSpec = NoiseSpec(),
            source: str = "sim") -> tuple[AnnotationSet, PerturbationLedger]:
    """Simulate a model prediction for one document.

    Jittered boundaries stay between the neighbouring gold spans and invented
    spans sit on tokens outside every gold and predicted span, so each
    prediction overlaps only the gold span it came from.  (That guarantee
    needs non-overlapping gold.)
    """
    rng = random.Random(f"{noise.seed}:{doc.doc_id}")
    golds = list(gold.spans)
    ledger = PerturbationLedger(doc.doc_id)
    preds: list[EntitySpan] = []

    for g in golds:
        if rng.random() < noise.deletion_p(g.label):
            ledger.actions.append(SpanAction(g.id, g.label, True))
            continue
        label = g.label
        row = (noise.confusion or {}).get(g.label)
        if row:
            label = _sample_label(row, rng)
        frags = g.fragments
        if noise.jitter and rng.random() < noise.jitter:
            others = [o for o in golds if o is not g]
            lo = max([o.end for o in others if o.end <= g.start], default=0)
            hi = min([o.start for o in others if o.start >= g.end], default=len(doc.text))
            frags = _jitter(g, lo, hi, noise.max_jitter, rng)
        pred_id = f"T{len(preds) + 1}"
        surface = " ".join(doc.text[f.start:f.end] for f in frags)
        preds.append(EntitySpan(pred_id, label, frags, surface))
        ledger.actions.append(SpanAction(g.id, g.label, False, pred_id, label, frags != g.fragments))

    n_spurious = int(noise.spurious_rate)
    if rng.random() < noise.spurious_rate - n_spurious:
        n_spurious += 1
    if n_spurious:
        taken = [(s.start, s.end) for s in golds + preds]
        free = [t for t in tokenize(doc) if t.text[0].isalnum()
                and not any(t.start < e and s < t.end for s, e in taken)]
        for tok in sorted(rng.sample(free, min(n_spurious, len(free))), key=lambda t: t.start):
            label = rng.choice(noise.spurious_labels)
            pred_id = f"T{len(preds) + 1}"
            preds.append(EntitySpan(pred_id, label, (Fragment(tok.start, tok.end),), tok.text))
            ledger.spurious.append((pred_id, label))
    return AnnotationSet(doc.doc_id, source, tuple(preds)), ledger


def perturb_corpus(corpus: Corpus, noise: NoiseSpec = NoiseSpec(),
                   source: str = "sim") -> tuple[Corpus, dict[str, PerturbationLedger]]:
    """Add a simulated prediction source for every document."""
    preds, ledgers = {}, {}
    for doc in corpus.documents:
        preds[doc.doc_id], ledgers[doc.doc_id] = perturb(doc, corpus.gold_for(doc.doc_id), noise, source)
    predictions = dict(corpus.predictions)
    predictions[source] = preds
    return Corpus(corpus.documents, corpus.gold, predictions), ledgers


def expected_counts(ledgers: Sequence[PerturbationLedger] | Mapping[str, PerturbationLedger],
                    mode: MatchMode | str) -> dict[str, MatchCounts]:
    """Per-label counts implied by the ledger alone.

    Kept spans pair with their own gold span; the outcome depends only on
    whether the label and the boundaries changed.
    """
    mode = MatchMode.parse(mode)
    if isinstance(ledgers, Mapping):
        ledgers = list(ledgers.values())
    tally: dict[str, Counter] = {}
    for ledger in ledgers:
        for a in ledger.actions:
            cell = tally.setdefault(a.gold_label, Counter())
            if a.deleted:
                cell["mis"] += 1
                continue
            label_ok = a.pred_label == a.gold_label
            bounds_ok = not a.boundary_changed
            if mode is MatchMode.STRICT:
                cell["cor" if label_ok and bounds_ok else "inc"] += 1
            elif mode is MatchMode.EXACT:
                cell["cor" if bounds_ok else "inc"] += 1
            elif mode is MatchMode.PARTIAL:
                cell["cor" if bounds_ok else "par"] += 1
            else:
                cell["cor" if label_ok else "inc"] += 1
        for _, label in ledger.spurious:
            tally.setdefault(label, Counter())["spu"] += 1
    return {k: MatchCounts(c["cor"], c["inc"], c["par"], c["mis"], c["spu"]) for k, c in tally.items()}
