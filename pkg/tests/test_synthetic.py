import json

import pytest
from hypothesis import given, settings, strategies as st

from medmine.errors import ParameterError, TemplateMissingLabel
from medmine.matcher import ALL_MODES, MatchCounts, score_corpus
from medmine.metrics import prf_from_counts
from medmine.model import validate_span
from medmine.standoff import write_standoff
from medmine.synthetic import (REFERENCE_SUPPORT, GenSpec, NoiseSpec, expected_counts, generate, perturb,
                               perturb_corpus, scaled_targets)

from conftest import confusion_matrix


def corpus_bytes(corpus):
    return [(d.doc_id, d.text, write_standoff(corpus.gold_for(d.doc_id))) for d in corpus.documents]


def test_exact_target_counts():
    corpus, ledger = generate(GenSpec(seed=1, n_docs=7, targets={"Drug": 100, "Duration": 5}))
    assert ledger.counts == {"Drug": 100, "Duration": 5}
    spans = [s for d in corpus.doc_ids for s in corpus.gold_for(d).spans]
    assert len(spans) == 105
    assert sum(sum(c.values()) for c in ledger.per_doc.values()) == 105


def test_same_seed_same_corpus():
    a, la = generate(GenSpec(seed=9, n_docs=5, targets=scaled_targets(200)))
    b, lb = generate(GenSpec(seed=9, n_docs=5, targets=scaled_targets(200)))
    assert corpus_bytes(a) == corpus_bytes(b) and la.to_json() == lb.to_json()
    c, _ = generate(GenSpec(seed=10, n_docs=5, targets=scaled_targets(200)))
    assert corpus_bytes(a) != corpus_bytes(c)


def test_default_proportions_follow_reference():
    corpus, ledger = generate(GenSpec(seed=0))
    assert len(corpus) == 76
    total, ref_total = sum(ledger.counts.values()), sum(REFERENCE_SUPPORT.values())
    for label, support in REFERENCE_SUPPORT.items():
        assert abs(ledger.counts[label] / total - support / ref_total) <= 0.05 * support / ref_total


def test_all_generated_spans_validate():
    corpus, _ = generate(GenSpec(seed=4, n_docs=12, targets=scaled_targets(500)))
    for d in corpus.documents:
        for s in corpus.gold_for(d.doc_id).spans:
            assert validate_span(d, s, strict=True) == s


def test_scaled_targets():
    t = scaled_targets(1000)
    assert sum(t.values()) == 1000 and set(t) == set(REFERENCE_SUPPORT)
    assert scaled_targets(12541) == REFERENCE_SUPPORT


def test_generator_errors():
    with pytest.raises(TemplateMissingLabel):
        generate(GenSpec(targets={"Drug": 1, "Temporal": 2}))
    with pytest.raises(TemplateMissingLabel):
        generate(GenSpec(targets={"ADE": 1}, templates=("Took {Drug} .",)))
    with pytest.raises(ParameterError):
        generate(GenSpec(targets={"Drug": -1}))
    with pytest.raises(ParameterError):
        generate(GenSpec(n_docs=0))


@pytest.mark.parametrize("kwargs", [dict(deletion=1.5), dict(jitter=-0.1), dict(max_jitter=0),
                                    dict(spurious_rate=-1), dict(confusion={"Drug": {"Drug": 0.5}})])
def test_noise_spec_validation(kwargs):
    with pytest.raises(ParameterError):
        NoiseSpec(**kwargs)


@pytest.fixture(scope="module")
def small():
    corpus, _ = generate(GenSpec(seed=2, n_docs=10, targets=scaled_targets(300)))
    return corpus


def test_zero_noise_is_identity(small):
    sim, _ = perturb_corpus(small, NoiseSpec())
    score = score_corpus(small.gold, sim.predictions["sim"])
    for mode in ALL_MODES:
        prf = prf_from_counts(score.total(mode), mode)
        assert prf.precision == prf.recall == 1.0


def test_full_deletion(small):
    sim, _ = perturb_corpus(small, NoiseSpec(deletion=1.0))
    total = score_corpus(small.gold, sim.predictions["sim"]).total("type")
    assert total == MatchCounts(mis=300)


def test_jitter_only_separates_modes(small):
    sim, ledgers = perturb_corpus(small, NoiseSpec(jitter=1.0, seed=3))
    score = score_corpus(small.gold, sim.predictions["sim"])
    changed = sum(a.boundary_changed for l in ledgers.values() for a in l.actions)
    assert changed == 300
    assert score.total("type") == MatchCounts(cor=300)
    assert score.total("strict") == MatchCounts(inc=300)
    assert score.total("partial") == MatchCounts(par=300)


def test_per_label_deletion(small):
    sim, ledgers = perturb_corpus(small, NoiseSpec(deletion={"Drug": 1.0}))
    counts = score_corpus(small.gold, sim.predictions["sim"]).counts
    from medmine.matcher import MatchMode
    type_counts = counts[MatchMode.TYPE]
    assert type_counts["Drug"].cor == 0 and type_counts["Drug"].mis > 0
    assert all(c.mis == 0 for k, c in type_counts.items() if k != "Drug")


def test_perturb_is_seeded_per_document(small):
    doc = small.documents[0]
    noise = NoiseSpec(deletion=0.3, jitter=0.5, spurious_rate=1.5, seed=11)
    a = perturb(doc, small.gold_for(doc.doc_id), noise)
    b = perturb(doc, small.gold_for(doc.doc_id), noise)
    assert a[0] == b[0] and a[1].as_dict() == b[1].as_dict()
    json.dumps(a[1].as_dict())


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.floats(0, 1), st.floats(0, 1), st.floats(0, 0.5), st.floats(0, 3),
       st.integers(1, 6))
def test_ledger_predicts_counts_exactly(seed, deletion, jitter, confusion, spurious, max_jitter):
    corpus, _ = generate(GenSpec(seed=seed % 50, n_docs=4, targets=scaled_targets(60)))
    noise = NoiseSpec(deletion=deletion, jitter=jitter, max_jitter=max_jitter,
                      confusion=confusion_matrix(confusion) if confusion else None,
                      spurious_rate=spurious, seed=seed)
    sim, ledgers = perturb_corpus(corpus, noise)
    score = score_corpus(corpus.gold, sim.predictions["sim"])
    for mode in ALL_MODES:
        expected = {k: v for k, v in expected_counts(ledgers, mode).items() if v.possible or v.actual}
        assert score.counts[mode] == expected, mode
    for d in corpus.documents:
        for s in sim.predictions["sim"][d.doc_id].spans:
            validate_span(d, s, strict=True)
