from itertools import combinations

import pytest
from hypothesis import given, settings, strategies as st

from citesum.baselines import lead3, mean_rouge_f, oracle_greedy, oracle_select
from citesum.corpus import PaperRecord, Section
from citesum.errors import EmptyDocument, EmptyReference
from citesum.metrics import tokenize

from synth import planted_instance, seeded


def doc_of(n):
    return " ".join(f"Sentence number {i} here." for i in range(1, n + 1))


def test_lead3_five_sentences():
    assert lead3(doc_of(5)) == "Sentence number 1 here. Sentence number 2 here. Sentence number 3 here."


def test_lead3_short_document():
    assert lead3(doc_of(2)) == doc_of(2)


def test_lead3_empty():
    with pytest.raises(EmptyDocument):
        lead3("   ")


def test_lead3_on_record_uses_body():
    rec = PaperRecord("u", "t", "abs.", (Section("Introduction", "First one. Second one."),
                                           Section("Methods", "Third one. Fourth one.")), ())
    assert lead3(rec) == "First one. Second one. Third one."


def test_oracle_recovers_exact_sentence():
    doc = "Alpha beta gamma. Delta epsilon zeta. Eta theta iota."
    assert oracle_greedy(doc, "delta epsilon zeta") == "Delta epsilon zeta."


def test_oracle_stops_when_no_gain():
    # zero overlap everywhere: the first pick is still made, nothing after it
    sents = ["One two.", "Three four.", "Five six."]
    picked, trace = oracle_select(sents, "seven eight")
    assert picked == [0] and trace == [0.0]


def test_oracle_errors():
    with pytest.raises(EmptyDocument):
        oracle_greedy("", "ref")
    with pytest.raises(EmptyReference):
        oracle_greedy("A sentence.", "  ")


def best_subset_score(sents, reference, k):
    ref = tokenize(reference)
    best = 0.0
    for size in range(1, k + 1):
        for idx in combinations(range(len(sents)), size):
            cand = [t for i in idx for t in tokenize(sents[i])]
            best = max(best, mean_rouge_f(cand, ref))
    return best


def test_planted_oracle_reaches_optimum():
    sents, ref = planted_instance(seeded(4), n_sents=6, picks=(1, 3, 4))
    picked, trace = oracle_select(sents, ref)
    assert sorted(picked) == [1, 3, 4]
    assert trace[-1] == pytest.approx(best_subset_score(sents, ref, 3), abs=1e-12)
    assert trace[-1] == pytest.approx(1.0)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10**6), max_sents=st.integers(1, 6))
def test_oracle_trace_monotone_and_dominant(seed, max_sents):
    rng = seeded(seed)
    sents, ref = planted_instance(rng, n_sents=8, picks=tuple(sorted(rng.sample(range(8), 3))))
    ref = ref + " " + " ".join(rng.sample(tokenize(sents[0]), 2))
    picked, trace = oracle_select(sents, ref, max_sents)
    assert 1 <= len(picked) <= max_sents and len(set(picked)) == len(picked)
    assert all(b > a for a, b in zip(trace, trace[1:]))
    singles = [mean_rouge_f(tokenize(s), tokenize(ref)) for s in sents]
    assert trace[0] == max(singles) and trace[-1] >= max(singles)
