"""Extractive reference systems: LEAD-3 and a greedy ROUGE oracle."""

from __future__ import annotations

from .errors import EmptyDocument, EmptyReference
from .metrics import rouge_l_tokens, rouge_n_tokens, tokenize
from .text import split_sentences


def document_sentences(doc):
    text = doc if isinstance(doc, str) else doc.body_text
    return split_sentences(text)


def lead3(doc, k=3):
    sentences = document_sentences(doc)
    if not sentences:
        raise EmptyDocument("document has no sentences")
    return " ".join(sentences[:k])


def mean_rouge_f(cand_tokens, ref_tokens):
    """Mean of the ROUGE-1, ROUGE-2 and ROUGE-L F-scores."""
    return (
        rouge_n_tokens(cand_tokens, ref_tokens, 1).fmeasure
        + rouge_n_tokens(cand_tokens, ref_tokens, 2).fmeasure
        + rouge_l_tokens(cand_tokens, ref_tokens).fmeasure
    ) / 3


def oracle_select(sentences, reference, max_sents=10):
    """Greedy sentence selection against ``reference``.

    Returns ``(indices, trace)``: the chosen indices in selection order and
    the objective after each pick. The first pick is always made (ties go to
    the earliest sentence); later picks must strictly raise the objective.
    The candidate at every step is the selected set in document order.
    """
    ref = tokenize(reference)
    sent_tokens = [tokenize(s) for s in sentences]
    selected = []
    trace = []
    best_score = None
    while len(selected) < min(max_sents, len(sentences)):
        step_best = None
        for i in range(len(sentences)):
            if i in selected:
                continue
            cand = [t for j in sorted(selected + [i]) for t in sent_tokens[j]]
            score = mean_rouge_f(cand, ref)
            if step_best is None or score > step_best[0]:
                step_best = (score, i)
        if best_score is not None and step_best[0] <= best_score:
            break
        best_score = step_best[0]
        selected.append(step_best[1])
        trace.append(best_score)
    return selected, trace


def oracle_greedy(doc, reference, max_sents=10):
    sentences = document_sentences(doc)
    if not sentences:
        raise EmptyDocument("document has no sentences")
    if not reference or not reference.strip():
        raise EmptyReference("reference summary is empty")
    selected, _ = oracle_select(sentences, reference, max_sents)
    return " ".join(sentences[i] for i in sorted(selected))
