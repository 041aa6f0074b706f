"""ROUGE-1/2/L, readability formulas, perplexity and corpus score reports."""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import NamedTuple

from .errors import EmptyText, MissingReference
from .text import split_sentences

_NON_ALNUM = re.compile(r"[^a-z0-9]+")


class Score(NamedTuple):
    precision: float
    recall: float
    fmeasure: float

    def to_json(self):
        return {"precision": self.precision, "recall": self.recall, "f1": self.fmeasure}


def tokenize(text):
    """Lowercase, replace every non-alphanumeric run by a space, split."""
    return _NON_ALNUM.sub(" ", text.lower()).split()


def _prf(match, n_cand, n_ref):
    if n_cand == 0 or n_ref == 0 or match == 0:
        return Score(0.0, 0.0, 0.0)
    p = match / n_cand
    r = match / n_ref
    return Score(p, r, 2 * p * r / (p + r))


def ngrams(tokens, n):
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def rouge_n_tokens(cand, ref, n):
    c, r = ngrams(cand, n), ngrams(ref, n)
    match = sum((c & r).values())
    return _prf(match, sum(c.values()), sum(r.values()))


def lcs_length(a, b):
    if len(a) < len(b):
        a, b = b, a
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b):
            cur.append(prev[j] + 1 if x == y else max(prev[j + 1], cur[j]))
        prev = cur
    return prev[-1]


def rouge_l_tokens(cand, ref):
    return _prf(lcs_length(cand, ref), len(cand), len(ref))


def rouge_n(candidate, reference, n=1):
    return rouge_n_tokens(tokenize(candidate), tokenize(reference), n)


def rouge_l(candidate, reference):
    return rouge_l_tokens(tokenize(candidate), tokenize(reference))


def rouge_all(candidate, reference):
    cand, ref = tokenize(candidate), tokenize(reference)
    return {
        "rouge1": rouge_n_tokens(cand, ref, 1),
        "rouge2": rouge_n_tokens(cand, ref, 2),
        "rougeL": rouge_l_tokens(cand, ref),
    }


# ---------------------------------------------------------------------------
# readability

_VOWEL_GROUP = re.compile(r"[aeiouy]+")


def count_syllables(word):
    """Vowel groups (aeiouy), minus one for a trailing "e", at least one."""
    w = re.sub(r"[^a-z]", "", word.lower())
    n = len(_VOWEL_GROUP.findall(w))
    if w.endswith("e"):
        n -= 1
    return max(n, 1)


def _words(text):
    words = (tok.strip("".join(c for c in tok if not c.isalnum())) for tok in text.split())
    return [w for w in words if any(c.isalnum() for c in w)]


def text_counts(text):
    """(words, sentences, syllables, letters) as used by both readability formulas."""
    words = _words(text)
    sentences = len(split_sentences(text))
    if not words or not sentences:
        raise EmptyText("readability needs at least one word and one sentence")
    syllables = sum(count_syllables(w) for w in words)
    letters = sum(c.isalpha() for w in words for c in w)
    return len(words), sentences, syllables, letters


def flesch_kincaid(text):
    words, sentences, syllables, _ = text_counts(text)
    return 0.39 * (words / sentences) + 11.8 * (syllables / words) - 15.59


def coleman_liau(text):
    words, sentences, _, letters = text_counts(text)
    L = letters / words * 100
    S = sentences / words * 100
    return 0.0588 * L - 0.296 * S - 15.8


def perplexity(model, instances, batch_size=16):
    """exp of the mean teacher-forced negative log-likelihood per target token."""
    from .model.network import corpus_nll

    total, count = corpus_nll(model, instances, batch_size)
    return math.exp(total / count)


# ---------------------------------------------------------------------------
# corpus evaluation

ROUGE_KEYS = ("rouge1", "rouge2", "rougeL")


@dataclass
class InstanceScore:
    uid: str
    rouge: dict[str, Score]
    flesch_kincaid: float | None
    coleman_liau: float | None
    perplexity: float | None = None

    def to_json(self):
        out = {"uid": self.uid}
        out.update({k: self.rouge[k].to_json() for k in ROUGE_KEYS})
        out["flesch_kincaid"] = self.flesch_kincaid
        out["coleman_liau"] = self.coleman_liau
        out["perplexity"] = self.perplexity
        return out


def _mean(values):
    values = [v for v in values if v is not None]
    return math.fsum(values) / len(values) if values else None


@dataclass
class ScoreReport:
    instances: list[InstanceScore]
    corpus_perplexity: float | None = None
    mean: dict = field(init=False)

    def __post_init__(self):
        self.mean = {}
        for key in ROUGE_KEYS:
            self.mean[key] = Score(*(_mean([s.rouge[key][i] for s in self.instances]) for i in range(3)))
        for key in ("flesch_kincaid", "coleman_liau", "perplexity"):
            self.mean[key] = _mean([getattr(s, key) for s in self.instances])

    @property
    def count(self):
        return len(self.instances)

    def to_json(self):
        mean = {k: (v.to_json() if isinstance(v, Score) else v) for k, v in self.mean.items()}
        return {
            "count": self.count,
            "mean": mean,
            "corpus_perplexity": self.corpus_perplexity,
            "instances": [s.to_json() for s in self.instances],
        }


def _readability(text, formula):
    try:
        return formula(text)
    except EmptyText:
        return None


def evaluate(predictions, references, perplexities=None, corpus_perplexity=None) -> ScoreReport:
    """Score ``predictions`` (``{"uid", "summary"}`` dicts) against reference abstracts.

    ``references`` maps uid to reference text. Readability is measured on the
    prediction; it is ``None`` for predictions with no words, and means skip
    such entries.
    """
    perplexities = perplexities or {}
    scores = []
    for pred in predictions:
        uid = pred["uid"]
        if uid not in references:
            raise MissingReference(uid)
        summary = pred["summary"]
        scores.append(InstanceScore(
            uid=uid,
            rouge=rouge_all(summary, references[uid]),
            flesch_kincaid=_readability(summary, flesch_kincaid),
            coleman_liau=_readability(summary, coleman_liau),
            perplexity=perplexities.get(uid),
        ))
    return ScoreReport(scores, corpus_perplexity=corpus_perplexity)
