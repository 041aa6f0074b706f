"""Byte-pair-encoding vocabulary with the summariser's special tokens.

Text is pre-split on whitespace; each word becomes its characters followed by
an end-of-word symbol, and merges are learned on those symbol sequences. A
whitespace word-level mode is also provided for tests that should not depend
on BPE training.
"""

from __future__ import annotations

import hashlib
import json
import string
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from .errors import CorpusTooSmall, UnknownId

END_OF_WORD = "</w>"

PAD, UNK, BOS, EOS, CLS, ABS = "<pad>", "<unk>", "<bos>", "<eos>", "<cls>", "<abs>"
SPECIAL_TOKENS = (PAD, UNK, BOS, EOS, CLS, ABS)
PAD_ID, UNK_ID, BOS_ID, EOS_ID, CLS_ID, ABS_ID = range(len(SPECIAL_TOKENS))

# Always in the base alphabet so any ASCII text round-trips.
_BASE_CHARS = tuple(c for c in string.printable if not c.isspace())


@dataclass
class Vocabulary:
    tokens: list[str]
    merges: list[tuple[str, str]] = field(default_factory=list)
    mode: str = "bpe"

    def __post_init__(self):
        if tuple(self.tokens[: len(SPECIAL_TOKENS)]) != SPECIAL_TOKENS:
            raise ValueError("vocabulary must start with the special tokens")
        self.token_to_id = {t: i for i, t in enumerate(self.tokens)}
        if len(self.token_to_id) != len(self.tokens):
            raise ValueError("duplicate tokens in vocabulary")
        self.merge_ranks = {pair: i for i, pair in enumerate(self.merges)}
        self._cache = {}

    def __len__(self):
        return len(self.tokens)

    @property
    def specials(self):
        return {t: i for i, t in enumerate(SPECIAL_TOKENS)}

    def _bpe(self, word):
        cached = self._cache.get(word)
        if cached is not None:
            return cached
        symbols = list(word) + [END_OF_WORD]
        while len(symbols) > 1:
            best = None
            for i in range(len(symbols) - 1):
                rank = self.merge_ranks.get((symbols[i], symbols[i + 1]))
                if rank is not None and (best is None or rank < best[0]):
                    best = (rank, i)
            if best is None:
                break
            i = best[1]
            symbols[i:i + 2] = [symbols[i] + symbols[i + 1]]
        ids = [self.token_to_id.get(s, UNK_ID) for s in symbols]
        self._cache[word] = ids
        return ids

    def encode(self, text):
        ids = []
        for word in text.split():
            if self.mode == "word":
                ids.append(self.token_to_id.get(word, UNK_ID))
            else:
                ids.extend(self._bpe(word))
        return ids

    def decode(self, ids):
        """Inverse of :meth:`encode` up to whitespace (words re-joined by one space)."""
        pieces = []
        n = len(self.tokens)
        for i in ids:
            i = int(i)
            if not 0 <= i < n:
                raise UnknownId(f"token id {i} outside vocabulary of size {n}")
            token = self.tokens[i]
            if i < len(SPECIAL_TOKENS) or self.mode == "word":
                pieces.append(f" {token} ")
            else:
                pieces.append(token.replace(END_OF_WORD, " "))
        return " ".join("".join(pieces).split())

    def to_json(self):
        return {
            "mode": self.mode,
            "tokens": list(self.tokens),
            "merges": [list(m) for m in self.merges],
            "specials": self.specials,
        }

    def sha256(self):
        blob = json.dumps(self.to_json(), ensure_ascii=False, sort_keys=True).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_json(), ensure_ascii=False, indent=1) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path):
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(tokens=obj["tokens"], merges=[tuple(m) for m in obj["merges"]], mode=obj.get("mode", "bpe"))


def train_bpe(texts, vocab_size):
    """Learn ``vocab_size - |base| - |specials|`` merges from ``texts``.

    The most frequent adjacent symbol pair is merged at each step; ties go to
    the lexicographically smallest pair, so the result only depends on the
    word frequencies.
    """
    word_freq = Counter()
    for text in texts:
        word_freq.update(text.split())
    chars = set(_BASE_CHARS)
    for word in word_freq:
        chars.update(word)
    base = sorted(chars) + [END_OF_WORD]
    n_merges = vocab_size - len(base) - len(SPECIAL_TOKENS)
    if n_merges < 0:
        raise CorpusTooSmall(
            f"vocab_size {vocab_size} is below the base alphabet ({len(base)}) plus specials"
        )

    words = [(list(w) + [END_OF_WORD], f) for w, f in sorted(word_freq.items())]
    merges = []
    tokens = list(SPECIAL_TOKENS) + base
    known = set(tokens)
    for _ in range(n_merges):
        pairs = Counter()
        for symbols, freq in words:
            for pair in zip(symbols, symbols[1:]):
                pairs[pair] += freq
        # a merge whose product already exists would not add a token
        candidates = [(p, c) for p, c in pairs.items() if p[0] + p[1] not in known]
        if not candidates:
            raise CorpusTooSmall(f"only {len(merges)} merges available, {n_merges} requested")
        best = min(candidates, key=lambda pc: (-pc[1], pc[0]))[0]
        merged = best[0] + best[1]
        merges.append(best)
        tokens.append(merged)
        known.add(merged)
        for symbols, _ in words:
            i = 0
            while i < len(symbols) - 1:
                if symbols[i] == best[0] and symbols[i + 1] == best[1]:
                    symbols[i:i + 2] = [merged]
                i += 1
    return Vocabulary(tokens=tokens, merges=merges, mode="bpe")


def word_vocabulary(texts):
    """Whitespace word-level vocabulary (sorted, so order-independent)."""
    words = sorted({w for text in texts for w in text.split()} - set(SPECIAL_TOKENS))
    return Vocabulary(tokens=list(SPECIAL_TOKENS) + words, mode="word")
