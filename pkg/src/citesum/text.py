"""Rule-based sentence splitting and word counting.

Used for corpus statistics, the extractive baselines and the readability
metrics so that every sentence count in the package agrees.
"""

import re

# Tokens (lowercased, trailing period removed) that never end a sentence.
ABBREVIATIONS = frozenset({
    "al", "approx", "ca", "cf", "dr", "e.g", "eq", "eqs", "fig",
    "figs", "i.e", "mr", "mrs", "ms", "no", "nos", "prof", "ref", "refs",
    "resp", "sec", "st", "suppl", "tab", "viz", "vol", "vs",
})

_TERMINAL = re.compile(r"[.!?]+[\"')\]”’]*$")
_CLOSERS = "\"')]”’"


def _ends_sentence(token, next_token):
    if not _TERMINAL.search(token):
        return False
    if next_token is not None and next_token[0].islower():
        return False
    if token.rstrip(_CLOSERS).endswith("."):
        stem = token.rstrip(_CLOSERS)[:-1].lstrip("(['\"").lower()
        if stem in ABBREVIATIONS:
            return False
        # single-letter initials such as "J."
        if len(stem) == 1 and stem.isalpha():
            return False
    return True


def split_sentences(text):
    """Split ``text`` into sentences.

    A sentence ends at a token carrying terminal punctuation (``.``, ``!`` or
    ``?``, optionally followed by closing quotes or brackets) unless that token
    is a known abbreviation or an initial, or the next token starts with a
    lowercase letter. Line breaks always end a sentence. Words inside a
    sentence are re-joined with single spaces, so the multiset of words is
    preserved exactly.
    """
    sentences = []
    for line in text.splitlines():
        tokens = line.split()
        current = []
        for i, token in enumerate(tokens):
            current.append(token)
            nxt = tokens[i + 1] if i + 1 < len(tokens) else None
            if _ends_sentence(token, nxt):
                sentences.append(" ".join(current))
                current = []
        if current:
            sentences.append(" ".join(current))
    return sentences


def count_words(text):
    return len(text.split())


def normalize_whitespace(text):
    return " ".join(text.split())
