from citesum.text import split_sentences


def test_basic_split():
    assert split_sentences("One two. Three four! Five?") == ["One two.", "Three four!", "Five?"]


def test_abbreviations_do_not_split():
    text = "Smith et al. reported this, e.g. in Fig. 2. Then it ended."
    assert split_sentences(text) == ["Smith et al. reported this, e.g. in Fig. 2.", "Then it ended."]


def test_lowercase_continuation_and_initials():
    assert split_sentences("The value was approx. five. J. Doe agreed.") == [
        "The value was approx. five.",
        "J. Doe agreed.",
    ]
    assert split_sentences("p. value was small.") == ["p. value was small."]


def test_newline_ends_sentence():
    assert split_sentences("Heading without stop\nNext line.") == ["Heading without stop", "Next line."]


def test_closing_quote():
    assert split_sentences('He said "stop." Then left.') == ['He said "stop."', "Then left."]


def test_words_preserved():
    text = "A b. C d e.  F (g). H"
    assert " ".join(split_sentences(text)).split() == text.split()
