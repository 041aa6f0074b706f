import pytest
from hypothesis import given, settings, strategies as st

from citesum.errors import CorpusTooSmall, UnknownId
from citesum.tokenizer import (
    ABS_ID,
    BOS_ID,
    CLS_ID,
    EOS_ID,
    PAD_ID,
    SPECIAL_TOKENS,
    UNK_ID,
    Vocabulary,
    train_bpe,
    word_vocabulary,
)

CORPUS = [
    "citation networks connect biomedical papers",
    "abstractive summarisation of biomedical papers uses citation knowledge",
    "networks of citations",
]



def _min_size(texts):
    # smallest legal vocabulary: specials + base alphabet, no merges
    for size in range(1, 1000):
        try:
            return len(train_bpe(texts, size).tokens)
        except CorpusTooSmall:
            continue
    raise AssertionError


def test_first_merge_hand_counted():
    # words "aaab" x2 -> symbols a a a b </w>; pair counts: (a,a)=4, (a,b)=2, (b,</w>)=2
    n0 = _min_size(["aaab aaab"])
    vocab = train_bpe(["aaab aaab"], n0 + 1)
    assert vocab.merges == [("a", "a")]


def test_merge_count_matches_budget():
    n0 = _min_size(CORPUS)
    vocab = train_bpe(CORPUS, n0 + 25)
    assert len(vocab.merges) == 25
    assert len(vocab) == n0 + 25


def test_vocab_below_base_alphabet():
    with pytest.raises(CorpusTooSmall):
        train_bpe(CORPUS, 50)


def test_too_many_merges_requested():
    n0 = _min_size(["ab"])
    with pytest.raises(CorpusTooSmall):
        train_bpe(["ab"], n0 + 10)


def test_training_deterministic():
    n0 = _min_size(CORPUS)
    assert train_bpe(CORPUS, n0 + 30).merges == train_bpe(CORPUS, n0 + 30).merges
    assert train_bpe(CORPUS, n0 + 30).merges == train_bpe(list(reversed(CORPUS)), n0 + 30).merges


def test_specials_fixed_ids():
    vocab = train_bpe(CORPUS, _min_size(CORPUS) + 5)
    assert vocab.tokens[: len(SPECIAL_TOKENS)] == list(SPECIAL_TOKENS)
    assert (PAD_ID, UNK_ID, BOS_ID, EOS_ID, CLS_ID, ABS_ID) == (0, 1, 2, 3, 4, 5)
    assert len(set(vocab.tokens)) == len(vocab.tokens)


def test_round_trip_phrase():
    vocab = train_bpe(CORPUS, _min_size(CORPUS) + 40)
    ids = vocab.encode("citation networks")
    assert vocab.decode(ids) == "citation networks"
    assert len(ids) < len("citation networks")


def test_empty_string():
    vocab = train_bpe(CORPUS, _min_size(CORPUS) + 5)
    assert vocab.encode("") == []


def test_decode_out_of_range():
    vocab = train_bpe(CORPUS, _min_size(CORPUS) + 5)
    with pytest.raises(UnknownId):
        vocab.decode([len(vocab)])


def test_unknown_character_maps_to_unk():
    vocab = train_bpe(CORPUS, _min_size(CORPUS))
    assert vocab.encode("aéb").count(UNK_ID) == 1


def test_word_mode():
    vocab = word_vocabulary(CORPUS)
    assert vocab.decode(vocab.encode("citation networks")) == "citation networks"
    assert vocab.encode("zebra") == [UNK_ID]


def test_save_load(tmp_path):
    vocab = train_bpe(CORPUS, _min_size(CORPUS) + 20)
    vocab.save(tmp_path / "v.json")
    loaded = Vocabulary.load(tmp_path / "v.json")
    assert loaded.tokens == vocab.tokens and loaded.merges == vocab.merges
    assert loaded.sha256() == vocab.sha256()


_VOCAB = train_bpe(CORPUS, _min_size(CORPUS) + 40)
_ascii = st.text(alphabet=st.characters(min_codepoint=32, max_codepoint=126), max_size=60)


@settings(max_examples=200, deadline=None)
@given(text=_ascii)
def test_round_trip_property(text):
    ids = _VOCAB.encode(text)
    assert _VOCAB.decode(ids) == " ".join(text.split())
    # encoding never emits special ids for printable ASCII
    assert not any(i < len(SPECIAL_TOKENS) for i in ids)
