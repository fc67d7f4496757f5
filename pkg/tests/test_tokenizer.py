import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from snpformer.codec import PreprocessedSequence
from snpformer.errors import ConfigError, NotInvertible, SequenceTooShort
from snpformer.tokenizer import (
    TokenIds, TokenizerConfig, detokenize, kmer_of, kmer_tokenize, mask_array, mask_id, random_mask, token_id,
    tokenize_codes, encode_letters, vocab_size,
)

LETTERS = "ATCGX"


def oracle_id(kmer: str) -> int:
    # int() parses base-5 digit strings directly
    return int(kmer.translate(str.maketrans(LETTERS, "01234")), 5)


def test_vocab():
    assert vocab_size(6) == 15626
    assert mask_id(6) == 15625
    assert [vocab_size(k) for k in (1, 2, 3)] == [6, 26, 126]


@pytest.mark.parametrize("k", [0, -1, 13, 2.0, True])
def test_bad_k(k):
    with pytest.raises(ConfigError):
        vocab_size(k)


def test_known_ids():
    ids = kmer_tokenize(PreprocessedSequence("s", "ACGTXAAC"), 4).ids
    assert ids.tolist() == [66, 502]
    assert token_id("AAAAAA") == 0 and token_id("XXXXXX") == 15624


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_bijection_exhaustive(k):
    kmers = ["".join(p) for p in itertools.product(LETTERS, repeat=k)]
    ids = [token_id(m) for m in kmers]
    assert ids == [oracle_id(m) for m in kmers]
    assert sorted(ids) == list(range(5**k))
    assert [kmer_of(i, k) for i in ids] == kmers


def test_detokenize_rejects_mask():
    with pytest.raises(NotInvertible):
        detokenize(TokenIds(np.array([3, mask_id(2)]), 2))


def test_too_short():
    with pytest.raises(SequenceTooShort):
        kmer_tokenize(PreprocessedSequence("s", "AT"), 3)


@given(st.text(alphabet=LETTERS, min_size=1, max_size=300), st.integers(1, 8))
def test_length_law_and_round_trip(text, k):
    if len(text) < k:
        return
    tok = kmer_tokenize(PreprocessedSequence("s", text), k)
    assert len(tok) == len(text) // k
    assert detokenize(tok).letters == text[: len(tok) * k]
    assert tok.ids.tolist() == [oracle_id(text[i:i + k]) for i in range(0, len(tok) * k, k)]


def test_vectorised_matches_scalar():
    rng = np.random.default_rng(0)
    codes = rng.integers(0, 5, size=(7, 61)).astype(np.uint8)
    batch = tokenize_codes(codes, 6)
    for row, c in zip(batch, codes):
        text = "".join(LETTERS[d] for d in c)
        assert row.tolist() == kmer_tokenize(PreprocessedSequence("s", text), 6).ids.tolist()
    assert encode_letters("ATCGX").tolist() == [0, 1, 2, 3, 4]


@given(st.floats(0, 1), st.integers(0, 2**32), st.integers(0, 100))
def test_mask_only_touches_mask_id(p, seed, sample):
    ids = np.arange(50) % 25
    masked = random_mask(TokenIds(ids, 2), TokenizerConfig(2, p, seed), sample=sample)
    hit = masked.ids == mask_id(2)
    assert np.array_equal(np.flatnonzero(hit), masked.mask_positions)
    assert np.array_equal(masked.ids[~hit], ids[~hit])


def test_mask_deterministic_per_cell():
    tok = TokenIds(np.arange(500) % 7, 3)
    cfg = TokenizerConfig(3, 0.3, 11)
    a = random_mask(tok, cfg, sample=4, epoch=2).ids
    assert np.array_equal(a, random_mask(tok, cfg, sample=4, epoch=2).ids)
    assert not np.array_equal(a, random_mask(tok, cfg, sample=4, epoch=3).ids)
    assert not np.array_equal(a, random_mask(tok, cfg, sample=5, epoch=2).ids)


def test_mask_extremes():
    ids = np.arange(100)
    out, pos = mask_array(ids, 0.0, 3, np.random.default_rng(0))
    assert np.array_equal(out, ids) and pos.size == 0
    out, pos = mask_array(ids, 1.0, 3, np.random.default_rng(0))
    assert (out == 125).all() and pos.size == 100


def test_config_validation():
    with pytest.raises(ConfigError):
        TokenizerConfig(6, 1.5)
