import itertools

import pytest
from hypothesis import given, strategies as st

from snpformer.codec import (
    ALPHABET, SnpLetter, SnpSequence, decode_letter, encode_genotype_pair, parse_sequence, preprocess,
    read_sequence_file, write_sequence_file,
)
from snpformer.errors import InvalidBase, LengthError, ParseError

# independent oracle: IUPAC nucleotide codes restricted to the genotype alphabet
IUPAC = {"AA": "A", "TT": "T", "CC": "C", "GG": "G", "CT": "Y", "GT": "K", "AT": "W", "AG": "R", "CG": "S", "AC": "M"}


@pytest.mark.parametrize("a,b", list(itertools.product("ATCGN", repeat=2)))
def test_pair_table(a, b):
    want = "N" if "N" in (a, b) else IUPAC["".join(sorted(a + b))]
    assert encode_genotype_pair(a, b) == want
    assert encode_genotype_pair(b, a) == want


def test_lowercase_pair():
    assert encode_genotype_pair("t", "c") is SnpLetter.Y


@pytest.mark.parametrize("bad", ["", "AT", "X", "U", None, 3])
def test_invalid_base(bad):
    with pytest.raises(InvalidBase):
        encode_genotype_pair("A", bad)


def test_decode_round_trip():
    for letter in ALPHABET.replace("N", ""):
        a, b = decode_letter(letter)
        assert encode_genotype_pair(a, b) == letter
    assert decode_letter("N") is None


def test_preprocess_all_letters():
    seq = parse_sequence("s", ALPHABET)
    assert preprocess(seq).letters == "ATCGXXXXXXX"


@given(st.text(alphabet=ALPHABET + ALPHABET.lower(), min_size=1, max_size=200))
def test_preprocess_length_and_alphabet(text):
    out = preprocess(parse_sequence("s", text)).letters
    assert len(out) == len(text)
    assert set(out) <= set("ATCGX")
    for src, dst in zip(text.upper(), out):
        assert dst == (src if src in "ATCG" else "X")


def test_parse_reports_offset():
    with pytest.raises(ParseError) as err:
        parse_sequence("s", "ATCQG")
    assert err.value.offset == 3


def test_parse_rejects_whitespace():
    with pytest.raises(ParseError):
        parse_sequence("s", "AT CG")


def test_sequence_validates():
    with pytest.raises(ParseError):
        SnpSequence("s", "atcg")


def test_file_round_trip(tmp_path):
    seqs = [SnpSequence("a", "ATCGN"), SnpSequence("b", "YKWRS")]
    path = tmp_path / "x.tsv"
    write_sequence_file(path, seqs)
    assert read_sequence_file(path) == seqs


def test_file_comments_and_errors(tmp_path):
    path = tmp_path / "x.tsv"
    path.write_text("# header\n\na\tATCG\nb\tATZG\n")
    with pytest.raises(ParseError) as err:
        read_sequence_file(path)
    assert err.value.line == 4 and err.value.offset == 2
    path.write_text("a\tATCG\nb\tATC\n")
    with pytest.raises(LengthError):
        read_sequence_file(path)
    path.write_text("a\tATCG\na\tATCG\n")
    with pytest.raises(ParseError, match="duplicate"):
        read_sequence_file(path)
