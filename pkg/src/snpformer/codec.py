"""SNP letter codec: genotype-pair coding, parsing and A/T/C/G/X reduction."""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator

from .errors import EmptySequence, InvalidBase, LengthError, ParseError


class SnpLetter(str, Enum):
    A = "A"
    T = "T"
    C = "C"
    G = "G"
    N = "N"
    Y = "Y"
    K = "K"
    W = "W"
    R = "R"
    S = "S"
    M = "M"


ALPHABET = "ATCGNYKWRSM"
BASES = "ATCGN"
REDUCED_ALPHABET = "ATCGX"
HOMOZYGOUS = frozenset("ATCG")

# unordered allele pair -> letter; any pair with N is handled separately
_PAIR_CODE = {
    frozenset("A"): "A",
    frozenset("T"): "T",
    frozenset("C"): "C",
    frozenset("G"): "G",
    frozenset("TC"): "Y",
    frozenset("TG"): "K",
    frozenset("AT"): "W",
    frozenset("AG"): "R",
    frozenset("CG"): "S",
    frozenset("AC"): "M",
}

_BAD_LETTER = re.compile(f"[^{ALPHABET}{ALPHABET.lower()}]")
_REDUCE = str.maketrans({c: "X" for c in "NYKWRSM"})


def encode_genotype_pair(ref_base: str, sample_base: str) -> SnpLetter:
    """Letter for the unordered pair of reference and sample bases.

    >>> encode_genotype_pair("T", "A")
    <SnpLetter.W: 'W'>
    """
    a = ref_base.upper() if isinstance(ref_base, str) else ref_base
    b = sample_base.upper() if isinstance(sample_base, str) else sample_base
    for base in (a, b):
        if not isinstance(base, str) or len(base) != 1 or base not in BASES:
            raise InvalidBase(base)
    if a == "N" or b == "N":
        return SnpLetter.N
    return SnpLetter(_PAIR_CODE[frozenset((a, b))])


def decode_letter(letter: str) -> tuple[str, str] | None:
    """Inverse of :func:`encode_genotype_pair` (``None`` for ``N``)."""
    letter = SnpLetter(letter.upper()).value
    if letter == "N":
        return None
    for pair, code in _PAIR_CODE.items():
        if code == letter:
            bases = sorted(pair, key=BASES.index)
            return (bases[0], bases[-1])
    raise AssertionError(letter)


@dataclass(frozen=True)
class SnpSequence:
    id: str
    letters: str

    def __post_init__(self):
        if not self.letters:
            raise EmptySequence(f"sequence {self.id!r} is empty")
        bad = _BAD_LETTER.search(self.letters)
        if bad is not None or not self.letters.isupper():
            raise ParseError("letters must be upper-case members of the SNP alphabet",
                             offset=bad.start() if bad else None)

    def __len__(self):
        return len(self.letters)


@dataclass(frozen=True)
class PreprocessedSequence:
    id: str
    letters: str

    def __post_init__(self):
        if not self.letters or self.letters.strip(REDUCED_ALPHABET):
            raise ParseError(f"preprocessed sequence {self.id!r} must be over {REDUCED_ALPHABET}")

    def __len__(self):
        return len(self.letters)


def parse_sequence(id: str, text: str) -> SnpSequence:
    if not text:
        raise EmptySequence(f"sequence {id!r} is empty")
    bad = _BAD_LETTER.search(text)
    if bad is not None:
        raise ParseError(f"illegal character {bad.group()!r} in sequence {id!r}", offset=bad.start())
    return SnpSequence(id, text.upper())


def preprocess(seq: SnpSequence) -> PreprocessedSequence:
    """Keep A/T/C/G, send every other letter to X. Length is preserved."""
    return PreprocessedSequence(seq.id, seq.letters.translate(_REDUCE))


def iter_sequence_file(path: str | Path) -> Iterator[tuple[int, SnpSequence]]:
    """Yield ``(line_number, sequence)`` from a ``sample_id<TAB>sequence`` file.

    Lines starting with ``#`` and blank lines are skipped. Lengths are not
    checked here; see :func:`read_sequence_file`.
    """
    path = Path(path)
    with path.open("r", encoding="utf-8", newline="") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw[:-1] if raw.endswith("\n") else raw
            if line.endswith("\r"):
                line = line[:-1]
            if not line or line.startswith("#"):
                continue
            if "\t" not in line:
                raise ParseError("expected 'sample_id<TAB>sequence'", line=lineno, path=path)
            sample_id, text = line.split("\t", 1)
            if not sample_id:
                raise ParseError("empty sample id", line=lineno, path=path)
            try:
                yield lineno, parse_sequence(sample_id, text)
            except ParseError as exc:
                raise ParseError(str(exc), offset=exc.offset, line=lineno, path=path) from None
            except EmptySequence as exc:
                raise ParseError(str(exc), line=lineno, path=path) from None


def read_sequence_file(path: str | Path) -> list[SnpSequence]:
    records = []
    seen = set()
    for lineno, seq in iter_sequence_file(path):
        if seq.id in seen:
            raise ParseError(f"duplicate sample id {seq.id!r}", line=lineno, path=path)
        seen.add(seq.id)
        if records and len(seq) != len(records[0]):
            raise LengthError(
                f"{path}:line {lineno}: sequence {seq.id!r} has length {len(seq)}, "
                f"expected {len(records[0])}"
            )
        records.append(seq)
    if not records:
        raise ParseError("no sequences found", path=path)
    return records


def write_sequence_file(path: str | Path, sequences: Iterable[SnpSequence | PreprocessedSequence]) -> None:
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        for seq in sequences:
            fh.write(f"{seq.id}\t{seq.letters}\n")
