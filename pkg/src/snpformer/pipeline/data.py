"""Datasets: sequence + phenotype files joined into token-ready arrays."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..codec import SnpSequence, preprocess, read_sequence_file
from ..errors import ConfigError, DataValueError, JoinError, LengthError
from ..model import TASKS
from ..tokenizer import encode_letters, tokenize_codes


@dataclass
class Dataset:
    """Samples sharing one sequence length, with one phenotype value each.

    ``codes`` holds preprocessed letters as digits (A=0, T=1, C=2, G=3, X=4).
    Classification values are dense class indices into ``label_names``.
    ``keys`` are stable per-sample integers (row numbers in the source
    dataset) used to seed masking, so subsets mask identically.
    """

    ids: list[str]
    codes: np.ndarray
    values: np.ndarray
    task: str
    label_names: tuple[str, ...] = ()
    trait: str = ""
    keys: np.ndarray | None = None
    _token_cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.task not in TASKS:
            raise ConfigError(f"task must be one of {TASKS}, got {self.task!r}")
        self.codes = np.asarray(self.codes, dtype=np.uint8)
        if self.codes.ndim != 2:
            raise LengthError("codes must be a 2-D (samples x loci) array")
        if len(self.ids) != len(self.codes) or len(self.values) != len(self.codes):
            raise LengthError("ids, codes and values disagree in sample count")
        if self.task == "classification":
            self.values = np.asarray(self.values, dtype=np.int64)
            if self.values.size and (self.values.min() < 0 or self.values.max() >= len(self.label_names)):
                raise ConfigError("class indices must be dense in [0, len(label_names))")
        else:
            self.values = np.asarray(self.values, dtype=np.float64)
        if self.keys is None:
            self.keys = np.arange(len(self.ids), dtype=np.int64)

    @property
    def n_samples(self) -> int:
        return len(self.ids)

    @property
    def seq_len(self) -> int:
        return self.codes.shape[1]

    @property
    def n_classes(self) -> int:
        return len(self.label_names) if self.task == "classification" else 1

    def __len__(self):
        return self.n_samples

    def tokens(self, k: int) -> np.ndarray:
        """Unmasked k-mer ids, shape ``(N_s, N_l // k)``; cached per k."""
        if k not in self._token_cache:
            self._token_cache[k] = tokenize_codes(self.codes, k)
        return self._token_cache[k]

    def subset(self, index) -> Dataset:
        index = np.asarray(index, dtype=np.int64)
        sub = Dataset(
            ids=[self.ids[i] for i in index],
            codes=self.codes[index],
            values=self.values[index],
            task=self.task,
            label_names=self.label_names,
            trait=self.trait,
            keys=self.keys[index],
        )
        for k, toks in self._token_cache.items():
            sub._token_cache[k] = toks[index]
        return sub

    def concat(self, other: Dataset) -> Dataset:
        if other.seq_len != self.seq_len or other.task != self.task or other.label_names != self.label_names:
            raise LengthError("datasets are not compatible")
        return Dataset(self.ids + other.ids, np.concatenate([self.codes, other.codes]),
                       np.concatenate([self.values, other.values]), self.task, self.label_names,
                       self.trait, np.concatenate([self.keys, other.keys]))


def codes_from_sequences(sequences: list[SnpSequence]) -> np.ndarray:
    if not sequences:
        raise LengthError("no sequences")
    n_l = len(sequences[0])
    out = np.empty((len(sequences), n_l), dtype=np.uint8)
    for row, seq in enumerate(sequences):
        if len(seq) != n_l:
            raise LengthError(f"sequence {seq.id!r} has length {len(seq)}, expected {n_l}")
        out[row] = encode_letters(preprocess(seq).letters)
    return out


def _sort_labels(labels) -> list[str]:
    try:
        return sorted(labels, key=float)
    except ValueError:
        return sorted(labels)


def read_phenotypes(path: str | Path, trait: str) -> dict[str, tuple[int, str]]:
    """``sample_id -> (line_number, raw value)`` for one trait."""
    path = Path(path)
    rows: dict[str, tuple[int, str]] = {}
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:3]] != ["sample_id", "trait", "value"]:
            raise DataValueError(f"{path}:line 1: expected header 'sample_id,trait,value'")
        for row in reader:
            lineno = reader.line_num
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 3:
                raise DataValueError(f"{path}:line {lineno}: expected 3 fields, got {len(row)}")
            sample_id, row_trait, value = (c.strip() for c in row)
            if row_trait != trait:
                continue
            if sample_id in rows:
                raise DataValueError(f"{path}:line {lineno}: duplicate row for sample {sample_id!r}, trait {trait!r}")
            rows[sample_id] = (lineno, value)
    return rows


def build_dataset(sequences: list[SnpSequence], phenotypes: dict[str, tuple[int, str]], task: str,
                  trait: str = "", pheno_path: str | Path = "phenotypes") -> Dataset:
    if task not in TASKS:
        raise ConfigError(f"task must be one of {TASKS}, got {task!r}")
    raw = []
    for seq in sequences:
        if seq.id not in phenotypes:
            raise JoinError(seq.id, f"sample {seq.id!r} has no phenotype row for trait {trait!r}")
        raw.append(phenotypes[seq.id])
    if task == "regression":
        values = np.empty(len(raw))
        for i, (lineno, text) in enumerate(raw):
            try:
                v = float(text)
            except ValueError:
                v = math.nan
            if not math.isfinite(v):
                raise DataValueError(f"{pheno_path}:line {lineno}: cannot use {text!r} as a regression value")
            values[i] = v
        label_names: tuple[str, ...] = ()
    else:
        for lineno, text in raw:
            if not text:
                raise DataValueError(f"{pheno_path}:line {lineno}: empty class label")
        label_names = tuple(_sort_labels({text for _, text in raw}))
        lookup = {name: i for i, name in enumerate(label_names)}
        values = np.array([lookup[text] for _, text in raw], dtype=np.int64)
    return Dataset([s.id for s in sequences], codes_from_sequences(sequences), values, task,
                   label_names, trait)


def load_dataset(seq_path: str | Path, pheno_path: str | Path, trait: str, task: str) -> Dataset:
    sequences = read_sequence_file(seq_path)
    phenotypes = read_phenotypes(pheno_path, trait)
    return build_dataset(sequences, phenotypes, task, trait, pheno_path)


def load_sequences(seq_path: str | Path) -> tuple[list[str], np.ndarray]:
    """Ids and digit codes of an unlabeled sequence file (for prediction)."""
    sequences = read_sequence_file(seq_path)
    return [s.id for s in sequences], codes_from_sequences(sequences)
