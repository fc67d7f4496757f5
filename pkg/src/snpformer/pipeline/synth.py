"""Synthetic genotype/phenotype data with planted causal k-mers.

Each causal locus is a motif-width window aligned to the motif grid. With
probability ``plant_prob`` the window is overwritten by the locus motif;
afterwards every letter is independently replaced by a heterozygous code
with probability ``het_rate``. The causal indicator is "the preprocessed
window equals the motif", so heterozygous hits inside a planted window
switch it off. Its probability is therefore

    pi = plant_prob * (1 - het)^m + (1 - plant_prob) * ((1 - het) / 4)^m

Additive latent: sum_i effect_i * I_i.
Epistatic latent: sum over consecutive locus pairs of
effect_p * (I_a - pi) * (I_b - pi). Centering makes each product
uncorrelated with any function of a single locus, so the interaction has
no additive component for a linear model to pick up.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..codec import SnpSequence
from ..errors import ConfigError
from .data import Dataset

HETEROZYGOUS = "YKWRSM"
_LETTERS = np.frombuffer(b"ATCG", dtype=np.uint8)
_HET = np.frombuffer(HETEROZYGOUS.encode(), dtype=np.uint8)


@dataclass(frozen=True)
class SignalSpec:
    n_causal: int = 20
    effect_sizes: tuple[float, ...] | None = None
    noise_sd: float = 0.0
    epistatic: bool = False
    motif_len: int = 6
    plant_prob: float = 0.5
    het_rate: float = 0.05
    # when set, overrides noise_sd so that PCC(latent, target) has this expected value
    target_pcc: float | None = None


@dataclass
class SynthResult:
    dataset: Dataset
    latent: np.ndarray
    sequences: list[SnpSequence]
    loci: np.ndarray
    motifs: list[str]
    effects: np.ndarray
    noise_sd: float
    indicator_prob: float


def indicator_prob(signal: SignalSpec) -> float:
    m, h, q = signal.motif_len, signal.het_rate, signal.plant_prob
    return q * (1 - h) ** m + (1 - q) * ((1 - h) / 4) ** m


def latent_variance(signal: SignalSpec, effects) -> float:
    """Population variance of the latent score (loci are independent)."""
    pi = indicator_prob(signal)
    e2 = float(np.sum(np.square(effects)))
    if signal.epistatic:
        return e2 * (pi * (1 - pi)) ** 2
    return e2 * pi * (1 - pi)


def noise_for_pcc(latent_var: float, target_pcc: float) -> float:
    if not 0 < target_pcc <= 1:
        raise ConfigError("target_pcc must lie in (0, 1]")
    return math.sqrt(latent_var * (1.0 / target_pcc**2 - 1.0))


def synth_generate(n_samples: int, seq_len: int, task: str = "regression", signal: SignalSpec = SignalSpec(),
                   seed: int = 0, n_classes: int = 2, trait: str = "synthetic") -> SynthResult:
    m = signal.motif_len
    if n_samples < 1 or seq_len < 1:
        raise ConfigError("n_samples and seq_len must be positive")
    if m < 1 or seq_len < m * signal.n_causal:
        raise ConfigError(f"seq_len={seq_len} cannot hold {signal.n_causal} causal windows of width {m}")
    if signal.n_causal < 0:
        raise ConfigError("n_causal must be >= 0")
    if signal.epistatic and signal.n_causal % 2:
        raise ConfigError("epistatic mode pairs loci, so n_causal must be even")
    if not (0 <= signal.plant_prob <= 1 and 0 <= signal.het_rate < 1):
        raise ConfigError("plant_prob must lie in [0, 1] and het_rate in [0, 1)")
    if signal.noise_sd < 0:
        raise ConfigError("noise_sd must be >= 0")
    if task not in ("regression", "classification"):
        raise ConfigError(f"unknown task {task!r}")
    if task == "classification" and not 2 <= n_classes <= n_samples:
        raise ConfigError("classification needs 2 <= n_classes <= n_samples")

    rng = np.random.default_rng(seed)
    n_eff = signal.n_causal // 2 if signal.epistatic else signal.n_causal
    if signal.effect_sizes is not None:
        effects = np.asarray(signal.effect_sizes, dtype=np.float64)
        if effects.shape != (n_eff,):
            raise ConfigError(f"expected {n_eff} effect sizes, got {effects.size}")
    else:
        effects = rng.normal(0.0, 1.0, size=n_eff)
    loci = rng.choice(seq_len // m, size=signal.n_causal, replace=False) * m
    motif_codes = rng.integers(0, 4, size=(signal.n_causal, m))
    motifs = [_LETTERS[row].tobytes().decode() for row in motif_codes]

    base = rng.integers(0, 4, size=(n_samples, seq_len), dtype=np.uint8)
    plant = rng.random((n_samples, signal.n_causal)) < signal.plant_prob
    for j, start in enumerate(loci):
        base[plant[:, j], start:start + m] = motif_codes[j]
    het = rng.random((n_samples, seq_len)) < signal.het_rate
    het_codes = rng.integers(0, len(HETEROZYGOUS), size=(n_samples, seq_len))

    letters = np.where(het, _HET[het_codes], _LETTERS[base])
    codes = np.where(het, 4, base).astype(np.uint8)

    ind = np.empty((n_samples, signal.n_causal))
    for j, start in enumerate(loci):
        ind[:, j] = np.all(codes[:, start:start + m] == motif_codes[j], axis=1)
    pi = indicator_prob(signal)
    if signal.epistatic:
        centred = ind - pi
        latent = (centred[:, 0::2] * centred[:, 1::2]) @ effects if n_eff else np.zeros(n_samples)
    else:
        latent = ind @ effects if n_eff else np.zeros(n_samples)

    noise_sd = signal.noise_sd
    if signal.target_pcc is not None:
        noise_sd = noise_for_pcc(latent_variance(signal, effects), signal.target_pcc)
    target = latent + noise_sd * rng.normal(size=n_samples) if noise_sd > 0 else latent.copy()

    width = len(str(n_samples - 1))
    ids = [f"s{i:0{width}d}" for i in range(n_samples)]
    if task == "classification":
        order = np.argsort(target, kind="stable")
        values = np.empty(n_samples, dtype=np.int64)
        for c, chunk in enumerate(np.array_split(order, n_classes)):
            values[chunk] = c
        label_names = tuple(f"class{c}" for c in range(n_classes))
    else:
        values, label_names = target, ()
    dataset = Dataset(ids, codes, values, task, label_names, trait)
    sequences = [SnpSequence(i, row.tobytes().decode("ascii")) for i, row in zip(ids, letters)]
    return SynthResult(dataset, latent, sequences, loci, motifs, effects, noise_sd, pi)
