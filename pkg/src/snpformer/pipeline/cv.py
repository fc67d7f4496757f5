"""Seeded five-fold cross-validation."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from ..errors import ConfigError
from ..model import ModelConfig
from ..tokenizer import TokenizerConfig
from .checkpoint import Checkpoint
from .data import Dataset
from .metrics import mean_std, metric_name
from .train import EpochRecord, TrainConfig, evaluate, train

N_FOLDS = 5
VAL_FRACTION = 0.1


class Fold(NamedTuple):
    train: np.ndarray
    val: np.ndarray
    test: np.ndarray

    @property
    def fit(self) -> np.ndarray:
        """Training plus validation indices (for models without early stopping)."""
        return np.sort(np.concatenate([self.train, self.val]))


def derive_seed(*parts: int) -> int:
    return int(np.random.SeedSequence([int(p) & 0xFFFFFFFF for p in parts]).generate_state(1)[0])


def five_fold_split(n_samples: int, seed: int, n_folds: int = N_FOLDS,
                    val_fraction: float = VAL_FRACTION) -> list[Fold]:
    """Shuffle once, cut into near-equal folds, hold out ``val_fraction`` of each training split."""
    if n_samples < n_folds:
        raise ConfigError(f"{n_folds}-fold split needs at least {n_folds} samples, got {n_samples}")
    perm = np.random.default_rng(derive_seed(seed, 0xF01D)).permutation(n_samples)
    chunks = np.array_split(perm, n_folds)
    folds = []
    for i, test in enumerate(chunks):
        rest = np.concatenate([c for j, c in enumerate(chunks) if j != i])
        rest = np.random.default_rng(derive_seed(seed, i, 0x7A1)).permutation(rest)
        n_val = max(1, int(round(val_fraction * len(rest))))
        if n_val >= len(rest):
            raise ConfigError("training split too small to hold out a validation set")
        folds.append(Fold(np.sort(rest[n_val:]), np.sort(rest[:n_val]), np.sort(test)))
    return folds


@dataclass
class FoldReport:
    metric: str
    values: list[float]
    seeds: list[int] = field(default_factory=list)
    wall_times: list[float] = field(default_factory=list)
    histories: list[list[EpochRecord]] = field(default_factory=list)
    checkpoints: list[Checkpoint] = field(default_factory=list)

    @property
    def mean(self) -> float:
        return mean_std(self.values)[0]

    @property
    def std(self) -> float:
        return mean_std(self.values)[1]

    @property
    def wall_time(self) -> float:
        return float(sum(self.wall_times))

    def rows(self) -> list[tuple[str, str, float]]:
        """``(fold, metric, value)`` rows followed by mean and std summary rows."""
        out = [(str(i), self.metric, v) for i, v in enumerate(self.values)]
        out.append(("mean", self.metric, self.mean))
        out.append(("std", self.metric, self.std))
        return out


def cross_validate(dataset: Dataset, model_cfg: ModelConfig, train_cfg: TrainConfig,
                   tok_cfg: TokenizerConfig | None = None, seed: int | None = None,
                   on_fold: Callable[[int, FoldReport], None] | None = None) -> FoldReport:
    """Train and test once per fold; all randomness derives from ``(seed, fold)``."""
    seed = train_cfg.seed if seed is None else seed
    tok_cfg = tok_cfg or TokenizerConfig(k=model_cfg.k)
    report = FoldReport(metric_name(dataset.task), [])
    for i, fold in enumerate(five_fold_split(dataset.n_samples, seed)):
        start = time.perf_counter()
        fold_seed = derive_seed(seed, i)
        cfg = TrainConfig(**{**train_cfg.__dict__, "seed": fold_seed})
        fold_tok = TokenizerConfig(tok_cfg.k, tok_cfg.masking_prob, derive_seed(tok_cfg.seed, i))
        result = train(dataset.subset(fold.train), dataset.subset(fold.val), model_cfg, cfg, fold_tok)
        metrics = evaluate(result.checkpoint, dataset.subset(fold.test))
        report.values.append(metrics.value)
        report.seeds.append(fold_seed)
        report.histories.append(result.history)
        report.checkpoints.append(result.checkpoint)
        report.wall_times.append(time.perf_counter() - start)
        if on_fold is not None:
            on_fold(i, report)
    return report
