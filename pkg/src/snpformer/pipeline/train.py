"""Mini-batch AdamW training with early stopping, and evaluation."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError, DegenerateInput, NumericError, ShapeError
from ..model import ModelConfig, SnpTransformer
from ..tensor import AdamState, adam_step, backward, checked_mode
from ..tokenizer import TokenizerConfig, mask_array, mask_rng
from .checkpoint import Checkpoint
from .data import Dataset
from .metrics import metric_name, task_metric

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 80
    patience: int = 10
    batch_size: int = 16
    lr: float = 1e-4
    weight_decay: float = 0.01
    seed: int = 0
    checked: bool = False

    def __post_init__(self):
        if self.epochs < 1:
            raise ConfigError("epochs must be >= 1")
        if not 0 <= self.patience < self.epochs:
            raise ConfigError(f"patience must lie in [0, epochs), got {self.patience}")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if self.lr <= 0 or self.weight_decay < 0:
            raise ConfigError("lr must be > 0 and weight_decay >= 0")


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    val_metric: float


@dataclass
class TrainResult:
    checkpoint: Checkpoint
    history: list[EpochRecord] = field(default_factory=list)

    @property
    def best_epoch(self) -> int:
        return self.checkpoint.meta["epoch"]


@dataclass
class Metrics:
    name: str
    value: float
    predictions: np.ndarray


def model_config_for(dataset: Dataset, k: int = 6, **overrides) -> ModelConfig:
    """ModelConfig whose token count and output width fit ``dataset``."""
    if dataset.seq_len < k:
        raise ConfigError(f"sequence length {dataset.seq_len} is shorter than k={k}")
    return ModelConfig(k=k, seq_tokens=dataset.seq_len // k, task=dataset.task,
                       n_classes=dataset.n_classes, **overrides)


def _safe_metric(task: str, pred, truth) -> float:
    try:
        return task_metric(task, pred, truth)
    except DegenerateInput:
        return math.nan


def _predict_values(model: SnpTransformer, tokens: np.ndarray, batch_size: int) -> np.ndarray:
    return model.predict(tokens, batch_size=max(batch_size, 32)).values


def train(train_ds: Dataset, val_ds: Dataset, model_cfg: ModelConfig, train_cfg: TrainConfig,
          tok_cfg: TokenizerConfig | None = None) -> TrainResult:
    """Train on ``train_ds`` and keep the parameters with the best validation metric.

    Tokens are masked afresh every epoch (per sample, from
    ``(tok_cfg.seed, sample key, epoch)``); validation never masks. Training
    stops once ``patience`` consecutive epochs fail to improve the validation
    metric, or after ``train_cfg.epochs``.
    """
    tok_cfg = tok_cfg or TokenizerConfig(k=model_cfg.k)
    if tok_cfg.k != model_cfg.k:
        raise ConfigError(f"tokenizer k={tok_cfg.k} differs from model k={model_cfg.k}")
    if train_ds.n_samples == 0:
        raise ConfigError("empty training set")
    if val_ds.n_samples == 0:
        raise ConfigError("empty validation set")
    if train_ds.task != model_cfg.task or val_ds.task != model_cfg.task:
        raise ConfigError("dataset task does not match the model task")
    k = model_cfg.k
    x_train = train_ds.tokens(k)
    x_val = val_ds.tokens(k)
    if x_train.shape[1] != model_cfg.seq_tokens or x_val.shape[1] != model_cfg.seq_tokens:
        raise ShapeError(f"datasets tokenize to {x_train.shape[1]} tokens, model expects {model_cfg.seq_tokens}")

    task = model_cfg.task
    if task == "regression":
        mean = float(train_ds.values.mean())
        std = float(train_ds.values.std())
        std = std if std > 0 else 1.0
        y_train = ((train_ds.values - mean) / std).astype(np.float32)
    else:
        mean, std = 0.0, 1.0
        y_train = train_ds.values
    model = SnpTransformer(model_cfg, seed=train_cfg.seed)
    params = model.parameters()
    state = AdamState(lr=train_cfg.lr, weight_decay=train_cfg.weight_decay)
    order_rng_seed = [train_cfg.seed, 0x5EED]

    history: list[EpochRecord] = []
    best = None
    best_metric = -math.inf
    stale = 0
    n = train_ds.n_samples
    bs = train_cfg.batch_size
    with checked_mode(train_cfg.checked):
        for epoch in range(1, train_cfg.epochs + 1):
            order = np.random.default_rng(order_rng_seed + [epoch]).permutation(n)
            total = 0.0
            for b, start in enumerate(range(0, n, bs)):
                idx = order[start:start + bs]
                batch = np.empty((len(idx), model_cfg.seq_tokens), dtype=np.int64)
                for row, i in enumerate(idx):
                    rng = mask_rng(tok_cfg.seed, int(train_ds.keys[i]), epoch)
                    batch[row], _ = mask_array(x_train[i], tok_cfg.masking_prob, k, rng)
                for p in params:
                    p.grad = None
                loss = model.loss(batch, y_train[idx])
                value = loss.item()
                if not math.isfinite(value):
                    raise NumericError(f"non-finite loss at epoch {epoch}, batch {b}")
                backward(loss)
                adam_step(params, [p.grad for p in params], state, checked=train_cfg.checked)
                total += value * len(idx)
            val_metric = _safe_metric(task, _predict_values(model, x_val, bs), val_ds.values)
            history.append(EpochRecord(epoch, total / n, val_metric))
            log.debug("epoch %d loss %.5f val %s %.4f", epoch, total / n, metric_name(task), val_metric)
            if best is None or val_metric > best_metric:
                best = {name: t.data.copy() for name, t in model.params.items()}
                best_metric = val_metric if not math.isnan(val_metric) else -math.inf
                best_epoch = epoch
                stale = 0
            else:
                stale += 1
                if stale > train_cfg.patience:
                    break

    meta = {
        "epoch": best_epoch,
        "best_val": best_metric if math.isfinite(best_metric) else None,
        "epochs_run": len(history),
        "target_mean": mean,
        "target_std": std,
        "label_names": list(train_ds.label_names),
        "trait": train_ds.trait,
        "metric": metric_name(task),
    }
    return TrainResult(Checkpoint(model_cfg, tok_cfg, best, meta), history)


def evaluate(ckpt: Checkpoint, dataset: Dataset, batch_size: int = 32) -> Metrics:
    """ACC (argmax) or PCC of unmasked predictions on ``dataset``."""
    if ckpt.task != dataset.task:
        raise ConfigError(f"checkpoint is a {ckpt.task} model but the dataset is {dataset.task}")
    if ckpt.task == "classification" and tuple(dataset.label_names) != ckpt.label_names:
        raise ConfigError("dataset class labels differ from the checkpoint's label map")
    tokens = dataset.tokens(ckpt.model_config.k)
    if tokens.shape[1] != ckpt.model_config.seq_tokens:
        raise ShapeError(f"dataset tokenizes to {tokens.shape[1]} tokens, checkpoint expects {ckpt.model_config.seq_tokens}")
    pred = ckpt.predict_tokens(tokens, batch_size=batch_size).values
    return Metrics(metric_name(ckpt.task), task_metric(ckpt.task, pred, dataset.values), pred)
