"""Token-embedding transformer encoder with a flatten + MLP phenotype head."""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields
from typing import NamedTuple

import numpy as np

from . import tensor as T
from .errors import ConfigError, ShapeError
from .tensor import Tensor
from .tokenizer import vocab_size

TASKS = ("classification", "regression")


@dataclass(frozen=True)
class ModelConfig:
    k: int
    seq_tokens: int
    task: str = "regression"
    n_classes: int = 1
    d_model: int = 32
    n_layers: int = 3
    n_heads: int = 4
    mlp_ratio: int = 4
    d_proj: int = 4
    head_hidden: int = 256
    activation: str = "gelu"

    def __post_init__(self):
        if self.task not in TASKS:
            raise ConfigError(f"task must be one of {TASKS}, got {self.task!r}")
        if self.task == "classification" and self.n_classes < 2:
            raise ConfigError("classification needs n_classes >= 2")
        if self.seq_tokens < 1:
            raise ConfigError("seq_tokens must be >= 1")
        if self.d_model % 2:
            raise ConfigError(f"d_model must be even for sinusoidal encoding, got {self.d_model}")
        if self.n_heads < 1 or self.d_model % self.n_heads:
            raise ConfigError(f"d_model={self.d_model} is not divisible by n_heads={self.n_heads}")
        if not 1 <= self.d_proj <= self.d_model:
            raise ConfigError("d_proj must lie in [1, d_model]")
        if self.n_layers < 0 or self.mlp_ratio < 1 or self.head_hidden < 1:
            raise ConfigError("n_layers >= 0, mlp_ratio >= 1 and head_hidden >= 1 are required")
        if self.activation not in ("gelu", "relu"):
            raise ConfigError(f"unknown activation {self.activation!r}")
        vocab_size(self.k)

    @property
    def vocab(self) -> int:
        return vocab_size(self.k)

    @property
    def n_outputs(self) -> int:
        return self.n_classes if self.task == "classification" else 1

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> ModelConfig:
        kinds = {f.name: f.type for f in fields(cls)}
        out = {}
        for name, value in d.items():
            if name not in kinds:
                continue
            out[name] = value if kinds[name] == "str" else int(value)
        return cls(**out)


class PhenotypePrediction(NamedTuple):
    """Batch predictions: class probabilities, or regression values."""

    probabilities: np.ndarray | None
    values: np.ndarray


def positional_encoding(length: int, d_model: int, dtype=np.float32) -> np.ndarray:
    """Sinusoidal table: sin on even columns, cos on odd columns."""
    if length < 1:
        raise ConfigError("positional encoding length must be >= 1")
    if d_model < 2 or d_model % 2:
        raise ConfigError(f"positional encoding width must be even, got {d_model}")
    pos = np.arange(length, dtype=np.float64)[:, None]
    freq = 10000.0 ** (-np.arange(0, d_model, 2, dtype=np.float64) / d_model)
    pe = np.empty((length, d_model), dtype=np.float64)
    pe[:, 0::2] = np.sin(pos * freq)
    pe[:, 1::2] = np.cos(pos * freq)
    return pe.astype(dtype)


def embed(token_ids, table: Tensor, pe: np.ndarray | None = None) -> Tensor:
    """Embedding lookup plus the (constant) positional encoding."""
    ids = getattr(token_ids, "ids", token_ids)
    out = T.embedding(table, np.asarray(ids))
    if pe is None:
        pe = positional_encoding(out.shape[-2], table.shape[1], table.dtype)
    return out + Tensor(pe.astype(table.dtype, copy=False))


def _activation(name: str):
    return T.gelu if name == "gelu" else T.relu


def _split_heads(x: Tensor, n_heads: int) -> Tensor:
    d_model = x.shape[-1]
    return x.reshape(x.shape[:-1] + (n_heads, d_model // n_heads)).swapaxes(-3, -2)


def _merge_heads(x: Tensor) -> Tensor:
    x = x.swapaxes(-3, -2)
    return x.reshape(x.shape[:-2] + (x.shape[-2] * x.shape[-1],))


def mha(E: Tensor, p: dict, n_heads: int, return_weights: bool = False):
    """Multi-head self-attention over the token axis of ``E`` (``(..., n, D)``)."""
    d_model = E.shape[-1]
    if d_model % n_heads:
        raise ShapeError(f"width {d_model} is not divisible by {n_heads} heads")
    if p["wq"].shape != (d_model, d_model):
        raise ShapeError(f"attention weights expect width {p['wq'].shape[0]}, input has {d_model}")
    q = _split_heads(T.linear(E, p["wq"], p["bq"]), n_heads)
    k = _split_heads(T.linear(E, p["wk"], p["bk"]), n_heads)
    v = _split_heads(T.linear(E, p["wv"], p["bv"]), n_heads)
    ctx, weights = T.attention(q, k, v, return_weights=True)
    out = T.linear(_merge_heads(ctx), p["wo"], p["bo"])
    return (out, weights) if return_weights else out


def mlp(x: Tensor, p: dict, activation: str = "gelu") -> Tensor:
    h = _activation(activation)(T.linear(x, p["w1"], p["b1"]))
    return T.linear(h, p["w2"], p["b2"])


def encoder_block(E: Tensor, p: dict, n_heads: int, activation: str = "gelu") -> Tensor:
    """Pre-norm residual block: attention sublayer then MLP sublayer."""
    E1 = mha(T.layer_norm(E, p["ln1_gain"], p["ln1_bias"]), p, n_heads) + E
    return mlp(T.layer_norm(E1, p["ln2_gain"], p["ln2_bias"]), p, activation) + E1


def project_and_predict(E_L: Tensor, p: dict, cfg: ModelConfig) -> Tensor:
    """Project to ``d_proj`` per token, flatten row-major, two-layer MLP to outputs.

    Returns logits ``(B, C)`` for classification or values ``(B,)`` for regression.
    """
    if E_L.shape[-2] != cfg.seq_tokens:
        raise ShapeError(f"model expects {cfg.seq_tokens} tokens per sample, got {E_L.shape[-2]}")
    proj = T.linear(E_L, p["proj_w"], p["proj_b"])
    flat = proj.reshape(proj.shape[:-2] + (cfg.seq_tokens * cfg.d_proj,))
    hidden = _activation(cfg.activation)(T.linear(flat, p["head_w1"], p["head_b1"]))
    out = T.linear(hidden, p["head_w2"], p["head_b2"])
    if cfg.task == "regression":
        out = out.reshape(out.shape[:-1])
    return out


def loss_cls(logits: Tensor, labels) -> Tensor:
    return T.cross_entropy(logits, labels)


def loss_reg(pred: Tensor, target) -> Tensor:
    return T.mse_loss(pred, target)


BLOCK_KEYS = ("ln1_gain", "ln1_bias", "wq", "bq", "wk", "bk", "wv", "bv", "wo", "bo",
              "ln2_gain", "ln2_bias", "w1", "b1", "w2", "b2")


def init_params(cfg: ModelConfig, seed: int = 0, dtype=np.float32) -> dict[str, Tensor]:
    """Weights ~ N(0, 0.02), biases 0, layer-norm gains 1."""
    rng = np.random.default_rng(seed)
    D, H = cfg.d_model, cfg.d_model * cfg.mlp_ratio
    shapes: dict[str, tuple] = {"embed": (cfg.vocab, D)}
    for layer in range(cfg.n_layers):
        pre = f"blocks.{layer}."
        shapes.update({
            pre + "ln1_gain": (D,), pre + "ln1_bias": (D,),
            pre + "wq": (D, D), pre + "bq": (D,),
            pre + "wk": (D, D), pre + "bk": (D,),
            pre + "wv": (D, D), pre + "bv": (D,),
            pre + "wo": (D, D), pre + "bo": (D,),
            pre + "ln2_gain": (D,), pre + "ln2_bias": (D,),
            pre + "w1": (D, H), pre + "b1": (H,),
            pre + "w2": (H, D), pre + "b2": (D,),
        })
    shapes.update({
        "proj_w": (D, cfg.d_proj), "proj_b": (cfg.d_proj,),
        "head_w1": (cfg.seq_tokens * cfg.d_proj, cfg.head_hidden), "head_b1": (cfg.head_hidden,),
        "head_w2": (cfg.head_hidden, cfg.n_outputs), "head_b2": (cfg.n_outputs,),
    })
    params = {}
    for name, shape in shapes.items():
        leaf = name.rsplit(".", 1)[-1]
        if leaf.endswith("_gain"):
            data = np.ones(shape)
        elif len(shape) == 1:
            data = np.zeros(shape)
        else:
            data = rng.normal(0.0, 0.02, size=shape)
        params[name] = Tensor(data.astype(dtype), requires_grad=True, name=name)
    return params


class SnpTransformer:
    """Encoder model over k-mer token ids of fixed length ``cfg.seq_tokens``."""

    def __init__(self, cfg: ModelConfig, seed: int = 0, dtype=np.float32, params: dict | None = None):
        self.cfg = cfg
        self.params = params if params is not None else init_params(cfg, seed, dtype)
        self.dtype = self.params["embed"].dtype
        self._pe = positional_encoding(cfg.seq_tokens, cfg.d_model, self.dtype)

    def parameters(self) -> list[Tensor]:
        return list(self.params.values())

    def block(self, layer: int) -> dict[str, Tensor]:
        pre = f"blocks.{layer}."
        return {key: self.params[pre + key] for key in BLOCK_KEYS}

    def forward(self, token_ids) -> Tensor:
        ids = np.asarray(getattr(token_ids, "ids", token_ids))
        if ids.shape[-1] != self.cfg.seq_tokens:
            raise ShapeError(f"model expects {self.cfg.seq_tokens} tokens per sample, got {ids.shape[-1]}")
        E = embed(ids, self.params["embed"], self._pe)
        for layer in range(self.cfg.n_layers):
            E = encoder_block(E, self.block(layer), self.cfg.n_heads, self.cfg.activation)
        return project_and_predict(E, self.params, self.cfg)

    __call__ = forward

    def loss(self, token_ids, targets) -> Tensor:
        out = self.forward(token_ids)
        if self.cfg.task == "classification":
            return loss_cls(out, targets)
        return loss_reg(out, targets)

    def predict(self, token_ids, batch_size: int = 32) -> PhenotypePrediction:
        """Unmasked inference in batches; no graph is recorded."""
        ids = np.asarray(getattr(token_ids, "ids", token_ids))
        single = ids.ndim == 1
        if single:
            ids = ids[None]
        chunks = []
        with T.no_grad():
            for i in range(0, len(ids), batch_size):
                chunks.append(self.forward(ids[i:i + batch_size]).data)
        out = np.concatenate(chunks, axis=0) if chunks else np.zeros((0,) + ((self.cfg.n_classes,) if self.cfg.task == "classification" else ()), self.dtype)
        if self.cfg.task == "classification":
            probs = out - out.max(axis=1, keepdims=True)
            np.exp(probs, out=probs)
            probs /= probs.sum(axis=1, keepdims=True)
            labels = probs.argmax(axis=1)
            return PhenotypePrediction(probs[0] if single else probs, labels[0] if single else labels)
        return PhenotypePrediction(None, out[0] if single else out)
