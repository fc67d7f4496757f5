"""Binary checkpoint format.

Layout (little-endian)::

    b"GSCK"  u32 version
    u32 n    n bytes of UTF-8 "key=value" lines (configs + metadata)
    per tensor: u32 name length, name, u32 rank, rank x u64 dims, float32 data
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import CorruptionError, FormatError
from ..model import ModelConfig, PhenotypePrediction, SnpTransformer
from ..tensor import Tensor
from ..tokenizer import TokenizerConfig

MAGIC = b"GSCK"
VERSION = 1


@dataclass
class Checkpoint:
    model_config: ModelConfig
    tokenizer_config: TokenizerConfig
    params: dict[str, np.ndarray]
    meta: dict = field(default_factory=dict)
    version: int = VERSION

    @property
    def task(self) -> str:
        return self.model_config.task

    @property
    def label_names(self) -> tuple[str, ...]:
        return tuple(self.meta.get("label_names", ()))

    def model(self) -> SnpTransformer:
        params = {name: Tensor(arr, requires_grad=True, name=name) for name, arr in self.params.items()}
        return SnpTransformer(self.model_config, params=params)

    def predict_tokens(self, tokens: np.ndarray, batch_size: int = 32) -> PhenotypePrediction:
        """Unmasked predictions; regression values are mapped back to trait units."""
        pred = self.model().predict(tokens, batch_size=batch_size)
        if self.task == "regression":
            mean = self.meta.get("target_mean", 0.0)
            std = self.meta.get("target_std", 1.0)
            return PhenotypePrediction(None, pred.values.astype(np.float64) * std + mean)
        return pred


def _blob(ckpt: Checkpoint) -> bytes:
    lines = [f"n_tensors={len(ckpt.params)}"]
    for key, value in ckpt.model_config.to_dict().items():
        lines.append(f"model.{key}={value}")
    tok = ckpt.tokenizer_config
    lines += [f"tokenizer.k={tok.k}", f"tokenizer.masking_prob={tok.masking_prob!r}", f"tokenizer.seed={tok.seed}"]
    for key in sorted(ckpt.meta):
        value = json.dumps(ckpt.meta[key], sort_keys=True)
        if "\n" in value:
            raise FormatError(f"metadata value for {key!r} must be single-line")
        lines.append(f"meta.{key}={value}")
    return ("\n".join(lines) + "\n").encode("utf-8")


def save_checkpoint(ckpt: Checkpoint, path: str | Path) -> None:
    blob = _blob(ckpt)
    parts = [MAGIC, struct.pack("<I", ckpt.version), struct.pack("<I", len(blob)), blob]
    for name, arr in ckpt.params.items():
        arr = np.ascontiguousarray(arr, dtype="<f4")
        encoded = name.encode("utf-8")
        parts.append(struct.pack("<I", len(encoded)))
        parts.append(encoded)
        parts.append(struct.pack("<I", arr.ndim))
        parts.append(struct.pack(f"<{arr.ndim}Q", *arr.shape))
        parts.append(arr.tobytes())
    Path(path).write_bytes(b"".join(parts))


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int, what: str) -> bytes:
        if self.pos + n > len(self.data):
            raise CorruptionError(f"file truncated while reading {what} at byte {self.pos}")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def u32(self, what: str) -> int:
        return struct.unpack("<I", self.take(4, what))[0]


def _parse_blob(text: str) -> tuple[dict, dict, dict, int]:
    model, tok, meta = {}, {}, {}
    n_tensors = None
    for line in text.splitlines():
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise FormatError(f"malformed config line {line!r}")
        if key == "n_tensors":
            n_tensors = int(value)
        elif key.startswith("model."):
            model[key[6:]] = value
        elif key.startswith("tokenizer."):
            tok[key[10:]] = value
        elif key.startswith("meta."):
            meta[key[5:]] = json.loads(value)
        else:
            raise FormatError(f"unknown config key {key!r}")
    if n_tensors is None:
        raise FormatError("config blob lacks n_tensors")
    return model, tok, meta, n_tensors


def load_checkpoint(path: str | Path) -> Checkpoint:
    data = Path(path).read_bytes()
    r = _Reader(data)
    if len(data) < 4 or data[:4] != MAGIC:
        raise FormatError(f"{path}: not a checkpoint (bad magic {data[:4]!r})")
    r.pos = 4
    version = r.u32("version")
    if version != VERSION:
        raise FormatError(f"{path}: checkpoint version {version} is not supported (this build reads version {VERSION})")
    blob_len = r.u32("config length")
    try:
        text = r.take(blob_len, "config blob").decode("utf-8")
        model_kv, tok_kv, meta, n_tensors = _parse_blob(text)
        model_cfg = ModelConfig.from_dict(model_kv)
        tok_cfg = TokenizerConfig(int(tok_kv["k"]), float(tok_kv["masking_prob"]), int(tok_kv["seed"]))
    except CorruptionError:
        raise
    except (UnicodeDecodeError, ValueError, KeyError, TypeError) as exc:
        raise FormatError(f"{path}: unreadable config blob ({exc})") from exc
    params = {}
    for _ in range(n_tensors):
        name = r.take(r.u32("name length"), "tensor name").decode("utf-8", errors="strict")
        rank = r.u32("rank")
        if rank > 8:
            raise CorruptionError(f"{path}: implausible rank {rank} for tensor {name!r}")
        dims = struct.unpack(f"<{rank}Q", r.take(8 * rank, "dims"))
        count = int(np.prod(dims, dtype=np.int64)) if rank else 1
        raw = r.take(4 * count, f"data of {name!r}")
        params[name] = np.frombuffer(raw, dtype="<f4").astype(np.float32).reshape(dims)
    if r.pos != len(data):
        raise CorruptionError(f"{path}: {len(data) - r.pos} unexpected trailing bytes")
    return Checkpoint(model_cfg, tok_cfg, params, meta, version)
