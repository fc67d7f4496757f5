"""Non-overlapping k-mer tokenization and random token masking.

Token ids are big-endian base-5 numbers with digits A=0, T=1, C=2, G=3, X=4,
so every k-mer over A/T/C/G/X gets a unique id in ``[0, 5**k)`` and the
extra vocabulary slot ``5**k`` is the mask id.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .codec import REDUCED_ALPHABET, PreprocessedSequence
from .errors import ConfigError, NotInvertible, SequenceTooShort, TokenizeError

MAX_K = 12
DIGIT = {c: i for i, c in enumerate(REDUCED_ALPHABET)}

_CODE_TABLE = np.full(256, 255, dtype=np.uint8)
for _c, _i in DIGIT.items():
    _CODE_TABLE[ord(_c)] = _i


def _check_k(k) -> int:
    if isinstance(k, bool) or not isinstance(k, (int, np.integer)) or not 1 <= k <= MAX_K:
        raise ConfigError(f"k must be an integer in [1, {MAX_K}], got {k!r}")
    return int(k)


@dataclass(frozen=True)
class TokenizerConfig:
    k: int = 6
    masking_prob: float = 0.15
    seed: int = 0

    def __post_init__(self):
        _check_k(self.k)
        if not 0.0 <= self.masking_prob <= 1.0:
            raise ConfigError(f"masking_prob must lie in [0, 1], got {self.masking_prob}")

    @property
    def mask_id(self) -> int:
        return mask_id(self.k)


@dataclass(frozen=True)
class TokenIds:
    ids: np.ndarray
    k: int

    def __len__(self):
        return len(self.ids)


@dataclass(frozen=True)
class MaskedTokenIds:
    ids: np.ndarray
    mask_id: int
    mask_positions: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    def __len__(self):
        return len(self.ids)


def vocab_size(k: int) -> int:
    return 5 ** _check_k(k) + 1


def mask_id(k: int) -> int:
    return 5 ** _check_k(k)


def token_id(kmer) -> int:
    """Base-5 id of one k-mer given as a string or sequence of letters."""
    letters = "".join(kmer) if not isinstance(kmer, str) else kmer
    if not 1 <= len(letters) <= MAX_K:
        raise TokenizeError(f"k-mer length must be in [1, {MAX_K}], got {len(letters)}")
    value = 0
    for pos, letter in enumerate(letters):
        digit = DIGIT.get(letter)
        if digit is None:
            raise TokenizeError(f"invalid letter {letter!r} at position {pos} of k-mer")
        value = value * 5 + digit
    return value


def kmer_of(id_: int, k: int) -> str:
    """Digit expansion of a token id back to its k letters."""
    k = _check_k(k)
    if not 0 <= id_ < 5**k:
        raise NotInvertible(f"id {id_} is not a {k}-mer id")
    letters = []
    for _ in range(k):
        id_, digit = divmod(int(id_), 5)
        letters.append(REDUCED_ALPHABET[digit])
    return "".join(reversed(letters))


def encode_letters(letters: str) -> np.ndarray:
    """A/T/C/G/X string to a uint8 digit array."""
    codes = _CODE_TABLE[np.frombuffer(letters.encode("ascii"), dtype=np.uint8)]
    if (codes == 255).any():
        bad = int(np.argmax(codes == 255))
        raise TokenizeError(f"invalid letter {letters[bad]!r} at offset {bad}")
    return codes


def tokenize_codes(codes: np.ndarray, k: int) -> np.ndarray:
    """Vectorised k-mer ids for digit codes of shape ``(..., N_l)``.

    The trailing ``N_l % k`` letters are dropped.
    """
    k = _check_k(k)
    codes = np.asarray(codes)
    n_l = codes.shape[-1]
    if n_l < k:
        raise SequenceTooShort(f"sequence length {n_l} is shorter than k={k}")
    n_tok = n_l // k
    windows = codes[..., : n_tok * k].reshape(codes.shape[:-1] + (n_tok, k)).astype(np.int64)
    weights = 5 ** np.arange(k - 1, -1, -1, dtype=np.int64)
    return windows @ weights


def kmer_tokenize(seq: PreprocessedSequence, cfg: TokenizerConfig | int) -> TokenIds:
    k = cfg if isinstance(cfg, (int, np.integer)) else cfg.k
    k = _check_k(k)
    if len(seq) < k:
        raise SequenceTooShort(f"sequence {seq.id!r} has length {len(seq)} < k={k}")
    return TokenIds(tokenize_codes(encode_letters(seq.letters), k), k)


def detokenize(tokens: TokenIds, id: str = "") -> PreprocessedSequence:
    k = _check_k(tokens.k)
    ids = np.asarray(tokens.ids, dtype=np.int64)
    if ids.size and (ids.min() < 0 or ids.max() >= 5**k):
        bad = ids[(ids < 0) | (ids >= 5**k)][0]
        if bad == 5**k:
            raise NotInvertible(f"mask id {bad} cannot be expanded to a k-mer")
        raise NotInvertible(f"id {bad} is outside [0, {5**k})")
    digits = (ids[:, None] // 5 ** np.arange(k - 1, -1, -1, dtype=np.int64)) % 5
    letters = np.frombuffer(REDUCED_ALPHABET.encode(), dtype=np.uint8)[digits.ravel()]
    return PreprocessedSequence(id, letters.tobytes().decode("ascii"))


def mask_rng(seed: int, sample: int, epoch: int) -> np.random.Generator:
    """Generator for one (seed, sample, epoch) cell; independent across cells."""
    return np.random.default_rng([int(seed) & 0xFFFFFFFFFFFFFFFF, int(sample), int(epoch)])


def mask_array(ids: np.ndarray, p: float, k: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    ids = np.asarray(ids)
    if p <= 0.0:
        return ids.copy(), np.zeros(0, dtype=np.int64)
    hit = rng.random(ids.shape) < p
    out = np.where(hit, 5**k, ids)
    return out, np.flatnonzero(hit)


def random_mask(tokens: TokenIds, cfg: TokenizerConfig, sample: int = 0, epoch: int = 0,
                rng: np.random.Generator | None = None) -> MaskedTokenIds:
    """Replace each token by the mask id independently with probability ``cfg.masking_prob``.

    Without an explicit ``rng`` the draws come from ``mask_rng(cfg.seed, sample, epoch)``.
    """
    if rng is None:
        rng = mask_rng(cfg.seed, sample, epoch)
    ids, positions = mask_array(tokens.ids, cfg.masking_prob, tokens.k, rng)
    return MaskedTokenIds(ids, mask_id(tokens.k), positions)
