"""Deterministic hash-based backend for testing without model files.

Every returned distribution is a log-softmax over logits derived from a
64-bit mix of (seed, all attention-visible (position, id) pairs, target
position, candidate id). Changing any visible token, the mask pattern, the
target position, or the seed changes the whole vector, so the backend
discriminates every masking strategy while staying bit-reproducible across
platforms. Padded positions (attention mask 0) contribute nothing, which
makes padded and unpadded inputs agree exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import SequenceTooLong, VocabularyMismatch

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_POS_SALT = 0xD6E8FEB86659FD93
_TOK_SALT = 0xA3AAC1C4E1F5A2B7
_TARGET_SALT = 0xC2B2AE3D27D4EB4F
_CAUSAL_SALT = 0x165667B19E3779F9
# Spread logits over a few nats so scores are not all ~log(1/V).
_LOGIT_SCALE = 8.0


def _mix64(x: int) -> int:
    x = (x + _GOLDEN) & _MASK64
    x ^= x >> 30
    x = (x * _MIX1) & _MASK64
    x ^= x >> 27
    x = (x * _MIX2) & _MASK64
    x ^= x >> 31
    return x


def _mix64_vec(x: np.ndarray) -> np.ndarray:
    x = (x + np.uint64(_GOLDEN))
    x ^= x >> np.uint64(30)
    x *= np.uint64(_MIX1)
    x ^= x >> np.uint64(27)
    x *= np.uint64(_MIX2)
    x ^= x >> np.uint64(31)
    return x


def _fold_pair(state: int, position: int, token_id: int) -> int:
    key = ((position + 1) * _POS_SALT + (token_id + 1) * _TOK_SALT) & _MASK64
    return _mix64(state ^ _mix64(key))


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


@dataclass(frozen=True)
class ReferenceBackendConfig:
    vocab_size: int
    seed: int = 0

    def __post_init__(self):
        if self.vocab_size < 2:
            raise VocabularyMismatch("reference backend needs vocab_size >= 2")


class ReferenceBackend:
    """Pure, stateless backend; safe for unrestricted concurrent use."""

    def __init__(
        self,
        vocab_size: int,
        seed: int = 0,
        max_batch: int = 1024,
        max_sequence_length: int = 512,
    ):
        self.config = ReferenceBackendConfig(vocab_size=vocab_size, seed=seed)
        self.capabilities = frozenset({"masked", "causal"})
        self.max_batch = max_batch
        self.max_sequence_length = max_sequence_length
        self.supports_concurrent_use = True
        self._seed_state = _mix64(seed & _MASK64)
        self._candidate_keys = _mix64_vec(
            (np.arange(vocab_size, dtype=np.uint64) + np.uint64(1))
            * np.uint64(_TOK_SALT)
        )

    def _check_ids(self, ids: np.ndarray) -> None:
        if ids.size and (ids.min() < 0 or ids.max() >= self.config.vocab_size):
            raise VocabularyMismatch(
                f"token id out of range for vocab_size={self.config.vocab_size}"
            )

    def _check_length(self, seq_len: int) -> None:
        if seq_len > self.max_sequence_length:
            raise SequenceTooLong(
                f"sequence length {seq_len} exceeds backend limit "
                f"{self.max_sequence_length}"
            )

    def _distribution(self, context_state: int, flavor_salt: int, position: int) -> np.ndarray:
        base = _mix64(context_state ^ _mix64((position + 1) * flavor_salt & _MASK64))
        mixed = _mix64_vec(np.uint64(base) ^ self._candidate_keys)
        uniform = (mixed >> np.uint64(11)).astype(np.float64) * (2.0 ** -53)
        return _log_softmax(_LOGIT_SCALE * uniform)

    def mlm_logprobs(
        self,
        input_ids: np.ndarray,
        attention_mask: np.ndarray,
        target_positions,
    ) -> np.ndarray:
        """Per-row log-probability vector at each row's target position."""
        ids = np.asarray(input_ids, dtype=np.int64)
        mask = np.asarray(attention_mask, dtype=np.int64)
        targets = np.asarray(target_positions, dtype=np.int64)
        if ids.ndim != 2 or mask.shape != ids.shape or targets.shape != (ids.shape[0],):
            raise VocabularyMismatch("mlm_logprobs expects [batch, seq] inputs")
        self._check_ids(ids[mask == 1])
        self._check_length(ids.shape[1])
        out = np.empty((ids.shape[0], self.config.vocab_size), dtype=np.float64)
        for row in range(ids.shape[0]):
            state = self._seed_state
            for position in range(ids.shape[1]):
                if mask[row, position]:
                    state = _fold_pair(state, position, int(ids[row, position]))
            out[row] = self._distribution(state, _TARGET_SALT, int(targets[row]))
        return out

    def causal_logprobs(
        self,
        input_ids: np.ndarray,
        attention_mask: np.ndarray,
    ) -> np.ndarray:
        """Next-token log-probability vectors; position p sees only tokens <= p."""
        ids = np.asarray(input_ids, dtype=np.int64)
        mask = np.asarray(attention_mask, dtype=np.int64)
        if ids.ndim != 2 or mask.shape != ids.shape:
            raise VocabularyMismatch("causal_logprobs expects [batch, seq] inputs")
        self._check_ids(ids[mask == 1])
        self._check_length(ids.shape[1])
        batch, seq_len = ids.shape
        out = np.empty((batch, seq_len, self.config.vocab_size), dtype=np.float64)
        for row in range(batch):
            state = self._seed_state
            for position in range(seq_len):
                if mask[row, position]:
                    state = _fold_pair(state, position, int(ids[row, position]))
                out[row, position] = self._distribution(state, _CAUSAL_SALT, position)
        return out
