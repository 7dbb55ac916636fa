"""Masking schedules: which positions to hide for each scored token.

Each masked scoring strategy turns a sentence of n scored tokens into
exactly n inference requests, one per target token, differing only in how
much of the target's surroundings is masked together with it:

* ``original``      — the target alone.
* ``word-l2r``      — the target plus the later tokens of its own word.
* ``whole-word``    — every token of the target's word.
* ``sentence-l2r``  — the target plus every later scored token.

Special tokens are never masked and never scored. ``causal`` is listed here
for completeness but produces no masked requests; the engine scores it with
a single left-to-right pass.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .aligner import AlignedSentence
from .errors import EmptyInput, InvalidStrategy


class MaskingStrategy(Enum):
    ORIGINAL = "original"
    WORD_L2R = "word-l2r"
    WHOLE_WORD = "whole-word"
    SENTENCE_L2R = "sentence-l2r"
    CAUSAL = "causal"

    @property
    def is_masked(self) -> bool:
        return self is not MaskingStrategy.CAUSAL

    @classmethod
    def from_name(cls, name: str) -> "MaskingStrategy":
        try:
            return cls(name.strip().lower())
        except ValueError:
            valid = ", ".join(s.value for s in cls)
            raise InvalidStrategy(
                f"unknown strategy {name!r} (expected one of: {valid})"
            ) from None


MASKED_STRATEGIES = tuple(s for s in MaskingStrategy if s.is_masked)


@dataclass(frozen=True)
class InferenceRequest:
    """One masked query: hide ``masked_positions``, read the distribution at
    ``target_position``, and look up ``target_id`` in it."""

    base: AlignedSentence
    masked_positions: tuple[int, ...]
    target_position: int
    target_id: int


def schedule(s: AlignedSentence, strategy: MaskingStrategy) -> list[InferenceRequest]:
    """Emit the masked requests whose answers sum to the sentence score.

    Requests come out in left-to-right target order, one per scored token.
    Raises InvalidStrategy for ``causal`` (no masked schedule exists) and
    EmptyInput for sentences with no scored tokens.
    """
    if strategy is MaskingStrategy.CAUSAL:
        raise InvalidStrategy("causal scoring has no masking schedule")
    if s.num_scored_tokens == 0:
        raise EmptyInput("sentence has no scored tokens")

    scored_end = s.scored_positions.stop
    requests = []
    for word_index, (start, end) in enumerate(s.word_spans):
        for t in range(start, end):
            if strategy is MaskingStrategy.ORIGINAL:
                masked = (t,)
            elif strategy is MaskingStrategy.WORD_L2R:
                masked = tuple(range(t, end))
            elif strategy is MaskingStrategy.WHOLE_WORD:
                masked = tuple(range(start, end))
            else:  # SENTENCE_L2R
                masked = tuple(range(t, scored_end))
            requests.append(
                InferenceRequest(
                    base=s,
                    masked_positions=masked,
                    target_position=t,
                    target_id=s.token_ids[t],
                )
            )
    return requests


def request_count(s: AlignedSentence, strategy: MaskingStrategy) -> int:
    """Number of masked requests: n for every masked strategy (one per token)."""
    if strategy is MaskingStrategy.CAUSAL:
        raise InvalidStrategy("causal scoring has no masking schedule")
    return s.num_scored_tokens


def schedule_debug_records(s: AlignedSentence, strategy: MaskingStrategy) -> list[dict]:
    """Schedule rendered as {"target": i, "masked": [...]} dicts for inspection."""
    return [
        {"target": r.target_position, "masked": list(r.masked_positions)}
        for r in schedule(s, strategy)
    ]
