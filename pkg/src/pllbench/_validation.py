"""Input validation helpers shared by the estimators and the CLI."""

from __future__ import annotations

from typing import Sequence

from .errors import EmptyInput, InvalidStrategy
from .scheduler import MaskingStrategy


def check_texts(X) -> list[str]:
    """Validate a 1-d collection of non-empty strings and return it as a list."""
    if X is None:
        raise EmptyInput("expected a sequence of sentences, got None")
    if isinstance(X, str):
        raise TypeError("expected a sequence of sentences, got a single string")
    texts = list(X)
    if not texts:
        raise EmptyInput("no sentences given")
    for i, text in enumerate(texts):
        if not isinstance(text, str):
            raise TypeError(f"sentence {i} is {type(text).__name__}, expected str")
        if not text.strip():
            raise EmptyInput(f"sentence {i} is empty")
    return texts


def check_strategy(strategy) -> MaskingStrategy:
    if isinstance(strategy, MaskingStrategy):
        return strategy
    if isinstance(strategy, str):
        return MaskingStrategy.from_name(strategy)
    raise InvalidStrategy(f"cannot interpret {strategy!r} as a strategy")


def check_batch_size(batch_size) -> int:
    size = int(batch_size)
    if size < 1:
        raise ValueError("batch_size must be >= 1")
    return size


def check_pair_sequence(pairs: Sequence) -> list:
    records = list(pairs)
    if not records:
        raise EmptyInput("no pairs given")
    return records
