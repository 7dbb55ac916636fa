"""Tokenization providers.

Real subword encoding (WordPiece/BPE) is out of scope; scoring consumes
tokenizations produced elsewhere. This module supplies the three sources the
CLI and tests use:

* :class:`HashWordTokenizer` — a deterministic demo tokenizer for the
  reference backend: whole whitespace chunks found in the vocabulary become
  one token, anything else is cut into fixed-length character pieces whose
  ids are hashed into the non-special id range. Not a linguistic tokenizer;
  it exists so raw text can flow through the full pipeline without model
  files, and it produces multi-token words so the strategies differ.
* :func:`hf_tokenizer` — an adapter over a ``transformers`` tokenizer
  (optional dependency) that yields (id, start, end) triples with offsets.
* pre-tokenized JSONL fixtures, read by :func:`pllbench.aligner.read_tokenization_fixtures`.
"""

from __future__ import annotations

import hashlib
from typing import Callable, Protocol, Sequence

from .aligner import (
    Casing,
    ContinuationConvention,
    SpecialTokens,
    TokenizerSpec,
    _whitespace_chunks,
)

Tokenization = Sequence[tuple[int, int, int]]


class Tokenizer(Protocol):
    def __call__(self, text: str) -> Tokenization: ...


DEFAULT_SPECIALS = {"[PAD]": 0, "[MASK]": 1, "[CLS]": 2, "[SEP]": 3, "[BOS]": 4}


def synthetic_tokenizer_spec(
    vocab_size: int = 2048, extra_words: Sequence[str] = (), cased: bool = True
) -> TokenizerSpec:
    """A self-contained spec for reference-backend runs.

    Ids 0-4 are the special tokens; any ``extra_words`` claim the next ids so
    tests can force specific words to be single-token; the remainder are
    filler entries that only exist to give the hash tokenizer an id range.
    """
    if vocab_size < len(DEFAULT_SPECIALS) + len(extra_words) + 1:
        raise ValueError("vocab_size too small for specials and extra words")
    vocab = dict(DEFAULT_SPECIALS)
    for word in extra_words:
        vocab[word] = len(vocab)
    for i in range(len(vocab), vocab_size):
        vocab[f"<tok{i}>"] = i
    return TokenizerSpec(
        vocab=vocab,
        continuation=ContinuationConvention.PREFIX_CONTINUATION,
        special=SpecialTokens(mask_id=1, cls_id=2, sep_id=3, pad_id=0, bos_id=4),
        casing=Casing.CASED if cased else Casing.UNCASED,
    )


def _stable_hash(data: str) -> int:
    return int.from_bytes(hashlib.blake2b(data.encode("utf-8"), digest_size=8).digest(), "big")


class HashWordTokenizer:
    """Deterministic text -> (id, start, end) triples for demo/test runs.

    Emits [CLS] ... [SEP] around the sentence when the spec defines those
    ids. Chunks present in the vocabulary map to their own id; other chunks
    are split into ``piece_len``-character pieces, each hashed to a stable id
    outside the special range.
    """

    def __init__(self, spec: TokenizerSpec, piece_len: int = 4):
        if piece_len < 1:
            raise ValueError("piece_len must be >= 1")
        self.spec = spec
        self.piece_len = piece_len
        self._special_ids = spec.special.defined_ids()
        self._usable = [
            i for i in range(spec.vocab_size) if i not in self._special_ids
        ]
        if not self._usable:
            raise ValueError("vocabulary has no non-special ids")

    def _piece_id(self, piece: str) -> int:
        return self._usable[_stable_hash(piece) % len(self._usable)]

    def __call__(self, text: str) -> list[tuple[int, int, int]]:
        spec = self.spec
        triples: list[tuple[int, int, int]] = []
        if spec.special.cls_id is not None:
            triples.append((spec.special.cls_id, 0, 0))
        for start, end in _whitespace_chunks(text):
            chunk = spec.normalize_word(text[start:end])
            token_id = spec.vocab.get(chunk)
            if token_id is not None and token_id not in self._special_ids:
                triples.append((token_id, start, end))
                continue
            for piece_start in range(0, len(chunk), self.piece_len):
                piece = chunk[piece_start : piece_start + self.piece_len]
                triples.append(
                    (
                        self._piece_id(piece),
                        start + piece_start,
                        start + piece_start + len(piece),
                    )
                )
        if spec.special.sep_id is not None:
            triples.append((spec.special.sep_id, len(text), len(text)))
        return triples


def hf_tokenizer(tokenizer_dir: str) -> Callable[[str], list[tuple[int, int, int]]]:
    """Wrap a saved ``transformers`` tokenizer as an offset-yielding callable."""
    try:
        from transformers import AutoTokenizer
    except ImportError as exc:  # pragma: no cover
        raise ImportError(
            "the 'transformers' package is required for --hf-tokenizer "
            "(pip install pllbench[hf])"
        ) from exc
    tok = AutoTokenizer.from_pretrained(tokenizer_dir)

    def encode(text: str) -> list[tuple[int, int, int]]:
        enc = tok(text, return_offsets_mapping=True, add_special_tokens=True)
        return [
            (int(i), int(s), int(e))
            for i, (s, e) in zip(enc["input_ids"], enc["offset_mapping"])
        ]

    return encode
