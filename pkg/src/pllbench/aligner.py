"""Token/word alignment for subword-tokenized sentences.

A tokenizer splits text into subword tokens; scoring strategies need to know
which tokens belong to the same *word*. A word here is a maximal run of
tokens whose characters fall into one whitespace-delimited chunk of the text
(punctuation, hyphens, and apostrophes stay attached to their chunk). When
character offsets are available they are the ground truth for grouping;
otherwise the tokenizer's continuation convention (``##``-style continuation
prefixes, or word-start markers as used by byte-level BPE vocabularies)
decides.

Tokenization itself is an input — produced by a real tokenizer or by test
fixtures — never recomputed here.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

from .errors import (
    AlignmentError,
    EmptyInput,
    MalformedTokenization,
    VocabularyMismatch,
)

# Marker conventions. The continuation marker follows WordPiece; word-start
# markers cover byte-level BPE ("Ġ"), sentencepiece ("▁"), and literal-space
# vocabularies. These matter only when offsets are absent.
CONTINUATION_MARKER = "##"
WORD_START_MARKERS = ("Ġ", "▁", " ")


class ContinuationConvention(Enum):
    """How a vocabulary marks word-internal versus word-initial tokens."""

    PREFIX_CONTINUATION = "prefix-continuation"
    PREFIX_WORD_START = "prefix-word-start"


class Casing(Enum):
    CASED = "cased"
    UNCASED = "uncased"


@dataclass(frozen=True)
class SpecialTokens:
    """Ids of the tokenizer's special tokens. ``None`` means "not defined"."""

    mask_id: int | None
    cls_id: int | None
    sep_id: int | None
    pad_id: int
    bos_id: int | None = None

    def defined_ids(self) -> frozenset[int]:
        ids = {self.mask_id, self.cls_id, self.sep_id, self.pad_id, self.bos_id}
        ids.discard(None)
        return frozenset(ids)  # type: ignore[arg-type]


@dataclass(frozen=True)
class TokenizerSpec:
    """Static description of a tokenizer: vocabulary, conventions, specials.

    For masked-LM use the mask/cls/sep ids must be defined, distinct, and
    present in the vocabulary; causal-only specs may leave them ``None``.
    """

    vocab: dict[str, int]
    continuation: ContinuationConvention
    special: SpecialTokens
    casing: Casing
    _id_set: frozenset[int] = field(init=False, repr=False, compare=False)
    _id_to_token: dict[int, str] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        ids = list(self.vocab.values())
        if len(set(ids)) != len(ids):
            raise VocabularyMismatch("vocabulary maps two tokens to the same id")
        object.__setattr__(self, "_id_set", frozenset(ids))
        object.__setattr__(
            self, "_id_to_token", {i: t for t, i in self.vocab.items()}
        )
        mlm_ids = [self.special.mask_id, self.special.cls_id, self.special.sep_id]
        defined = [i for i in mlm_ids if i is not None]
        if len(set(defined)) != len(defined):
            raise VocabularyMismatch("mask/cls/sep ids must be distinct")
        for i in self.special.defined_ids():
            if i not in self._id_set:
                raise VocabularyMismatch(f"special token id {i} not in vocabulary")

    @property
    def vocab_size(self) -> int:
        return len(self.vocab)

    def knows_id(self, token_id: int) -> bool:
        return token_id in self._id_set

    def token_string(self, token_id: int) -> str:
        try:
            return self._id_to_token[token_id]
        except KeyError:
            raise VocabularyMismatch(f"unknown token id {token_id}") from None

    def requires_mlm_specials(self) -> None:
        """Raise unless mask/cls/sep are all defined (masked-LM usage)."""
        s = self.special
        if s.mask_id is None or s.cls_id is None or s.sep_id is None:
            raise VocabularyMismatch(
                "tokenizer spec lacks mask/cls/sep ids required for masked scoring"
            )

    def normalize_word(self, word: str) -> str:
        return word.lower() if self.casing is Casing.UNCASED else word

    def to_json_dict(self) -> dict:
        return {
            "vocab": dict(self.vocab),
            "continuation": self.continuation.value,
            "special": {
                "mask": self.special.mask_id,
                "cls": self.special.cls_id,
                "sep": self.special.sep_id,
                "bos": self.special.bos_id,
                "pad": self.special.pad_id,
            },
            "cased": self.casing is Casing.CASED,
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "TokenizerSpec":
        try:
            special = doc["special"]
            return cls(
                vocab=dict(doc["vocab"]),
                continuation=ContinuationConvention(doc["continuation"]),
                special=SpecialTokens(
                    mask_id=special["mask"],
                    cls_id=special["cls"],
                    sep_id=special["sep"],
                    pad_id=special["pad"],
                    bos_id=special.get("bos"),
                ),
                casing=Casing.CASED if doc["cased"] else Casing.UNCASED,
            )
        except (KeyError, ValueError) as exc:
            raise VocabularyMismatch(f"malformed tokenizer spec document: {exc}") from exc


def load_tokenizer_spec(path: str | Path) -> TokenizerSpec:
    with open(path, encoding="utf-8") as fh:
        return TokenizerSpec.from_json_dict(json.load(fh))


def dump_tokenizer_spec(spec: TokenizerSpec, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(spec.to_json_dict(), fh, ensure_ascii=False, indent=2, sort_keys=True)
        fh.write("\n")


@dataclass(frozen=True)
class AlignedSentence:
    """One sentence's tokens, their character offsets, and word grouping.

    ``word_spans`` are ``(start, end_exclusive)`` token-index ranges, one per
    word, covering exactly the non-special token positions. Special tokens
    prepended/appended by the tokenizer are counted in ``special_prefix_len``
    / ``special_suffix_len`` and excluded from scoring.
    """

    text: str
    token_ids: tuple[int, ...]
    offsets: tuple[tuple[int, int], ...]
    word_spans: tuple[tuple[int, int], ...]
    special_prefix_len: int
    special_suffix_len: int
    words: tuple[str, ...]
    spec: TokenizerSpec

    def __post_init__(self):
        lo = self.special_prefix_len
        hi = len(self.token_ids) - self.special_suffix_len
        if len(self.offsets) != len(self.token_ids):
            raise AlignmentError("offsets and token_ids disagree in length")
        if len(self.words) != len(self.word_spans):
            raise AlignmentError("word labels and word spans disagree in length")
        cursor = lo
        for start, end in self.word_spans:
            if start != cursor:
                raise AlignmentError("word spans must be contiguous and sorted")
            if end <= start:
                raise AlignmentError("word spans must be non-empty")
            cursor = end
        if cursor != hi:
            raise AlignmentError("word spans must cover all non-special positions")

    @property
    def num_scored_tokens(self) -> int:
        return len(self.token_ids) - self.special_prefix_len - self.special_suffix_len

    @property
    def scored_positions(self) -> range:
        return range(
            self.special_prefix_len, len(self.token_ids) - self.special_suffix_len
        )

    def word_index_of(self, position: int) -> int:
        """Index of the word span containing a scored token position."""
        for w, (start, end) in enumerate(self.word_spans):
            if start <= position < end:
                return w
        raise AlignmentError(f"position {position} is not inside any word span")


def _whitespace_chunks(text: str) -> list[tuple[int, int]]:
    chunks = []
    start = None
    for i, ch in enumerate(text):
        if ch.isspace():
            if start is not None:
                chunks.append((start, i))
                start = None
        elif start is None:
            start = i
    if start is not None:
        chunks.append((start, len(text)))
    return chunks


def _chunk_index_at(chunks: list[tuple[int, int]], pos: int) -> int | None:
    for idx, (start, end) in enumerate(chunks):
        if start <= pos < end:
            return idx
    return None


def _group_by_offsets(
    text: str,
    scored: list[tuple[int, int, tuple[int, int]]],
) -> list[list[int]]:
    """Group scored tokens (index, id, offset) into words via text chunks."""
    chunks = _whitespace_chunks(text)
    groups: list[list[int]] = []
    last_chunk = None
    for index, _token_id, (start, end) in scored:
        probe = next((p for p in range(start, end) if not text[p].isspace()), None)
        if probe is None:
            # whitespace-only token: attach to the open word if any
            if not groups:
                raise MalformedTokenization(
                    f"token at offset ({start}, {end}) covers no word characters"
                )
            groups[-1].append(index)
            continue
        chunk = _chunk_index_at(chunks, probe)
        last_char = max(
            (p for p in range(start, end) if not text[p].isspace()), default=probe
        )
        if chunk is None or _chunk_index_at(chunks, last_char) != chunk:
            raise MalformedTokenization(
                f"token at offset ({start}, {end}) straddles a whitespace boundary"
            )
        if chunk == last_chunk:
            groups[-1].append(index)
        else:
            groups.append([index])
            last_chunk = chunk
    return groups


def _group_by_markers(
    spec: TokenizerSpec,
    scored: list[tuple[int, int, tuple[int, int]]],
) -> list[list[int]]:
    groups: list[list[int]] = []
    for index, token_id, _ in scored:
        token = spec.token_string(token_id)
        if spec.continuation is ContinuationConvention.PREFIX_CONTINUATION:
            starts_word = not token.startswith(CONTINUATION_MARKER)
        else:
            starts_word = token.startswith(WORD_START_MARKERS)
        if groups and not starts_word:
            groups[-1].append(index)
        else:
            groups.append([index])
    return groups


def _strip_marker(spec: TokenizerSpec, token: str) -> str:
    if spec.continuation is ContinuationConvention.PREFIX_CONTINUATION:
        return token[len(CONTINUATION_MARKER):] if token.startswith(CONTINUATION_MARKER) else token
    for marker in WORD_START_MARKERS:
        if token.startswith(marker):
            return token[len(marker):]
    return token


def align(
    text: str,
    spec: TokenizerSpec,
    tokenization: Sequence[tuple[int, int, int]] | Sequence[tuple[int, tuple[int, int]]],
) -> AlignedSentence:
    """Group a tokenized sentence into word spans.

    ``tokenization`` holds one ``(token_id, start, end)`` triple per token
    (``(token_id, (start, end))`` pairs are accepted too), in order, with
    character offsets into ``text``. Special tokens are recognized by id and
    must sit at the start/end of the sequence. Offsets are the primary
    grouping signal; a tokenization whose offsets are all empty falls back to
    the spec's continuation-marker convention.
    """
    if not text.strip():
        raise EmptyInput("text is empty after trimming")
    triples: list[tuple[int, tuple[int, int]]] = []
    for item in tokenization:
        if len(item) == 3:
            token_id, start, end = item  # type: ignore[misc]
        else:
            token_id, (start, end) = item  # type: ignore[misc]
        triples.append((int(token_id), (int(start), int(end))))
    if not triples:
        raise EmptyInput("tokenization is empty")

    for token_id, (start, end) in triples:
        if not spec.knows_id(token_id):
            raise VocabularyMismatch(f"unknown token id {token_id}")
        if not (0 <= start <= end <= len(text)):
            raise MalformedTokenization(
                f"token offset ({start}, {end}) outside text bounds"
            )

    special_ids = spec.special.defined_ids()
    n = len(triples)
    prefix = 0
    while prefix < n and triples[prefix][0] in special_ids:
        prefix += 1
    suffix = 0
    while suffix < n - prefix and triples[n - 1 - suffix][0] in special_ids:
        suffix += 1
    scored = [
        (i, triples[i][0], triples[i][1]) for i in range(prefix, n - suffix)
    ]
    for index, token_id, _ in scored:
        if token_id in special_ids:
            raise MalformedTokenization(
                f"special token id {token_id} at interior position {index}"
            )
    # specials routinely carry (0, 0) offsets; monotonicity binds scored tokens
    prev_start = 0
    for _, _, (start, _end) in scored:
        if start < prev_start:
            raise MalformedTokenization("token offsets must be non-decreasing")
        prev_start = start

    have_offsets = any(start != end for _, _, (start, end) in scored)
    if scored:
        if have_offsets:
            groups = _group_by_offsets(text, scored)
        else:
            groups = _group_by_markers(spec, scored)
    else:
        groups = []

    words = []
    for group in groups:
        if have_offsets:
            start = min(triples[i][1][0] for i in group)
            end = max(triples[i][1][1] for i in group)
            words.append(text[start:end].strip())
        else:
            words.append(
                "".join(_strip_marker(spec, spec.token_string(triples[i][0])) for i in group)
            )

    return AlignedSentence(
        text=text,
        token_ids=tuple(token_id for token_id, _ in triples),
        offsets=tuple(offset for _, offset in triples),
        word_spans=tuple((group[0], group[-1] + 1) for group in groups),
        special_prefix_len=prefix,
        special_suffix_len=suffix,
        words=tuple(words),
        spec=spec,
    )


def oov_ratio(corpus: Iterable[AlignedSentence]) -> float:
    """Fraction of words split into two or more tokens.

    Counts every word span across the corpus; a span of length >= 2 marks a
    word the tokenizer could not keep whole.
    """
    split = 0
    total = 0
    for sentence in corpus:
        for start, end in sentence.word_spans:
            total += 1
            if end - start >= 2:
                split += 1
    if total == 0:
        raise EmptyInput("corpus contains no words")
    return split / total


def read_tokenization_fixtures(path: str | Path) -> list[tuple[str, list[tuple[int, int, int]]]]:
    """Read pre-tokenized sentences from JSONL: {"text":..., "tokens":[[id,start,end],...]}."""
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                doc = json.loads(line)
                tokens = [(int(i), int(s), int(e)) for i, s, e in doc["tokens"]]
                out.append((doc["text"], tokens))
            except (KeyError, TypeError, ValueError) as exc:
                raise MalformedTokenization(
                    f"{path}:{lineno}: bad tokenization record: {exc}"
                ) from exc
    return out


def write_tokenization_fixtures(
    records: Iterable[tuple[str, Sequence[tuple[int, int, int]]]], path: str | Path
) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for text, tokens in records:
            fh.write(
                json.dumps(
                    {"text": text, "tokens": [[i, s, e] for i, s, e in tokens]},
                    ensure_ascii=False,
                )
            )
            fh.write("\n")
