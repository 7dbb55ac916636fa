"""Materialize masked requests, query a backend, aggregate scores.

Scores are natural-log probabilities throughout. The canonical summation
order is fixed for reproducibility: token log-probabilities are summed
left-to-right within each word, and word sums are added left-to-right to
form the sentence score, so ``sentence_score == sum(word_scores)`` holds
bit-for-bit.

Batching packs the request stream into chunks of ``batch_size`` rows
(requests from one sentence stay adjacent, so they share batches); rows in
a chunk are padded to the chunk's longest row with the pad id and excluded
via the attention mask. Results are contractually independent of the batch
size and packing.
"""

from __future__ import annotations

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Protocol, Sequence

import numpy as np

from .aligner import AlignedSentence, TokenizerSpec, align
from .errors import (
    AlignmentError,
    BackendError,
    EmptyInput,
    PLLBenchError,
    SequenceTooLong,
    UnsupportedStrategy,
)
from .scheduler import InferenceRequest, MaskingStrategy, schedule


class Backend(Protocol):
    """Behavior contract for scoring backends.

    ``mlm_logprobs`` returns one log-probability vector per input row, taken
    at that row's target position; ``causal_logprobs`` returns next-token
    log-probability vectors for every position. Both must be deterministic
    and normalized (logsumexp 0) over the vocabulary axis.
    """

    capabilities: frozenset[str]
    max_batch: int
    max_sequence_length: int
    supports_concurrent_use: bool

    def mlm_logprobs(
        self, input_ids: np.ndarray, attention_mask: np.ndarray, target_positions
    ) -> np.ndarray: ...

    def causal_logprobs(
        self, input_ids: np.ndarray, attention_mask: np.ndarray
    ) -> np.ndarray: ...


class ErrorPolicy(Enum):
    FAIL_FAST = "fail-fast"
    SKIP_AND_LOG = "skip-and-log"


class ContextTemplate(Enum):
    MY_WORD_IS = "my-word-is"
    DICTIONARY = "dictionary"
    NONE = "none"


_TEMPLATE_PREFIXES = {
    ContextTemplate.MY_WORD_IS: "My word is ",
    ContextTemplate.DICTIONARY: "I opened the dictionary and randomly picked a word. It was ",
    ContextTemplate.NONE: "",
}


@dataclass(frozen=True)
class TokenScore:
    position: int
    token_id: int
    word_index: int
    logprob: float
    strategy: MaskingStrategy


@dataclass(frozen=True)
class WordScore:
    word: str
    score: float


@dataclass(frozen=True)
class ScoreReport:
    text: str
    strategy: MaskingStrategy
    token_scores: tuple[TokenScore, ...]
    word_scores: tuple[WordScore, ...]
    sentence_score: float


@dataclass(frozen=True)
class SentenceError:
    """Structured record for one sentence that could not be scored."""

    index: int
    text: str
    kind: str
    message: str


@dataclass(frozen=True)
class BatchResult:
    reports: tuple[ScoreReport | None, ...]
    errors: tuple[SentenceError, ...]

    @property
    def ok_reports(self) -> tuple[ScoreReport, ...]:
        return tuple(r for r in self.reports if r is not None)


def materialize_request(request: InferenceRequest) -> np.ndarray:
    """Token-id array for one request: the base ids with masks applied."""
    base = request.base
    base.spec.requires_mlm_specials()
    ids = np.array(base.token_ids, dtype=np.int64)
    ids[list(request.masked_positions)] = base.spec.special.mask_id
    return ids


def _pad_rows(
    rows: list[np.ndarray], pad_id: int
) -> tuple[np.ndarray, np.ndarray]:
    width = max(len(r) for r in rows)
    ids = np.full((len(rows), width), pad_id, dtype=np.int64)
    mask = np.zeros((len(rows), width), dtype=np.int64)
    for i, row in enumerate(rows):
        ids[i, : len(row)] = row
        mask[i, : len(row)] = 1
    return ids, mask


def _chunks(items: list, size: int) -> list[list]:
    return [items[i : i + size] for i in range(0, len(items), size)]


def _check_sentence(s: AlignedSentence, strategy: MaskingStrategy, backend: Backend) -> None:
    if s.num_scored_tokens == 0:
        raise EmptyInput("sentence has no scored tokens")
    if strategy.is_masked:
        if "masked" not in backend.capabilities:
            raise UnsupportedStrategy("backend lacks the masked capability")
        s.spec.requires_mlm_specials()
        length = len(s.token_ids)
    else:
        if "causal" not in backend.capabilities:
            raise UnsupportedStrategy("backend lacks the causal capability")
        if s.spec.special.bos_id is None:
            raise UnsupportedStrategy(
                "causal scoring needs a beginning-of-sequence id in the tokenizer spec"
            )
        length = s.num_scored_tokens + 1
    if length > backend.max_sequence_length:
        raise SequenceTooLong(
            f"sentence of {length} tokens exceeds backend limit "
            f"{backend.max_sequence_length}"
        )


def _assemble_report(
    s: AlignedSentence, strategy: MaskingStrategy, logprob_at: dict[int, float]
) -> ScoreReport:
    token_scores = []
    word_scores = []
    for word_index, (start, end) in enumerate(s.word_spans):
        word_sum = 0.0
        for t in range(start, end):
            lp = logprob_at[t]
            token_scores.append(
                TokenScore(
                    position=t,
                    token_id=s.token_ids[t],
                    word_index=word_index,
                    logprob=lp,
                    strategy=strategy,
                )
            )
            word_sum += lp
        word_scores.append(WordScore(word=s.words[word_index], score=word_sum))
    sentence_score = 0.0
    for ws in word_scores:
        sentence_score += ws.score
    return ScoreReport(
        text=s.text,
        strategy=strategy,
        token_scores=tuple(token_scores),
        word_scores=tuple(word_scores),
        sentence_score=sentence_score,
    )


def _run_chunks(chunks: list, runner, threads: int, concurrent_ok: bool) -> list:
    if threads > 1 and concurrent_ok and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(runner, chunks))
    return [runner(chunk) for chunk in chunks]


def _score_masked(
    indexed: list[tuple[int, AlignedSentence]],
    strategy: MaskingStrategy,
    backend: Backend,
    batch_size: int,
    threads: int,
) -> tuple[dict[int, dict[int, float]], dict[int, PLLBenchError]]:
    stream: list[tuple[int, InferenceRequest]] = []
    for index, s in indexed:
        stream.extend((index, r) for r in schedule(s, strategy))
    chunk_size = max(1, min(batch_size, backend.max_batch))
    chunks = _chunks(stream, chunk_size)

    def run(chunk):
        rows = [materialize_request(r) for _, r in chunk]
        pad_id = chunk[0][1].base.spec.special.pad_id
        ids, mask = _pad_rows(rows, pad_id)
        targets = [r.target_position for _, r in chunk]
        try:
            vectors = np.asarray(backend.mlm_logprobs(ids, mask, targets))
        except PLLBenchError:
            raise
        except Exception as exc:
            raise BackendError(
                f"masked backend call failed: {exc}", context=targets
            ) from exc
        return [
            (index, r.target_position, float(vectors[i, r.target_id]))
            for i, (index, r) in enumerate(chunk)
        ]

    results: dict[int, dict[int, float]] = {index: {} for index, _ in indexed}
    failures: dict[int, PLLBenchError] = {}
    for chunk, outcome in zip(chunks, _run_with_failures(chunks, run, threads, backend)):
        if isinstance(outcome, PLLBenchError):
            for index in {i for i, _ in chunk}:
                failures.setdefault(index, outcome)
        else:
            for index, position, lp in outcome:
                results[index][position] = lp
    return results, failures


def _score_causal(
    indexed: list[tuple[int, AlignedSentence]],
    backend: Backend,
    batch_size: int,
    threads: int,
) -> tuple[dict[int, dict[int, float]], dict[int, PLLBenchError]]:
    chunk_size = max(1, min(batch_size, backend.max_batch))
    chunks = _chunks(indexed, chunk_size)

    def run(chunk):
        rows = []
        for _, s in chunk:
            scored_ids = [s.token_ids[t] for t in s.scored_positions]
            rows.append(np.array([s.spec.special.bos_id] + scored_ids, dtype=np.int64))
        ids, mask = _pad_rows(rows, chunk[0][1].spec.special.pad_id)
        try:
            vectors = np.asarray(backend.causal_logprobs(ids, mask))
        except PLLBenchError:
            raise
        except Exception as exc:
            raise BackendError(
                f"causal backend call failed: {exc}",
                context=[s.text for _, s in chunk],
            ) from exc
        out = []
        for i, (index, s) in enumerate(chunk):
            # position p of the BOS-prefixed row predicts the token at p + 1
            per_position = {
                t: float(vectors[i, offset, s.token_ids[t]])
                for offset, t in enumerate(s.scored_positions)
            }
            out.append((index, per_position))
        return out

    results: dict[int, dict[int, float]] = {}
    failures: dict[int, PLLBenchError] = {}
    for chunk, outcome in zip(chunks, _run_with_failures(chunks, run, threads, backend)):
        if isinstance(outcome, PLLBenchError):
            for index, _ in chunk:
                failures.setdefault(index, outcome)
        else:
            for index, per_position in outcome:
                results[index] = per_position
    return results, failures


def _run_with_failures(chunks, run, threads, backend) -> list:
    def guarded(chunk):
        try:
            return run(chunk)
        except PLLBenchError as exc:
            return exc

    return _run_chunks(chunks, guarded, threads, backend.supports_concurrent_use)


def score_batch(
    corpus: Sequence[AlignedSentence],
    strategy: MaskingStrategy,
    backend: Backend,
    *,
    batch_size: int = 32,
    error_policy: ErrorPolicy = ErrorPolicy.FAIL_FAST,
    threads: int = 1,
) -> BatchResult:
    """Score a corpus; equivalent to scoring each sentence alone.

    Under ``skip-and-log`` a sentence that cannot be scored yields a
    ``SentenceError`` (and ``None`` in ``reports``) instead of aborting the
    batch; ``fail-fast`` re-raises the first failure.
    """
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    corpus = list(corpus)
    reports: list[ScoreReport | None] = [None] * len(corpus)
    errors: list[SentenceError] = []
    valid: list[tuple[int, AlignedSentence]] = []
    for index, s in enumerate(corpus):
        try:
            _check_sentence(s, strategy, backend)
            valid.append((index, s))
        except PLLBenchError as exc:
            if error_policy is ErrorPolicy.FAIL_FAST:
                raise
            errors.append(
                SentenceError(index, s.text, type(exc).__name__, str(exc))
            )
    if valid:
        if strategy.is_masked:
            results, failures = _score_masked(valid, strategy, backend, batch_size, threads)
        else:
            results, failures = _score_causal(valid, backend, batch_size, threads)
        if failures and error_policy is ErrorPolicy.FAIL_FAST:
            raise next(iter(failures.values()))
        for index, s in valid:
            if index in failures:
                exc = failures[index]
                errors.append(
                    SentenceError(index, s.text, type(exc).__name__, str(exc))
                )
                continue
            reports[index] = _assemble_report(s, strategy, results[index])
    errors.sort(key=lambda e: e.index)
    return BatchResult(reports=tuple(reports), errors=tuple(errors))


def score_sentence(
    s: AlignedSentence,
    strategy: MaskingStrategy,
    backend: Backend,
    *,
    batch_size: int = 32,
) -> ScoreReport:
    """Score one sentence under one strategy. See the module docstring for
    the summation-order guarantee."""
    result = score_batch([s], strategy, backend, batch_size=batch_size)
    report = result.reports[0]
    assert report is not None
    return report


def score_word_in_context(
    word: str,
    context_template: ContextTemplate,
    strategy: MaskingStrategy,
    backend: Backend,
    *,
    tokenizer,
    spec: TokenizerSpec,
    batch_size: int = 32,
) -> float:
    """Score a single word inside a neutral carrier context.

    The templated sentence is tokenized, aligned, and scored; the returned
    value is the summed log-probability of the word's own span(s) only.
    """
    if not word.strip():
        raise EmptyInput("word is empty")
    prefix = _TEMPLATE_PREFIXES[context_template]
    text = prefix + word
    word_range = (len(prefix), len(text))
    sentence = align(text, spec, tokenizer(text))
    report = score_sentence(sentence, strategy, backend, batch_size=batch_size)

    total = 0.0
    hits = 0
    for (start, end), word_score in zip(sentence.word_spans, report.word_scores):
        span_start = min(sentence.offsets[t][0] for t in range(start, end))
        span_end = max(sentence.offsets[t][1] for t in range(start, end))
        if span_start < word_range[1] and span_end > word_range[0]:
            total += word_score.score
            hits += 1
    if hits == 0:
        raise AlignmentError(
            f"no scored span overlaps the word {word!r} in {text!r}"
        )
    return total


def report_to_json_dict(report: ScoreReport) -> dict:
    return {
        "text": report.text,
        "strategy": report.strategy.value,
        "sentence_score": report.sentence_score,
        "words": [{"word": w.word, "score": w.score} for w in report.word_scores],
        "tokens": [
            {"pos": t.position, "id": t.token_id, "logprob": t.logprob}
            for t in report.token_scores
        ],
    }


def write_score_reports_jsonl(reports: Iterable[ScoreReport], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for report in reports:
            fh.write(json.dumps(report_to_json_dict(report), ensure_ascii=False))
            fh.write("\n")


def write_scores_csv(reports: Iterable[ScoreReport], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["text", "strategy", "score"])
        for report in reports:
            writer.writerow([report.text, report.strategy.value, report.sentence_score])
