"""Score diagnostics: length effects, frequency effects, cross-model agreement.

All three analyses are plain recombinations of ScoreReports, so anything
reported here can be recomputed bit-for-bit from the emitted JSONL. Reports
are written as a small JSON document plus a points CSV and an SVG scatter.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .aligner import AlignedSentence, TokenizerSpec
from .engine import (
    Backend,
    ContextTemplate,
    ScoreReport,
    score_batch,
    score_word_in_context,
)
from .errors import DegenerateInput, EmptyInput, ShapeError
from .scheduler import MaskingStrategy


@dataclass(frozen=True)
class FrequencyTable:
    """Raw word counts from a reference corpus (e.g. an n-gram export)."""

    counts: dict[str, int]
    source: str = ""

    def __post_init__(self):
        for word, count in self.counts.items():
            if count < 0:
                raise ValueError(f"negative count for {word!r}")

    def count(self, word: str) -> int:
        return self.counts.get(word, 0)


@dataclass(frozen=True)
class CorrelationResult:
    r: float
    n: int
    x_label: str
    y_label: str


def load_frequency_tsv(path: str | Path, source: str | None = None) -> FrequencyTable:
    """Read a two-column ``word<TAB>count`` table."""
    counts: dict[str, int] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            try:
                word, raw = line.split("\t")
                counts[word] = int(raw)
            except ValueError as exc:
                raise ShapeError(f"{path}:{lineno}: bad frequency row") from exc
    return FrequencyTable(counts=counts, source=source or str(path))


def log_frequency(word: str, table: FrequencyTable) -> float:
    """Add-one smoothed natural-log count; unseen words count as zero."""
    return math.log(table.count(word) + 1)


def pearson(
    xs: Sequence[float],
    ys: Sequence[float],
    *,
    x_label: str = "x",
    y_label: str = "y",
) -> CorrelationResult:
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if x.ndim != 1 or y.ndim != 1 or x.shape != y.shape:
        raise ShapeError(f"paired sequences required, got {x.shape} vs {y.shape}")
    if x.size < 2:
        raise DegenerateInput("need at least two points")
    xc = x - x.mean()
    yc = y - y.mean()
    sxx = float(xc @ xc)
    syy = float(yc @ yc)
    if sxx == 0.0 or syy == 0.0:
        raise DegenerateInput("an input sequence is constant")
    r = float(xc @ yc) / math.sqrt(sxx * syy)
    # guard fp spill just outside [-1, 1]
    r = max(-1.0, min(1.0, r))
    return CorrelationResult(r=r, n=int(x.size), x_label=x_label, y_label=y_label)


def length_effect_from_reports(
    reports: Sequence[ScoreReport],
) -> tuple[CorrelationResult, list[tuple[float, float]]]:
    """Correlate scored-token count with negative sentence score."""
    points = [
        (float(len(r.token_scores)), -r.sentence_score) for r in reports
    ]
    result = pearson(
        [p[0] for p in points],
        [p[1] for p in points],
        x_label="scored_tokens",
        y_label="negative_score",
    )
    return result, points


def length_effect(
    corpus: Sequence[AlignedSentence],
    strategy: MaskingStrategy,
    backend: Backend,
    *,
    batch_size: int = 32,
) -> CorrelationResult:
    if len(corpus) < 2:
        raise DegenerateInput("need at least two sentences")
    reports = score_batch(corpus, strategy, backend, batch_size=batch_size).ok_reports
    return length_effect_from_reports(reports)[0]


def frequency_effect_points(
    words: Sequence[str],
    table: FrequencyTable,
    context_template: ContextTemplate,
    strategy: MaskingStrategy,
    backend: Backend,
    *,
    tokenizer,
    spec: TokenizerSpec,
    batch_size: int = 32,
) -> list[tuple[str, float, float]]:
    """(word, log frequency, in-context word score) for each unique word."""
    unique = list(dict.fromkeys(words))
    if not unique:
        raise EmptyInput("no words given")
    points = []
    for word in unique:
        lf = log_frequency(spec.normalize_word(word), table)
        score = score_word_in_context(
            word, context_template, strategy, backend,
            tokenizer=tokenizer, spec=spec, batch_size=batch_size,
        )
        points.append((word, lf, score))
    return points


def frequency_effect(
    words: Sequence[str],
    table: FrequencyTable,
    context_template: ContextTemplate,
    strategy: MaskingStrategy,
    backend: Backend,
    *,
    tokenizer,
    spec: TokenizerSpec,
    batch_size: int = 32,
) -> CorrelationResult:
    points = frequency_effect_points(
        words, table, context_template, strategy, backend,
        tokenizer=tokenizer, spec=spec, batch_size=batch_size,
    )
    return pearson(
        [p[1] for p in points],
        [p[2] for p in points],
        x_label="log_frequency",
        y_label="word_score",
    )


def cross_model_correlation(
    corpus: Sequence[AlignedSentence],
    strategy_a: MaskingStrategy,
    backend_a: Backend,
    strategy_b: MaskingStrategy,
    backend_b: Backend,
    *,
    corpus_b: Sequence[AlignedSentence] | None = None,
    batch_size: int = 32,
) -> CorrelationResult:
    """Per-sentence score agreement between two (strategy, backend) pairs.

    ``corpus_b`` supplies the second side's alignments when the two backends
    use different tokenizers; texts must match pairwise.
    """
    second = list(corpus_b) if corpus_b is not None else list(corpus)
    if len(second) != len(corpus):
        raise ShapeError("corpora must pair up one-to-one")
    for a, b in zip(corpus, second):
        if a.text != b.text:
            raise ShapeError("corpora must contain the same texts in order")
    reports_a = score_batch(corpus, strategy_a, backend_a, batch_size=batch_size).ok_reports
    reports_b = score_batch(second, strategy_b, backend_b, batch_size=batch_size).ok_reports
    return pearson(
        [r.sentence_score for r in reports_a],
        [r.sentence_score for r in reports_b],
        x_label=f"{strategy_a.value}_score",
        y_label=f"{strategy_b.value}_score",
    )


def emit_analysis_report(
    analysis: str,
    result: CorrelationResult,
    points: Sequence[tuple[float, float]],
    out_dir: str | Path,
) -> dict:
    """Write {analysis}.json, {analysis}.csv, and {analysis}.svg; return the
    JSON document (paths included)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / f"{analysis}.csv"
    svg_path = out / f"{analysis}.svg"
    json_path = out / f"{analysis}.json"

    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([result.x_label, result.y_label])
        for x, y in points:
            writer.writerow([x, y])

    _scatter_svg(points, result, svg_path)

    doc = {
        "analysis": analysis,
        "r": result.r,
        "n": result.n,
        "points_csv_path": str(csv_path),
        "svg_path": str(svg_path),
    }
    with open(json_path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return doc


def _scatter_svg(
    points: Sequence[tuple[float, float]],
    result: CorrelationResult,
    path: Path,
) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    with plt.rc_context({"svg.hashsalt": "pllbench"}):
        fig, ax = plt.subplots(figsize=(4.5, 3.5))
        xs = [p[0] for p in points]
        ys = [p[1] for p in points]
        ax.scatter(xs, ys, s=12, alpha=0.7)
        ax.set_xlabel(result.x_label)
        ax.set_ylabel(result.y_label)
        ax.set_title(f"r = {result.r:.3f} (n = {result.n})")
        fig.tight_layout()
        # Date metadata omitted so reruns are byte-identical
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
