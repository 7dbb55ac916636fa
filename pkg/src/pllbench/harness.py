"""Minimal-pair forced-choice evaluation.

Each record pairs an acceptable sentence with a minimally different
unacceptable one. A pair counts as correct only when the acceptable
sentence scores strictly higher; ties count as incorrect. Accuracies are
aggregated per paradigm, rolled up per phenomenon, and overall; the overall
score is pair-weighted (sum of corrects over sum of totals), not an average
of paradigm accuracies.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .aligner import AlignedSentence, TokenizerSpec, align
from .engine import Backend, ErrorPolicy, score_batch
from .errors import EmptyInput, PLLBenchError, ShapeError
from .scheduler import MaskingStrategy


@dataclass(frozen=True)
class PairRecord:
    sentence_good: str
    sentence_bad: str
    paradigm_id: str
    phenomenon: str = ""

    def __post_init__(self):
        if not self.sentence_good.strip() or not self.sentence_bad.strip():
            raise EmptyInput("both sentences of a pair must be non-empty")
        if not self.paradigm_id.strip():
            raise EmptyInput("paradigm_id must be non-empty")


@dataclass
class ParadigmScore:
    correct: int = 0
    total: int = 0
    phenomenon: str = ""

    @property
    def accuracy(self) -> float:
        return self.correct / self.total if self.total else 0.0


@dataclass(frozen=True)
class PairError:
    index: int
    paradigm_id: str
    kind: str
    message: str


@dataclass
class BenchmarkResult:
    paradigms: dict[str, ParadigmScore] = field(default_factory=dict)
    errors: tuple[PairError, ...] = ()

    @property
    def total(self) -> int:
        return sum(p.total for p in self.paradigms.values())

    @property
    def correct(self) -> int:
        return sum(p.correct for p in self.paradigms.values())

    @property
    def overall_accuracy(self) -> float:
        return self.correct / self.total if self.total else 0.0

    def phenomena(self) -> dict[str, ParadigmScore]:
        rollup: dict[str, ParadigmScore] = {}
        for score in self.paradigms.values():
            agg = rollup.setdefault(score.phenomenon, ParadigmScore(phenomenon=score.phenomenon))
            agg.correct += score.correct
            agg.total += score.total
        return rollup


def evaluate(
    pairs: Sequence[PairRecord],
    strategy: MaskingStrategy,
    backend: Backend,
    *,
    tokenizer,
    spec: TokenizerSpec,
    batch_size: int = 32,
    error_policy: ErrorPolicy = ErrorPolicy.FAIL_FAST,
) -> BenchmarkResult:
    """Score every pair and aggregate forced-choice accuracy.

    Under skip-and-log a pair whose either side fails to tokenize, align, or
    score becomes a PairError and is excluded from the totals.
    """
    if not pairs:
        raise EmptyInput("no pairs to evaluate")

    aligned: list[AlignedSentence | None] = []
    pair_errors: dict[int, PairError] = {}
    for index, pair in enumerate(pairs):
        for text in (pair.sentence_good, pair.sentence_bad):
            try:
                aligned.append(align(text, spec, tokenizer(text)))
            except PLLBenchError as exc:
                if error_policy is ErrorPolicy.FAIL_FAST:
                    raise
                aligned.append(None)
                pair_errors.setdefault(
                    index,
                    PairError(index, pair.paradigm_id, type(exc).__name__, str(exc)),
                )

    scorable = [s for s in aligned if s is not None]
    batch = score_batch(
        scorable, strategy, backend,
        batch_size=batch_size, error_policy=error_policy,
    )
    scores: list[float | None] = []
    cursor = 0
    for s in aligned:
        if s is None:
            scores.append(None)
        else:
            report = batch.reports[cursor]
            scores.append(report.sentence_score if report is not None else None)
            cursor += 1

    result = BenchmarkResult()
    for index, pair in enumerate(pairs):
        good_score = scores[2 * index]
        bad_score = scores[2 * index + 1]
        if good_score is None or bad_score is None:
            if index not in pair_errors:
                # scoring (not alignment) failed for one side
                failed = 2 * index if good_score is None else 2 * index + 1
                err = _find_batch_error(batch, aligned, failed)
                pair_errors[index] = PairError(
                    index, pair.paradigm_id,
                    err[0] if err else "BackendError",
                    err[1] if err else "sentence could not be scored",
                )
            continue
        score = result.paradigms.setdefault(
            pair.paradigm_id, ParadigmScore(phenomenon=pair.phenomenon)
        )
        score.total += 1
        if good_score > bad_score:
            score.correct += 1
    result.errors = tuple(pair_errors[i] for i in sorted(pair_errors))
    return result


def _find_batch_error(batch, aligned, failed_index) -> tuple[str, str] | None:
    scorable_pos = sum(1 for s in aligned[:failed_index] if s is not None)
    for err in batch.errors:
        if err.index == scorable_pos:
            return err.kind, err.message
    return None


@dataclass(frozen=True)
class ParadigmDelta:
    paradigm_id: str
    delta: float
    accuracy_a: float
    accuracy_b: float


@dataclass(frozen=True)
class DiffReport:
    deltas: tuple[ParadigmDelta, ...]
    overall_delta: float


def diff_report(a: BenchmarkResult, b: BenchmarkResult) -> DiffReport:
    """Per-paradigm accuracy deltas (a minus b), sorted by |delta| descending."""
    if set(a.paradigms) != set(b.paradigms):
        raise ShapeError("results cover different paradigm sets")
    deltas = [
        ParadigmDelta(
            paradigm_id=pid,
            delta=a.paradigms[pid].accuracy - b.paradigms[pid].accuracy,
            accuracy_a=a.paradigms[pid].accuracy,
            accuracy_b=b.paradigms[pid].accuracy,
        )
        for pid in a.paradigms
    ]
    deltas.sort(key=lambda d: (-abs(d.delta), d.paradigm_id))
    return DiffReport(
        deltas=tuple(deltas),
        overall_delta=a.overall_accuracy - b.overall_accuracy,
    )


def read_pairs_jsonl(path: str | Path) -> list[PairRecord]:
    """Read records shaped like the published benchmark schema:
    sentence_good / sentence_bad / UID / linguistics_term."""
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                doc = json.loads(line)
                records.append(
                    PairRecord(
                        sentence_good=doc["sentence_good"],
                        sentence_bad=doc["sentence_bad"],
                        paradigm_id=doc["UID"],
                        phenomenon=doc.get("linguistics_term", ""),
                    )
                )
            except (KeyError, ValueError) as exc:
                raise ShapeError(f"{path}:{lineno}: bad pair record: {exc}") from exc
    return records


def read_pairs_tsv(path: str | Path) -> list[PairRecord]:
    """Fixture fallback: ``good<TAB>bad<TAB>paradigm[<TAB>phenomenon]``."""
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) not in (3, 4):
                raise ShapeError(f"{path}:{lineno}: expected 3 or 4 tab-separated fields")
            records.append(
                PairRecord(
                    sentence_good=parts[0],
                    sentence_bad=parts[1],
                    paradigm_id=parts[2],
                    phenomenon=parts[3] if len(parts) == 4 else "",
                )
            )
    return records


def result_to_json_dict(result: BenchmarkResult) -> dict:
    return {
        "overall": {
            "correct": result.correct,
            "total": result.total,
            "accuracy": result.overall_accuracy,
        },
        "paradigms": {
            pid: {
                "correct": score.correct,
                "total": score.total,
                "accuracy": score.accuracy,
                "phenomenon": score.phenomenon,
            }
            for pid, score in sorted(result.paradigms.items())
        },
        "errors": [
            {"index": e.index, "paradigm": e.paradigm_id, "kind": e.kind, "message": e.message}
            for e in result.errors
        ],
    }


def result_from_json_dict(doc: dict) -> BenchmarkResult:
    result = BenchmarkResult()
    for pid, row in doc["paradigms"].items():
        result.paradigms[pid] = ParadigmScore(
            correct=row["correct"], total=row["total"], phenomenon=row.get("phenomenon", "")
        )
    result.errors = tuple(
        PairError(e["index"], e["paradigm"], e["kind"], e["message"])
        for e in doc.get("errors", [])
    )
    return result


def render_summary(
    results: dict[str, BenchmarkResult],
    fmt: str = "text",
) -> str:
    """Comparison table: one row per paradigm, one accuracy column per result.

    The best accuracy in each row carries a ``*`` marker (bolding-eligible
    when rendered elsewhere). ``fmt`` is text, csv, or json.
    """
    if not results:
        raise EmptyInput("no results to summarize")
    names = list(results)
    paradigm_ids = sorted({pid for r in results.values() for pid in r.paradigms})

    rows = []
    for pid in paradigm_ids:
        accs = {
            name: results[name].paradigms[pid].accuracy if pid in results[name].paradigms else None
            for name in names
        }
        present = [v for v in accs.values() if v is not None]
        best = max(present) if present else None
        rows.append((pid, accs, best))
    overall = {name: results[name].overall_accuracy for name in names}
    best_overall = max(overall.values())

    if fmt == "json":
        return json.dumps(
            {
                "columns": names,
                "rows": [
                    {
                        "paradigm": pid,
                        "accuracies": accs,
                        "max": [n for n, v in accs.items() if v is not None and v == best],
                    }
                    for pid, accs, best in rows
                ],
                "overall": {
                    "accuracies": overall,
                    "max": [n for n, v in overall.items() if v == best_overall],
                },
            },
            indent=2,
            sort_keys=True,
        )

    def cell(value, best):
        if value is None:
            return "-"
        mark = "*" if value == best else ""
        return f"{100 * value:.1f}{mark}"

    if fmt == "csv":
        lines = [",".join(["paradigm"] + names)]
        for pid, accs, best in rows:
            lines.append(",".join([pid] + [cell(accs[n], best) for n in names]))
        lines.append(",".join(["OVERALL"] + [cell(overall[n], best_overall) for n in names]))
        return "\n".join(lines) + "\n"

    if fmt != "text":
        raise ShapeError(f"unknown summary format {fmt!r}")
    width = max([len("paradigm")] + [len(pid) for pid in paradigm_ids])
    col = max([8] + [len(n) for n in names]) + 1
    lines = ["paradigm".ljust(width) + "".join(n.rjust(col) for n in names)]
    for pid, accs, best in rows:
        lines.append(pid.ljust(width) + "".join(cell(accs[n], best).rjust(col) for n in names))
    lines.append(
        "OVERALL".ljust(width)
        + "".join(cell(overall[n], best_overall).rjust(col) for n in names)
    )
    return "\n".join(lines) + "\n"


def write_summary(results: dict[str, BenchmarkResult], path: str | Path, fmt: str) -> None:
    rendered = render_summary(results, fmt)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(rendered)


def write_result_json(result: BenchmarkResult, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(result_to_json_dict(result), fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_result_json(path: str | Path) -> BenchmarkResult:
    with open(path, encoding="utf-8") as fh:
        return result_from_json_dict(json.load(fh))


def write_diff_csv(diff: DiffReport, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["paradigm", "delta", "accuracy_a", "accuracy_b"])
        for d in diff.deltas:
            writer.writerow([d.paradigm_id, d.delta, d.accuracy_a, d.accuracy_b])
        writer.writerow(["OVERALL", diff.overall_delta, "", ""])
