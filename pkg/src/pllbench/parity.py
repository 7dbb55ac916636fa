"""Golden-fixture parity checking for exported graphs.

Fixture files are JSONL, one inference case per line. Masked lines carry
``masked_ids`` (mask tokens already substituted) and ``targets`` (positions
whose distributions were recorded); causal lines carry ``ids`` and
``targets``. Each target stores its top-k candidate ids with their
log-probabilities plus the logsumexp of the remaining vocabulary mass, so
fixtures stay small while covering both gather accuracy and normalization.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ShapeError


@dataclass(frozen=True)
class GoldenFixture:
    kind: str  # "masked" | "causal"
    ids: tuple[int, ...]
    targets: tuple[int, ...]
    top_ids: tuple[tuple[int, ...], ...]
    logprobs: tuple[tuple[float, ...], ...]
    rest_logsumexp: tuple[float, ...]


@dataclass(frozen=True)
class ParityOutcome:
    cases: int
    targets: int
    max_abs_error: float


def read_golden_fixtures(path: str | Path) -> list[GoldenFixture]:
    fixtures = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                doc = json.loads(line)
                kind = doc["kind"]
                ids = doc["masked_ids"] if kind == "masked" else doc["ids"]
                fixtures.append(
                    GoldenFixture(
                        kind=kind,
                        ids=tuple(int(i) for i in ids),
                        targets=tuple(int(t) for t in doc["targets"]),
                        top_ids=tuple(tuple(int(i) for i in row) for row in doc["top_ids"]),
                        logprobs=tuple(tuple(float(v) for v in row) for row in doc["logprobs"]),
                        rest_logsumexp=tuple(float(v) for v in doc["rest_logsumexp"]),
                    )
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise ShapeError(f"{path}:{lineno}: bad golden fixture: {exc}") from exc
    if not fixtures:
        raise ShapeError(f"{path}: no fixtures")
    return fixtures


def _remainder_logsumexp(vector: np.ndarray, top_ids: Sequence[int]) -> float:
    keep = np.ones(vector.shape[0], dtype=bool)
    keep[list(top_ids)] = False
    rest = vector[keep]
    m = rest.max()
    return float(m + np.log(np.exp(rest - m).sum()))


def verify_golden_fixtures(backend, fixtures: Sequence[GoldenFixture]) -> ParityOutcome:
    """Run every fixture through a backend; returns the worst deviation seen."""
    worst = 0.0
    n_targets = 0
    for fx in fixtures:
        row = np.array([fx.ids], dtype=np.int64)
        mask = np.ones_like(row)
        if fx.kind == "masked":
            rows = np.repeat(row, len(fx.targets), axis=0)
            masks = np.repeat(mask, len(fx.targets), axis=0)
            vectors = backend.mlm_logprobs(rows, masks, list(fx.targets))
        elif fx.kind == "causal":
            per_position = backend.causal_logprobs(row, mask)[0]
            vectors = per_position[list(fx.targets)]
        else:
            raise ShapeError(f"unknown fixture kind {fx.kind!r}")
        for i in range(len(fx.targets)):
            got = vectors[i][list(fx.top_ids[i])]
            want = np.array(fx.logprobs[i], dtype=np.float64)
            worst = max(worst, float(np.max(np.abs(got - want))))
            rest = _remainder_logsumexp(vectors[i], fx.top_ids[i])
            worst = max(worst, abs(rest - fx.rest_logsumexp[i]))
            n_targets += 1
    return ParityOutcome(cases=len(fixtures), targets=n_targets, max_abs_error=worst)
