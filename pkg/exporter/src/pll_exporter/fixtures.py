"""Golden parity fixtures, computed with the source model.

Each fixture line records one input row plus, for a few target positions,
the top-k log-probabilities (with their candidate ids) and the logsumexp of
the remaining vocabulary mass. The inference runtime later replays the row
and must land within tolerance on every recorded value, so the fixtures
double as a gather-accuracy and a normalization check while staying small.
"""

from __future__ import annotations

import random

import numpy as np
import torch

PROBE_SENTENCES = (
    "The traveler lost the souvenir",
    "She keeps a small souvenir",
    "The dog barks loudly",
    "My word is unpredictable",
    "A carnival arrived overnight",
    "He was reading the manuscript",
    "The hooligan broke a window",
    "Time flies like an arrow",
    "The carnivore hunted at dawn",
    "Hi there",
)


def _top_k_rows(logprobs: torch.Tensor, top_k: int) -> tuple[list[int], list[float], float]:
    vector = logprobs.double()
    k = min(top_k, vector.shape[-1] - 1)
    values, indices = torch.sort(vector, descending=True, stable=True)
    top_ids = indices[:k].tolist()
    top_vals = values[:k].tolist()
    rest = values[k:]
    rest_lse = float(torch.logsumexp(rest, dim=-1))
    return top_ids, top_vals, rest_lse


def _model_logprobs(model, input_ids: torch.Tensor) -> torch.Tensor:
    attention_mask = torch.ones_like(input_ids)
    with torch.inference_mode():
        logits = model(input_ids=input_ids, attention_mask=attention_mask).logits
    return torch.log_softmax(logits.float(), dim=-1)


def generate_masked_fixtures(
    model,
    tokenizer,
    sentences,
    *,
    top_k: int = 32,
    seed: int = 0,
    max_targets: int = 3,
) -> list[dict]:
    rng = random.Random(seed)
    mask_id = tokenizer.mask_token_id
    special_ids = set(tokenizer.all_special_ids)
    fixtures = []
    for text in sentences:
        ids = tokenizer(text)["input_ids"]
        maskable = [i for i, t in enumerate(ids) if t not in special_ids]
        if not maskable:
            continue
        targets = sorted(rng.sample(maskable, min(max_targets, len(maskable))))
        masked = list(ids)
        for t in targets:
            masked[t] = mask_id
        logprobs = _model_logprobs(model, torch.tensor([masked]))[0]
        top_ids, rows, rest = [], [], []
        for t in targets:
            ti, tv, lse = _top_k_rows(logprobs[t], top_k)
            top_ids.append(ti)
            rows.append(tv)
            rest.append(lse)
        fixtures.append(
            {
                "kind": "masked",
                "masked_ids": masked,
                "targets": targets,
                "top_ids": top_ids,
                "logprobs": rows,
                "rest_logsumexp": rest,
            }
        )
    return fixtures


def generate_causal_fixtures(
    model,
    tokenizer,
    sentences,
    *,
    bos_id: int,
    top_k: int = 32,
    seed: int = 0,
    max_targets: int = 3,
) -> list[dict]:
    rng = random.Random(seed)
    special_ids = set(tokenizer.all_special_ids)
    fixtures = []
    for text in sentences:
        content = [t for t in tokenizer(text)["input_ids"] if t not in special_ids]
        if not content:
            continue
        row = [bos_id] + content
        # each recorded position's vector predicts the following token
        targets = sorted(rng.sample(range(len(row)), min(max_targets, len(row))))
        logprobs = _model_logprobs(model, torch.tensor([row]))[0]
        top_ids, rows, rest = [], [], []
        for t in targets:
            ti, tv, lse = _top_k_rows(logprobs[t], top_k)
            top_ids.append(ti)
            rows.append(tv)
            rest.append(lse)
        fixtures.append(
            {
                "kind": "causal",
                "ids": row,
                "targets": targets,
                "top_ids": top_ids,
                "logprobs": rows,
                "rest_logsumexp": rest,
            }
        )
    return fixtures


def fixture_tokenizations(tokenizer, sentences) -> list[dict]:
    """Pre-tokenized records in the scorer's {"text","tokens"} JSONL schema."""
    records = []
    for text in sentences:
        enc = tokenizer(text, return_offsets_mapping=True)
        records.append(
            {
                "text": text,
                "tokens": [
                    [int(i), int(s), int(e)]
                    for i, (s, e) in zip(enc["input_ids"], enc["offset_mapping"])
                ],
            }
        )
    return records


def replay_fixture(module, fixture: dict) -> np.ndarray:
    """Run one fixture's input row through a traced graph; returns the
    log-softmax vectors at the fixture's target positions."""
    key = "masked_ids" if fixture["kind"] == "masked" else "ids"
    ids = torch.tensor([fixture[key]], dtype=torch.int64)
    mask = torch.ones_like(ids)
    with torch.inference_mode():
        logits = module(ids, mask)
    if isinstance(logits, (tuple, list)):
        logits = logits[0]
    logprobs = torch.log_softmax(logits.float(), dim=-1)[0]
    return logprobs[list(fixture["targets"])].double().numpy()


def fixture_deviation(module, fixture: dict) -> float:
    """Worst absolute error between a graph replay and the recorded values."""
    vectors = replay_fixture(module, fixture)
    worst = 0.0
    for i in range(len(fixture["targets"])):
        got = vectors[i][fixture["top_ids"][i]]
        want = np.asarray(fixture["logprobs"][i], dtype=np.float64)
        worst = max(worst, float(np.max(np.abs(got - want))))
        keep = np.ones(vectors.shape[-1], dtype=bool)
        keep[fixture["top_ids"][i]] = False
        rest = vectors[i][keep]
        m = rest.max()
        rest_lse = float(m + np.log(np.exp(rest - m).sum()))
        worst = max(worst, abs(rest_lse - fixture["rest_logsumexp"][i]))
    return worst
