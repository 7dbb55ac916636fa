"""Export pipeline: load checkpoint, trace, emit spec + fixtures + manifest."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import torch

from . import fixtures as fixture_mod
from . import spec_builder

GRAPH_FILE = "model.pt"
SPEC_FILE = "tokenizer_spec.json"
FIXTURES_FILE = "fixtures.jsonl"
TOKENIZATIONS_FILE = "tokenizations.jsonl"
MANIFEST_FILE = "manifest.json"
TOKENIZER_DIR = "tokenizer"

MIN_FIXTURES = 8


class ExportValidationError(Exception):
    """The exported graph does not reproduce the source model's outputs."""


class LogitsOnly(torch.nn.Module):
    """Adapter giving the traced graph the documented flat signature."""

    def __init__(self, model):
        super().__init__()
        self.model = model

    def forward(self, input_ids, attention_mask):
        return self.model(input_ids=input_ids, attention_mask=attention_mask).logits


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            digest.update(block)
    return digest.hexdigest()


def _load_checkpoint(model_id: str, kind: str):
    from transformers import AutoModelForCausalLM, AutoModelForMaskedLM, AutoTokenizer

    tokenizer = AutoTokenizer.from_pretrained(model_id)
    if kind == "masked":
        model = AutoModelForMaskedLM.from_pretrained(model_id)
    elif kind == "causal":
        model = AutoModelForCausalLM.from_pretrained(model_id)
    else:
        raise ValueError(f"unknown export kind {kind!r}")
    return model.eval(), tokenizer


def _trace(model, tokenizer, half: bool):
    # trace with a two-row example so batching stays generic
    row = tokenizer("The traveler lost the souvenir")["input_ids"]
    example_ids = torch.tensor([row, row], dtype=torch.int64)
    example_mask = torch.ones_like(example_ids)
    wrapper = LogitsOnly(model).eval()
    if half:
        wrapper = wrapper.half()
    with torch.inference_mode():
        return torch.jit.trace(wrapper, (example_ids, example_mask))


def _causality_probe(module, fixture: dict, tolerance: float = 1e-4) -> None:
    """Editing a later token must leave earlier next-token vectors unchanged."""
    row = list(fixture["ids"])
    if len(row) < 2:
        return
    edited = list(row)
    edited[-1] = (edited[-1] + 1) % max(r + 1 for r in row)
    ids = torch.tensor([row, edited], dtype=torch.int64)
    mask = torch.ones_like(ids)
    with torch.inference_mode():
        logits = module(ids, mask)
    logprobs = torch.log_softmax(logits.float(), dim=-1)
    drift = torch.max(torch.abs(logprobs[0, :-1] - logprobs[1, :-1])).item()
    if drift > tolerance:
        raise ExportValidationError(
            f"graph is not causal: editing a future token moved earlier "
            f"log-probabilities by {drift:.2e} (tolerance {tolerance})"
        )


def export_model(
    model_id: str,
    kind: str,
    out_dir: str | Path,
    *,
    probe_sentences=(),
    half: bool = False,
    top_k: int = 32,
    seed: int = 0,
) -> dict:
    """Write graph, tokenizer spec, fixtures, tokenizations, and manifest.

    Returns the manifest document. Raises ExportValidationError when the
    exported graph fails the fixture replay or (for causal kinds) the
    causality probe.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    model, tokenizer = _load_checkpoint(model_id, kind)
    if half:
        model = model.half()

    spec_doc = spec_builder.build_spec_document(tokenizer, kind)
    spec_builder.verify_special_ids(spec_doc, tokenizer)
    _write_json(out / SPEC_FILE, spec_doc)

    sentences = list(fixture_mod.PROBE_SENTENCES) + [
        s for s in probe_sentences if s not in fixture_mod.PROBE_SENTENCES
    ]
    if kind == "masked":
        fixtures = fixture_mod.generate_masked_fixtures(
            model, tokenizer, sentences, top_k=top_k, seed=seed
        )
    else:
        fixtures = fixture_mod.generate_causal_fixtures(
            model, tokenizer, sentences, bos_id=spec_doc["special"]["bos"],
            top_k=top_k, seed=seed,
        )
    if len(fixtures) < MIN_FIXTURES:
        raise ExportValidationError(
            f"only {len(fixtures)} fixtures generated (need >= {MIN_FIXTURES})"
        )
    _write_jsonl(out / FIXTURES_FILE, fixtures)
    _write_jsonl(out / TOKENIZATIONS_FILE,
                 fixture_mod.fixture_tokenizations(tokenizer, sentences))
    tokenizer.save_pretrained(out / TOKENIZER_DIR)

    traced = _trace(model, tokenizer, half=False if not half else True)
    traced.save(str(out / GRAPH_FILE))

    max_positions = getattr(model.config, "max_position_embeddings", None)
    manifest = {
        "source_model": str(model_id),
        "kind": kind,
        "graph": {"path": GRAPH_FILE, "sha256": _sha256(out / GRAPH_FILE)},
        "tokenizer_spec": {"path": SPEC_FILE, "sha256": _sha256(out / SPEC_FILE)},
        "fixtures": {
            "path": FIXTURES_FILE,
            "sha256": _sha256(out / FIXTURES_FILE),
            "count": len(fixtures),
            "top_k": top_k,
        },
        "tokenizations": {"path": TOKENIZATIONS_FILE},
        "settings": {
            "format": "torchscript",
            "precision": "float16" if half else "float32",
            "torch_version": torch.__version__,
            "tolerance": 5e-3 if half else 1e-3,
        },
        "max_sequence_length": int(max_positions) if max_positions else 512,
        "special_ids_verified": True,
    }
    _write_json(out / MANIFEST_FILE, manifest)
    validate_export(out)
    return manifest


def validate_export(export_dir: str | Path) -> float:
    """Self-check: manifest hashes match disk, the graph replays every
    fixture within tolerance, and causal graphs pass the causality probe.
    Returns the worst fixture deviation."""
    out = Path(export_dir)
    manifest = json.loads((out / MANIFEST_FILE).read_text(encoding="utf-8"))
    for entry in ("graph", "tokenizer_spec", "fixtures"):
        path = out / manifest[entry]["path"]
        digest = _sha256(path)
        if digest != manifest[entry]["sha256"]:
            raise ExportValidationError(
                f"{entry} hash mismatch: manifest {manifest[entry]['sha256'][:12]} "
                f"vs disk {digest[:12]}"
            )
    module = torch.jit.load(str(out / manifest["graph"]["path"]))
    module.eval()
    tolerance = float(manifest["settings"]["tolerance"])
    fixtures = _read_jsonl(out / manifest["fixtures"]["path"])
    worst = 0.0
    for fixture in fixtures:
        worst = max(worst, fixture_mod.fixture_deviation(module, fixture))
    if worst > tolerance:
        raise ExportValidationError(
            f"fixture replay deviates by {worst:.2e} (tolerance {tolerance})"
        )
    if manifest["kind"] == "causal":
        _causality_probe(module, fixtures[0])
    return worst


def _write_json(path: Path, doc: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, ensure_ascii=False, indent=2, sort_keys=True)
        fh.write("\n")


def _write_jsonl(path: Path, rows) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False))
            fh.write("\n")


def _read_jsonl(path: Path) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]
