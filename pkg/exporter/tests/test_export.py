import hashlib
import json

import pytest
import torch

from pll_exporter.export import (
    ExportValidationError,
    export_model,
    validate_export,
)
from pll_exporter.fixtures import fixture_deviation
from pll_exporter.spec_builder import build_spec_document, detect_continuation_convention
from pll_exporter.tiny import build_wordpiece_tokenizer, create_demo_checkpoint


def sha256(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


class TestManifest:
    def test_schema_and_hashes(self, masked_export):
        export_dir, manifest = masked_export
        assert manifest["kind"] == "masked"
        assert manifest["settings"]["format"] == "torchscript"
        assert manifest["settings"]["precision"] == "float32"
        assert manifest["special_ids_verified"] is True
        for entry in ("graph", "tokenizer_spec", "fixtures"):
            path = export_dir / manifest[entry]["path"]
            assert path.is_file()
            assert sha256(path) == manifest[entry]["sha256"]
        on_disk = json.loads((export_dir / "manifest.json").read_text())
        assert on_disk == manifest

    def test_fixture_floor(self, masked_export):
        _, manifest = masked_export
        assert manifest["fixtures"]["count"] >= 8

    def test_tokenizer_dir_saved(self, masked_export):
        export_dir, _ = masked_export
        assert (export_dir / "tokenizer" / "tokenizer.json").is_file()


class TestSpecDocument:
    def test_masked_spec_fields(self, masked_export):
        export_dir, _ = masked_export
        doc = json.loads((export_dir / "tokenizer_spec.json").read_text())
        assert set(doc) == {"vocab", "continuation", "special", "cased"}
        assert doc["continuation"] == "prefix-continuation"
        for key in ("mask", "cls", "sep", "pad"):
            assert isinstance(doc["special"][key], int)
        assert doc["cased"] is False  # demo tokenizer lowercases

    def test_causal_spec_has_bos(self, causal_export):
        export_dir, _ = causal_export
        doc = json.loads((export_dir / "tokenizer_spec.json").read_text())
        assert isinstance(doc["special"]["bos"], int)

    def test_convention_detection(self):
        assert detect_continuation_convention({"ab": 0, "##cd": 1}) == "prefix-continuation"
        assert detect_continuation_convention({"Ġab": 0, "cd": 1}) == "prefix-word-start"

    def test_spec_matches_tokenizer_ids(self):
        tok = build_wordpiece_tokenizer()
        doc = build_spec_document(tok, "masked")
        assert doc["special"]["mask"] == tok.mask_token_id
        assert doc["special"]["cls"] == tok.cls_token_id
        assert doc["special"]["sep"] == tok.sep_token_id
        assert doc["special"]["pad"] == tok.pad_token_id


class TestFixtures:
    def test_fixture_line_schema(self, masked_export):
        export_dir, manifest = masked_export
        lines = (export_dir / "fixtures.jsonl").read_text().strip().splitlines()
        for line in lines:
            doc = json.loads(line)
            assert doc["kind"] == "masked"
            assert set(doc) == {"kind", "masked_ids", "targets", "top_ids",
                                "logprobs", "rest_logsumexp"}
            assert len(doc["targets"]) == len(doc["top_ids"]) == len(doc["logprobs"])
            for row in doc["logprobs"]:
                assert all(v <= 0 for v in row)
                assert row == sorted(row, reverse=True)

    def test_causal_fixture_line_schema(self, causal_export):
        export_dir, _ = causal_export
        lines = (export_dir / "fixtures.jsonl").read_text().strip().splitlines()
        docs = [json.loads(line) for line in lines]
        assert all(d["kind"] == "causal" for d in docs)
        assert all("ids" in d for d in docs)

    def test_top_k_plus_remainder_covers_mass(self, masked_export):
        import math

        export_dir, _ = masked_export
        doc = json.loads(
            (export_dir / "fixtures.jsonl").read_text().splitlines()[0]
        )
        for row, rest in zip(doc["logprobs"], doc["rest_logsumexp"]):
            total = math.log(sum(math.exp(v) for v in row) + math.exp(rest))
            assert abs(total) < 1e-6


class TestSelfCheck:
    def test_validate_passes(self, masked_export, causal_export):
        for export_dir, manifest in (masked_export, causal_export):
            worst = validate_export(export_dir)
            assert worst <= manifest["settings"]["tolerance"]

    def test_graph_replay_matches_per_fixture(self, masked_export):
        export_dir, _ = masked_export
        module = torch.jit.load(str(export_dir / "model.pt")).eval()
        for line in (export_dir / "fixtures.jsonl").read_text().strip().splitlines():
            assert fixture_deviation(module, json.loads(line)) <= 1e-3

    def test_tampered_graph_detected(self, masked_export, tmp_path):
        import shutil

        export_dir, _ = masked_export
        copy = tmp_path / "copy"
        shutil.copytree(export_dir, copy)
        with open(copy / "model.pt", "ab") as fh:
            fh.write(b"\0")
        with pytest.raises(ExportValidationError):
            validate_export(copy)

    def test_tampered_fixture_values_detected(self, masked_export, tmp_path):
        import shutil

        export_dir, _ = masked_export
        copy = tmp_path / "copy"
        shutil.copytree(export_dir, copy)
        lines = [json.loads(l) for l in
                 (copy / "fixtures.jsonl").read_text().strip().splitlines()]
        lines[0]["logprobs"][0][0] -= 0.5
        with open(copy / "fixtures.jsonl", "w") as fh:
            for doc in lines:
                fh.write(json.dumps(doc) + "\n")
        manifest = json.loads((copy / "manifest.json").read_text())
        manifest["fixtures"]["sha256"] = sha256(copy / "fixtures.jsonl")
        (copy / "manifest.json").write_text(json.dumps(manifest))
        with pytest.raises(ExportValidationError):
            validate_export(copy)


class TestCausalExport:
    def test_causality_probe_on_traced_graph(self, causal_export):
        export_dir, _ = causal_export
        module = torch.jit.load(str(export_dir / "model.pt")).eval()
        doc = json.loads(
            (export_dir / "fixtures.jsonl").read_text().splitlines()[0]
        )
        row = list(doc["ids"])
        edited = list(row)
        edited[-1] = (edited[-1] + 1) % (max(row) + 1)
        ids = torch.tensor([row, edited])
        mask = torch.ones_like(ids)
        with torch.inference_mode():
            logits = module(ids, mask)
        logprobs = torch.log_softmax(logits.float(), dim=-1)
        drift = torch.max(torch.abs(logprobs[0, :-1] - logprobs[1, :-1])).item()
        assert drift <= 1e-4

    def test_bidirectional_checkpoint_fails_causal_export(self, tmp_path):
        # a masked (bidirectional) model traced as causal must be rejected
        create_demo_checkpoint(tmp_path / "ckpt", "masked", seed=9)
        with pytest.raises(ExportValidationError):
            export_model(tmp_path / "ckpt", "causal", tmp_path / "export")


class TestCli:
    def test_export_and_validate_commands(self, tmp_path):
        from pll_exporter.cli import main

        assert main(["demo-checkpoint", "--kind", "masked",
                     "--out", str(tmp_path / "ckpt"), "--seed", "11"]) == 0
        probe = tmp_path / "probe.txt"
        probe.write_text("An extra probe sentence\n", encoding="utf-8")
        assert main(["export", "--model", str(tmp_path / "ckpt"),
                     "--kind", "masked", "--out", str(tmp_path / "export"),
                     "--probe-sentences", str(probe)]) == 0
        toks = (tmp_path / "export" / "tokenizations.jsonl").read_text()
        assert "An extra probe sentence" in toks
        assert main(["validate", str(tmp_path / "export")]) == 0

    def test_unknown_kind_rejected(self, tmp_path):
        from pll_exporter.cli import main

        assert main(["export", "--model", "x", "--kind", "sideways",
                     "--out", str(tmp_path)]) == 1
