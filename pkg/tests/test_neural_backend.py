import json

import numpy as np
import pytest

torch = pytest.importorskip("torch")

from pllbench.backends.neural import NeuralBackend, NeuralBackendConfig, load_export
from pllbench.errors import BackendError, SequenceTooLong, UnsupportedStrategy

VOCAB = 24


class BidiToy(torch.nn.Module):
    """Masked-style toy: every position sees every visible position."""

    def __init__(self):
        super().__init__()
        torch.manual_seed(7)
        self.emb = torch.nn.Embedding(VOCAB, 16)
        self.proj = torch.nn.Linear(16, VOCAB)

    def forward(self, input_ids, attention_mask):
        h = self.emb(input_ids) * attention_mask.unsqueeze(-1).to(torch.float32)
        pooled = h.sum(dim=1, keepdim=True).expand_as(h)
        return self.proj(h + 0.25 * pooled)


class CausalToy(torch.nn.Module):
    """Causal toy: position p depends only on positions <= p (prefix sums)."""

    def __init__(self):
        super().__init__()
        torch.manual_seed(11)
        self.emb = torch.nn.Embedding(VOCAB, 16)
        self.proj = torch.nn.Linear(16, VOCAB)

    def forward(self, input_ids, attention_mask):
        h = self.emb(input_ids) * attention_mask.unsqueeze(-1).to(torch.float32)
        return self.proj(torch.cumsum(h, dim=1))


def trace_to(tmp_path, module, name):
    ids = torch.randint(0, VOCAB, (2, 5))
    mask = torch.ones_like(ids)
    traced = torch.jit.trace(module.eval(), (ids, mask))
    path = tmp_path / name
    traced.save(str(path))
    return path


@pytest.fixture
def masked_backend(tmp_path):
    path = trace_to(tmp_path, BidiToy(), "masked.pt")
    return NeuralBackend(NeuralBackendConfig(model_path=str(path), kind="masked"))


@pytest.fixture
def causal_backend(tmp_path):
    path = trace_to(tmp_path, CausalToy(), "causal.pt")
    return NeuralBackend(NeuralBackendConfig(model_path=str(path), kind="causal"))


def rows():
    ids = np.array([[2, 5, 6, 7, 3]], dtype=np.int64)
    return ids, np.ones_like(ids)


class TestMasked:
    def test_normalized(self, masked_backend):
        ids, mask = rows()
        out = masked_backend.mlm_logprobs(ids, mask, [2])
        assert abs(np.log(np.exp(out).sum())) < 1e-3

    def test_duplicate_rows_identical(self, masked_backend):
        ids, mask = rows()
        both = masked_backend.mlm_logprobs(
            np.repeat(ids, 2, axis=0), np.repeat(mask, 2, axis=0), [2, 2]
        )
        assert np.array_equal(both[0], both[1])

    def test_padded_matches_unpadded(self, masked_backend):
        ids, mask = rows()
        padded = np.concatenate([ids, np.zeros((1, 3), dtype=np.int64)], axis=1)
        pmask = np.concatenate([mask, np.zeros((1, 3), dtype=np.int64)], axis=1)
        a = masked_backend.mlm_logprobs(ids, mask, [2])
        b = masked_backend.mlm_logprobs(padded, pmask, [2])
        assert np.max(np.abs(a - b)) < 1e-4

    def test_causal_call_rejected(self, masked_backend):
        ids, mask = rows()
        with pytest.raises(UnsupportedStrategy):
            masked_backend.causal_logprobs(ids, mask)

    def test_sequence_limit(self, tmp_path):
        path = trace_to(tmp_path, BidiToy(), "m.pt")
        backend = NeuralBackend(
            NeuralBackendConfig(model_path=str(path), kind="masked",
                                max_sequence_length=3)
        )
        ids, mask = rows()
        with pytest.raises(SequenceTooLong):
            backend.mlm_logprobs(ids, mask, [1])


class TestCausal:
    def test_causality(self, causal_backend):
        ids, mask = rows()
        edited = ids.copy()
        edited[0, 4] = 9
        a = causal_backend.causal_logprobs(ids, mask)
        b = causal_backend.causal_logprobs(edited, mask)
        assert np.max(np.abs(a[0, :4] - b[0, :4])) < 1e-4

    def test_normalized(self, causal_backend):
        ids, mask = rows()
        out = causal_backend.causal_logprobs(ids, mask)
        lse = np.log(np.exp(out).sum(axis=-1))
        assert np.max(np.abs(lse)) < 1e-3

    def test_single_position_row(self, causal_backend):
        ids = np.array([[4]], dtype=np.int64)
        out = causal_backend.causal_logprobs(ids, np.ones_like(ids))
        assert out.shape == (1, 1, VOCAB)

    def test_masked_call_rejected(self, causal_backend):
        ids, mask = rows()
        with pytest.raises(UnsupportedStrategy):
            causal_backend.mlm_logprobs(ids, mask, [1])


class TestLoadExport:
    def test_manifest_wiring(self, tmp_path, tiny_spec):
        from pllbench.aligner import dump_tokenizer_spec

        trace_to(tmp_path, BidiToy(), "model.pt")
        dump_tokenizer_spec(tiny_spec, tmp_path / "tokenizer_spec.json")
        manifest = {
            "kind": "masked",
            "graph": {"path": "model.pt"},
            "tokenizer_spec": {"path": "tokenizer_spec.json"},
            "max_sequence_length": 64,
        }
        (tmp_path / "manifest.json").write_text(json.dumps(manifest), encoding="utf-8")
        backend, spec = load_export(tmp_path)
        assert backend.capabilities == {"masked"}
        assert backend.max_sequence_length == 64
        assert spec == tiny_spec

    def test_missing_manifest(self, tmp_path):
        with pytest.raises(BackendError):
            load_export(tmp_path)

    def test_bad_graph_file(self, tmp_path):
        (tmp_path / "model.pt").write_text("not a graph")
        with pytest.raises(BackendError):
            NeuralBackend(
                NeuralBackendConfig(model_path=str(tmp_path / "model.pt"), kind="masked")
            )
