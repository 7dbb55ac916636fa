"""Backend executing an exported transformer graph.

The interchange format is a traced TorchScript module with the signature
``(input_ids [batch, seq], attention_mask [batch, seq]) -> logits
[batch, seq, vocab]``. Exports are produced by the exporter tool together
with a manifest JSON naming the graph file, the tokenizer spec, and the
model kind (masked or causal); :func:`load_export` wires all of that up.

Requires the ``torch`` extra.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import BackendError, SequenceTooLong, UnsupportedStrategy


def _torch():
    try:
        import torch
    except ImportError as exc:  # pragma: no cover
        raise BackendError(
            "the neural backend needs the 'torch' extra (pip install pllbench[neural])"
        ) from exc
    return torch


@dataclass(frozen=True)
class NeuralBackendConfig:
    model_path: str
    kind: str  # "masked" | "causal"
    tokenizer_spec_path: str | None = None
    threads: int = 0  # 0 = leave the runtime default
    device: str = "cpu"
    max_batch: int = 64
    max_sequence_length: int = 512

    def __post_init__(self):
        if self.kind not in ("masked", "causal"):
            raise UnsupportedStrategy(f"unknown model kind {self.kind!r}")


class NeuralBackend:
    """Runs the exported graph and extracts log-softmax rows."""

    def __init__(self, config: NeuralBackendConfig):
        torch = _torch()
        self.config = config
        self.capabilities = frozenset({config.kind})
        self.max_batch = config.max_batch
        self.max_sequence_length = config.max_sequence_length
        # a single TorchScript session is not re-entrant by contract
        self.supports_concurrent_use = False
        if config.threads > 0:
            torch.set_num_threads(config.threads)
        try:
            self._module = torch.jit.load(config.model_path, map_location=config.device)
            self._module.eval()
        except Exception as exc:
            raise BackendError(
                f"could not load exported graph {config.model_path!r}: {exc}"
            ) from exc

    def _logits(self, input_ids: np.ndarray, attention_mask: np.ndarray):
        torch = _torch()
        ids = np.asarray(input_ids, dtype=np.int64)
        mask = np.asarray(attention_mask, dtype=np.int64)
        if ids.ndim != 2 or mask.shape != ids.shape:
            raise BackendError("expected [batch, seq] input arrays")
        if ids.shape[1] > self.max_sequence_length:
            raise SequenceTooLong(
                f"sequence length {ids.shape[1]} exceeds backend limit "
                f"{self.max_sequence_length}"
            )
        try:
            with torch.inference_mode():
                out = self._module(torch.from_numpy(ids), torch.from_numpy(mask))
            if isinstance(out, (tuple, list)):
                out = out[0]
            if out.ndim != 3:
                raise BackendError(
                    f"graph returned shape {tuple(out.shape)}, expected [batch, seq, vocab]"
                )
            return out.to(torch.float32)
        except BackendError:
            raise
        except Exception as exc:
            raise BackendError(f"graph execution failed: {exc}") from exc

    def mlm_logprobs(self, input_ids, attention_mask, target_positions) -> np.ndarray:
        torch = _torch()
        if "masked" not in self.capabilities:
            raise UnsupportedStrategy("this export is not a masked model")
        logits = self._logits(input_ids, attention_mask)
        targets = torch.as_tensor(np.asarray(target_positions, dtype=np.int64))
        rows = logits[torch.arange(logits.shape[0]), targets]
        return torch.log_softmax(rows, dim=-1).double().numpy()

    def causal_logprobs(self, input_ids, attention_mask) -> np.ndarray:
        torch = _torch()
        if "causal" not in self.capabilities:
            raise UnsupportedStrategy("this export is not a causal model")
        logits = self._logits(input_ids, attention_mask)
        return torch.log_softmax(logits, dim=-1).double().numpy()


def load_export(export_dir: str | Path, *, threads: int = 0, device: str = "cpu"):
    """Open an export directory: returns (backend, tokenizer_spec).

    The directory must hold a ``manifest.json`` as written by the exporter,
    with graph/tokenizer-spec paths relative to the directory.
    """
    from ..aligner import load_tokenizer_spec

    export_dir = Path(export_dir)
    manifest_path = export_dir / "manifest.json"
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise BackendError(f"cannot read export manifest {manifest_path}: {exc}") from exc
    try:
        config = NeuralBackendConfig(
            model_path=str(export_dir / manifest["graph"]["path"]),
            kind=manifest["kind"],
            tokenizer_spec_path=str(export_dir / manifest["tokenizer_spec"]["path"]),
            threads=threads,
            device=device,
            max_sequence_length=int(manifest.get("max_sequence_length", 512)),
        )
    except KeyError as exc:
        raise BackendError(f"export manifest missing field: {exc}") from exc
    backend = NeuralBackend(config)
    spec = load_tokenizer_spec(config.tokenizer_spec_path)
    return backend, spec
