"""Checkpoint-to-interchange exporter.

Converts a pretrained masked or causal transformer checkpoint into the
scoring engine's on-disk interface: a traced graph with the signature
(input_ids, attention_mask) -> logits, a tokenizer-spec JSON, golden parity
fixtures computed with the source framework, and a manifest tying it all
together with content hashes.
"""

from .export import ExportValidationError, export_model, validate_export

__version__ = "0.1.0"
__all__ = ["export_model", "validate_export", "ExportValidationError"]
