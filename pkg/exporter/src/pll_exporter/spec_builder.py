"""Derive the scorer's tokenizer-spec JSON document from an HF tokenizer."""

from __future__ import annotations

WORD_START_MARKERS = ("Ġ", "▁")


def detect_continuation_convention(vocab: dict[str, int]) -> str:
    """WordPiece-style vocabularies mark continuations (##); byte-level BPE
    and sentencepiece mark word starts."""
    if any(token.startswith("##") for token in vocab):
        return "prefix-continuation"
    if any(token.startswith(WORD_START_MARKERS) for token in vocab):
        return "prefix-word-start"
    return "prefix-continuation"


def detect_cased(tokenizer) -> bool:
    lower = getattr(tokenizer, "do_lower_case", None)
    if lower is None:
        init = getattr(tokenizer, "init_kwargs", {}) or {}
        lower = init.get("do_lower_case", False)
    return not bool(lower)


def resolve_bos_id(tokenizer) -> int | None:
    """Causal scoring needs a sequence-start id; fall back through the usual
    candidates (explicit bos, then cls, then eos)."""
    for attr in ("bos_token_id", "cls_token_id", "eos_token_id"):
        value = getattr(tokenizer, attr, None)
        if value is not None:
            return int(value)
    return None


def build_spec_document(tokenizer, kind: str) -> dict:
    vocab = {str(token): int(i) for token, i in tokenizer.get_vocab().items()}
    pad_id = tokenizer.pad_token_id
    if pad_id is None:
        pad_id = tokenizer.eos_token_id
    if pad_id is None:
        raise ValueError("tokenizer defines neither a pad nor an eos token")
    doc = {
        "vocab": vocab,
        "continuation": detect_continuation_convention(vocab),
        "special": {
            "mask": _opt(tokenizer.mask_token_id),
            "cls": _opt(tokenizer.cls_token_id),
            "sep": _opt(tokenizer.sep_token_id),
            "bos": resolve_bos_id(tokenizer),
            "pad": int(pad_id),
        },
        "cased": detect_cased(tokenizer),
    }
    if kind == "masked":
        missing = [k for k in ("mask", "cls", "sep") if doc["special"][k] is None]
        if missing:
            raise ValueError(f"masked export needs {missing} token ids on the tokenizer")
    if kind == "causal" and doc["special"]["bos"] is None:
        raise ValueError("causal export needs a bos/cls/eos token id on the tokenizer")
    return doc


def verify_special_ids(doc: dict, tokenizer) -> None:
    """Cross-check the spec's special ids against the source tokenizer."""
    expectations = {
        "mask": tokenizer.mask_token_id,
        "cls": tokenizer.cls_token_id,
        "sep": tokenizer.sep_token_id,
    }
    for key, expected in expectations.items():
        if expected is not None and doc["special"][key] != int(expected):
            raise ValueError(
                f"special id mismatch for {key}: spec {doc['special'][key]} "
                f"vs tokenizer {expected}"
            )


def _opt(value) -> int | None:
    return None if value is None else int(value)
