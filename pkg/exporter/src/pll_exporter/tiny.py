"""Self-contained demo checkpoints.

Builds small randomly initialized BERT-style checkpoints (a masked LM and a
causal decoder) with a handcrafted WordPiece tokenizer, entirely offline.
They exercise the full export/replay pipeline and the scorer's neural path
without downloading anything; their scores carry no linguistic meaning.
"""

from __future__ import annotations

from pathlib import Path

import torch

WORDS = [
    "the", "a", "an", "my", "word", "is", "was", "it", "he", "she",
    "dog", "barks", "loudly", "time", "flies", "like", "arrow", "there",
    "lost", "keeps", "small", "broke", "window", "at", "dawn", "hi",
    "reading", "arrived", "overnight", "hunted", "an", "old",
]
PIECES = [
    "so", "##uven", "##ir", "man", "##uscript", "hool", "##igan",
    "carn", "##ival", "##ivore", "un", "##predict", "##able", "##s",
    "##ing", "##ed", "tra", "##vel", "##er", "quite", "often",
]
SPECIALS = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"]


def build_wordpiece_tokenizer(lowercase: bool = True):
    from tokenizers import Tokenizer
    from tokenizers.models import WordPiece
    from tokenizers.normalizers import BertNormalizer
    from tokenizers.pre_tokenizers import BertPreTokenizer
    from tokenizers.processors import TemplateProcessing
    from transformers import BertTokenizerFast

    tokens = SPECIALS + sorted(set(WORDS + PIECES) - set(SPECIALS))
    vocab = {token: i for i, token in enumerate(tokens)}
    backend = Tokenizer(WordPiece(vocab, unk_token="[UNK]",
                                  continuing_subword_prefix="##"))
    backend.normalizer = BertNormalizer(lowercase=lowercase)
    backend.pre_tokenizer = BertPreTokenizer()
    backend.post_processor = TemplateProcessing(
        single="[CLS] $A [SEP]",
        pair="[CLS] $A [SEP] $B [SEP]",
        special_tokens=[("[CLS]", vocab["[CLS]"]), ("[SEP]", vocab["[SEP]"])],
    )
    return BertTokenizerFast(
        tokenizer_object=backend,
        unk_token="[UNK]", pad_token="[PAD]", cls_token="[CLS]",
        sep_token="[SEP]", mask_token="[MASK]", do_lower_case=lowercase,
    )


def create_demo_checkpoint(out_dir: str | Path, kind: str, seed: int = 0) -> Path:
    """Write a loadable transformers checkpoint directory; returns its path."""
    from transformers import BertConfig, BertForMaskedLM, BertLMHeadModel

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    tokenizer = build_wordpiece_tokenizer()
    torch.manual_seed(seed)
    config = BertConfig(
        vocab_size=len(tokenizer.get_vocab()),
        hidden_size=32,
        num_hidden_layers=2,
        num_attention_heads=2,
        intermediate_size=64,
        max_position_embeddings=64,
        is_decoder=(kind == "causal"),
    )
    if kind == "masked":
        model = BertForMaskedLM(config)
    elif kind == "causal":
        model = BertLMHeadModel(config)
    else:
        raise ValueError(f"unknown kind {kind!r}")
    model.eval()
    model.save_pretrained(out)
    tokenizer.save_pretrained(out)
    return out
