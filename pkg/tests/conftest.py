import random
import string

import pytest

from pllbench.aligner import (
    Casing,
    ContinuationConvention,
    SpecialTokens,
    TokenizerSpec,
    align,
)

# Vocabulary covering the multi-token-word walkthrough sentence plus filler
# ids so random fixtures have room.
TINY_VOCAB = {
    "[PAD]": 0,
    "[MASK]": 1,
    "[CLS]": 2,
    "[SEP]": 3,
    "[BOS]": 4,
    "The": 5,
    "travel": 6,
    "##er": 7,
    "lost": 8,
    "the": 9,
    "so": 10,
    "##uven": 11,
    "##ir": 12,
    "Hi": 13,
}
for _i in range(len(TINY_VOCAB), 32):
    TINY_VOCAB[f"##f{_i}"] = _i

SPECIALS = SpecialTokens(mask_id=1, cls_id=2, sep_id=3, pad_id=0, bos_id=4)


@pytest.fixture
def tiny_spec():
    return TokenizerSpec(
        vocab=dict(TINY_VOCAB),
        continuation=ContinuationConvention.PREFIX_CONTINUATION,
        special=SPECIALS,
        casing=Casing.CASED,
    )


def souvenir_tokens():
    """[CLS] The travel ##er lost the so ##uven ##ir [SEP] with offsets."""
    return [
        (2, 0, 0),
        (5, 0, 3),
        (6, 4, 10),
        (7, 10, 12),
        (8, 13, 17),
        (9, 18, 21),
        (10, 22, 24),
        (11, 24, 28),
        (12, 28, 30),
        (3, 30, 30),
    ]


SOUVENIR_TEXT = "The traveler lost the souvenir"


@pytest.fixture
def souvenir_sentence(tiny_spec):
    return align(SOUVENIR_TEXT, tiny_spec, souvenir_tokens())


def make_random_sentence(rng: random.Random, spec: TokenizerSpec,
                         max_words: int = 6, max_word_tokens: int = 4,
                         with_specials: bool = True):
    """Random aligned sentence: real text chunks, real offsets, random ids."""
    non_special = [i for i in spec.vocab.values() if i not in spec.special.defined_ids()]
    n_words = rng.randint(1, max_words)
    pieces_per_word = [rng.randint(1, max_word_tokens) for _ in range(n_words)]
    chunks = []
    for n_pieces in pieces_per_word:
        chunks.append(
            ["".join(rng.choices(string.ascii_lowercase, k=rng.randint(1, 4)))
             for _ in range(n_pieces)]
        )
    text = " ".join("".join(pieces) for pieces in chunks)
    triples = []
    if with_specials and spec.special.cls_id is not None:
        triples.append((spec.special.cls_id, 0, 0))
    cursor = 0
    for pieces in chunks:
        for piece in pieces:
            triples.append((rng.choice(non_special), cursor, cursor + len(piece)))
            cursor += len(piece)
        cursor += 1  # the joining space
    if with_specials and spec.special.sep_id is not None:
        triples.append((spec.special.sep_id, len(text), len(text)))
    return align(text, spec, triples)
