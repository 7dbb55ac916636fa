import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pllbench.errors import EmptyInput, InvalidStrategy
from pllbench.scheduler import (
    MASKED_STRATEGIES,
    MaskingStrategy,
    request_count,
    schedule,
    schedule_debug_records,
)

from conftest import make_random_sentence


class TestStrategyNames:
    def test_cli_names_round_trip(self):
        for s in MaskingStrategy:
            assert MaskingStrategy.from_name(s.value) is s

    def test_unknown_name_rejected(self):
        with pytest.raises(InvalidStrategy):
            MaskingStrategy.from_name("word-r2l")


class TestScheduleShapes:
    def test_multi_token_word_masked_sets(self, souvenir_sentence):
        # the three-token word sits at positions 6, 7, 8; target the middle
        by_target = {
            s: {r.target_position: set(r.masked_positions)
                for r in schedule(souvenir_sentence, s)}
            for s in MASKED_STRATEGIES
        }
        assert by_target[MaskingStrategy.ORIGINAL][7] == {7}
        assert by_target[MaskingStrategy.WORD_L2R][7] == {7, 8}
        assert by_target[MaskingStrategy.WHOLE_WORD][7] == {6, 7, 8}

    def test_single_token_word_is_strategy_invariant(self, souvenir_sentence):
        # "lost" is position 4, a one-token word
        for strategy in (MaskingStrategy.ORIGINAL, MaskingStrategy.WORD_L2R,
                         MaskingStrategy.WHOLE_WORD):
            reqs = {r.target_position: r for r in schedule(souvenir_sentence, strategy)}
            assert set(reqs[4].masked_positions) == {4}

    def test_sentence_l2r_suffix_on_five_token_sentence(self, tiny_spec):
        rng = random.Random(0)
        while True:
            s = make_random_sentence(rng, tiny_spec, with_specials=False)
            if s.num_scored_tokens == 5:
                break
        reqs = schedule(s, MaskingStrategy.SENTENCE_L2R)
        assert set(reqs[2].masked_positions) == {2, 3, 4}

    def test_causal_rejected(self, souvenir_sentence):
        with pytest.raises(InvalidStrategy):
            schedule(souvenir_sentence, MaskingStrategy.CAUSAL)

    def test_empty_sentence_rejected(self, tiny_spec):
        from pllbench.aligner import align

        s = align("x", tiny_spec, [(2, 0, 0), (3, 1, 1)])
        with pytest.raises(EmptyInput):
            schedule(s, MaskingStrategy.ORIGINAL)

    def test_requests_in_left_to_right_target_order(self, souvenir_sentence):
        for strategy in MASKED_STRATEGIES:
            targets = [r.target_position for r in schedule(souvenir_sentence, strategy)]
            assert targets == sorted(targets)
            assert targets == list(souvenir_sentence.scored_positions)

    def test_target_id_matches_base_token(self, souvenir_sentence):
        for strategy in MASKED_STRATEGIES:
            for r in schedule(souvenir_sentence, strategy):
                assert r.target_id == souvenir_sentence.token_ids[r.target_position]
                assert r.target_position in r.masked_positions


class TestRequestCount:
    def test_count_equals_scored_tokens(self, souvenir_sentence):
        for strategy in MASKED_STRATEGIES:
            assert request_count(souvenir_sentence, strategy) == 8

    def test_single_word_three_subtokens_whole_word(self, tiny_spec):
        from pllbench.aligner import align

        s = align("souvenir", tiny_spec,
                  [(2, 0, 0), (10, 0, 2), (11, 2, 6), (12, 6, 8), (3, 8, 8)])
        assert request_count(s, MaskingStrategy.WHOLE_WORD) == 3

    def test_count_matches_materialized_schedule(self, tiny_spec):
        rng = random.Random(5)
        for _ in range(25):
            s = make_random_sentence(rng, tiny_spec)
            for strategy in MASKED_STRATEGIES:
                assert request_count(s, strategy) == len(schedule(s, strategy))

    def test_causal_rejected(self, souvenir_sentence):
        with pytest.raises(InvalidStrategy):
            request_count(souvenir_sentence, MaskingStrategy.CAUSAL)


@st.composite
def random_sentences(draw):
    seed = draw(st.integers(min_value=0, max_value=10**9))
    with_specials = draw(st.booleans())
    from conftest import SPECIALS, TINY_VOCAB
    from pllbench.aligner import Casing, ContinuationConvention, TokenizerSpec

    spec = TokenizerSpec(
        vocab=dict(TINY_VOCAB),
        continuation=ContinuationConvention.PREFIX_CONTINUATION,
        special=SPECIALS,
        casing=Casing.CASED,
    )
    return make_random_sentence(random.Random(seed), spec, with_specials=with_specials)


class TestScheduleLaws:
    @settings(max_examples=200, deadline=None)
    @given(s=random_sentences(), strategy=st.sampled_from(MASKED_STRATEGIES))
    def test_one_request_per_scored_token(self, s, strategy):
        assert len(schedule(s, strategy)) == s.num_scored_tokens

    @settings(max_examples=200, deadline=None)
    @given(s=random_sentences(), strategy=st.sampled_from(MASKED_STRATEGIES))
    def test_masked_set_shapes(self, s, strategy):
        spans = {t: span for span in s.word_spans
                 for t in range(span[0], span[1])}
        scored_end = s.scored_positions.stop
        for r in schedule(s, strategy):
            start, end = spans[r.target_position]
            masked = set(r.masked_positions)
            if strategy is MaskingStrategy.ORIGINAL:
                assert masked == {r.target_position}
            elif strategy is MaskingStrategy.WORD_L2R:
                assert masked == set(range(r.target_position, end))
            elif strategy is MaskingStrategy.WHOLE_WORD:
                assert masked == set(range(start, end))
            else:
                assert masked == set(range(r.target_position, scored_end))

    @settings(max_examples=200, deadline=None)
    @given(s=random_sentences(), strategy=st.sampled_from(MASKED_STRATEGIES))
    def test_special_positions_never_masked(self, s, strategy):
        scored = set(s.scored_positions)
        for r in schedule(s, strategy):
            assert set(r.masked_positions) <= scored

    @settings(max_examples=100, deadline=None)
    @given(seed=st.integers(min_value=0, max_value=10**9))
    def test_single_token_words_collapse_strategies(self, seed):
        from conftest import SPECIALS, TINY_VOCAB
        from pllbench.aligner import Casing, ContinuationConvention, TokenizerSpec

        spec = TokenizerSpec(
            vocab=dict(TINY_VOCAB),
            continuation=ContinuationConvention.PREFIX_CONTINUATION,
            special=SPECIALS,
            casing=Casing.CASED,
        )
        s = make_random_sentence(random.Random(seed), spec, max_word_tokens=1)
        baseline = schedule(s, MaskingStrategy.ORIGINAL)
        for strategy in (MaskingStrategy.WORD_L2R, MaskingStrategy.WHOLE_WORD):
            assert schedule(s, strategy) == baseline


def test_debug_records_shape(souvenir_sentence):
    records = schedule_debug_records(souvenir_sentence, MaskingStrategy.WORD_L2R)
    assert records[6] == {"target": 7, "masked": [7, 8]}
    assert all(set(r) == {"target", "masked"} for r in records)
