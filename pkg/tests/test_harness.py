import random

import pytest

from pllbench.backends import ReferenceBackend
from pllbench.engine import ErrorPolicy, score_batch
from pllbench.errors import EmptyInput, ShapeError
from pllbench.harness import (
    BenchmarkResult,
    PairRecord,
    ParadigmScore,
    diff_report,
    evaluate,
    read_pairs_jsonl,
    read_pairs_tsv,
    render_summary,
    result_from_json_dict,
    result_to_json_dict,
)
from pllbench.scheduler import MaskingStrategy
from pllbench.tokenization import HashWordTokenizer, synthetic_tokenizer_spec
from pllbench.aligner import align


FOUR_PAIRS = [
    PairRecord("the dog barks loudly", "the dog bark loudly", "agr_subject_verb", "agreement"),
    PairRecord("she keeps a souvenir", "she keep a souvenir", "agr_subject_verb", "agreement"),
    PairRecord("who did you see there", "who did you see it there", "island_wh", "islands"),
    PairRecord("time flies like arrows", "time flies like arrows", "tie_case", "ties"),
]


@pytest.fixture
def runtime():
    spec = synthetic_tokenizer_spec(vocab_size=128)
    return {
        "spec": spec,
        "tokenizer": HashWordTokenizer(spec),
        "backend": ReferenceBackend(vocab_size=128, seed=202),
    }


def hand_walked_expectation(pairs, strategy, rt):
    """Score each side independently and compare, no harness code involved."""
    corpus = [align(t, rt["spec"], rt["tokenizer"](t))
              for p in pairs for t in (p.sentence_good, p.sentence_bad)]
    reports = score_batch(corpus, strategy, rt["backend"]).ok_reports
    outcome = {}
    for i, p in enumerate(pairs):
        good = reports[2 * i].sentence_score
        bad = reports[2 * i + 1].sentence_score
        outcome[i] = good > bad
    return outcome


class TestEvaluate:
    def test_four_pair_fixture_matches_hand_walk(self, runtime):
        strategy = MaskingStrategy.WORD_L2R
        result = evaluate(FOUR_PAIRS, strategy, runtime["backend"],
                          tokenizer=runtime["tokenizer"], spec=runtime["spec"])
        expected = hand_walked_expectation(FOUR_PAIRS, strategy, runtime)
        assert result.total == 4
        assert result.correct == sum(expected.values())
        agr = result.paradigms["agr_subject_verb"]
        assert agr.total == 2
        assert agr.correct == expected[0] + expected[1]

    def test_identical_pair_counts_incorrect(self, runtime):
        result = evaluate([FOUR_PAIRS[3]], MaskingStrategy.ORIGINAL,
                          runtime["backend"], tokenizer=runtime["tokenizer"],
                          spec=runtime["spec"])
        assert result.paradigms["tie_case"].correct == 0
        assert result.paradigms["tie_case"].total == 1

    def test_pair_order_invariance(self, runtime):
        strategy = MaskingStrategy.ORIGINAL
        forward = evaluate(FOUR_PAIRS, strategy, runtime["backend"],
                           tokenizer=runtime["tokenizer"], spec=runtime["spec"])
        shuffled = list(FOUR_PAIRS)
        random.Random(5).shuffle(shuffled)
        backward = evaluate(shuffled, strategy, runtime["backend"],
                            tokenizer=runtime["tokenizer"], spec=runtime["spec"])
        assert result_to_json_dict(forward)["paradigms"] == \
            result_to_json_dict(backward)["paradigms"]

    def test_batch_size_invariance(self, runtime):
        strategy = MaskingStrategy.WHOLE_WORD
        results = [
            result_to_json_dict(
                evaluate(FOUR_PAIRS, strategy, runtime["backend"],
                         tokenizer=runtime["tokenizer"], spec=runtime["spec"],
                         batch_size=bs)
            )
            for bs in (1, 3, 64)
        ]
        assert results[0] == results[1] == results[2]

    def test_overall_is_pair_weighted(self):
        result = BenchmarkResult()
        result.paradigms["small"] = ParadigmScore(correct=1, total=2, phenomenon="a")
        result.paradigms["large"] = ParadigmScore(correct=8, total=8, phenomenon="b")
        # pair-weighted: 9/10, not mean(0.5, 1.0) = 0.75
        assert result.overall_accuracy == pytest.approx(0.9)

    def test_phenomenon_rollup(self, runtime):
        result = evaluate(FOUR_PAIRS, MaskingStrategy.ORIGINAL, runtime["backend"],
                          tokenizer=runtime["tokenizer"], spec=runtime["spec"])
        rollup = result.phenomena()
        assert rollup["agreement"].total == 2
        assert rollup["islands"].total == 1

    def test_empty_pairs_rejected(self, runtime):
        with pytest.raises(EmptyInput):
            evaluate([], MaskingStrategy.ORIGINAL, runtime["backend"],
                     tokenizer=runtime["tokenizer"], spec=runtime["spec"])

    def test_unreadable_record_skip_and_log(self, runtime):
        pairs = list(FOUR_PAIRS[:2])
        backend = ReferenceBackend(vocab_size=128, seed=202, max_sequence_length=8)
        result = evaluate(pairs + [PairRecord(
            "a very long sentence containing many separate words beyond any limit",
            "short one", "overflow_case")],
            MaskingStrategy.ORIGINAL, backend,
            tokenizer=runtime["tokenizer"], spec=runtime["spec"],
            error_policy=ErrorPolicy.SKIP_AND_LOG)
        assert result.total == 2
        assert len(result.errors) == 1
        assert result.errors[0].paradigm_id == "overflow_case"

    def test_empty_sentence_rejected_at_construction(self):
        with pytest.raises(EmptyInput):
            PairRecord("", "b", "p")
        with pytest.raises(EmptyInput):
            PairRecord("a", "b", " ")


class TestDiffReport:
    def make(self, rows):
        result = BenchmarkResult()
        for pid, correct, total in rows:
            result.paradigms[pid] = ParadigmScore(correct=correct, total=total)
        return result

    def test_identical_results_all_zero(self):
        a = self.make([("p1", 3, 4), ("p2", 1, 2)])
        report = diff_report(a, a)
        assert all(d.delta == 0 for d in report.deltas)
        assert report.overall_delta == 0

    def test_deltas_match_subtraction(self):
        a = self.make([("p1", 3, 4), ("p2", 1, 2)])
        b = self.make([("p1", 2, 4), ("p2", 2, 2)])
        report = diff_report(a, b)
        deltas = {d.paradigm_id: d.delta for d in report.deltas}
        assert deltas["p1"] == pytest.approx(0.25)
        assert deltas["p2"] == pytest.approx(-0.5)
        assert report.overall_delta == pytest.approx(4 / 6 - 4 / 6)
        # sorted by |delta| descending
        assert [d.paradigm_id for d in report.deltas] == ["p2", "p1"]

    def test_antisymmetry(self):
        a = self.make([("p1", 3, 4), ("p2", 1, 2)])
        b = self.make([("p1", 2, 4), ("p2", 2, 2)])
        ab = {d.paradigm_id: d.delta for d in diff_report(a, b).deltas}
        ba = {d.paradigm_id: d.delta for d in diff_report(b, a).deltas}
        assert all(ab[p] == -ba[p] for p in ab)

    def test_key_mismatch_rejected(self):
        a = self.make([("p1", 3, 4)])
        b = self.make([("p2", 3, 4)])
        with pytest.raises(ShapeError):
            diff_report(a, b)


class TestIO:
    def test_jsonl_reader(self, tmp_path):
        path = tmp_path / "pairs.jsonl"
        path.write_text(
            '{"sentence_good": "a b", "sentence_bad": "a c", "UID": "p1", '
            '"linguistics_term": "agreement"}\n',
            encoding="utf-8",
        )
        pairs = read_pairs_jsonl(path)
        assert pairs[0].paradigm_id == "p1"
        assert pairs[0].phenomenon == "agreement"

    def test_tsv_reader(self, tmp_path):
        path = tmp_path / "pairs.tsv"
        path.write_text("a b\ta c\tp1\na d\ta e\tp2\tisland\n", encoding="utf-8")
        pairs = read_pairs_tsv(path)
        assert len(pairs) == 2
        assert pairs[1].phenomenon == "island"

    def test_result_json_round_trip(self):
        result = BenchmarkResult()
        result.paradigms["p1"] = ParadigmScore(correct=3, total=4, phenomenon="x")
        doc = result_to_json_dict(result)
        back = result_from_json_dict(doc)
        assert result_to_json_dict(back) == doc

    def test_summary_marks_row_maximum(self):
        a = BenchmarkResult()
        a.paradigms["p1"] = ParadigmScore(correct=3, total=4)
        b = BenchmarkResult()
        b.paradigms["p1"] = ParadigmScore(correct=4, total=4)
        text = render_summary({"original": a, "word-l2r": b}, fmt="text")
        row = next(line for line in text.splitlines() if line.startswith("p1"))
        assert "100.0*" in row and "75.0*" not in row
        csv_out = render_summary({"original": a, "word-l2r": b}, fmt="csv")
        assert "p1,75.0,100.0*" in csv_out
        import json as json_mod

        doc = json_mod.loads(render_summary({"original": a, "word-l2r": b}, fmt="json"))
        assert doc["rows"][0]["max"] == ["word-l2r"]
