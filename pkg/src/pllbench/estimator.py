"""Estimator-style front door, so scoring composes with sklearn tooling.

``SentenceScorer`` is a stateless transformer: ``fit`` only resolves and
validates its configuration, ``transform`` maps sentences to their scores.
Hyperparameters follow sklearn conventions (constructor args stored as-is,
``get_params``/``set_params`` inherited, fitted state on ``_``-suffixed
attributes), so instances clone and grid-search cleanly.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from ._validation import check_batch_size, check_strategy, check_texts
from .aligner import TokenizerSpec, align
from .backends.reference import ReferenceBackend
from .engine import ErrorPolicy, ScoreReport, score_batch
from .harness import BenchmarkResult, PairRecord, evaluate
from .tokenization import HashWordTokenizer, synthetic_tokenizer_spec


def _resolve_backend(backend, seed, vocab_size):
    if backend == "reference":
        return ReferenceBackend(vocab_size=vocab_size, seed=seed)
    if hasattr(backend, "mlm_logprobs") or hasattr(backend, "causal_logprobs"):
        return backend
    raise ValueError(
        "backend must be 'reference' or an object implementing the Backend protocol"
    )


class SentenceScorer(BaseEstimator, TransformerMixin):
    """Score sentences under a masking strategy.

    Parameters
    ----------
    strategy : str or MaskingStrategy, default "word-l2r"
    backend : "reference" or a Backend instance
        The reference backend is constructed from ``seed``/``vocab_size``.
    tokenizer : callable or None
        text -> (id, start, end) triples. Defaults to the deterministic
        demo tokenizer over ``tokenizer_spec``.
    tokenizer_spec : TokenizerSpec or None
        Defaults to a synthetic spec of ``vocab_size`` entries.
    """

    def __init__(
        self,
        strategy="word-l2r",
        backend="reference",
        seed=0,
        vocab_size=2048,
        batch_size=32,
        tokenizer=None,
        tokenizer_spec=None,
        error_policy="fail-fast",
    ):
        self.strategy = strategy
        self.backend = backend
        self.seed = seed
        self.vocab_size = vocab_size
        self.batch_size = batch_size
        self.tokenizer = tokenizer
        self.tokenizer_spec = tokenizer_spec
        self.error_policy = error_policy

    def fit(self, X=None, y=None):
        """Resolve backend, tokenizer, and strategy; no data is consumed."""
        self.strategy_ = check_strategy(self.strategy)
        self.batch_size_ = check_batch_size(self.batch_size)
        self.backend_ = _resolve_backend(self.backend, self.seed, self.vocab_size)
        if self.tokenizer_spec is not None:
            self.spec_ = self.tokenizer_spec
        else:
            self.spec_ = synthetic_tokenizer_spec(vocab_size=self.vocab_size)
        if not isinstance(self.spec_, TokenizerSpec):
            raise TypeError("tokenizer_spec must be a TokenizerSpec")
        self.tokenizer_ = self.tokenizer or HashWordTokenizer(self.spec_)
        self.error_policy_ = ErrorPolicy(self.error_policy)
        return self

    def _ensure_fitted(self):
        if not hasattr(self, "backend_"):
            self.fit()

    def score_reports(self, X) -> list[ScoreReport]:
        """Full per-token/per-word reports, one per input sentence."""
        self._ensure_fitted()
        texts = check_texts(X)
        corpus = [align(t, self.spec_, self.tokenizer_(t)) for t in texts]
        result = score_batch(
            corpus,
            self.strategy_,
            self.backend_,
            batch_size=self.batch_size_,
            error_policy=ErrorPolicy.FAIL_FAST,
        )
        return list(result.ok_reports)

    def transform(self, X) -> np.ndarray:
        """Sentence scores as a float array of shape (n_sentences,)."""
        return np.array([r.sentence_score for r in self.score_reports(X)])

    def sentence_scores(self, X) -> np.ndarray:
        return self.transform(X)


class PairPreferenceEvaluator(BaseEstimator):
    """Forced-choice judge over minimal pairs, driven by a SentenceScorer.

    ``predict`` returns one boolean per pair (acceptable side preferred);
    ``score`` returns the forced-choice accuracy, so the estimator slots
    into sklearn model-selection utilities.
    """

    def __init__(self, scorer=None):
        self.scorer = scorer

    def fit(self, X=None, y=None):
        self.scorer_ = self.scorer if self.scorer is not None else SentenceScorer()
        self.scorer_.fit()
        return self

    def _ensure_fitted(self):
        if not hasattr(self, "scorer_"):
            self.fit()

    def predict(self, X) -> np.ndarray:
        self._ensure_fitted()
        pairs = [p if isinstance(p, PairRecord) else PairRecord(*p) for p in X]
        scorer = self.scorer_
        texts = [t for p in pairs for t in (p.sentence_good, p.sentence_bad)]
        scores = scorer.sentence_scores(texts)
        return scores[0::2] > scores[1::2]

    def score(self, X, y=None) -> float:
        return float(np.mean(self.predict(X)))

    def evaluate(self, X) -> BenchmarkResult:
        """Full per-paradigm benchmark aggregation."""
        self._ensure_fitted()
        pairs = [p if isinstance(p, PairRecord) else PairRecord(*p) for p in X]
        scorer = self.scorer_
        return evaluate(
            pairs,
            scorer.strategy_,
            scorer.backend_,
            tokenizer=scorer.tokenizer_,
            spec=scorer.spec_,
            batch_size=scorer.batch_size_,
            error_policy=scorer.error_policy_,
        )


__all__ = ["SentenceScorer", "PairPreferenceEvaluator"]
