"""Sentence scoring under masked and causal language models.

Masked models have no chain-rule sentence likelihood; this package scores
sentences by summing per-token log-probabilities obtained under four
masking strategies (original single-token masking, within-word
left-to-right, whole-word, and sentence left-to-right), plus ordinary
chain-rule scoring for causal models. On top of the scorer sit a
minimal-pair benchmark harness, score diagnostics (length, frequency,
cross-model correlation), and a CLI.
"""

from .aligner import (
    AlignedSentence,
    Casing,
    ContinuationConvention,
    SpecialTokens,
    TokenizerSpec,
    align,
    dump_tokenizer_spec,
    load_tokenizer_spec,
    oov_ratio,
)
from .analysis import (
    CorrelationResult,
    FrequencyTable,
    cross_model_correlation,
    frequency_effect,
    length_effect,
    log_frequency,
    pearson,
)
from .backends import ReferenceBackend
from .engine import (
    Backend,
    BatchResult,
    ContextTemplate,
    ErrorPolicy,
    ScoreReport,
    TokenScore,
    WordScore,
    score_batch,
    score_sentence,
    score_word_in_context,
)
from .errors import (
    AlignmentError,
    BackendError,
    DegenerateInput,
    EmptyInput,
    InvalidStrategy,
    MalformedTokenization,
    PLLBenchError,
    SequenceTooLong,
    ShapeError,
    UnsupportedStrategy,
    VocabularyMismatch,
)
from .estimator import PairPreferenceEvaluator, SentenceScorer
from .harness import (
    BenchmarkResult,
    PairRecord,
    diff_report,
    evaluate,
)
from .scheduler import (
    InferenceRequest,
    MaskingStrategy,
    request_count,
    schedule,
)
from .tokenization import HashWordTokenizer, synthetic_tokenizer_spec

__version__ = "0.1.0"
