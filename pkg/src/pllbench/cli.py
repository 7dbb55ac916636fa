"""Command-line interface.

One executable, six scoring/analysis subcommands plus ``diff``. Exit codes:
0 success, 1 input or configuration error, 2 backend error. All reference-
backend behavior is seed-parameterized; reruns with identical configuration
write byte-identical files.
"""

from __future__ import annotations

import dataclasses
import json
import os
import sys
from pathlib import Path

import click

from . import analysis as analysis_mod
from . import harness as harness_mod
from .aligner import (
    AlignedSentence,
    TokenizerSpec,
    align,
    load_tokenizer_spec,
    oov_ratio,
    read_tokenization_fixtures,
)
from .engine import (
    ContextTemplate,
    ErrorPolicy,
    score_batch,
    score_word_in_context,
    write_score_reports_jsonl,
    write_scores_csv,
)
from .errors import BackendError, EmptyInput, InvalidStrategy, PLLBenchError
from .scheduler import MaskingStrategy, schedule_debug_records
from .tokenization import HashWordTokenizer, hf_tokenizer, synthetic_tokenizer_spec

STRATEGY_NAMES = ", ".join(s.value for s in MaskingStrategy)


@dataclasses.dataclass
class RunConfig:
    """Resolved per-invocation runtime: one backend, one tokenizer, one strategy."""

    backend: object
    spec: TokenizerSpec
    tokenizer: object
    strategy: MaskingStrategy
    batch_size: int
    error_policy: ErrorPolicy
    threads: int


def _default_threads() -> int:
    raw = os.environ.get("PLLBENCH_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def backend_options(f):
    opts = [
        click.option("--backend", default="reference", show_default=True,
                     help="Backend: 'reference' (seeded) or 'neural' (exported graph)."),
        click.option("--seed", type=int, default=0, show_default=True,
                     help="Reference backend seed."),
        click.option("--vocab-size", type=int, default=2048, show_default=True,
                     help="Reference backend vocabulary size (ignored when a tokenizer spec is given)."),
        click.option("--model", "model_path", type=click.Path(), default=None,
                     help="Neural backend: export directory (with manifest.json) or graph file."),
        click.option("--model-kind", type=click.Choice(["masked", "causal"]), default=None,
                     help="Model kind when --model points at a bare graph file."),
        click.option("--tokenizer-spec", "tokenizer_spec_path", type=click.Path(), default=None,
                     help="Tokenizer spec JSON (defaults to the export's spec, or a synthetic one)."),
        click.option("--hf-tokenizer", "hf_tokenizer_dir", type=click.Path(), default=None,
                     help="Tokenize plain text with a saved transformers tokenizer."),
        click.option("--strategy", default="word-l2r", show_default=True,
                     help=f"Scoring strategy: {STRATEGY_NAMES}."),
        click.option("--batch-size", type=int, default=32, show_default=True),
        click.option("--error-policy", type=click.Choice([p.value for p in ErrorPolicy]),
                     default="fail-fast", show_default=True),
        click.option("--threads", type=int, default=None,
                     help="Backend call parallelism (default: PLLBENCH_THREADS or 1)."),
    ]
    for opt in reversed(opts):
        f = opt(f)
    return f


def build_runtime(
    *,
    backend: str,
    seed: int,
    vocab_size: int,
    model_path: str | None,
    model_kind: str | None,
    tokenizer_spec_path: str | None,
    hf_tokenizer_dir: str | None,
    strategy: str,
    batch_size: int,
    error_policy: str,
    threads: int | None,
) -> RunConfig:
    strat = MaskingStrategy.from_name(strategy)
    threads = threads if threads is not None else _default_threads()
    if batch_size < 1:
        raise EmptyInput("--batch-size must be >= 1")

    if backend == "reference":
        if model_path is not None:
            raise InvalidStrategy("--model is only valid with --backend neural")
        if tokenizer_spec_path is not None:
            spec = load_tokenizer_spec(tokenizer_spec_path)
        else:
            spec = synthetic_tokenizer_spec(vocab_size=vocab_size)
        from .backends import ReferenceBackend

        backend_obj = ReferenceBackend(vocab_size=spec.vocab_size, seed=seed)
    elif backend == "neural":
        if model_path is None:
            raise InvalidStrategy("--backend neural requires --model")
        from .backends import NeuralBackend, NeuralBackendConfig, load_export

        path = Path(model_path)
        if path.is_dir():
            backend_obj, spec = load_export(path, threads=threads or 0)
            if tokenizer_spec_path is not None:
                spec = load_tokenizer_spec(tokenizer_spec_path)
        else:
            if model_kind is None:
                raise InvalidStrategy("--model-kind is required with a bare graph file")
            if tokenizer_spec_path is None:
                raise InvalidStrategy("--tokenizer-spec is required with a bare graph file")
            spec = load_tokenizer_spec(tokenizer_spec_path)
            backend_obj = NeuralBackend(
                NeuralBackendConfig(
                    model_path=str(path), kind=model_kind,
                    tokenizer_spec_path=tokenizer_spec_path, threads=threads or 0,
                )
            )
    else:
        raise InvalidStrategy(f"unknown backend {backend!r} (expected reference or neural)")

    if hf_tokenizer_dir is not None:
        tokenizer = hf_tokenizer(hf_tokenizer_dir)
    else:
        tokenizer = HashWordTokenizer(spec)

    if strat.is_masked and "masked" not in backend_obj.capabilities:
        raise InvalidStrategy(f"strategy {strat.value!r} needs a masked backend")
    if not strat.is_masked and "causal" not in backend_obj.capabilities:
        raise InvalidStrategy("strategy 'causal' needs a causal backend")

    return RunConfig(
        backend=backend_obj,
        spec=spec,
        tokenizer=tokenizer,
        strategy=strat,
        batch_size=batch_size,
        error_policy=ErrorPolicy(error_policy),
        threads=threads,
    )


def _load_corpus(
    in_path: str, rc: RunConfig
) -> tuple[list[AlignedSentence], list[dict]]:
    """Read sentences (plain text, one per line, or pre-tokenized JSONL)."""
    path = Path(in_path)
    aligned: list[AlignedSentence] = []
    input_errors: list[dict] = []
    if path.suffix == ".jsonl":
        records = read_tokenization_fixtures(path)
    else:
        with open(path, encoding="utf-8") as fh:
            lines = [line.rstrip("\n") for line in fh]
        records = [(line, None) for line in lines if line.strip()]
    for index, (text, tokens) in enumerate(records):
        try:
            if tokens is None:
                tokens = rc.tokenizer(text)
            aligned.append(align(text, rc.spec, tokens))
        except PLLBenchError as exc:
            if rc.error_policy is ErrorPolicy.FAIL_FAST:
                raise
            input_errors.append(
                {"index": index, "text": text, "kind": type(exc).__name__,
                 "message": str(exc)}
            )
    if not aligned and not input_errors:
        raise EmptyInput(f"no sentences in {in_path}")
    return aligned, input_errors


def _emit_errors(errors: list[dict]) -> None:
    for err in errors:
        click.echo(json.dumps(err, ensure_ascii=False, sort_keys=True), err=True)


@click.group()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None,
              help="JSON file of default option values; explicit flags override.")
@click.option("--json-errors", is_flag=True, default=False,
              help="Mirror fatal errors to stderr as one JSON object.")
@click.pass_context
def cli(ctx, config_path, json_errors):
    """Sentence scoring under masked/causal language models, with benchmarks
    and score diagnostics."""
    ctx.ensure_object(dict)
    ctx.obj["json_errors"] = json_errors
    if config_path:
        with open(config_path, encoding="utf-8") as fh:
            raw = json.load(fh)
        if not isinstance(raw, dict):
            raise click.UsageError("--config must hold a JSON object")
        defaults = {key.replace("-", "_"): value for key, value in raw.items()}
        ctx.default_map = {name: defaults for name in cli.commands}


@cli.command()
@click.option("--in", "in_path", required=True, type=click.Path(exists=True),
              help="Sentences: plain text (one per line) or tokenized JSONL.")
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--csv", "csv_path", type=click.Path(), default=None,
              help="Also write (text, strategy, score) CSV here.")
@backend_options
def score(in_path, out_path, csv_path, **backend_kwargs):
    """Score sentences; writes one JSON report line per sentence."""
    rc = build_runtime(**backend_kwargs)
    corpus, input_errors = _load_corpus(in_path, rc)
    result = score_batch(
        corpus, rc.strategy, rc.backend,
        batch_size=rc.batch_size, error_policy=rc.error_policy, threads=rc.threads,
    )
    reports = result.ok_reports
    write_score_reports_jsonl(reports, out_path)
    if csv_path:
        write_scores_csv(reports, csv_path)
    errors = input_errors + [dataclasses.asdict(e) for e in result.errors]
    _emit_errors(errors)
    click.echo(
        f"scored {len(reports)}/{len(reports) + len(errors)} sentences "
        f"({rc.strategy.value}) -> {out_path}"
    )


@cli.command("score-words")
@click.option("--words", "words_path", required=True, type=click.Path(exists=True),
              help="One word per line.")
@click.option("--context", "context_name",
              type=click.Choice([t.value for t in ContextTemplate]),
              default="my-word-is", show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
@backend_options
def score_words(words_path, context_name, out_path, **backend_kwargs):
    """Score single words inside a neutral carrier context."""
    rc = build_runtime(**backend_kwargs)
    template = ContextTemplate(context_name)
    with open(words_path, encoding="utf-8") as fh:
        words = [line.strip() for line in fh if line.strip()]
    if not words:
        raise EmptyInput(f"no words in {words_path}")
    rows = []
    for word in words:
        value = score_word_in_context(
            word, template, rc.strategy, rc.backend,
            tokenizer=rc.tokenizer, spec=rc.spec, batch_size=rc.batch_size,
        )
        rows.append({"word": word, "context": template.value,
                     "strategy": rc.strategy.value, "score": value})
    with open(out_path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False))
            fh.write("\n")
    click.echo(f"scored {len(rows)} words ({rc.strategy.value}, {template.value}) -> {out_path}")


@cli.command()
@click.option("--pairs", "pairs_path", required=True, type=click.Path(exists=True),
              help="Minimal pairs: JSONL (sentence_good/sentence_bad/UID) or TSV.")
@click.option("--out", "out_path", required=True, type=click.Path(),
              help="Benchmark result JSON (feed two of these to `diff`).")
@click.option("--summary", "summary_path", type=click.Path(), default=None)
@click.option("--summary-format", type=click.Choice(["text", "csv", "json"]), default="text",
              show_default=True)
@backend_options
def benchmark(pairs_path, out_path, summary_path, summary_format, **backend_kwargs):
    """Forced-choice accuracy over a minimal-pair set."""
    rc = build_runtime(**backend_kwargs)
    path = Path(pairs_path)
    if path.suffix == ".jsonl":
        pairs = harness_mod.read_pairs_jsonl(path)
    else:
        pairs = harness_mod.read_pairs_tsv(path)
    if not pairs:
        raise EmptyInput(f"no pairs in {pairs_path}")
    result = harness_mod.evaluate(
        pairs, rc.strategy, rc.backend,
        tokenizer=rc.tokenizer, spec=rc.spec,
        batch_size=rc.batch_size, error_policy=rc.error_policy,
    )
    harness_mod.write_result_json(result, out_path)
    if summary_path:
        harness_mod.write_summary({rc.strategy.value: result}, summary_path, summary_format)
    _emit_errors([dataclasses.asdict(e) for e in result.errors])
    click.echo(
        f"overall accuracy {result.overall_accuracy:.4f} "
        f"({result.correct}/{result.total} pairs, {rc.strategy.value}) -> {out_path}"
    )


@cli.command()
@click.argument("result_a", type=click.Path(exists=True))
@click.argument("result_b", type=click.Path(exists=True))
@click.option("--out", "out_path", type=click.Path(), default=None,
              help="Also write the deltas as CSV.")
def diff(result_a, result_b, out_path):
    """Per-paradigm accuracy deltas between two benchmark result files."""
    a = harness_mod.read_result_json(result_a)
    b = harness_mod.read_result_json(result_b)
    report = harness_mod.diff_report(a, b)
    for d in report.deltas:
        click.echo(
            f"{d.paradigm_id}\t{d.delta:+.4f}\t({d.accuracy_a:.4f} vs {d.accuracy_b:.4f})"
        )
    click.echo(f"OVERALL\t{report.overall_delta:+.4f}")
    if out_path:
        harness_mod.write_diff_csv(report, out_path)


@cli.command()
@click.option("--kind", type=click.Choice(["length", "frequency", "cross-model"]),
              required=True)
@click.option("--in", "in_path", required=True, type=click.Path(exists=True),
              help="Corpus (length, cross-model) or word list (frequency).")
@click.option("--out-dir", required=True, type=click.Path())
@click.option("--freq-table", "freq_table_path", type=click.Path(exists=True), default=None,
              help="word<TAB>count table (frequency analysis).")
@click.option("--context", "context_name",
              type=click.Choice([t.value for t in ContextTemplate]),
              default="my-word-is", show_default=True)
@click.option("--strategy-b", default=None, help="Second strategy (cross-model).")
@click.option("--seed-b", type=int, default=None, help="Second reference seed (cross-model).")
@click.option("--model-b", "model_b_path", type=click.Path(), default=None,
              help="Second export directory (cross-model).")
@backend_options
def analyze(kind, in_path, out_dir, freq_table_path, context_name,
            strategy_b, seed_b, model_b_path, **backend_kwargs):
    """Score diagnostics; writes report JSON, points CSV, and an SVG scatter."""
    rc = build_runtime(**backend_kwargs)
    if kind == "length":
        corpus, _ = _load_corpus(in_path, rc)
        reports = score_batch(
            corpus, rc.strategy, rc.backend,
            batch_size=rc.batch_size, threads=rc.threads,
        ).ok_reports
        result, points = analysis_mod.length_effect_from_reports(reports)
        doc = analysis_mod.emit_analysis_report("length", result, points, out_dir)
    elif kind == "frequency":
        if freq_table_path is None:
            raise EmptyInput("--freq-table is required for the frequency analysis")
        table = analysis_mod.load_frequency_tsv(freq_table_path)
        with open(in_path, encoding="utf-8") as fh:
            words = [line.strip() for line in fh if line.strip()]
        triples = analysis_mod.frequency_effect_points(
            words, table, ContextTemplate(context_name), rc.strategy, rc.backend,
            tokenizer=rc.tokenizer, spec=rc.spec, batch_size=rc.batch_size,
        )
        points = [(lf, score) for _, lf, score in triples]
        result = analysis_mod.pearson(
            [p[0] for p in points], [p[1] for p in points],
            x_label="log_frequency", y_label="word_score",
        )
        doc = analysis_mod.emit_analysis_report("frequency", result, points, out_dir)
    else:  # cross-model
        if strategy_b is None:
            raise InvalidStrategy("--strategy-b is required for the cross-model analysis")
        kwargs_b = dict(backend_kwargs)
        kwargs_b["strategy"] = strategy_b
        if model_b_path is not None:
            kwargs_b.update(backend="neural", model_path=model_b_path, model_kind=None,
                            tokenizer_spec_path=None)
        else:
            kwargs_b.update(backend="reference", model_path=None,
                            seed=seed_b if seed_b is not None else backend_kwargs["seed"])
        rc_b = build_runtime(**kwargs_b)
        corpus, _ = _load_corpus(in_path, rc)
        corpus_b, _ = (
            (corpus, None) if rc_b.tokenizer is rc.tokenizer
            else _load_corpus(in_path, rc_b)
        )
        reports_a = score_batch(corpus, rc.strategy, rc.backend,
                                batch_size=rc.batch_size).ok_reports
        reports_b = score_batch(corpus_b, rc_b.strategy, rc_b.backend,
                                batch_size=rc_b.batch_size).ok_reports
        points = [(a.sentence_score, b.sentence_score)
                  for a, b in zip(reports_a, reports_b)]
        result = analysis_mod.pearson(
            [p[0] for p in points], [p[1] for p in points],
            x_label=f"{rc.strategy.value}_score", y_label=f"{rc_b.strategy.value}_score",
        )
        doc = analysis_mod.emit_analysis_report("cross-model", result, points, out_dir)
    click.echo(f"{doc['analysis']}: r={doc['r']:+.4f} (n={doc['n']}) -> {out_dir}")


@cli.command("schedule-debug")
@click.option("--in", "in_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", type=click.Path(), default=None,
              help="JSONL destination (default: stdout).")
@backend_options
def schedule_debug(in_path, out_path, **backend_kwargs):
    """Emit each sentence's masked requests as {"target", "masked"} lines."""
    rc = build_runtime(**backend_kwargs)
    corpus, _ = _load_corpus(in_path, rc)
    lines = []
    for sentence in corpus:
        for record in schedule_debug_records(sentence, rc.strategy):
            lines.append(json.dumps(record))
    if out_path:
        Path(out_path).write_text("\n".join(lines) + "\n", encoding="utf-8")
        click.echo(f"wrote {len(lines)} requests -> {out_path}")
    else:
        for line in lines:
            click.echo(line)


@cli.command()
@click.option("--in", "in_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", type=click.Path(), default=None,
              help="Write {oov_ratio, split_words, total_words} JSON here.")
@backend_options
def oov(in_path, out_path, **backend_kwargs):
    """Fraction of words the tokenizer splits into two or more tokens."""
    rc = build_runtime(**backend_kwargs)
    corpus, _ = _load_corpus(in_path, rc)
    ratio = oov_ratio(corpus)
    total = sum(len(s.word_spans) for s in corpus)
    split = sum(1 for s in corpus for a, b in s.word_spans if b - a >= 2)
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            json.dump({"oov_ratio": ratio, "split_words": split, "total_words": total},
                      fh, indent=2, sort_keys=True)
            fh.write("\n")
    click.echo(f"oov ratio {ratio:.4f} ({split}/{total} words)")


def main(argv=None) -> int:
    args = list(argv) if argv is not None else sys.argv[1:]
    json_errors = "--json-errors" in args

    def report(kind: str, message: str, code: int) -> int:
        click.echo(f"error: {message}", err=True)
        if json_errors:
            click.echo(json.dumps({"error": kind, "message": message}, sort_keys=True),
                       err=True)
        return code

    try:
        cli.main(args=args, standalone_mode=False)
        return 0
    except click.exceptions.Abort:
        return 130
    except click.exceptions.UsageError as exc:
        if exc.ctx is not None:
            click.echo(exc.ctx.get_usage(), err=True)
        return report("UsageError", exc.format_message(), 1)
    except click.ClickException as exc:
        return report(type(exc).__name__, exc.format_message(), 1)
    except BackendError as exc:
        return report("BackendError", str(exc), 2)
    except PLLBenchError as exc:
        return report(type(exc).__name__, str(exc), 1)


if __name__ == "__main__":
    sys.exit(main())
