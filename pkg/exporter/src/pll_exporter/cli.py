"""Exporter command line."""

from __future__ import annotations

import sys

import click

from .export import ExportValidationError, export_model, validate_export


@click.group()
def cli():
    """Convert transformer checkpoints to the scoring engine's graph format."""


@cli.command()
@click.option("--model", "model_id", required=True,
              help="Checkpoint identifier or local checkpoint directory.")
@click.option("--kind", type=click.Choice(["masked", "causal"]), required=True)
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--probe-sentences", type=click.Path(exists=True), default=None,
              help="Extra sentences (one per line) to tokenize and fixture.")
@click.option("--half", is_flag=True, default=False,
              help="Export at half precision (parity tolerance widens to 5e-3).")
@click.option("--top-k", type=int, default=32, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
def export(model_id, kind, out_dir, probe_sentences, half, top_k, seed):
    """Export a checkpoint; writes graph, tokenizer spec, fixtures, manifest."""
    extra = ()
    if probe_sentences:
        with open(probe_sentences, encoding="utf-8") as fh:
            extra = tuple(line.strip() for line in fh if line.strip())
    manifest = export_model(model_id, kind, out_dir, probe_sentences=extra,
                            half=half, top_k=top_k, seed=seed)
    click.echo(
        f"exported {manifest['source_model']} ({kind}, "
        f"{manifest['settings']['precision']}) -> {out_dir} "
        f"[{manifest['fixtures']['count']} fixtures]"
    )


@cli.command()
@click.argument("export_dir", type=click.Path(exists=True))
def validate(export_dir):
    """Re-run the self-check on an existing export."""
    worst = validate_export(export_dir)
    click.echo(f"export valid; worst fixture deviation {worst:.3e}")


@cli.command("demo-checkpoint")
@click.option("--kind", type=click.Choice(["masked", "causal"]), required=True)
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--seed", type=int, default=0, show_default=True)
def demo_checkpoint(kind, out_dir, seed):
    """Write a tiny random offline checkpoint (pipeline demos and tests)."""
    from .tiny import create_demo_checkpoint

    path = create_demo_checkpoint(out_dir, kind, seed=seed)
    click.echo(f"demo {kind} checkpoint -> {path}")


def main(argv=None) -> int:
    try:
        cli.main(args=argv if argv is not None else sys.argv[1:],
                 standalone_mode=False)
        return 0
    except click.exceptions.Abort:
        return 130
    except click.ClickException as exc:
        click.echo(f"error: {exc.format_message()}", err=True)
        return 1
    except ExportValidationError as exc:
        click.echo(f"export validation failed: {exc}", err=True)
        return 2


if __name__ == "__main__":
    sys.exit(main())
