"""Command-line interface.

Subcommands: validate-corpus, run, score, report, simulate-cost.
Exit codes: 0 success, 1 validation error, 2 runtime failure.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .corpus import load_corpus
from .costing import DocShape, compare_strategies, comparison_csv
from .errors import (
    ConfigError,
    CorpusError,
    DocturnError,
    GatewayError,
    ResumeMismatchError,
)
from .runner.config import load_run_config
from .runner.executor import execute, load_artifacts, load_testsets
from .runner.reports import emit_reports

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2


@click.group()
def main() -> None:
    """Document-level translation experiment harness."""


@main.command("validate-corpus")
@click.argument("path", type=click.Path(exists=True, dir_okay=False))
def validate_corpus(path: str) -> None:
    """Load a JSONL test set and report its shape."""
    try:
        testset = load_corpus(path)
    except CorpusError as exc:
        click.echo(f"invalid corpus: {exc}", err=True)
        sys.exit(EXIT_VALIDATION)
    segments = sum(doc.num_segments for doc in testset)
    with_refs = sum(1 for doc in testset if doc.reference_segments is not None)
    click.echo(f"{path}: OK")
    click.echo(f"  documents:  {len(testset)} ({with_refs} with references)")
    click.echo(f"  segments:   {segments}")
    click.echo(f"  directions: {', '.join(testset.directions)}")
    click.echo(f"  domains:    {', '.join(sorted(testset.domains))}")


def _load_plan(config_path: str):
    try:
        return load_run_config(config_path)
    except ConfigError as exc:
        click.echo(f"invalid config: {exc}", err=True)
        sys.exit(EXIT_VALIDATION)


@main.command("run")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--no-reports", is_flag=True, help="Execute the matrix without emitting reports.")
def run(config_path: str, no_reports: bool) -> None:
    """Execute the run matrix (resuming completed cells), then emit reports."""
    plan = _load_plan(config_path)
    try:
        artifacts = execute(plan)
    except (CorpusError, ResumeMismatchError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_VALIDATION)
    except GatewayError as exc:
        # Missing API keys are caught before any request; report as validation.
        if "API key" in str(exc):
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_VALIDATION)
        click.echo(f"run failed: {exc}", err=True)
        sys.exit(EXIT_RUNTIME)
    except DocturnError as exc:
        click.echo(f"run failed: {exc}", err=True)
        sys.exit(EXIT_RUNTIME)
    click.echo(f"completed {len(artifacts.cells)} cells into {artifacts.run_dir}")
    if artifacts.exclusions:
        click.echo(f"excluded {len(artifacts.exclusions)} cells (see manifest.json)")
    if not no_reports:
        written = emit_reports(artifacts)
        click.echo(f"wrote {len(written)} report files under {artifacts.run_dir / 'reports'}")


@main.command("score")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True, dir_okay=False))
def score(config_path: str) -> None:
    """Score an executed run and print the main table values."""
    plan = _load_plan(config_path)
    try:
        artifacts = load_artifacts(plan)
        emit_reports(artifacts)
    except DocturnError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_RUNTIME)
    scores_path = artifacts.run_dir / "reports" / "scores.json"
    payload = json.loads(scores_path.read_text("utf-8"))
    for cell, values in payload.items():
        dbleu = values["dbleu"]
        click.echo(f"{cell}: dbleu={dbleu:.2f}" if dbleu is not None else f"{cell}: dbleu=-")
    click.echo(f"full scores in {scores_path}")


@main.command("report")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True, dir_okay=False))
def report(config_path: str) -> None:
    """Re-emit report files from persisted artifacts."""
    plan = _load_plan(config_path)
    try:
        artifacts = load_artifacts(plan)
        written = emit_reports(artifacts, load_testsets(plan))
    except DocturnError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_RUNTIME)
    for path in written:
        click.echo(str(path))


@main.command("simulate-cost")
@click.option("--segments", "-k", type=int, required=True, help="Segments per document.")
@click.option("--seg-tokens", type=int, required=True, help="Source tokens per segment.")
@click.option("--out-tokens", type=int, required=True, help="Generated tokens per segment.")
@click.option("--overhead", type=int, default=0, help="Instruction tokens per user message.")
@click.option("--primer-overhead", type=int, default=0, help="Source-primed intro tokens.")
@click.option("--shared-prefix", type=int, default=0, help="ICL/system prefix tokens.")
@click.option("--out", "out_path", type=click.Path(dir_okay=False), default=None)
def simulate_cost(
    segments: int,
    seg_tokens: int,
    out_tokens: int,
    overhead: int,
    primer_overhead: int,
    shared_prefix: int,
    out_path: str | None,
) -> None:
    """Cached vs uncached prefill/generation totals per strategy (CSV)."""
    if segments < 1 or seg_tokens < 0 or out_tokens < 0:
        click.echo("error: --segments must be >= 1 and token counts >= 0", err=True)
        sys.exit(EXIT_VALIDATION)
    shape = DocShape.uniform(
        segments,
        seg_tokens,
        out_tokens,
        instruction_overhead=overhead,
        primer_intro_overhead=primer_overhead,
        shared_prefix_tokens=shared_prefix,
    )
    csv = comparison_csv(compare_strategies(shape))
    if out_path:
        Path(out_path).write_text(csv, "utf-8")
        click.echo(f"wrote {out_path}")
    else:
        click.echo(csv, nl=False)


if __name__ == "__main__":
    main()
