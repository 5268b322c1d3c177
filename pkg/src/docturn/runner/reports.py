"""Report rendering: strategy/metric tables as CSV and aligned Markdown.

Emitted files (under <run_dir>/reports/):
    main.csv / main.md            strategy x metric, averaged across directions
    per_direction.csv / .md       dBLEU per language direction
    per_domain.csv / .md          dBLEU per domain with signed deltas vs the
                                  segment-level baseline, "24.59" / "30.27 (+4.16)"
    lengths_<backend>_<strategy>.csv   top-N longest documents, ref vs hyp tokens
    exclusions.csv                cells dropped from aggregates, with reasons
    scores.json                   raw metric numbers, machine-readable

Missing metrics render as "-" (segment-mean is never reported for the
single-turn strategy: its outputs carry no trustworthy segment alignment).
All ordering is deterministic and no report embeds a timestamp, so identical
runs produce byte-identical report files.
"""

from __future__ import annotations

import json
from pathlib import Path

from ..corpus import TestSet
from ..metrics.bleu import BleuConfig
from ..metrics.report import StrategyMetrics, score_strategy
from ..metrics.segment_mean import SubprocessScorer
from ..strategy import Mode, StrategyConfig
from .config import RunPlan
from .executor import RunArtifacts, load_testsets

MISSING = "-"


def _fmt(value: float | None, decimals: int = 2) -> str:
    return MISSING if value is None else f"{value:.{decimals}f}"


def _csv_line(cells: list[str]) -> str:
    return ",".join(cells)


def _markdown_table(header: list[str], rows: list[list[str]]) -> str:
    widths = [len(h) for h in header]
    for row in rows:
        for i, cell in enumerate(row):
            widths[i] = max(widths[i], len(cell))
    def line(cells: list[str]) -> str:
        return "| " + " | ".join(c.ljust(widths[i]) for i, c in enumerate(cells)) + " |"
    sep = "|" + "|".join("-" * (w + 2) for w in widths) + "|"
    return "\n".join([line(header), sep] + [line(r) for r in rows]) + "\n"


def _strategy_scores(
    artifacts: RunArtifacts, testset: TestSet
) -> dict[tuple[str, str], StrategyMetrics]:
    plan = artifacts.plan
    bleu_cfg = BleuConfig(
        max_n=plan.scoring.max_n, case_sensitive=plan.scoring.case_sensitive
    )
    scorer = (
        SubprocessScorer(plan.scoring.scorer_command)
        if plan.scoring.scorer_command
        else None
    )
    out: dict[tuple[str, str], StrategyMetrics] = {}
    for backend in plan.backends:
        for strategy in plan.strategies:
            translations = artifacts.translations_for(backend.name, strategy.label)
            out[(backend.name, strategy.label)] = score_strategy(
                testset,
                translations,
                bleu_config=bleu_cfg,
                compute_blonde=plan.scoring.blonde,
                # Single-turn outputs have no trusted segment alignment.
                scorer=None if strategy.mode == Mode.SINGLE_TURN else scorer,
                length_spec=None if plan.tokenizer == "auto" else plan.tokenizer_spec(""),
                top_n=plan.scoring.top_n,
            )
    return out


def _segment_mean_cell(strategy: StrategyConfig, metrics: StrategyMetrics) -> str:
    if strategy.mode == Mode.SINGLE_TURN:
        return MISSING
    return _fmt(metrics.segment_mean, 4)


def _blonde_cell(metrics: StrategyMetrics) -> str:
    if metrics.blonde is None:
        return MISSING
    return _fmt(metrics.blonde.combined_f1, 4)


def _baseline_label(plan: RunPlan) -> str | None:
    for strategy in plan.strategies:
        if strategy.mode == Mode.SEGMENT_LEVEL:
            return strategy.label
    return None


def emit_reports(artifacts: RunArtifacts, testset: TestSet | None = None) -> list[Path]:
    """Write every report file; returns the paths written."""
    plan = artifacts.plan
    if testset is None:
        testset = load_testsets(plan)
    reports_dir = artifacts.run_dir / "reports"
    reports_dir.mkdir(parents=True, exist_ok=True)
    scores = _strategy_scores(artifacts, testset)
    written: list[Path] = []

    # (a) Main table: strategy x metric, averaged across directions.
    header = ["backend", "strategy", "dbleu", "segment_mean", "blonde_lite_f1"]
    rows: list[list[str]] = []
    for backend in plan.backends:
        for strategy in plan.strategies:
            m = scores[(backend.name, strategy.label)]
            rows.append(
                [
                    backend.name,
                    strategy.display_name,
                    _fmt(m.dbleu),
                    _segment_mean_cell(strategy, m),
                    _blonde_cell(m),
                ]
            )
    written.append(_write_pair(reports_dir, "main", header, rows))

    # (b) Per-direction dBLEU table.
    directions = sorted(
        {d for m in scores.values() for d in m.per_direction_dbleu}
    )
    header = ["backend", "strategy"] + directions
    rows = []
    for backend in plan.backends:
        for strategy in plan.strategies:
            m = scores[(backend.name, strategy.label)]
            rows.append(
                [backend.name, strategy.display_name]
                + [_fmt(m.per_direction_dbleu.get(d)) for d in directions]
            )
    written.append(_write_pair(reports_dir, "per_direction", header, rows))

    # (c) Per-domain dBLEU with signed deltas against the segment-level baseline.
    baseline = _baseline_label(plan)
    domains = sorted({d for m in scores.values() for d in m.per_domain_dbleu})
    header = ["backend", "domain"] + [s.display_name for s in plan.strategies]
    rows = []
    for backend in plan.backends:
        for domain in domains:
            row = [backend.name, domain]
            base_score = None
            if baseline is not None:
                base_score = scores[(backend.name, baseline)].per_domain_dbleu.get(domain)
            for strategy in plan.strategies:
                value = scores[(backend.name, strategy.label)].per_domain_dbleu.get(domain)
                if value is None:
                    row.append(MISSING)
                elif (
                    baseline is None
                    or strategy.label == baseline
                    or base_score is None
                ):
                    row.append(f"{value:.2f}")
                else:
                    row.append(f"{value:.2f} ({value - base_score:+.2f})")
            rows.append(row)
    written.append(_write_pair(reports_dir, "per_domain", header, rows))

    # (d) Top-N length CSVs for plotting, one per (backend, strategy).
    for backend in plan.backends:
        for strategy in plan.strategies:
            m = scores[(backend.name, strategy.label)]
            if m.lengths is None:
                continue
            path = reports_dir / f"lengths_{backend.name}_{strategy.label}.csv"
            path.write_text(m.lengths.to_csv(), "utf-8")
            written.append(path)

    # Exclusions: cells missing from the aggregates above.
    lines = ["backend,strategy,doc_id,reason"]
    for record in sorted(
        artifacts.exclusions, key=lambda e: (e["backend"], e["strategy"], e["doc_id"])
    ):
        reason = record["reason"].replace(",", ";").replace("\n", " ")
        lines.append(_csv_line([record["backend"], record["strategy"], record["doc_id"], reason]))
    exclusions_path = reports_dir / "exclusions.csv"
    exclusions_path.write_text("\n".join(lines) + "\n", "utf-8")
    written.append(exclusions_path)

    # Machine-readable scores.
    payload = {}
    for (backend_name, strategy_label), m in sorted(scores.items()):
        payload[f"{backend_name}/{strategy_label}"] = {
            "dbleu": m.dbleu,
            "per_direction_dbleu": m.per_direction_dbleu,
            "per_domain_dbleu": m.per_domain_dbleu,
            "segment_mean": m.segment_mean,
            "blonde": m.blonde.to_dict() if m.blonde else None,
            "flags": sorted(m.flags),
        }
    scores_path = reports_dir / "scores.json"
    scores_path.write_text(
        json.dumps(payload, ensure_ascii=False, indent=2, sort_keys=True) + "\n", "utf-8"
    )
    written.append(scores_path)
    return written


def _write_pair(reports_dir: Path, name: str, header: list[str], rows: list[list[str]]) -> Path:
    csv_path = reports_dir / f"{name}.csv"
    csv_lines = [_csv_line(header)] + [
        _csv_line([cell.replace(",", ";") for cell in row]) for row in rows
    ]
    csv_path.write_text("\n".join(csv_lines) + "\n", "utf-8")
    md_path = reports_dir / f"{name}.md"
    md_path.write_text(_markdown_table(header, rows), "utf-8")
    return csv_path
