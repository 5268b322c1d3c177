"""Run-matrix execution with per-cell persistence and resume.

A cell is one (backend, strategy, document) combination. Cells are the unit
of persistence: every raw exchange, the assembled translation and both cost
ledgers land on disk as the cell completes, so an interrupted run can be
re-executed and will recompute only the missing cells. Re-running against a
directory produced by a different configuration is an explicit error.

Layout under <output_dir>/<run_id>/:
    manifest.json
    raw/<backend>/<strategy>/<doc_id>/turn_<i>.json
    translations/<backend>/<strategy>/<doc_id>.json
    ledgers/<backend>/<strategy>/<doc_id>.json
    reports/*.csv, *.md
"""

from __future__ import annotations

import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from .. import gateway
from ..chat import ChatRequest, ChatResponse
from ..corpus import Document, TestSet, load_corpus
from ..costing import (
    MODE_CACHED,
    MODE_UNCACHED,
    Transcript,
    TranscriptTurn,
    count_tokens,
    ledger_for_session,
)
from ..errors import DocturnError, GatewayError, ResumeMismatchError
from ..prompts import load_template_set
from ..strategy import (
    DocumentTranslation,
    StrategyConfig,
    assemble_hypothesis,
    check_prefix_stability,
    ingest_response,
    init_session,
    next_request,
)
from .config import RunPlan

logger = logging.getLogger(__name__)

CompleteFn = Callable[[ChatRequest, gateway.BackendConfig], ChatResponse]

CellKey = tuple[str, str, str]  # (backend name, strategy label, doc id)


@dataclass
class CellArtifact:
    translation: DocumentTranslation
    ledgers: dict[str, dict]  # cache mode -> serialized ledger
    transcript: Transcript | None = None


@dataclass
class RunArtifacts:
    run_dir: Path
    plan: RunPlan
    cells: dict[CellKey, CellArtifact] = field(default_factory=dict)
    exclusions: list[dict] = field(default_factory=list)

    def translations_for(self, backend_name: str, strategy_label: str) -> dict[str, DocumentTranslation]:
        return {
            doc_id: cell.translation
            for (b, s, doc_id), cell in self.cells.items()
            if b == backend_name and s == strategy_label
        }


def load_testsets(plan: RunPlan) -> TestSet:
    """All plan test sets merged; document ids must be globally unique."""
    documents = []
    for path in plan.testsets:
        documents.extend(load_corpus(path).documents)
    return TestSet(name=plan.run_id, documents=documents)


def _cell_paths(run_dir: Path, backend: str, strategy: str, doc_id: str) -> tuple[Path, Path, Path]:
    raw = run_dir / "raw" / backend / strategy / doc_id
    translation = run_dir / "translations" / backend / strategy / f"{doc_id}.json"
    ledger = run_dir / "ledgers" / backend / strategy / f"{doc_id}.json"
    return raw, translation, ledger


def _write_json(path: Path, payload: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, ensure_ascii=False, indent=2, sort_keys=True) + "\n", "utf-8")


def _run_cell(
    plan: RunPlan,
    backend: gateway.BackendConfig,
    strategy: StrategyConfig,
    doc: Document,
    run_dir: Path,
    complete_fn: CompleteFn,
    templates,
) -> CellArtifact:
    raw_dir, translation_path, ledger_path = _cell_paths(
        run_dir, backend.name, strategy.label, doc.id
    )
    session = init_session(strategy, doc, templates)
    transcript = Transcript(doc_id=doc.id, strategy_mode=strategy.mode)
    spec = plan.tokenizer_spec(doc.tgt_lang)

    turn = 0
    while (request := next_request(session)) is not None:
        if plan.max_context_tokens is not None:
            request_tokens = sum(count_tokens(m.content, spec) for m in request.messages)
            if request_tokens > plan.max_context_tokens:
                session.fail("context_overflow")
                raise GatewayError(
                    f"context_overflow: request of {request_tokens} tokens exceeds "
                    f"budget {plan.max_context_tokens} for document '{doc.id}'"
                )
        started = time.monotonic()
        response = complete_fn(request, backend)
        _write_json(
            raw_dir / f"turn_{turn}.json",
            {
                "request": {**request.to_dict(), "model": backend.model, "request_tag": request.request_tag},
                "response": response.to_dict(),
                "elapsed_ms": round((time.monotonic() - started) * 1000.0, 3),
            },
        )
        transcript.turns.append(
            TranscriptTurn(request_messages=request.messages, response_text=response.content)
        )
        if response.finish_reason == "length":
            session.warnings.append(f"turn {turn}: output truncated (finish_reason=length)")
        ingest_response(session, response.content)
        if session.status == "failed":
            raise GatewayError(f"{session.failure_reason}: document '{doc.id}' at turn {turn}")
        turn += 1

    if strategy.mode.is_multi_turn:
        check_prefix_stability([t.request_messages for t in transcript.turns])

    translation = assemble_hypothesis(session)
    ledgers = {
        mode: ledger_for_session(transcript, mode, spec).to_dict()
        for mode in (MODE_CACHED, MODE_UNCACHED)
    }
    _write_json(translation_path, translation.to_dict())
    _write_json(ledger_path, {"tokenizer": spec.id, "modes": ledgers})
    return CellArtifact(translation=translation, ledgers=ledgers, transcript=transcript)


def _load_cell(translation_path: Path, ledger_path: Path) -> CellArtifact:
    translation = DocumentTranslation.from_dict(json.loads(translation_path.read_text("utf-8")))
    ledgers = json.loads(ledger_path.read_text("utf-8"))["modes"]
    return CellArtifact(translation=translation, ledgers=ledgers)


def _manifest_payload(plan: RunPlan, created_at: str) -> dict:
    template_hash = load_template_set(plan.template_set).content_hash
    return {
        "run_id": plan.run_id,
        "config_hash": plan.config_hash,
        "template_set": plan.template_set,
        "template_set_hash": template_hash,
        "created_at": created_at,
        "exclusions": [],
    }


def execute(plan: RunPlan, complete_fn: CompleteFn | None = None) -> RunArtifacts:
    """Run every (backend, strategy, document) cell of the plan.

    Completed cells found on disk are reused. Failures follow
    plan.fail_policy: 'halt' re-raises immediately (partial artifacts remain
    for resume), 'skip_and_report' records an exclusion and continues.
    """
    complete = complete_fn or gateway.complete

    # Fail fast on missing API keys before any request is attempted.
    for backend in plan.backends:
        if backend.kind == "openai_compatible":
            backend.require_api_key()

    testset = load_testsets(plan)
    run_dir = Path(plan.output_dir) / plan.run_id
    run_dir.mkdir(parents=True, exist_ok=True)
    manifest_path = run_dir / "manifest.json"
    if manifest_path.exists():
        existing = json.loads(manifest_path.read_text("utf-8"))
        if existing.get("config_hash") != plan.config_hash:
            raise ResumeMismatchError(
                f"{run_dir} was produced by config_hash {existing.get('config_hash')!r}, "
                f"current plan hashes to {plan.config_hash!r}; refusing to mix runs"
            )
        created_at = existing.get("created_at", "")
    else:
        created_at = time.strftime("%Y-%m-%dT%H:%M:%S", time.gmtime())

    artifacts = RunArtifacts(run_dir=run_dir, plan=plan)
    templates = load_template_set(plan.template_set)

    for backend in plan.backends:
        for strategy in plan.strategies:
            pending: list[Document] = []
            for doc in testset:
                _, translation_path, ledger_path = _cell_paths(
                    run_dir, backend.name, strategy.label, doc.id
                )
                if translation_path.exists() and ledger_path.exists():
                    artifacts.cells[(backend.name, strategy.label, doc.id)] = _load_cell(
                        translation_path, ledger_path
                    )
                else:
                    pending.append(doc)

            def run_one(doc: Document) -> tuple[str, CellArtifact]:
                return doc.id, _run_cell(
                    plan, backend, strategy, doc, run_dir, complete, templates
                )

            if plan.max_concurrent_documents > 1 and len(pending) > 1:
                with ThreadPoolExecutor(max_workers=plan.max_concurrent_documents) as pool:
                    futures = {pool.submit(run_one, doc): doc for doc in pending}
                    for future, doc in futures.items():
                        try:
                            doc_id, cell = future.result()
                            artifacts.cells[(backend.name, strategy.label, doc_id)] = cell
                        except DocturnError as exc:
                            _handle_failure(plan, artifacts, backend.name, strategy.label, doc.id, exc)
            else:
                for doc in pending:
                    try:
                        doc_id, cell = run_one(doc)
                        artifacts.cells[(backend.name, strategy.label, doc_id)] = cell
                    except DocturnError as exc:
                        _handle_failure(plan, artifacts, backend.name, strategy.label, doc.id, exc)

    manifest = _manifest_payload(plan, created_at)
    manifest["exclusions"] = sorted(
        artifacts.exclusions, key=lambda e: (e["backend"], e["strategy"], e["doc_id"])
    )
    manifest["completed_cells"] = len(artifacts.cells)
    _write_json(manifest_path, manifest)
    return artifacts


def _handle_failure(
    plan: RunPlan,
    artifacts: RunArtifacts,
    backend: str,
    strategy: str,
    doc_id: str,
    exc: DocturnError,
) -> None:
    if plan.fail_policy == "halt":
        raise exc
    logger.warning("skipping %s/%s/%s: %s", backend, strategy, doc_id, exc)
    artifacts.exclusions.append(
        {"backend": backend, "strategy": strategy, "doc_id": doc_id, "reason": str(exc)}
    )


def load_artifacts(plan: RunPlan) -> RunArtifacts:
    """Load previously executed cells from disk (for score/report commands)."""
    run_dir = Path(plan.output_dir) / plan.run_id
    manifest_path = run_dir / "manifest.json"
    if not manifest_path.exists():
        raise DocturnError(f"no run found at {run_dir} (missing manifest.json)")
    manifest = json.loads(manifest_path.read_text("utf-8"))
    if manifest.get("config_hash") != plan.config_hash:
        raise ResumeMismatchError(
            f"{run_dir} was produced by a different configuration"
        )
    testset = load_testsets(plan)
    artifacts = RunArtifacts(run_dir=run_dir, plan=plan)
    artifacts.exclusions = list(manifest.get("exclusions", []))
    for backend in plan.backends:
        for strategy in plan.strategies:
            for doc in testset:
                _, translation_path, ledger_path = _cell_paths(
                    run_dir, backend.name, strategy.label, doc.id
                )
                if translation_path.exists() and ledger_path.exists():
                    artifacts.cells[(backend.name, strategy.label, doc.id)] = _load_cell(
                        translation_path, ledger_path
                    )
    return artifacts
