"""Loading, validation and filtering of paragraph-aligned document test sets.

A test set is a JSONL file, one document per line:

    {"id": str, "src_lang": str, "tgt_lang": str, "domain": str,
     "src": [str, ...], "ref": [str, ...]}    # "ref" optional

Documents arrive pre-segmented at the paragraph level. Text is NFC-normalized
and trimmed at load time so token counts and n-gram matching are stable.
Unknown top-level keys are tolerated with a warning; structural problems
(misaligned references, duplicate ids, empty segments) are hard errors.
"""

from __future__ import annotations

import json
import logging
import re
import unicodedata
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Iterable, Iterator

from .errors import CorpusError

logger = logging.getLogger(__name__)

_KNOWN_KEYS = {"id", "src_lang", "tgt_lang", "domain", "src", "ref"}

SEGMENT_RULES = ("blank_line", "single_newline")


@dataclass(frozen=True)
class Document:
    """One paragraph-aligned source document, optionally with references."""

    id: str
    src_lang: str
    tgt_lang: str
    domain: str
    source_segments: tuple[str, ...]
    reference_segments: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        if not isinstance(self.source_segments, tuple):
            object.__setattr__(self, "source_segments", tuple(self.source_segments))
        if self.reference_segments is not None and not isinstance(self.reference_segments, tuple):
            object.__setattr__(self, "reference_segments", tuple(self.reference_segments))
        self.validate()

    def validate(self) -> None:
        if not self.id:
            raise CorpusError("document id must be non-empty")
        if not self.source_segments:
            raise CorpusError("document has no source segments", doc_id=self.id)
        for i, seg in enumerate(self.source_segments):
            if not seg.strip():
                raise CorpusError(f"source segment {i} is empty", doc_id=self.id)
        if self.reference_segments is not None:
            if len(self.reference_segments) != len(self.source_segments):
                raise CorpusError(
                    f"reference/source alignment mismatch: "
                    f"{len(self.reference_segments)} reference vs "
                    f"{len(self.source_segments)} source segments",
                    doc_id=self.id,
                )
        if self.src_lang == self.tgt_lang:
            raise CorpusError(
                f"source and target language are both '{self.src_lang}'", doc_id=self.id
            )

    @property
    def direction(self) -> str:
        return f"{self.src_lang}-{self.tgt_lang}"

    @property
    def num_segments(self) -> int:
        return len(self.source_segments)

    def to_dict(self) -> dict:
        d = {
            "id": self.id,
            "src_lang": self.src_lang,
            "tgt_lang": self.tgt_lang,
            "domain": self.domain,
            "src": list(self.source_segments),
        }
        if self.reference_segments is not None:
            d["ref"] = list(self.reference_segments)
        return d


@dataclass
class TestSet:
    """An ordered collection of documents with unique ids."""

    __test__ = False  # keep pytest from collecting this as a test class

    name: str
    documents: list[Document] = field(default_factory=list)

    def __post_init__(self) -> None:
        seen: set[str] = set()
        for doc in self.documents:
            if doc.id in seen:
                raise CorpusError("duplicate document id", doc_id=doc.id)
            seen.add(doc.id)

    def __len__(self) -> int:
        return len(self.documents)

    def __iter__(self) -> Iterator[Document]:
        return iter(self.documents)

    def by_id(self, doc_id: str) -> Document:
        for doc in self.documents:
            if doc.id == doc_id:
                return doc
        raise KeyError(doc_id)

    @property
    def directions(self) -> list[str]:
        out: list[str] = []
        for doc in self.documents:
            if doc.direction not in out:
                out.append(doc.direction)
        return out

    @property
    def domains(self) -> set[str]:
        return {doc.domain for doc in self.documents}


@dataclass(frozen=True)
class Exemplar:
    """One in-context translation demonstration (source/target pair)."""

    source: str
    target: str
    src_lang: str
    tgt_lang: str

    def __post_init__(self) -> None:
        if not self.source.strip():
            raise CorpusError("exemplar source must be non-empty")
        if not self.target.strip():
            raise CorpusError("exemplar target must be non-empty")


def _normalize(text: str) -> str:
    return unicodedata.normalize("NFC", text).strip()


def load_corpus(path: str | Path, format: str = "jsonl") -> TestSet:
    """Load and validate a JSONL test set.

    Raises CorpusError with the line number on parse failures and with the
    document id on invariant violations.
    """
    if format != "jsonl":
        raise CorpusError(f"unsupported corpus format: {format!r}")
    path = Path(path)
    documents: list[Document] = []
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"invalid JSON: {exc.msg}", line=lineno) from exc
            if not isinstance(record, dict):
                raise CorpusError("each line must be a JSON object", line=lineno)
            unknown = set(record) - _KNOWN_KEYS
            if unknown:
                logger.warning(
                    "%s line %d: ignoring unknown keys %s", path, lineno, sorted(unknown)
                )
            try:
                documents.append(_document_from_record(record))
            except KeyError as exc:
                raise CorpusError(f"missing required key {exc.args[0]!r}", line=lineno) from exc
    return TestSet(name=path.stem, documents=documents)


def _document_from_record(record: dict) -> Document:
    ref = record.get("ref")
    return Document(
        id=str(record["id"]),
        src_lang=str(record["src_lang"]),
        tgt_lang=str(record["tgt_lang"]),
        domain=str(record.get("domain", "unknown")),
        source_segments=tuple(_normalize(s) for s in record["src"]),
        reference_segments=tuple(_normalize(s) for s in ref) if ref is not None else None,
    )


def save_corpus(testset: TestSet, path: str | Path) -> None:
    """Serialize a test set back to JSONL (inverse of load_corpus)."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for doc in testset.documents:
            fh.write(json.dumps(doc.to_dict(), ensure_ascii=False) + "\n")


_BLANK_LINE_RE = re.compile(r"\n\s*\n")


def split_into_segments(raw_text: str, rule: str = "blank_line") -> list[str]:
    """Split raw text into trimmed, non-empty segments.

    blank_line treats runs of one or more blank lines as separators;
    single_newline splits on every newline. Joining the result with the
    rule's separator and re-splitting is a fixed point.
    """
    if rule not in SEGMENT_RULES:
        raise ValueError(f"unknown segmentation rule: {rule!r}")
    if rule == "blank_line":
        parts = _BLANK_LINE_RE.split(raw_text)
    else:
        parts = raw_text.split("\n")
    return [seg for seg in (p.strip() for p in parts) if seg]


def segment_separator(rule: str) -> str:
    """The canonical joiner for segments produced under the given rule."""
    if rule == "blank_line":
        return "\n\n"
    if rule == "single_newline":
        return "\n"
    raise ValueError(f"unknown segmentation rule: {rule!r}")


def filter_testset(ts: TestSet, predicate: Callable[[Document], bool]) -> TestSet:
    """Order-preserving subset of a test set. An empty result is valid."""
    return TestSet(name=ts.name, documents=[d for d in ts.documents if predicate(d)])


def matching(
    *,
    src_lang: str | None = None,
    tgt_lang: str | None = None,
    domain: str | None = None,
    ids: Iterable[str] | None = None,
) -> Callable[[Document], bool]:
    """Convenience predicate factory for filter_testset."""
    id_set = set(ids) if ids is not None else None

    def predicate(doc: Document) -> bool:
        if src_lang is not None and doc.src_lang != src_lang:
            return False
        if tgt_lang is not None and doc.tgt_lang != tgt_lang:
            return False
        if domain is not None and doc.domain != domain:
            return False
        if id_set is not None and doc.id not in id_set:
            return False
        return True

    return predicate


def with_identity_references(doc: Document) -> Document:
    """Copy of a document whose references equal its sources (mock-run fixture)."""
    return replace(doc, reference_segments=doc.source_segments)
