"""Reference-vs-hypothesis token counts, focused on the longest documents.

Omission errors concentrate in long documents: when a translation silently
drops content, its token count falls visibly short of the reference's. This
report ranks documents by reference length and tabulates both counts so the
deficit is measurable per document and in aggregate.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from ..corpus import TestSet
from ..costing import TokenizerSpec, count_tokens
from ..strategy import DocumentTranslation


@dataclass(frozen=True)
class LengthRow:
    doc_id: str
    ref_tokens: int
    hyp_tokens: int

    @property
    def ratio(self) -> float:
        return self.hyp_tokens / self.ref_tokens if self.ref_tokens else float("nan")


@dataclass(frozen=True)
class LengthReport:
    rows: tuple[LengthRow, ...]  # top_n longest by reference tokens
    total_ref_tokens: int  # totals cover all scored documents, not just top_n
    total_hyp_tokens: int

    @property
    def total_ratio(self) -> float:
        return self.total_hyp_tokens / self.total_ref_tokens if self.total_ref_tokens else float("nan")

    def to_csv(self) -> str:
        lines = ["doc_id,ref_tokens,hyp_tokens,ratio"]
        for row in self.rows:
            lines.append(f"{row.doc_id},{row.ref_tokens},{row.hyp_tokens},{row.ratio:.4f}")
        lines.append(
            f"TOTAL,{self.total_ref_tokens},{self.total_hyp_tokens},{self.total_ratio:.4f}"
        )
        return "\n".join(lines) + "\n"


def length_report(
    testset: TestSet,
    translations: Mapping[str, DocumentTranslation],
    spec: TokenizerSpec | None = None,
    top_n: int = 10,
) -> LengthReport:
    """Top-N longest documents by reference tokens, ties broken by doc id.

    Documents without references or without a translation are skipped. A
    top_n larger than the corpus returns the full corpus.
    """
    spec = spec or TokenizerSpec("whitespace")
    rows: list[LengthRow] = []
    total_ref = 0
    total_hyp = 0
    for doc in testset:
        if doc.reference_segments is None or doc.id not in translations:
            continue
        ref_tokens = sum(count_tokens(seg, spec) for seg in doc.reference_segments)
        hyp_tokens = sum(
            count_tokens(seg, spec) for seg in translations[doc.id].hypothesis_segments
        )
        rows.append(LengthRow(doc.id, ref_tokens, hyp_tokens))
        total_ref += ref_tokens
        total_hyp += hyp_tokens
    rows.sort(key=lambda r: (-r.ref_tokens, r.doc_id))
    return LengthReport(
        rows=tuple(rows[:top_n]),
        total_ref_tokens=total_ref,
        total_hyp_tokens=total_hyp,
    )
