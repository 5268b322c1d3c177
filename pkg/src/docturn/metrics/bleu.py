"""Document-level BLEU: each document is one matching unit.

A document's segments are concatenated (single-space joined) into one token
sequence; clipped n-gram matches and n-gram totals are then pooled across
documents exactly as corpus BLEU pools sentences, and the brevity penalty is
computed from the pooled lengths. The result lives in [0, 100].

Conventions (declared, since they affect absolute scores): case-sensitive by
default, max_n=4, no smoothing; n-gram orders for which the hypothesis corpus
has no n-grams at all are excluded from the geometric mean, so degenerate
short corpora still score 100 against themselves.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

from ..corpus import Document
from ..errors import DocturnError
from ..strategy import DocumentTranslation
from .tokenizers import tokenize


@dataclass(frozen=True)
class BleuConfig:
    max_n: int = 4
    smoothing: str = "none"  # none | add_k
    smoothing_k: float = 1.0
    tokenizer: str = "intl_13a_like"  # intl_13a_like | char
    case_sensitive: bool = True

    def __post_init__(self) -> None:
        if self.max_n < 1:
            raise ValueError("max_n must be >= 1")
        if self.smoothing not in ("none", "add_k"):
            raise ValueError(f"unknown smoothing: {self.smoothing!r}")


class ClippedCounts(NamedTuple):
    matched: int
    total: int


def ngram_clipped_counts(
    hyp_tokens: Sequence[str], ref_tokens: Sequence[str], n: int
) -> ClippedCounts:
    """matched = sum over n-grams of min(hyp count, ref count); total = hyp n-grams."""
    if n < 1:
        raise ValueError("n must be >= 1")
    total = max(0, len(hyp_tokens) - n + 1)
    if total == 0:
        return ClippedCounts(0, 0)
    hyp_counts = Counter(tuple(hyp_tokens[i : i + n]) for i in range(total))
    ref_total = max(0, len(ref_tokens) - n + 1)
    ref_counts = Counter(tuple(ref_tokens[i : i + n]) for i in range(ref_total))
    matched = sum(min(c, ref_counts[g]) for g, c in hyp_counts.items())
    return ClippedCounts(matched, total)


def brevity_penalty(hyp_len: int, ref_len: int) -> float:
    """1 when the hypothesis is not shorter; exp(1 - ref/hyp) otherwise.
    An empty hypothesis against a non-empty reference is penalized to 0."""
    if hyp_len < 0 or ref_len < 0:
        raise ValueError("lengths must be non-negative")
    if hyp_len == 0:
        return 0.0 if ref_len > 0 else 1.0
    if hyp_len >= ref_len:
        return 1.0
    return math.exp(1.0 - ref_len / hyp_len)


def _document_tokens(segments: Iterable[str], cfg: BleuConfig) -> list[str]:
    text = " ".join(segments)
    if not cfg.case_sensitive:
        text = text.casefold()
    return tokenize(text, cfg.tokenizer)


def doc_bleu(
    hyp_docs: Sequence[DocumentTranslation],
    ref_docs: Sequence[Document],
    cfg: BleuConfig | None = None,
) -> float:
    """Corpus BLEU with documents as the matching unit.

    Hypotheses are aligned to references by document id; every hypothesis
    must have a reference document with reference segments.
    """
    cfg = cfg or BleuConfig()
    refs_by_id = {d.id: d for d in ref_docs}
    missing = [
        h.doc_id
        for h in hyp_docs
        if h.doc_id not in refs_by_id or refs_by_id[h.doc_id].reference_segments is None
    ]
    if missing:
        raise DocturnError(f"missing references for documents: {sorted(missing)}")
    if not hyp_docs:
        raise DocturnError("doc_bleu needs at least one document")

    matched = [0] * cfg.max_n
    total = [0] * cfg.max_n
    hyp_len = 0
    ref_len = 0
    for hyp in hyp_docs:
        ref = refs_by_id[hyp.doc_id]
        hyp_tokens = _document_tokens(hyp.hypothesis_segments, cfg)
        ref_tokens = _document_tokens(ref.reference_segments or (), cfg)
        hyp_len += len(hyp_tokens)
        ref_len += len(ref_tokens)
        for n in range(1, cfg.max_n + 1):
            counts = ngram_clipped_counts(hyp_tokens, ref_tokens, n)
            matched[n - 1] += counts.matched
            total[n - 1] += counts.total

    usable = [i for i in range(cfg.max_n) if total[i] > 0]
    if not usable:
        return 0.0
    precisions: list[float] = []
    for i in usable:
        if cfg.smoothing == "add_k":
            precisions.append((matched[i] + cfg.smoothing_k) / (total[i] + cfg.smoothing_k))
        else:
            if matched[i] == 0:
                return 0.0
            precisions.append(matched[i] / total[i])
    if len(precisions) == 1:
        geo_mean = precisions[0]
    else:
        geo_mean = math.exp(sum(math.log(p) for p in precisions) / len(precisions))
    return 100.0 * brevity_penalty(hyp_len, ref_len) * geo_mean
