"""Prefill/generation token accounting under prefix-cached vs uncached inference.

The ledger walks a session transcript turn by turn. In cached mode a turn
pays prefill only for tokens not already covered by a previously computed
conversation prefix (message-granular: a prefix counts as reused when its
messages match a prior request-plus-reply state element-wise). In uncached
mode every turn pays for its full request. Generation tokens are charged
identically in both modes; caching affects prefill only.

Counting uses the harness's own tokenizer spec (whitespace by default, char
for ideographic targets) so numbers are comparable across backends;
backend-reported usage is stored separately by the runner.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .chat import Message
from .errors import LedgerError, PrefixStabilityError
from .strategy import Mode

MODE_CACHED = "cached"
MODE_UNCACHED = "uncached"


@dataclass(frozen=True)
class TokenizerSpec:
    """Deterministic token counting rule.

    id: 'whitespace' counts maximal non-whitespace runs; 'char' counts
    characters; 'external' looks texts up in a JSON file of precomputed
    counts (exact-match, missing entries are errors).
    """

    id: str = "whitespace"
    external_path: str | None = None

    def __post_init__(self) -> None:
        if self.id not in ("whitespace", "char", "external"):
            raise ValueError(f"unknown tokenizer spec: {self.id!r}")
        if self.id == "external" and not self.external_path:
            raise ValueError("external tokenizer spec requires external_path")


_external_cache: dict[str, dict[str, int]] = {}


def _external_counts(path: str) -> dict[str, int]:
    if path not in _external_cache:
        data = json.loads(Path(path).read_text("utf-8"))
        _external_cache[path] = {str(k): int(v) for k, v in data.items()}
    return _external_cache[path]


def count_tokens(text: str, spec: TokenizerSpec) -> int:
    if spec.id == "whitespace":
        return len(text.split())
    if spec.id == "char":
        return len(text)
    counts = _external_counts(spec.external_path or "")
    if text not in counts:
        raise LedgerError(f"external tokenizer has no entry for text of length {len(text)}")
    return counts[text]


def spec_for_target_language(tgt_lang: str, default: TokenizerSpec | None = None) -> TokenizerSpec:
    """Whitespace counting, except char counting for zh/ja targets."""
    base = tgt_lang.split("-")[0].split("_")[0].lower()
    if base in ("zh", "ja"):
        return TokenizerSpec("char")
    return default if default is not None else TokenizerSpec("whitespace")


@dataclass(frozen=True)
class TranscriptTurn:
    """One request/response exchange: the full message list sent, the reply."""

    request_messages: tuple[Message, ...]
    response_text: str

    def __post_init__(self) -> None:
        if not isinstance(self.request_messages, tuple):
            object.__setattr__(self, "request_messages", tuple(self.request_messages))


@dataclass
class Transcript:
    """Ordered exchanges of one document session."""

    doc_id: str
    turns: list[TranscriptTurn] = field(default_factory=list)
    strategy_mode: Mode | None = None


@dataclass(frozen=True)
class LedgerEntry:
    turn_index: int
    prefill_new: int
    prefill_reused: int
    generated: int


@dataclass
class CostLedger:
    mode: str
    entries: list[LedgerEntry] = field(default_factory=list)

    @property
    def total_prefill_new(self) -> int:
        return sum(e.prefill_new for e in self.entries)

    @property
    def total_prefill_reused(self) -> int:
        return sum(e.prefill_reused for e in self.entries)

    @property
    def total_generated(self) -> int:
        return sum(e.generated for e in self.entries)

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "entries": [
                {
                    "turn_index": e.turn_index,
                    "prefill_new": e.prefill_new,
                    "prefill_reused": e.prefill_reused,
                    "generated": e.generated,
                }
                for e in self.entries
            ],
            "totals": {
                "prefill_new": self.total_prefill_new,
                "prefill_reused": self.total_prefill_reused,
                "generated": self.total_generated,
            },
        }


# The ledger core works over abstract messages: (identity key, token count).
# Real transcripts key messages by (role, content); the strategy simulator
# keys them by synthetic labels.
_KeyedMessage = tuple[object, int]


def _longest_common_prefix(a: Sequence[_KeyedMessage], b: Sequence[_KeyedMessage]) -> int:
    n = 0
    for x, y in zip(a, b):
        if x[0] != y[0]:
            break
        n += 1
    return n


def _ledger_over_keyed_turns(
    turns: Iterable[tuple[list[_KeyedMessage], _KeyedMessage]],
    mode: str,
) -> CostLedger:
    if mode not in (MODE_CACHED, MODE_UNCACHED):
        raise LedgerError(f"unknown ledger mode: {mode!r}")
    ledger = CostLedger(mode=mode)
    cache_states: list[list[_KeyedMessage]] = []
    for i, (request, reply) in enumerate(turns):
        request_tokens = sum(t for _, t in request)
        reused = 0
        if mode == MODE_CACHED and cache_states:
            best = max(_longest_common_prefix(request, state) for state in cache_states)
            reused = sum(t for _, t in request[:best])
        ledger.entries.append(
            LedgerEntry(
                turn_index=i,
                prefill_new=request_tokens - reused,
                prefill_reused=reused,
                generated=reply[1],
            )
        )
        cache_states.append(list(request) + [reply])
    return ledger


def _verify_multi_turn_transcript(transcript: Transcript) -> None:
    """Cache-validity check: each request must extend the previous exchange."""
    for i in range(1, len(transcript.turns)):
        prev, cur = transcript.turns[i - 1], transcript.turns[i]
        expected_len = len(prev.request_messages) + 2
        if len(cur.request_messages) != expected_len:
            raise PrefixStabilityError(
                f"{transcript.doc_id}: turn {i} has {len(cur.request_messages)} messages, "
                f"expected {expected_len}"
            )
        for j, msg in enumerate(prev.request_messages):
            if cur.request_messages[j] != msg:
                raise PrefixStabilityError(
                    f"{transcript.doc_id}: turn {i} rewrites message {j}"
                )
        appended = cur.request_messages[len(prev.request_messages)]
        if appended.role != "assistant" or appended.content != prev.response_text:
            raise PrefixStabilityError(
                f"{transcript.doc_id}: turn {i} does not carry the previous reply verbatim"
            )


def ledger_for_session(
    transcript: Transcript,
    mode: str,
    spec: TokenizerSpec,
) -> CostLedger:
    """Token ledger for one session transcript.

    Cached mode charges each conversation token's prefill exactly once across
    the session; uncached mode charges every request in full. Multi-turn
    transcripts that violate prefix stability are refused: their history was
    rewritten, so no cache could have been reused.
    """
    if transcript.strategy_mode is not None and transcript.strategy_mode.is_multi_turn:
        _verify_multi_turn_transcript(transcript)

    def keyed() -> Iterable[tuple[list[_KeyedMessage], _KeyedMessage]]:
        for turn in transcript.turns:
            request = [
                ((m.role, m.content), count_tokens(m.content, spec))
                for m in turn.request_messages
            ]
            reply = (("assistant", turn.response_text), count_tokens(turn.response_text, spec))
            yield request, reply

    return _ledger_over_keyed_turns(keyed(), mode)


def conversation_token_count(transcript: Transcript, spec: TokenizerSpec) -> int:
    """Tokens of the final conversation: last request plus its reply."""
    if not transcript.turns:
        return 0
    last = transcript.turns[-1]
    total = sum(count_tokens(m.content, spec) for m in last.request_messages)
    return total + count_tokens(last.response_text, spec)


# ---------------------------------------------------------------------------
# Strategy cost simulation (synthetic documents described by token counts).


@dataclass(frozen=True)
class DocShape:
    """Token-level description of a document for cost simulation."""

    source_tokens: tuple[int, ...]
    target_tokens: tuple[int, ...]
    instruction_overhead: int = 0  # template boilerplate per user message
    primer_intro_overhead: int = 0  # source-primed intro beyond the document itself
    shared_prefix_tokens: int = 0  # ICL exemplars / system message

    def __post_init__(self) -> None:
        if not isinstance(self.source_tokens, tuple):
            object.__setattr__(self, "source_tokens", tuple(self.source_tokens))
        if not isinstance(self.target_tokens, tuple):
            object.__setattr__(self, "target_tokens", tuple(self.target_tokens))
        if len(self.source_tokens) != len(self.target_tokens):
            raise ValueError("source_tokens and target_tokens must have equal length")
        if not self.source_tokens:
            raise ValueError("DocShape needs at least one segment")

    @property
    def k(self) -> int:
        return len(self.source_tokens)

    @classmethod
    def uniform(
        cls,
        k: int,
        seg_tokens: int,
        out_tokens: int,
        *,
        instruction_overhead: int = 0,
        primer_intro_overhead: int = 0,
        shared_prefix_tokens: int = 0,
    ) -> "DocShape":
        return cls(
            source_tokens=(seg_tokens,) * k,
            target_tokens=(out_tokens,) * k,
            instruction_overhead=instruction_overhead,
            primer_intro_overhead=primer_intro_overhead,
            shared_prefix_tokens=shared_prefix_tokens,
        )


def _synthetic_turns(
    strategy: Mode, shape: DocShape
) -> list[tuple[list[_KeyedMessage], _KeyedMessage]]:
    shared: list[_KeyedMessage] = []
    if shape.shared_prefix_tokens:
        shared = [("shared", shape.shared_prefix_tokens)]

    def u(i: int) -> _KeyedMessage:
        return (f"u{i}", shape.instruction_overhead + shape.source_tokens[i])

    def a(i: int) -> _KeyedMessage:
        return (f"a{i}", shape.target_tokens[i])

    if strategy == Mode.SINGLE_TURN:
        request = shared + [
            ("u_doc", shape.instruction_overhead + sum(shape.source_tokens))
        ]
        return [(request, ("a_doc", sum(shape.target_tokens)))]

    if strategy == Mode.SEGMENT_LEVEL:
        return [(shared + [u(i)], a(i)) for i in range(shape.k)]

    # Multi-turn variants share one growing conversation.
    turns: list[tuple[list[_KeyedMessage], _KeyedMessage]] = []
    history: list[_KeyedMessage] = list(shared)
    for i in range(shape.k):
        if i == 0 and strategy == Mode.MULTI_TURN_SP:
            first = (
                "u0_primed",
                shape.primer_intro_overhead
                + sum(shape.source_tokens)
                + shape.instruction_overhead
                + shape.source_tokens[0],
            )
            history.append(first)
        else:
            history.append(u(i))
        turns.append((list(history), a(i)))
        history.append(a(i))
    return turns


def simulate_strategy_costs(strategy: Mode, shape: DocShape, mode: str) -> CostLedger:
    """Ledger for a synthetic session of the given strategy and cache mode."""
    return _ledger_over_keyed_turns(_synthetic_turns(strategy, shape), mode)


@dataclass(frozen=True)
class CostRow:
    strategy: Mode
    cache_mode: str
    total_prefill: int
    total_generated: int
    prefill_ratio_vs_segment_level: float


COMPARISON_COLUMNS = (
    "strategy",
    "cache_mode",
    "total_prefill",
    "total_generated",
    "prefill_ratio_vs_segment_level",
)


def compare_strategies(shape: DocShape) -> list[CostRow]:
    """Strategy x cache-mode cost table for one synthetic document.

    Ratios are against segment-level translation in the same cache mode, the
    conventional per-segment baseline.
    """
    totals: dict[tuple[Mode, str], CostLedger] = {}
    for strategy in Mode:
        for cache_mode in (MODE_CACHED, MODE_UNCACHED):
            totals[(strategy, cache_mode)] = simulate_strategy_costs(strategy, shape, cache_mode)

    rows: list[CostRow] = []
    for strategy in Mode:
        for cache_mode in (MODE_CACHED, MODE_UNCACHED):
            ledger = totals[(strategy, cache_mode)]
            baseline = totals[(Mode.SEGMENT_LEVEL, cache_mode)].total_prefill_new
            rows.append(
                CostRow(
                    strategy=strategy,
                    cache_mode=cache_mode,
                    total_prefill=ledger.total_prefill_new,
                    total_generated=ledger.total_generated,
                    prefill_ratio_vs_segment_level=(
                        ledger.total_prefill_new / baseline if baseline else float("nan")
                    ),
                )
            )
    return rows


def comparison_csv(rows: list[CostRow]) -> str:
    lines = [",".join(COMPARISON_COLUMNS)]
    for r in rows:
        lines.append(
            f"{r.strategy.value},{r.cache_mode},{r.total_prefill},"
            f"{r.total_generated},{r.prefill_ratio_vs_segment_level:.6f}"
        )
    return "\n".join(lines) + "\n"
