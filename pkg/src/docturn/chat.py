"""Chat-completion record types shared by the strategy layer and the gateway.

These are plain value objects mirroring the OpenAI-style wire shape: a request
is a list of role/content messages plus decoding parameters, a response is the
assistant text plus usage accounting.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

ROLE_SYSTEM = "system"
ROLE_USER = "user"
ROLE_ASSISTANT = "assistant"

_VALID_ROLES = (ROLE_SYSTEM, ROLE_USER, ROLE_ASSISTANT)


@dataclass(frozen=True)
class Message:
    """One conversation message. Immutable so histories can be shared safely."""

    role: str
    content: str

    def __post_init__(self) -> None:
        if self.role not in _VALID_ROLES:
            raise ValueError(f"unknown message role: {self.role!r}")

    def to_dict(self) -> dict[str, str]:
        return {"role": self.role, "content": self.content}

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "Message":
        return cls(role=d["role"], content=d["content"])


def user(content: str) -> Message:
    return Message(ROLE_USER, content)


def assistant(content: str) -> Message:
    return Message(ROLE_ASSISTANT, content)


@dataclass(frozen=True)
class ChatRequest:
    """A chat-completion request. Harness-generated requests pin temperature to 0."""

    model_id: str
    messages: tuple[Message, ...]
    temperature: float = 0.0
    max_tokens: int | None = None
    request_tag: str = ""

    def __post_init__(self) -> None:
        # Tuple-ify defensively so requests are hashable/immutable snapshots.
        if not isinstance(self.messages, tuple):
            object.__setattr__(self, "messages", tuple(self.messages))

    def final_user_message(self) -> Message | None:
        for msg in reversed(self.messages):
            if msg.role == ROLE_USER:
                return msg
        return None

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {
            "model": self.model_id,
            "messages": [m.to_dict() for m in self.messages],
            "temperature": self.temperature,
        }
        if self.max_tokens is not None:
            d["max_tokens"] = self.max_tokens
        return d


@dataclass(frozen=True)
class ChatResponse:
    """A chat-completion response with backend-reported usage."""

    content: str
    prompt_tokens: int = 0
    completion_tokens: int = 0
    finish_reason: str = "stop"  # stop | length | other
    latency_ms: float = 0.0

    def to_dict(self) -> dict[str, Any]:
        return {
            "content": self.content,
            "prompt_tokens": self.prompt_tokens,
            "completion_tokens": self.completion_tokens,
            "finish_reason": self.finish_reason,
            "latency_ms": self.latency_ms,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "ChatResponse":
        return cls(
            content=d["content"],
            prompt_tokens=int(d.get("prompt_tokens", 0)),
            completion_tokens=int(d.get("completion_tokens", 0)),
            finish_reason=d.get("finish_reason", "stop"),
            latency_ms=float(d.get("latency_ms", 0.0)),
        )
