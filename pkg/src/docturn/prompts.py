"""Versioned prompt templates and deterministic rendering.

Template sets live as plain-text resource files under resources/templates/,
one block per slot. Run artifacts record the file's content hash so an
experiment is reproducible down to the exact instruction wording.

Every template wraps its source payload in a triple-backtick fence. That is
both a prompt-engineering choice (the model sees an unambiguous boundary) and
a harness contract: mock backends recover the payload from the final fenced
block of a user message.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass
from importlib import resources

from .errors import TemplateError

DEFAULT_TEMPLATE_SET = "wmt24-style-v1"

_PLACEHOLDER_RE = re.compile(r"\{([a-z_]+)\}")
_HEADER_RE = re.compile(r"^\[([a-z_]+)\]$")
_FENCED_RE = re.compile(r"```\n(.*?)\n```", re.DOTALL)

# Human-readable names keep prompts natural; unknown codes fall back to the
# code itself.
LANGUAGE_NAMES = {
    "en": "English",
    "de": "German",
    "zh": "Chinese",
    "ja": "Japanese",
    "cs": "Czech",
    "uk": "Ukrainian",
    "ru": "Russian",
    "es": "Spanish",
    "hi": "Hindi",
    "is": "Icelandic",
    "fr": "French",
    "it": "Italian",
    "pt": "Portuguese",
    "ko": "Korean",
    "ar": "Arabic",
    "nl": "Dutch",
    "pl": "Polish",
    "tr": "Turkish",
}


def language_name(code: str) -> str:
    base = code.split("-")[0].split("_")[0].lower()
    return LANGUAGE_NAMES.get(base, code)


@dataclass(frozen=True)
class PromptTemplateSet:
    """A named, immutable collection of slot -> template text."""

    set_id: str
    slots: dict[str, str]
    content_hash: str

    def render(self, slot: str, variables: dict[str, str]) -> str:
        if slot not in self.slots:
            raise TemplateError(
                f"template set '{self.set_id}' has no slot '{slot}' "
                f"(available: {sorted(self.slots)})"
            )
        template = self.slots[slot]

        def substitute(match: re.Match[str]) -> str:
            name = match.group(1)
            if name not in variables:
                raise TemplateError(
                    f"unbound placeholder '{name}' in slot '{slot}' of '{self.set_id}'"
                )
            return variables[name]

        # Single-pass substitution: braces inside the payload text are inert.
        return _PLACEHOLDER_RE.sub(substitute, template)


def _parse_template_file(text: str) -> dict[str, str]:
    slots: dict[str, str] = {}
    current: str | None = None
    lines: list[str] = []
    for line in text.split("\n"):
        header = _HEADER_RE.match(line)
        if header:
            if current is not None:
                slots[current] = "\n".join(lines).strip("\n")
            current = header.group(1)
            lines = []
            continue
        if current is None:
            # Preamble: comments and blank lines only.
            if line.strip() and not line.lstrip().startswith("#"):
                raise TemplateError(f"unexpected text before first slot header: {line!r}")
            continue
        lines.append(line)
    if current is not None:
        slots[current] = "\n".join(lines).strip("\n")
    if not slots:
        raise TemplateError("template file defines no slots")
    return slots


def load_template_set(set_id: str = DEFAULT_TEMPLATE_SET) -> PromptTemplateSet:
    """Load a template set resource by id ('-' separated ids map to '_' files)."""
    filename = set_id.replace("-", "_") + ".txt"
    try:
        raw = (
            resources.files("docturn.resources.templates").joinpath(filename).read_text("utf-8")
        )
    except FileNotFoundError as exc:
        raise TemplateError(f"unknown template set: {set_id!r}") from exc
    return PromptTemplateSet(
        set_id=set_id,
        slots=_parse_template_file(raw),
        content_hash=hashlib.sha256(raw.encode("utf-8")).hexdigest(),
    )


def render_prompt(template_set: PromptTemplateSet, slot: str, variables: dict[str, str]) -> str:
    """Render one slot; byte-identical output for identical inputs."""
    return template_set.render(slot, variables)


def extract_fenced_payload(message_text: str) -> str | None:
    """Return the contents of the last triple-backtick fence, if any.

    This is the inverse of the templates' payload wrapping. Messages without
    a fence (e.g. free-form test inputs) return None.
    """
    matches = _FENCED_RE.findall(message_text)
    if not matches:
        return None
    return matches[-1]
