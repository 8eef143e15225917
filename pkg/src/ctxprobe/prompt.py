"""Rendering of the three prompt formats and the instruct-model chat wrapper.

Canonical layout (golden-tested): one context pair per line, the current
source sentence on the last line, and the final target-language cue followed
by exactly one space and no newline. Language display names come from the
PromptSpec, never from hard-coded enums.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

from .errors import ConfigError, DataError
from .perturb import ContextWindow

PROMPT_KINDS = ("sentence", "generic", "explicit")

DEFAULT_CHAT_USER = "<|im_start|>user"
DEFAULT_CHAT_ASSISTANT = "<|im_start|>assistant"
DEFAULT_CHAT_END = "<|im_end|>"


@dataclass(frozen=True)
class PromptSpec:
    kind: str
    src_lang_name: str
    tgt_lang_name: str
    chat_wrap: bool = False
    chat_user_marker: str = DEFAULT_CHAT_USER
    chat_assistant_marker: str = DEFAULT_CHAT_ASSISTANT
    chat_end_marker: str = DEFAULT_CHAT_END

    def __post_init__(self):
        if self.kind not in PROMPT_KINDS:
            raise ConfigError(f"unknown prompt kind {self.kind!r} (expected one of {PROMPT_KINDS})")


@dataclass(frozen=True)
class Templates:
    """Override hooks for the prompt templates; placeholders in {braces}."""

    sentence_header: str = "Translate the following {src_lang} source text to {tgt_lang}:\n"
    pair_line: str = "{src_lang}: {src} {tgt_lang}: {tgt}\n"
    explicit_instruction: str = (
        "Given the provided parallel sentence pairs, translate the following "
        "{src_lang} sentence to {tgt_lang}:\n"
    )
    final_line: str = "{src_lang}: {src} {tgt_lang}: "


DEFAULT_TEMPLATES = Templates()


def load_templates(path: str | Path) -> Templates:
    """Load template overrides from a JSON (or, on 3.11+, TOML) file."""
    path = Path(path)
    if path.suffix == ".toml":
        try:
            import tomllib
        except ImportError as exc:
            raise ConfigError("TOML templates need Python 3.11+; use JSON") from exc
        data = tomllib.loads(path.read_text(encoding="utf-8"))
    else:
        data = json.loads(path.read_text(encoding="utf-8"))
    known = {f for f in Templates.__dataclass_fields__}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown template fields: {', '.join(sorted(unknown))}")
    return replace(DEFAULT_TEMPLATES, **data)


@dataclass(frozen=True)
class PairSpan:
    """Character ranges of one context pair's sentence payloads in the prompt."""

    src: tuple[int, int]
    tgt: tuple[int, int] | None


@dataclass
class RenderedPrompt:
    text: str
    anchor: int
    pair_spans: list[PairSpan] = field(default_factory=list)
    src_sentence_span: tuple[int, int] | None = None
    chat_wrapped: bool = False

    def shifted(self, offset: int) -> "RenderedPrompt":
        return RenderedPrompt(
            text=self.text,
            anchor=self.anchor + offset,
            pair_spans=[
                PairSpan(
                    src=(p.src[0] + offset, p.src[1] + offset),
                    tgt=(p.tgt[0] + offset, p.tgt[1] + offset) if p.tgt else None,
                )
                for p in self.pair_spans
            ],
            src_sentence_span=(
                (self.src_sentence_span[0] + offset, self.src_sentence_span[1] + offset)
                if self.src_sentence_span
                else None
            ),
            chat_wrapped=self.chat_wrapped,
        )


def _fill(template: str, values: dict[str, str]) -> tuple[str, dict[str, tuple[int, int]]]:
    """Substitute {name} slots, returning the text and each slot's char range."""
    out = []
    spans: dict[str, tuple[int, int]] = {}
    pos = 0
    length = 0
    while True:
        open_idx = template.find("{", pos)
        if open_idx < 0:
            out.append(template[pos:])
            break
        close_idx = template.find("}", open_idx)
        if close_idx < 0:
            raise ConfigError(f"unbalanced braces in template {template!r}")
        name = template[open_idx + 1:close_idx]
        if name not in values:
            raise ConfigError(f"template slot {name!r} has no value")
        out.append(template[pos:open_idx])
        length += open_idx - pos
        value = values[name]
        out.append(value)
        spans[name] = (length, length + len(value))
        length += len(value)
        pos = close_idx + 1
    return "".join(out), spans


def render(
    spec: PromptSpec,
    context: ContextWindow | None,
    src_sentence: str,
    templates: Templates = DEFAULT_TEMPLATES,
) -> RenderedPrompt:
    """Render the prompt for one source sentence under one context condition.

    Context pairs are rendered oldest-first; sentence-kind prompts ignore the
    window. Applies the chat wrapper when spec.chat_wrap is set.
    """
    if spec.kind in ("generic", "explicit") and context is None:
        raise DataError(f"{spec.kind} prompts need a context window (possibly empty)")
    names = {"src_lang": spec.src_lang_name, "tgt_lang": spec.tgt_lang_name}

    parts: list[str] = []
    offset = 0
    pair_spans: list[PairSpan] = []

    if spec.kind == "sentence":
        header, _ = _fill(templates.sentence_header, names)
        parts.append(header)
        offset += len(header)
    else:
        for pair in context.pairs:
            line, slots = _fill(
                templates.pair_line, {**names, "src": pair.src, "tgt": pair.tgt or ""}
            )
            pair_spans.append(
                PairSpan(
                    src=(offset + slots["src"][0], offset + slots["src"][1]),
                    tgt=(offset + slots["tgt"][0], offset + slots["tgt"][1])
                    if pair.tgt is not None
                    else None,
                )
            )
            parts.append(line)
            offset += len(line)
        if spec.kind == "explicit":
            instruction, _ = _fill(templates.explicit_instruction, names)
            parts.append(instruction)
            offset += len(instruction)

    final, slots = _fill(templates.final_line, {**names, "src": src_sentence})
    src_span = (offset + slots["src"][0], offset + slots["src"][1])
    # The continuation anchor is where the trailing target-language cue begins.
    text = "".join(parts) + final
    cue = f"{spec.tgt_lang_name}:"
    anchor = text.rindex(cue)

    rendered = RenderedPrompt(
        text=text, anchor=anchor, pair_spans=pair_spans, src_sentence_span=src_span
    )
    if spec.chat_wrap:
        rendered = wrap_chat(
            rendered,
            user_marker=spec.chat_user_marker,
            assistant_marker=spec.chat_assistant_marker,
            end_marker=spec.chat_end_marker,
        )
    return rendered


def wrap_chat(
    rendered: RenderedPrompt,
    user_marker: str = DEFAULT_CHAT_USER,
    assistant_marker: str = DEFAULT_CHAT_ASSISTANT,
    end_marker: str = DEFAULT_CHAT_END,
) -> RenderedPrompt:
    """Wrap a rendered prompt in the instruct-model chat markers.

    Wrapping an already-wrapped prompt is an error.
    """
    if rendered.chat_wrapped or rendered.text.startswith(user_marker):
        raise DataError("prompt is already chat-wrapped")
    prefix = f"{user_marker}\n"
    wrapped = rendered.shifted(len(prefix))
    wrapped.text = f"{prefix}{rendered.text}{end_marker}\n{assistant_marker}\n"
    wrapped.chat_wrapped = True
    return wrapped
