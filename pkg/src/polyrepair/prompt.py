"""Fill-in-the-blank rendering of bug-fix pairs."""

from __future__ import annotations

from dataclasses import dataclass

from .corpus import BugFixPair
from .errors import FormatError

BUGGY_MARK = "Buggy line:"
CONTEXT_MARK = "Context:"
FIXED_MARK = "The fixed code is:"
MARKERS = (BUGGY_MARK, CONTEXT_MARK, FIXED_MARK)


@dataclass(frozen=True)
class PromptedExample:
    source_text: str
    target_text: str
    lang: str
    origin_id: str


def render_prompt(pair: BugFixPair, prompt_enabled: bool = True) -> PromptedExample:
    """Render ``pair`` as model input.

    With ``prompt_enabled=False`` the markers are dropped and the buggy line
    and context are simply joined by a space (the no-prompt ablation).
    """
    if prompt_enabled:
        source = f"{BUGGY_MARK} {pair.buggy} {CONTEXT_MARK} {pair.context} {FIXED_MARK}"
    else:
        source = f"{pair.buggy} {pair.context}"
    return PromptedExample(source, pair.fixed, pair.lang, pair.id)


def strip_prompt(source_text: str) -> tuple[str, str]:
    """Recover ``(buggy, context)`` from a rendered source text."""
    for mark in MARKERS:
        count = source_text.count(mark)
        if count != 1:
            raise FormatError(f"expected marker {mark!r} once, found {count}")
    head = BUGGY_MARK + " "
    sep = " " + CONTEXT_MARK + " "
    tail = " " + FIXED_MARK
    if not source_text.startswith(head) or not source_text.endswith(tail):
        raise FormatError("markers out of place")
    body = source_text[len(head):-len(tail)]
    if sep not in body:
        raise FormatError("context marker missing its separators")
    buggy, context = body.split(sep, 1)
    return buggy, context
