"""Rule-based clean-up of generated patches.

Three passes, always in this order: cross-language keyword mapping, operator
whitespace repair, and filling of unknown-token sentinels. Keyword mapping
and whitespace repair skip string literals.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .corpus import LANGUAGES
from .errors import FormatError
from .tokenizer import UNK

TABLE_LANGS = ("c", "java", "javascript", "python")


@dataclass(frozen=True)
class KeywordRow:
    name: str
    spellings: dict  # lang -> spelling
    call_only: bool = False  # match only when followed by "("
    enabled: bool = True

    def __post_init__(self):
        if len(self.spellings) < 2:
            raise FormatError(f"keyword row {self.name!r} must cover at least two languages")


@dataclass(frozen=True)
class KeywordMap:
    rows: tuple[KeywordRow, ...]
    _patterns: dict = field(default_factory=dict, compare=False, repr=False)

    def pattern(self, target_lang: str):
        """Compiled regex of foreign spellings and the replacement table."""
        cached = self._patterns.get(target_lang)
        if cached is not None:
            return cached
        repl, alts = {}, []
        for row in self.rows:
            if not row.enabled or target_lang not in row.spellings:
                continue
            target = row.spellings[target_lang]
            for spelling in sorted(set(row.spellings.values()), key=lambda s: (-len(s), s)):
                if spelling == target:
                    continue
                key = (spelling, row.call_only)
                repl[key] = target
                alts.append((spelling, row.call_only))
        if not alts:
            compiled = None
        else:
            alts.sort(key=lambda a: (-len(a[0]), a[0]))
            parts = []
            for i, (spelling, call) in enumerate(alts):
                lead = r"(?<![\w.])" if spelling[0].isalnum() or spelling[0] == "_" else ""
                trail = r"(?!\w)" if spelling[-1].isalnum() or spelling[-1] == "_" else ""
                if call:
                    trail += r"(?=\s*\()"
                parts.append(f"(?P<k{i}>{lead}{re.escape(spelling)}{trail})")
            compiled = (re.compile("|".join(parts)), [repl[a] for a in alts])
        self._patterns[target_lang] = compiled
        return compiled


@dataclass(frozen=True)
class FillRule:
    pattern: str  # regex containing the sentinel exactly once
    symbol: str
    langs: tuple[str, ...] | None = None  # None: every language
    enabled: bool = True

    def __post_init__(self):
        if self.pattern.count(UNK) != 1:
            raise FormatError(f"fill pattern {self.pattern!r} must contain {UNK} exactly once")
        if self.symbol not in ("<", "^", "{"):
            raise FormatError(f"fill symbol must be one of < ^ {{, got {self.symbol!r}")

    def applies_to(self, lang: str) -> bool:
        return self.enabled and (self.langs is None or lang in self.langs)


DEFAULT_KEYWORDS = KeywordMap((
    KeywordRow("null", {"c": "NULL", "java": "null", "javascript": "null", "python": "None"}),
    KeywordRow("max", {"c": "max", "java": "Math.max", "javascript": "Math.max",
                       "python": "max"}, call_only=True),
    KeywordRow("min", {"c": "min", "java": "Math.min", "javascript": "Math.min",
                       "python": "min"}, call_only=True),
    KeywordRow("member", {"c": "->", "java": ".", "javascript": ".", "python": "."},
               enabled=False),
))

_CLIKE = ("c", "java", "javascript")

# Highest priority first.
DEFAULT_FILL_RULES = (
    FillRule(r"\s*<unk>(?==)", "<"),
    FillRule(r"\s*<unk>\s*$", "{", _CLIKE),
    FillRule(r"<unk>(?=\s*\})", "{"),
    FillRule(r"(?<=\s)<unk>(?=\s)", "<"),
    FillRule(r"(?<=\w)<unk>(?=\w)", "<", ("java",)),
    FillRule(r"(?<=[\w)] )<unk>(?= [\w(])", "^", enabled=False),
)


# --- string-literal aware scanning -------------------------------------------

def split_literals(text: str) -> list[tuple[bool, str]]:
    """Split into ``(is_literal, segment)`` pieces; quotes: ' " and `."""
    out, buf, i = [], [], 0
    while i < len(text):
        ch = text[i]
        if ch in "'\"`":
            if buf:
                out.append((False, "".join(buf)))
                buf = []
            j = i + 1
            while j < len(text) and text[j] != ch:
                j += 2 if text[j] == "\\" else 1
            j = min(j + 1, len(text))
            out.append((True, text[i:j]))
            i = j
        else:
            buf.append(ch)
            i += 1
    if buf:
        out.append((False, "".join(buf)))
    return out


def _on_code(text: str, fn) -> str:
    return "".join(seg if lit else fn(seg) for lit, seg in split_literals(text))


# --- the three passes -----------------------------------------------------------

def map_keywords(patch: str, target_lang: str, kmap: KeywordMap = DEFAULT_KEYWORDS) -> str:
    """Rewrite other languages' spellings into ``target_lang``'s."""
    if target_lang not in LANGUAGES:
        raise ValueError(f"unsupported language {target_lang!r}")
    compiled = kmap.pattern(target_lang)
    if compiled is None:
        return patch
    regex, targets = compiled

    def fn(seg):
        return regex.sub(lambda m: targets[int(m.lastgroup[1:])], seg)

    return _on_code(patch, fn)


_SPLIT_OP = re.compile(r"(?<=[=!<>])[ \t]+(?==)")


def fix_format(patch: str) -> str:
    """Join operators split by blanks: ``= =`` -> ``==``, ``!= =`` -> ``!==``, ..."""
    return _on_code(patch, lambda seg: _SPLIT_OP.sub("", seg))


def fill_unknown(patch: str, lang: str,
                 rules: Sequence[FillRule] = DEFAULT_FILL_RULES) -> str:
    """Replace sentinels by rule symbols; unmatched sentinels are left in place."""
    active = [(re.compile(r.pattern), r.symbol) for r in rules if r.applies_to(lang)]
    while UNK in patch:
        before = patch
        for regex, symbol in active:
            patch = regex.sub(symbol, patch)
        if patch == before:
            break
    return patch


def rerepair(patch: str, lang: str, kmap: KeywordMap = DEFAULT_KEYWORDS,
             rules: Sequence[FillRule] = DEFAULT_FILL_RULES) -> str:
    return fill_unknown(fix_format(map_keywords(patch, lang, kmap)), lang, rules)


# --- table file -------------------------------------------------------------------

def parse_table(text: str) -> tuple[KeywordMap, tuple[FillRule, ...]]:
    """Parse a keyword/fill table.

    ``[keywords]`` holds a header ``name | <lang> | ... | flags`` and one row
    per semantic group (``-`` for a missing spelling, flags ``call`` and
    ``disabled``). ``[fill]`` holds ``pattern => symbol [lang,lang] [disabled]``
    lines in priority order. ``#`` starts a comment line.
    """
    section, header, rows, rules = None, None, [], []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line in ("[keywords]", "[fill]"):
            section = line[1:-1]
            continue
        if section == "keywords":
            cells = [c.strip() for c in line.split("|")]
            if header is None:
                header = cells
                bad = [c for c in header[1:] if c not in LANGUAGES and c != "flags"]
                if header[0] != "name" or bad:
                    raise FormatError(f"line {lineno}: bad keyword header")
                continue
            if len(cells) < len(header):
                cells += [""] * (len(header) - len(cells))
            rec = dict(zip(header, cells))
            flags = set(rec.pop("flags", "").split()) - {"-"}
            name = rec.pop("name")
            spellings = {k: v for k, v in rec.items() if v and v != "-"}
            rows.append(KeywordRow(name, spellings, "call" in flags, "disabled" not in flags))
        elif section == "fill":
            m = re.match(r"^(.*\S)\s+=>\s+(\S)(?:\s+\[([\w,\s]*)\])?(\s+disabled)?$", line)
            if not m:
                raise FormatError(f"line {lineno}: expected 'pattern => symbol [langs]'")
            langs = tuple(l.strip() for l in m.group(3).split(",")) if m.group(3) else None
            rules.append(FillRule(m.group(1), m.group(2), langs, m.group(4) is None))
        else:
            raise FormatError(f"line {lineno}: content outside a section")
    return KeywordMap(tuple(rows)), tuple(rules)


def format_table(kmap: KeywordMap = DEFAULT_KEYWORDS,
                 rules: Iterable[FillRule] = DEFAULT_FILL_RULES) -> str:
    lines = ["[keywords]", "name | " + " | ".join(TABLE_LANGS) + " | flags"]
    for r in kmap.rows:
        flags = " ".join(f for f, on in (("call", r.call_only), ("disabled", not r.enabled)) if on)
        cells = [r.spellings.get(l, "-") for l in TABLE_LANGS]
        lines.append(" | ".join([r.name, *cells, flags or "-"]))
    lines.append("[fill]")
    for r in rules:
        line = f"{r.pattern} => {r.symbol}"
        if r.langs is not None:
            line += " [" + ",".join(r.langs) + "]"
        if not r.enabled:
            line += " disabled"
        lines.append(line)
    return "\n".join(lines) + "\n"


def load_table(path) -> tuple[KeywordMap, tuple[FillRule, ...]]:
    return parse_table(Path(path).read_text(encoding="utf-8"))
