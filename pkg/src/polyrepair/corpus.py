"""Bug-fix corpora: synthetic generation, JSONL I/O and task streams."""

from __future__ import annotations

import hashlib
import json
import random
import re
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

from . import _snippets
from .errors import ConfigurationError, ParseError, ValidationError

LANGUAGES = ("javascript", "python", "java", "c")
DEFAULT_ORDER = ("javascript", "python", "java", "c")
FIELDS = ("id", "lang", "buggy", "context", "fixed")
MAX_TOKENS = 512


@dataclass(frozen=True)
class BugFixPair:
    id: str
    lang: str
    buggy: str
    context: str
    fixed: str

    def to_record(self) -> dict:
        return {k: getattr(self, k) for k in FIELDS}


def split_of(pair_id: str, ratios=(80, 10, 10)) -> str:
    """Deterministic train/val/test assignment from a hash of the id."""
    bucket = int(hashlib.md5(pair_id.encode("utf-8")).hexdigest(), 16) % sum(ratios)
    if bucket < ratios[0]:
        return "train"
    if bucket < ratios[0] + ratios[1]:
        return "val"
    return "test"


@dataclass(frozen=True)
class TaskDataset:
    task_id: int
    lang: str | None
    train: tuple[BugFixPair, ...] = ()
    val: tuple[BugFixPair, ...] = ()
    test: tuple[BugFixPair, ...] = ()
    order: tuple[str, ...] = field(default=(), compare=False, repr=False)

    @classmethod
    def from_pairs(cls, pairs: Sequence[BugFixPair], task_id: int = 1, lang=None,
                   ratios=(80, 10, 10)) -> "TaskDataset":
        pairs = list(pairs)
        validate_pairs(pairs, lang)
        if lang is None and pairs:
            lang = pairs[0].lang
        splits = {"train": [], "val": [], "test": []}
        for p in pairs:
            splits[split_of(p.id, ratios)].append(p)
        return cls(task_id, lang, tuple(splits["train"]), tuple(splits["val"]),
                   tuple(splits["test"]), tuple(p.id for p in pairs))

    @cached_property
    def _by_id(self):
        return {p.id: p for p in (*self.train, *self.val, *self.test)}

    def pairs(self) -> list[BugFixPair]:
        """All pairs, in original order when known."""
        if self.order:
            return [self._by_id[i] for i in self.order]
        return [*self.train, *self.val, *self.test]

    def __len__(self):
        return len(self.train) + len(self.val) + len(self.test)


@dataclass(frozen=True)
class TaskStream:
    tasks: tuple[TaskDataset, ...]

    def __post_init__(self):
        ids = [t.task_id for t in self.tasks]
        if ids != list(range(1, len(ids) + 1)):
            raise ConfigurationError(f"task ids must run 1..n in order, got {ids}")

    def __iter__(self):
        return iter(self.tasks)

    def __len__(self):
        return len(self.tasks)


def validate_pairs(pairs: Iterable[BugFixPair], lang: str | None = None) -> None:
    bad, seen, dup = [], set(), []
    langs = set()
    for p in pairs:
        if p.lang not in LANGUAGES or p.buggy == p.fixed:
            bad.append(p.id)
        if p.id in seen:
            dup.append(p.id)
        seen.add(p.id)
        langs.add(p.lang)
    if dup:
        raise ValidationError("duplicate ids", dup)
    if bad:
        raise ValidationError("invalid pairs (unknown lang or buggy == fixed)", bad)
    if lang is not None:
        langs.add(lang)
    if len(langs) > 1:
        raise ValidationError(f"mixed languages in one task: {sorted(langs)}")


# --- mutation operators -----------------------------------------------------

_CMP = r"(?<= )(===|!==|==|!=|<=|>=|<|>)(?= )"
_FLIP = {"<": ">", ">": "<", "<=": ">=", ">=": "<=", "==": "!=", "!=": "==",
         "===": "!==", "!==": "==="}
_BOUND = {"<": "<=", "<=": "<", ">": ">=", ">=": ">"}
_KEYWORDS = {
    "python": {"def", "return", "for", "in", "if", "elif", "else", "while", "not", "and",
               "or", "is", "None", "True", "False", "range", "len", "set", "dict", "list",
               "sorted", "isinstance", "append", "extend", "add", "pop", "split", "max",
               "min"},
    "java": {"public", "static", "int", "long", "boolean", "String", "char", "void",
             "return", "for", "if", "else", "while", "null", "true", "false", "new",
             "Math", "max", "min", "length", "charAt", "substring"},
    "javascript": {"function", "let", "const", "return", "for", "of", "if", "else",
                   "while", "null", "undefined", "true", "false", "typeof", "new",
                   "Math", "max", "min", "floor", "length", "Map", "self"},
    "c": {"int", "long", "char", "const", "unsigned", "struct", "void", "return", "for",
          "if", "else", "while", "NULL", "max", "min", "free", "strncpy", "node"},
}


def _sub_at(line, m, text):
    return line[:m.start()] + text + line[m.end():]


def _comparison_flip(line, lang):
    return [_sub_at(line, m, _FLIP[m.group(1)]) for m in re.finditer(_CMP, line)]


def _off_by_one(line, lang):
    out = [_sub_at(line, m, _BOUND[m.group(1)]) for m in re.finditer(_CMP, line)
           if m.group(1) in _BOUND]
    for m in re.finditer(r"(?<![\w.])(\d+)(?![\w.])", line):
        n = int(m.group(1))
        out.append(_sub_at(line, m, str(n + 1)))
        if n > 0:
            out.append(_sub_at(line, m, str(n - 1)))
    return out


def _negation(line, lang):
    out = []
    if lang == "python":
        for m in re.finditer(r"\b(if|elif|while) not ", line):
            out.append(line[:m.start()] + m.group(1) + " " + line[m.end():])
        for m in re.finditer(r"\b(if|elif|while) (?!not )", line):
            out.append(line[:m.end()] + "not " + line[m.end():])
        pairs = (("True", "False"), ("False", "True"))
    else:
        for m in re.finditer(r"\b(if|while) \(!", line):
            out.append(line[:m.end() - 1] + line[m.end():])
        for m in re.finditer(r"\b(if|while) \((?!!)", line):
            out.append(line[:m.end()] + "!" + line[m.end():])
        pairs = (("true", "false"), ("false", "true")) if lang != "c" else ()
    for a, b in pairs:
        for m in re.finditer(rf"\b{a}\b", line):
            out.append(_sub_at(line, m, b))
    return out


def _keyword_swap(line, lang):
    if lang == "python":
        swaps = {"and": "or", "or": "and", "break": "continue", "continue": "break",
                 "elif": "if"}
        pattern = r"\b(and|or|break|continue|elif)\b"
    else:
        swaps = {"&&": "||", "||": "&&", "break": "continue", "continue": "break",
                 "++": "--", "--": "++"}
        pattern = r"(&&|\|\||\bbreak\b|\bcontinue\b|\+\+|--)"
    return [_sub_at(line, m, swaps[m.group(1)]) for m in re.finditer(pattern, line)]


def _typo(line, lang):
    out = []
    keywords = _KEYWORDS[lang]
    for m in re.finditer(r"\b[A-Za-z_][A-Za-z0-9_]{2,}\b", line):
        word = m.group(0)
        if word in keywords:
            continue
        for i in range(1, len(word)):
            out.append(_sub_at(line, m, word[:i] + word[i + 1:]))
        for i in range(len(word) - 1):
            if word[i] != word[i + 1]:
                out.append(_sub_at(line, m, word[:i] + word[i + 1] + word[i] + word[i + 2:]))
    return out


def _split_top(cond, seps):
    """Spans of clauses separated by ``seps`` outside any brackets."""
    spans, depth, start, i = [], 0, 0, 0
    while i < len(cond):
        ch = cond[i]
        if ch in "([":
            depth += 1
        elif ch in ")]":
            depth -= 1
        elif depth == 0:
            sep = next((s for s in seps if cond.startswith(s, i)), None)
            if sep:
                spans.append((start, i))
                start = i + len(sep)
                i = start
                continue
        i += 1
    spans.append((start, len(cond)))
    return spans


def _drop_clause(line, lang):
    if lang == "python":
        m = re.match(r"^(\s*(?:if|elif|while) )(.+)(:)$", line)
        if not m:
            return []
        head, cond, tail = m.groups()
        seps, true = (" and ", " or "), "True"
    else:
        m = re.match(r"^(\s*(?:\} )?(?:else )?(?:if|while) \()", line)
        if not m:
            return []
        depth, end = 1, None
        for j in range(m.end(), len(line)):
            if line[j] == "(":
                depth += 1
            elif line[j] == ")":
                depth -= 1
                if depth == 0:
                    end = j
                    break
        if end is None:
            return []
        head, cond, tail = line[:m.end()], line[m.end():end], line[end:]
        seps, true = (" && ", " || "), "1" if lang == "c" else "true"
    spans = _split_top(cond, seps)
    if len(spans) == 1:
        return [head + true + tail] if cond != true else []
    out = []
    for k in range(len(spans)):
        # dropping clause k removes it together with one adjacent connector
        if k == 0:
            rebuilt = cond[spans[1][0]:]
        else:
            rebuilt = cond[:spans[k - 1][1]] + cond[spans[k][1]:]
        out.append(head + rebuilt + tail)
    return out


MUTATIONS = {
    "comparison_flip": _comparison_flip,
    "off_by_one": _off_by_one,
    "negation": _negation,
    "keyword_swap": _keyword_swap,
    "identifier_typo": _typo,
    "drop_clause": _drop_clause,
}


def mutate_line(line: str, lang: str, op: str) -> list[str]:
    """All distinct mutants of ``line`` under one operator (possibly empty)."""
    seen, out = {line}, []
    for cand in MUTATIONS[op](line, lang):
        if cand.strip() != line.strip() and cand not in seen:
            seen.add(cand)
            out.append(cand)
    return out


def _mutable(line):
    s = line.strip()
    return len(s) > 2 and s not in ("else:", "} else {", "return result;", "return a;")


def generate_synthetic_corpus(lang: str, seed: int, n: int, task_id: int = 1,
                              ratios=(80, 10, 10)) -> TaskDataset:
    """Inject one mutation per pair into snippets from the built-in bank.

    ``fixed`` is the original line, ``buggy`` the mutant and ``context`` the
    whole snippet (with the mutant in place) flattened onto one line.
    """
    if lang not in _snippets.BANK:
        raise ConfigurationError(f"unsupported language {lang!r}")
    if n < 1:
        raise ConfigurationError("n must be >= 1")
    rng = random.Random(f"{lang}:{seed}")
    bank = [s.split("\n") for s in _snippets.BANK[lang]]
    ops = sorted(MUTATIONS)
    pairs = []
    while len(pairs) < n:
        lines = rng.choice(bank)
        idx = rng.choice([i for i, l in enumerate(lines) if _mutable(l)])
        order = ops[:]
        rng.shuffle(order)
        for op in order:
            cands = mutate_line(lines[idx], lang, op)
            if cands:
                break
        else:
            continue
        mutant = rng.choice(cands)
        ctx = [l.strip() for l in lines]
        ctx[idx] = mutant.strip()
        pairs.append(BugFixPair(
            id=f"{lang}-{seed}-{len(pairs):05d}",
            lang=lang,
            buggy=mutant.strip(),
            context=" ".join(ctx),
            fixed=lines[idx].strip(),
        ))
    return TaskDataset.from_pairs(pairs, task_id=task_id, lang=lang, ratios=ratios)


# --- file I/O -----------------------------------------------------------------

def read_pairs(path) -> list[BugFixPair]:
    """Parse a JSONL corpus file without split assignment."""
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            if not raw.strip():
                continue
            try:
                rec = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON ({exc.msg})", lineno) from None
            if not isinstance(rec, dict):
                raise ParseError("record is not an object", lineno)
            missing = [k for k in FIELDS if k not in rec]
            if missing:
                raise ParseError(f"missing field(s) {', '.join(missing)}", lineno)
            if not all(isinstance(rec[k], str) for k in FIELDS):
                raise ParseError("all fields must be strings", lineno)
            pairs.append(BugFixPair(**{k: rec[k] for k in FIELDS}))
    return pairs


def load_corpus(path, task_id: int = 1, lang: str | None = None) -> TaskDataset:
    return TaskDataset.from_pairs(read_pairs(path), task_id=task_id, lang=lang)


def save_corpus(pairs, path) -> None:
    if isinstance(pairs, TaskDataset):
        pairs = pairs.pairs()
    with open(path, "w", encoding="utf-8") as fh:
        for p in pairs:
            fh.write(json.dumps(p.to_record(), ensure_ascii=False) + "\n")


def truncate_tokens(ids: Sequence[int], max_len: int = MAX_TOKENS) -> list[int]:
    """Keep the head of a token sequence."""
    if max_len < 1:
        raise ConfigurationError("max_len must be >= 1")
    return list(ids[:max_len])


# --- task stream ----------------------------------------------------------------

@dataclass(frozen=True)
class StreamTask:
    task_id: int
    lang: str
    corpus: str | None = None
    n: int | None = None
    seed: int = 0


def parse_stream(tasks: Sequence[dict], base_dir=".") -> list[StreamTask]:
    """Validate a declarative task list (from JSON/YAML config)."""
    out = []
    for i, t in enumerate(tasks, 1):
        t = dict(t)
        t.setdefault("task_id", i)
        if t["task_id"] != i:
            raise ConfigurationError(f"task {i}: task_id must be {i}, got {t['task_id']}")
        if t.get("lang") not in LANGUAGES:
            raise ConfigurationError(f"task {i}: unsupported lang {t.get('lang')!r}")
        corpus = t.get("corpus")
        if corpus is None and not t.get("n"):
            raise ConfigurationError(f"task {i}: needs either 'corpus' or 'n'")
        if corpus is not None:
            corpus = str(Path(base_dir) / corpus)
            if not Path(corpus).exists():
                raise ConfigurationError(f"task {i}: corpus {corpus} not found")
        out.append(StreamTask(i, t["lang"], corpus, t.get("n"), int(t.get("seed", 0))))
    if not out:
        raise ConfigurationError("stream has no tasks")
    return out


def build_stream(tasks: Sequence[StreamTask]) -> TaskStream:
    datasets = []
    for t in tasks:
        if t.corpus is not None:
            datasets.append(load_corpus(t.corpus, task_id=t.task_id, lang=t.lang))
        else:
            datasets.append(generate_synthetic_corpus(t.lang, t.seed, t.n, task_id=t.task_id))
    return TaskStream(tuple(datasets))
