"""Frozen subword vocabulary learned once with byte-pair merges.

Characters listed in ``excluded`` never enter the alphabet, so they always
encode to the unknown token. This reproduces the rare-symbol defect that the
unknown-token fill in :mod:`polyrepair.rerepair` is meant to undo.
"""

from __future__ import annotations

import hashlib
import json
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import ConfigurationError, DecodeError, FormatError

PAD, BOS, EOS, UNK = "<pad>", "<bos>", "<eos>", "<unk>"
SPECIALS = (PAD, BOS, EOS, UNK)
DEFAULT_EXCLUDED = ("<", "^", "{")
PRINTABLE = tuple(chr(c) for c in range(32, 127))
HEADER = "#polyrepair-vocab v1"
MIN_SIZE = 64

_CHUNK = re.compile(r"\s*[A-Za-z0-9_]+|\s*[^A-Za-z0-9_\s]+|\s+")


def pretokenize(text: str) -> list[str]:
    """Lossless split into word/punctuation chunks carrying leading spaces."""
    return _CHUNK.findall(text)


@dataclass(frozen=True)
class Vocabulary:
    tokens: tuple[str, ...]
    excluded: tuple[str, ...] = DEFAULT_EXCLUDED
    _cache: dict = field(default_factory=dict, compare=False, repr=False, hash=False)

    def __post_init__(self):
        if tuple(self.tokens[:4]) != SPECIALS:
            raise FormatError("vocabulary must start with the four special tokens")
        for tok in self.tokens[4:]:
            if any(sym in tok for sym in self.excluded):
                raise FormatError(f"token {tok!r} contains an excluded symbol")
        if len(set(self.tokens)) != len(self.tokens):
            raise FormatError("duplicate tokens in vocabulary")

    pad_id = 0
    bos_id = 1
    eos_id = 2
    unk_id = 3

    def __len__(self):
        return len(self.tokens)

    @property
    def _index(self):
        idx = self._cache.get("index")
        if idx is None:
            idx = {t: i for i, t in enumerate(self.tokens) if i >= 4}
            self._cache["index"] = idx
            self._cache["maxlen"] = max((len(t) for t in idx), default=1)
            self._cache["chunks"] = {}
        return idx

    def serialize(self) -> str:
        lines = [HEADER, f"size {len(self.tokens)}",
                 "specials " + json.dumps(list(SPECIALS)),
                 "excluded " + json.dumps(list(self.excluded)), "---"]
        lines += [json.dumps(t) for t in self.tokens]
        return "\n".join(lines) + "\n"

    def hash(self) -> str:
        h = self._cache.get("hash")
        if h is None:
            h = hashlib.sha256(self.serialize().encode("utf-8")).hexdigest()
            self._cache["hash"] = h
        return h

    @classmethod
    def parse(cls, text: str) -> "Vocabulary":
        lines = text.splitlines()
        if not lines or lines[0] != HEADER:
            raise FormatError("not a vocabulary file")
        try:
            sep = lines.index("---")
            meta = dict(l.split(" ", 1) for l in lines[1:sep])
            tokens = tuple(json.loads(l) for l in lines[sep + 1:])
            excluded = tuple(json.loads(meta["excluded"]))
            size = int(meta["size"])
        except (ValueError, KeyError) as exc:
            raise FormatError(f"malformed vocabulary file: {exc}") from None
        if size != len(tokens):
            raise FormatError(f"header says {size} tokens, found {len(tokens)}")
        return cls(tokens, excluded)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.serialize())

    @classmethod
    def load(cls, path) -> "Vocabulary":
        with open(path, encoding="utf-8") as fh:
            return cls.parse(fh.read())


def build_vocab(corpus: Sequence[str], size: int,
                excluded: Iterable[str] = DEFAULT_EXCLUDED) -> Vocabulary:
    """Learn up to ``size`` tokens (specials included) from ``corpus``.

    Merge ties go to the lexicographically smallest symbol pair so the result
    is a pure function of ``(corpus, size, excluded)``.
    """
    excluded = tuple(excluded)
    if size < MIN_SIZE:
        raise ConfigurationError(f"vocabulary size must be >= {MIN_SIZE}")
    if not corpus:
        raise ConfigurationError("cannot build a vocabulary from an empty corpus")
    alphabet = [c for c in PRINTABLE if c not in excluded]
    if size < len(SPECIALS) + len(alphabet):
        raise ConfigurationError(
            f"size {size} cannot hold the {len(SPECIALS) + len(alphabet)} base symbols")
    allowed = set(alphabet)
    chunks = Counter()
    for text in corpus:
        chunks.update(pretokenize(text))
    # None marks a barrier (excluded or unknown char) that merges never cross
    words = [([c if c in allowed else None for c in w], n) for w, n in sorted(chunks.items())]
    tokens = list(SPECIALS) + alphabet
    known = set(tokens)
    while len(tokens) < size:
        counts = Counter()
        for syms, n in words:
            for a, b in zip(syms, syms[1:]):
                if a is not None and b is not None:
                    counts[a, b] += n
        if not counts:
            break
        best = min(counts, key=lambda p: (-counts[p], p))
        if counts[best] < 2:
            break
        merged = best[0] + best[1]
        for syms, _ in words:
            i = 0
            while i < len(syms) - 1:
                if syms[i] == best[0] and syms[i + 1] == best[1]:
                    syms[i:i + 2] = [merged]
                i += 1
        if merged not in known:
            known.add(merged)
            tokens.append(merged)
    return Vocabulary(tuple(tokens), excluded)


def _encode_chunk(chunk: str, vocab: Vocabulary) -> tuple[int, ...]:
    index = vocab._index
    maxlen = vocab._cache["maxlen"]
    ids, i = [], 0
    while i < len(chunk):
        for j in range(min(len(chunk), i + maxlen), i, -1):
            tid = index.get(chunk[i:j])
            if tid is not None:
                ids.append(tid)
                i = j
                break
        else:
            ids.append(vocab.unk_id)
            i += 1
    return tuple(ids)


def encode(text: str, vocab: Vocabulary) -> list[int]:
    """Greedy longest-match segmentation; unknown characters become unk."""
    vocab._index  # warm the caches
    memo = vocab._cache["chunks"]
    out = []
    for chunk in pretokenize(text):
        ids = memo.get(chunk)
        if ids is None:
            ids = memo[chunk] = _encode_chunk(chunk, vocab)
        out.extend(ids)
    return out


def decode(ids: Sequence[int], vocab: Vocabulary) -> str:
    """Concatenate token strings; pad/bos/eos are dropped, unk shows as ``<unk>``."""
    parts = []
    n = len(vocab.tokens)
    for i in ids:
        i = int(i)
        if not 0 <= i < n:
            raise DecodeError(f"token id {i} out of range for vocabulary of {n}")
        if i == vocab.unk_id:
            parts.append(UNK)
        elif i >= 4:
            parts.append(vocab.tokens[i])
    return "".join(parts)
