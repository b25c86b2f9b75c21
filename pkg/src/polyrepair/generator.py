"""Candidate patch generation: beam search topped up with filtered sampling."""

from __future__ import annotations

import zlib
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import torch
from torch.func import functional_call

from .corpus import BugFixPair, truncate_tokens
from .errors import ConfigurationError
from .model import Checkpoint, get_module, unflatten
from .prompt import render_prompt
from .tokenizer import Vocabulary, decode, encode

PAD_ID, BOS_ID, EOS_ID = Vocabulary.pad_id, Vocabulary.bos_id, Vocabulary.eos_id


@dataclass(frozen=True)
class GenConfig:
    beam: int = 8
    top_k: int = 10
    top_p: float = 0.95
    max_candidates: int = 32
    max_len: int = 64
    seed: int = 0
    min_len: int = 1
    length_norm: bool = False
    sample_rounds: int = 4

    def __post_init__(self):
        if self.beam < 1:
            raise ConfigurationError("beam must be >= 1")
        if not 0.0 < self.top_p <= 1.0:
            raise ConfigurationError("top_p must lie in (0, 1]")
        if self.top_k < 1:
            raise ConfigurationError("top_k must be >= 1")
        if self.max_candidates < self.beam:
            raise ConfigurationError("max_candidates must be >= beam")
        if self.max_len < 1:
            raise ConfigurationError("max_len must be >= 1")


@dataclass(frozen=True)
class CandidatePatch:
    text: str
    logprob: float
    rank: int
    source: str  # "beam" or "sample"
    ids: tuple[int, ...] = ()


class _Decoder:
    """Encodes the source once and scores next tokens for many prefixes."""

    def __init__(self, ckpt: Checkpoint, src: Sequence[int]):
        self.cfg = ckpt.config
        self.mod = get_module(self.cfg)
        self.mod.train(False)
        self.params = unflatten(ckpt.params, self.cfg)
        src_t = torch.as_tensor([list(src)], dtype=torch.long)
        self.src_pad = torch.zeros_like(src_t, dtype=torch.bool)
        with torch.no_grad():
            self.mem = functional_call(self.mod, self.params, (src_t, self.src_pad))

    def next_logprobs(self, prefixes: Sequence[Sequence[int]]) -> np.ndarray:
        n = len(prefixes)
        tgt = torch.as_tensor([[BOS_ID, *p] for p in prefixes], dtype=torch.long)
        with torch.no_grad():
            logits = functional_call(
                self.mod, self.params,
                (None, self.src_pad.expand(n, -1), tgt),
                {"mem": self.mem.expand(n, -1, -1)})
        return torch.log_softmax(logits[:, -1].double(), dim=-1).numpy()


def _banned(V, step, cfg):
    mask = np.zeros(V, dtype=bool)
    mask[[PAD_ID, BOS_ID]] = True
    if step < cfg.min_len:
        mask[EOS_ID] = True
    return mask


def _patches(hyps, vocab, source):
    return [CandidatePatch(decode(ids, vocab) if vocab is not None else "", lp, r, source,
                           tuple(ids)) for r, (ids, lp) in enumerate(hyps, 1)]


def beam_search(ckpt: Checkpoint, src: Sequence[int], cfg: GenConfig,
                vocab: Vocabulary | None = None) -> list[CandidatePatch]:
    """Length-bounded beam search.

    Returns every hypothesis finished during the search, best first; ``ids``
    exclude eos and ``text`` is filled in when ``vocab`` is given. A hypothesis finishes when it emits eos
    inside the top ``beam`` candidates of a step, or at ``max_len``, where
    each surviving hypothesis contributes its ``beam`` best final tokens.
    """
    dec = _Decoder(ckpt, src)
    alive: list[tuple[tuple[int, ...], float]] = [((), 0.0)]
    finished: list[tuple[tuple[int, ...], float]] = []
    for step in range(cfg.max_len):
        logp = dec.next_logprobs([toks for toks, _ in alive])
        logp[:, _banned(logp.shape[1], step, cfg)] = -np.inf
        scores = np.array([s for _, s in alive])[:, None] + logp
        if step == cfg.max_len - 1:
            for b, (toks, _) in enumerate(alive):
                row = scores[b]
                for v in _top_ids(row, cfg.beam):
                    finished.append((toks if v == EOS_ID else toks + (v,), float(row[v])))
            break
        flat = scores.ravel()
        V = logp.shape[1]
        nxt = []
        for idx in _top_ids(flat, cfg.beam):
            b, v = divmod(int(idx), V)
            toks = alive[b][0]
            if v == EOS_ID:
                finished.append((toks, float(flat[idx])))
            else:
                nxt.append((toks + (v,), float(flat[idx])))
        alive = nxt
        if not alive:
            break
    key = _norm_key(cfg)
    return _patches(sorted(finished, key=lambda h: (-key(h), h[0])), vocab, "beam")


def _top_ids(row: np.ndarray, k: int) -> list[int]:
    """Indices of the k largest finite entries, ties to the lower index."""
    finite = np.flatnonzero(np.isfinite(row))
    order = finite[np.lexsort((finite, -row[finite]))]
    return order[:k].tolist()


def _norm_key(cfg):
    if cfg.length_norm:
        return lambda h: h[1] / (len(h[0]) + 1)
    return lambda h: h[1]


def greedy(ckpt: Checkpoint, src: Sequence[int], max_len: int, min_len: int = 1):
    """Argmax decoding, used as the beam=1 reference."""
    dec = _Decoder(ckpt, src)
    toks, total = (), 0.0
    cfg = GenConfig(beam=1, max_candidates=1, max_len=max_len, min_len=min_len)
    for step in range(max_len):
        logp = dec.next_logprobs([toks])[0]
        logp[_banned(len(logp), step, cfg)] = -np.inf
        v = _top_ids(logp, 1)[0]
        total += float(logp[v])
        if v == EOS_ID:
            break
        toks += (v,)
    return toks, total


def filter_distribution(probs: np.ndarray, top_k: int, top_p: float):
    """Top-k intersected with the smallest nucleus of mass >= top_p.

    Returns ``(ids, renormalised probabilities)`` in descending-probability
    order; ``probs`` must already have banned entries zeroed.
    """
    order = np.argsort(-probs, kind="stable")
    order = order[probs[order] > 0]
    sorted_p = probs[order] / probs[order].sum()
    cum = np.cumsum(sorted_p)
    nucleus = int(np.searchsorted(cum, top_p - 1e-12) + 1)
    keep = order[:min(top_k, nucleus, len(order))]
    p = probs[keep]
    return keep, p / p.sum()


def filtered_sample(ckpt: Checkpoint, src: Sequence[int], cfg: GenConfig, n: int,
                    rng: np.random.Generator | None = None, trace: list | None = None,
                    vocab: Vocabulary | None = None) -> list[CandidatePatch]:
    """Draw ``n`` sequences token by token from the filtered distribution.

    ``trace``, when given, receives ``(step, allowed_ids, chosen_id)`` for
    every emitted token.
    """
    if n <= 0:
        return []
    rng = np.random.default_rng(cfg.seed) if rng is None else rng
    dec = _Decoder(ckpt, src)
    seqs = [()] * n
    scores = np.zeros(n)
    active = list(range(n))
    for step in range(cfg.max_len):
        if not active:
            break
        logp = dec.next_logprobs([seqs[i] for i in active])
        banned = _banned(logp.shape[1], step, cfg)
        still = []
        for row, i in zip(logp, active):
            probs = np.exp(row)
            probs[banned] = 0.0
            ids, p = filter_distribution(probs, cfg.top_k, cfg.top_p)
            v = int(ids[min(int(np.searchsorted(np.cumsum(p), rng.random(), side="right")),
                            len(ids) - 1)])
            if trace is not None:
                trace.append((step, ids.tolist(), v))
            scores[i] += row[v]
            if v != EOS_ID:
                seqs[i] = seqs[i] + (v,)
                still.append(i)
        active = still
    return _patches([(seqs[i], float(scores[i])) for i in range(n)], vocab, "sample")


def merge_candidates(beam_hyps: Sequence[CandidatePatch], sampled: Sequence[CandidatePatch],
                     cap: int) -> list[CandidatePatch]:
    """Rank beam hypotheses ahead of samples, dropping repeated texts."""
    out, seen = [], set()
    for c in (*beam_hyps, *sampled):
        if len(out) >= cap:
            break
        if c.text in seen:
            continue
        seen.add(c.text)
        out.append(CandidatePatch(c.text, c.logprob, len(out) + 1, c.source, c.ids))
    return out


def source_ids(pair: BugFixPair, vocab: Vocabulary, prompt_enabled: bool = True,
               max_len: int = 512) -> list[int]:
    return truncate_tokens(encode(render_prompt(pair, prompt_enabled).source_text, vocab), max_len)


def generate_patches(ckpt: Checkpoint, pair: BugFixPair, vocab: Vocabulary, cfg: GenConfig,
                     prompt_enabled: bool = True) -> list[CandidatePatch]:
    src = source_ids(pair, vocab, prompt_enabled, ckpt.config.max_positions)
    beam_hyps = beam_search(ckpt, src, cfg, vocab)
    out = merge_candidates(beam_hyps, [], cfg.max_candidates)
    if len(out) >= cfg.max_candidates:
        return out
    rng = np.random.default_rng([cfg.seed, zlib.crc32(pair.id.encode())])
    sampled: list = []
    for _ in range(cfg.sample_rounds):
        sampled += filtered_sample(ckpt, src, cfg, cfg.max_candidates - len(out), rng,
                                   vocab=vocab)
        out = merge_candidates(beam_hyps, sampled, cfg.max_candidates)
        if len(out) >= cfg.max_candidates:
            break
    return out
