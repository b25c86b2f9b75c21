"""Small pre-norm encoder-decoder transformer over one flat parameter vector.

Every parameter lives in a single 1-D tensor; named views into it are handed
to :func:`torch.func.functional_call`. Fisher estimation and the EWC penalty
can then index parameters uniformly.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F
from torch.func import functional_call

from .corpus import truncate_tokens
from .errors import CompatibilityError, ConfigurationError, FormatError, InputError
from .prompt import PromptedExample
from .tokenizer import Vocabulary, encode

CKPT_MAGIC = "#polyrepair-ckpt v1"


@dataclass(frozen=True)
class ModelConfig:
    vocab_size: int
    layers: int = 2
    heads: int = 4
    d_model: int = 64
    d_ff: int = 128
    dropout: float = 0.1
    max_positions: int = 512

    def __post_init__(self):
        if self.d_model % self.heads:
            raise ConfigurationError("d_model must be divisible by heads")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigurationError("dropout must lie in [0, 1)")
        if min(self.vocab_size, self.layers, self.heads, self.d_ff, self.max_positions) < 1:
            raise ConfigurationError("model dimensions must be positive")


class MultiHeadAttention(nn.Module):
    def __init__(self, d_model, heads):
        super().__init__()
        self.heads = heads
        self.q = nn.Linear(d_model, d_model)
        self.k = nn.Linear(d_model, d_model)
        self.v = nn.Linear(d_model, d_model)
        self.o = nn.Linear(d_model, d_model)

    def forward(self, x, mem, mask):
        # mask: broadcastable to (B, 1, Tq, Tk), True where attention is blocked
        B, Tq, D = x.shape
        Tk = mem.shape[1]
        h, dh = self.heads, D // self.heads
        q = self.q(x).view(B, Tq, h, dh).transpose(1, 2)
        k = self.k(mem).view(B, Tk, h, dh).transpose(1, 2)
        v = self.v(mem).view(B, Tk, h, dh).transpose(1, 2)
        scores = q @ k.transpose(-1, -2) / math.sqrt(dh)
        if mask is not None:
            scores = scores.masked_fill(mask, float("-inf"))
        attn = torch.softmax(scores, dim=-1)
        out = (attn @ v).transpose(1, 2).reshape(B, Tq, D)
        return self.o(out)


class FeedForward(nn.Module):
    def __init__(self, d_model, d_ff):
        super().__init__()
        self.w1 = nn.Linear(d_model, d_ff)
        self.w2 = nn.Linear(d_ff, d_model)

    def forward(self, x):
        return self.w2(F.gelu(self.w1(x)))


class EncoderLayer(nn.Module):
    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.ln1 = nn.LayerNorm(cfg.d_model)
        self.attn = MultiHeadAttention(cfg.d_model, cfg.heads)
        self.ln2 = nn.LayerNorm(cfg.d_model)
        self.ff = FeedForward(cfg.d_model, cfg.d_ff)
        self.drop = nn.Dropout(cfg.dropout)

    def forward(self, x, mask):
        h = self.ln1(x)
        x = x + self.drop(self.attn(h, h, mask))
        return x + self.drop(self.ff(self.ln2(x)))


class DecoderLayer(nn.Module):
    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.ln1 = nn.LayerNorm(cfg.d_model)
        self.self_attn = MultiHeadAttention(cfg.d_model, cfg.heads)
        self.ln2 = nn.LayerNorm(cfg.d_model)
        self.cross_attn = MultiHeadAttention(cfg.d_model, cfg.heads)
        self.ln3 = nn.LayerNorm(cfg.d_model)
        self.ff = FeedForward(cfg.d_model, cfg.d_ff)
        self.drop = nn.Dropout(cfg.dropout)

    def forward(self, y, mem, self_mask, mem_mask):
        h = self.ln1(y)
        y = y + self.drop(self.self_attn(h, h, self_mask))
        y = y + self.drop(self.cross_attn(self.ln2(y), mem, mem_mask))
        return y + self.drop(self.ff(self.ln3(y)))


class Seq2Seq(nn.Module):
    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.cfg = cfg
        self.embed = nn.Embedding(cfg.vocab_size, cfg.d_model)
        self.enc_pos = nn.Embedding(cfg.max_positions, cfg.d_model)
        self.dec_pos = nn.Embedding(cfg.max_positions, cfg.d_model)
        self.encoder = nn.ModuleList(EncoderLayer(cfg) for _ in range(cfg.layers))
        self.enc_norm = nn.LayerNorm(cfg.d_model)
        self.decoder = nn.ModuleList(DecoderLayer(cfg) for _ in range(cfg.layers))
        self.dec_norm = nn.LayerNorm(cfg.d_model)
        self.lm_head = nn.Linear(cfg.d_model, cfg.vocab_size, bias=False)
        self.drop = nn.Dropout(cfg.dropout)

    def encode(self, src, src_pad):
        pos = torch.arange(src.shape[1], device=src.device)
        x = self.drop(self.embed(src) + self.enc_pos(pos))
        mask = src_pad[:, None, None, :]
        for layer in self.encoder:
            x = layer(x, mask)
        return self.enc_norm(x)

    def decode(self, mem, src_pad, tgt):
        T = tgt.shape[1]
        pos = torch.arange(T, device=tgt.device)
        y = self.drop(self.embed(tgt) + self.dec_pos(pos))
        causal = torch.ones(T, T, dtype=torch.bool, device=tgt.device).triu(1)
        mem_mask = src_pad[:, None, None, :]
        for layer in self.decoder:
            y = layer(y, mem, causal, mem_mask)
        return self.lm_head(self.dec_norm(y))

    def forward(self, src, src_pad, tgt=None, mem=None):
        # tgt=None returns encoder memory; a precomputed mem skips the encoder
        if mem is None:
            mem = self.encode(src, src_pad)
        if tgt is None:
            return mem
        return self.decode(mem, src_pad, tgt)


_MODULES: dict[ModelConfig, Seq2Seq] = {}


def get_module(cfg: ModelConfig) -> Seq2Seq:
    mod = _MODULES.get(cfg)
    if mod is None:
        mod = _MODULES[cfg] = Seq2Seq(cfg)
        mod.requires_grad_(False)
    return mod


def param_layout(cfg: ModelConfig) -> list[tuple[str, tuple[int, ...]]]:
    """Stable (name, shape) order defining the flat index map."""
    return [(n, tuple(p.shape)) for n, p in get_module(cfg).named_parameters()]


def param_count(cfg: ModelConfig) -> int:
    return sum(math.prod(s) for _, s in param_layout(cfg))


def unflatten(params: torch.Tensor, cfg: ModelConfig) -> dict[str, torch.Tensor]:
    layout = param_layout(cfg)
    sizes = [math.prod(s) for _, s in layout]
    if params.numel() != sum(sizes):
        raise CompatibilityError(
            f"parameter vector has {params.numel()} entries, config needs {sum(sizes)}")
    chunks = torch.split(params, sizes)
    return {name: c.view(shape) for (name, shape), c in zip(layout, chunks)}


def init_params(cfg: ModelConfig, seed: int = 0, dtype=torch.float32) -> torch.Tensor:
    """Seeded initialisation: N(0, 0.02) weights, zero biases, unit norm gains."""
    gen = torch.Generator().manual_seed(seed)
    parts = []
    for name, shape in param_layout(cfg):
        n = math.prod(shape)
        leaf = name.rsplit(".", 1)[-1]
        if ".ln" in name or "norm" in name:
            val = torch.ones(n) if leaf == "weight" else torch.zeros(n)
        elif leaf == "bias":
            val = torch.zeros(n)
        else:
            val = torch.randn(n, generator=gen) * 0.02
        parts.append(val)
    return torch.cat(parts).to(dtype)


class Checkpoint:
    """Immutable snapshot of model parameters, tied to one vocabulary."""

    __slots__ = ("params", "config", "vocab_ref", "task_id")

    def __init__(self, params: torch.Tensor, config: ModelConfig, vocab_ref: str,
                 task_id: int = 0):
        params = params.detach().clone().contiguous()
        if params.dim() != 1 or params.numel() != param_count(config):
            raise CompatibilityError("parameter vector does not match config")
        object.__setattr__(self, "params", params)
        object.__setattr__(self, "config", config)
        object.__setattr__(self, "vocab_ref", vocab_ref)
        object.__setattr__(self, "task_id", task_id)

    def __setattr__(self, name, value):
        raise AttributeError("Checkpoint is immutable")

    def __eq__(self, other):
        return (isinstance(other, Checkpoint) and self.config == other.config
                and self.vocab_ref == other.vocab_ref and self.task_id == other.task_id
                and self.params.dtype == other.params.dtype
                and torch.equal(self.params, other.params))

    __hash__ = None

    def replace(self, params=None, task_id=None) -> "Checkpoint":
        return Checkpoint(self.params if params is None else params, self.config,
                          self.vocab_ref, self.task_id if task_id is None else task_id)

    def __repr__(self):
        return (f"Checkpoint(task_id={self.task_id}, n_params={self.params.numel()}, "
                f"vocab_ref={self.vocab_ref[:12]})")


def new_checkpoint(cfg: ModelConfig, vocab: Vocabulary, seed: int = 0,
                   dtype=torch.float32) -> Checkpoint:
    return Checkpoint(init_params(cfg, seed, dtype), cfg, vocab.hash(), 0)


# --- encoding helpers ---------------------------------------------------------

@dataclass(frozen=True)
class EncodedExample:
    src: tuple[int, ...]
    tgt: tuple[int, ...]  # gold ids ending with eos
    origin_id: str = ""


def encode_example(ex: PromptedExample, vocab: Vocabulary, max_len: int = 512) -> EncodedExample:
    src = truncate_tokens(encode(ex.source_text, vocab), max_len)
    tgt = truncate_tokens(encode(ex.target_text, vocab), max_len - 1) + [vocab.eos_id]
    return EncodedExample(tuple(src), tuple(tgt), ex.origin_id)


def _check_lengths(cfg, *seqs):
    for s in seqs:
        if len(s) > cfg.max_positions:
            raise InputError(f"sequence of length {len(s)} exceeds max_positions "
                             f"{cfg.max_positions}")


def _pad(seqs, pad_id=0):
    T = max(len(s) for s in seqs)
    out = torch.full((len(seqs), T), pad_id, dtype=torch.long)
    for i, s in enumerate(seqs):
        out[i, :len(s)] = torch.as_tensor(list(s), dtype=torch.long)
    return out


def batch_logits(params: torch.Tensor, cfg: ModelConfig, srcs: Sequence[Sequence[int]],
                 tgt_in: Sequence[Sequence[int]], train_mode: bool = False,
                 pad_id: int = 0) -> torch.Tensor:
    """Logits of shape (B, T, V) for padded batches of sources and decoder inputs."""
    _check_lengths(cfg, *srcs, *tgt_in)
    src = _pad(srcs, pad_id)
    lens = torch.tensor([len(s) for s in srcs])
    src_pad = torch.arange(src.shape[1])[None, :] >= lens[:, None]
    tgt = _pad(tgt_in, pad_id)
    mod = get_module(cfg)
    mod.train(train_mode)
    return functional_call(mod, unflatten(params, cfg), (src, src_pad, tgt))


def forward(ckpt: Checkpoint, src: Sequence[int], tgt_prefix: Sequence[int],
            train_mode: bool = False) -> torch.Tensor:
    """Logits (len(tgt_prefix), V); row t predicts the token after tgt_prefix[:t+1]."""
    with torch.no_grad():
        return batch_logits(ckpt.params, ckpt.config, [src], [tgt_prefix], train_mode)[0]


def example_losses(params: torch.Tensor, cfg: ModelConfig, examples: Sequence[EncodedExample],
                   train_mode: bool = False, bos_id: int = 1) -> torch.Tensor:
    """Teacher-forced summed token cross-entropy per example, shape (B,)."""
    if any(len(e.tgt) < 1 for e in examples):
        raise InputError("target must contain at least one token")
    tgt_in = [(bos_id,) + e.tgt[:-1] for e in examples]
    logits = batch_logits(params, cfg, [e.src for e in examples], tgt_in, train_mode)
    gold = _pad([e.tgt for e in examples], -100)
    nll = F.cross_entropy(logits.transpose(1, 2), gold, ignore_index=-100, reduction="none")
    return nll.sum(dim=1)


def loss(ckpt: Checkpoint, ex: EncodedExample) -> float:
    with torch.no_grad():
        return float(example_losses(ckpt.params, ckpt.config, [ex])[0])


# --- persistence ----------------------------------------------------------------

def save_checkpoint(ckpt: Checkpoint, path) -> None:
    header = {"config": asdict(ckpt.config), "vocab_ref": ckpt.vocab_ref,
              "task_id": ckpt.task_id, "n_params": ckpt.params.numel(),
              "dtype": "float32-le"}
    data = ckpt.params.detach().to(torch.float32).numpy().astype("<f4").tobytes()
    with open(path, "wb") as fh:
        fh.write((CKPT_MAGIC + "\n" + json.dumps(header, sort_keys=True) + "\n").encode())
        fh.write(data)


def load_checkpoint(path, vocab: Vocabulary | str | None = None) -> Checkpoint:
    """Read a checkpoint; ``vocab`` (or its hash) is checked when given."""
    with open(path, "rb") as fh:
        magic = fh.readline().decode().rstrip("\n")
        if magic != CKPT_MAGIC:
            raise FormatError(f"{path}: not a checkpoint file")
        header = json.loads(fh.readline())
        raw = fh.read()
    expected = vocab.hash() if isinstance(vocab, Vocabulary) else vocab
    if expected is not None and expected != header["vocab_ref"]:
        raise CompatibilityError(
            f"checkpoint was trained with vocabulary {header['vocab_ref'][:12]}, "
            f"got {expected[:12]}")
    params = torch.from_numpy(np.frombuffer(raw, dtype="<f4").astype(np.float32))
    if params.numel() != header["n_params"]:
        raise FormatError(f"{path}: truncated parameter block")
    return Checkpoint(params, ModelConfig(**header["config"]), header["vocab_ref"],
                      header["task_id"])
