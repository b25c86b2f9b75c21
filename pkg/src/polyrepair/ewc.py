"""Sampled diagonal Fisher estimate and the quadratic EWC penalty."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import torch

from .errors import CompatibilityError, FormatError, PreconditionError
from .model import Checkpoint, example_losses
from .replay import ReplayStore, encode_pairs
from .tokenizer import Vocabulary

DEFAULT_LAMBDA = 110000.0
SNAP_MAGIC = "#polyrepair-fisher v1"


@dataclass(frozen=True, eq=False)
class FisherSnapshot:
    fisher: torch.Tensor
    theta_ref: torch.Tensor
    lam: float
    sample_ids: tuple[str, ...]
    M: int
    seed: int = 0

    def __post_init__(self):
        if self.fisher.shape != self.theta_ref.shape:
            raise CompatibilityError("fisher and anchor vectors differ in length")
        if bool((self.fisher < 0).any()):
            raise ValueError("fisher entries must be nonnegative")

    def save(self, path) -> None:
        header = {"lambda": self.lam, "M": self.M, "seed": self.seed,
                  "sample_ids": list(self.sample_ids), "n": self.fisher.numel()}
        with open(path, "wb") as fh:
            fh.write((SNAP_MAGIC + "\n" + json.dumps(header, sort_keys=True) + "\n").encode())
            for vec in (self.fisher, self.theta_ref):
                fh.write(vec.detach().to(torch.float32).numpy().astype("<f4").tobytes())

    @classmethod
    def load(cls, path) -> "FisherSnapshot":
        with open(path, "rb") as fh:
            if fh.readline().decode().rstrip("\n") != SNAP_MAGIC:
                raise FormatError(f"{path}: not a fisher snapshot")
            h = json.loads(fh.readline())
            raw = np.frombuffer(fh.read(), dtype="<f4").astype(np.float32)
        n = h["n"]
        if raw.size != 2 * n:
            raise FormatError(f"{path}: truncated snapshot")
        return cls(torch.from_numpy(raw[:n].copy()), torch.from_numpy(raw[n:].copy()),
                   h["lambda"], tuple(h["sample_ids"]), h["M"], h["seed"])


def sample_indices(n: int, M: int, seed: int) -> list[int]:
    """Uniform draw without replacement, returned in ascending order."""
    if M >= n:
        return list(range(n))
    rng = np.random.default_rng(seed)
    return sorted(rng.choice(n, size=M, replace=False).tolist())


def squared_grad_mean(ckpt: Checkpoint, examples) -> torch.Tensor:
    """Mean over examples of the squared per-example loss gradient."""
    total = torch.zeros_like(ckpt.params)
    theta = ckpt.params.detach().clone().requires_grad_(True)
    for ex in examples:
        (g,) = torch.autograd.grad(example_losses(theta, ckpt.config, [ex])[0], theta)
        total += g * g
    return total / max(len(examples), 1)


def compute_fisher(ckpt: Checkpoint, store: ReplayStore, vocab: Vocabulary, M: int,
                   seed: int = 0, lam: float = DEFAULT_LAMBDA,
                   prompt_enabled: bool = True) -> FisherSnapshot:
    """Empirical diagonal Fisher on ``M`` examples sampled from the store."""
    pairs = store.pairs()
    if not pairs:
        raise PreconditionError("cannot estimate Fisher information from an empty store")
    if M < 1:
        raise PreconditionError("M must be >= 1")
    picked = [pairs[i] for i in sample_indices(len(pairs), M, seed)]
    examples = encode_pairs(picked, vocab, prompt_enabled, ckpt.config.max_positions)
    fisher = squared_grad_mean(ckpt, examples)
    return FisherSnapshot(fisher, ckpt.params.detach().clone(), float(lam),
                          tuple(p.id for p in picked), M, seed)


def _as_list(snaps):
    if snaps is None:
        return []
    if isinstance(snaps, FisherSnapshot):
        return [snaps]
    return list(snaps)


def ewc_penalty(params: torch.Tensor, snap: FisherSnapshot) -> torch.Tensor:
    """lam * sum_i F_i (params_i - ref_i)^2, differentiable in ``params``."""
    if params.shape != snap.theta_ref.shape:
        raise CompatibilityError(
            f"parameter vector of {params.numel()} vs snapshot of {snap.theta_ref.numel()}")
    ref = snap.theta_ref.to(params.dtype)
    return snap.lam * torch.sum(snap.fisher.to(params.dtype) * (params - ref) ** 2)


def ewc_penalty_grad(params: torch.Tensor, snap: FisherSnapshot) -> torch.Tensor:
    ref = snap.theta_ref.to(params.dtype)
    return 2.0 * snap.lam * snap.fisher.to(params.dtype) * (params - ref)


def total_objective(batch_loss: torch.Tensor, params: torch.Tensor,
                    snaps: FisherSnapshot | Sequence[FisherSnapshot] | None):
    """Training objective: the data loss plus every active penalty."""
    out = batch_loss
    for snap in _as_list(snaps):
        out = out + ewc_penalty(params, snap)
    return out
