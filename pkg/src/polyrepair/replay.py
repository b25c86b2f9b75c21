"""Difficulty-based example selection and the replay store."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import torch

from .corpus import BugFixPair, TaskDataset, read_pairs, save_corpus
from .errors import InputError
from .model import Checkpoint, EncodedExample, encode_example, example_losses
from .prompt import render_prompt
from .tokenizer import Vocabulary

DEFAULT_TOTAL_CAP = 20000


@dataclass(frozen=True)
class ExampleSet:
    task_id: int
    entries: tuple[tuple[BugFixPair, float], ...]
    capacity: int

    def __post_init__(self):
        if len(self.entries) > self.capacity:
            raise ValueError("example set exceeds its capacity")

    def __len__(self):
        return len(self.entries)

    @property
    def pairs(self) -> list[BugFixPair]:
        return [p for p, _ in self.entries]

    def truncated(self, capacity: int) -> "ExampleSet":
        """Drop the easiest entries so at most ``capacity`` remain."""
        return ExampleSet(self.task_id, self.entries[:capacity], capacity)


@dataclass(frozen=True)
class ReplayStore:
    sets: tuple[ExampleSet, ...] = ()
    total_cap: int = DEFAULT_TOTAL_CAP

    def __len__(self):
        return sum(len(s) for s in self.sets)

    def pairs(self) -> list[BugFixPair]:
        """Stored pairs, ordered by task then rank."""
        return [p for s in sorted(self.sets, key=lambda s: s.task_id) for p in s.pairs]

    def slot_size(self, n_tasks: int) -> int:
        return self.total_cap // max(n_tasks, 1)

    def add(self, new: ExampleSet) -> "ReplayStore":
        """Append a task's set, shrinking every set to an equal share of the cap."""
        share = self.slot_size(len(self.sets) + 1)
        sets = tuple(s.truncated(min(s.capacity, share)) for s in (*self.sets, new))
        return ReplayStore(sets, self.total_cap)

    def save(self, directory) -> None:
        """Corpus-format records plus a (task_id, difficulty, rank) sidecar."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        save_corpus(self.pairs(), directory / "replay.jsonl")
        with open(directory / "replay_meta.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["id", "task_id", "difficulty", "rank", "capacity"])
            for s in sorted(self.sets, key=lambda s: s.task_id):
                for rank, (p, d) in enumerate(s.entries):
                    w.writerow([p.id, s.task_id, repr(float(d)), rank, s.capacity])
        (directory / "replay_store.json").write_text(json.dumps(
            {"total_cap": self.total_cap,
             "sets": [{"task_id": s.task_id, "capacity": s.capacity} for s in self.sets]},
            sort_keys=True))

    @classmethod
    def load(cls, directory) -> "ReplayStore":
        directory = Path(directory)
        meta = json.loads((directory / "replay_store.json").read_text())
        by_id = {p.id: p for p in read_pairs(directory / "replay.jsonl")}
        rows: dict[int, list] = {s["task_id"]: [] for s in meta["sets"]}
        with open(directory / "replay_meta.csv", newline="") as fh:
            for r in csv.DictReader(fh):
                rows[int(r["task_id"])].append((int(r["rank"]), by_id[r["id"]],
                                                float(r["difficulty"])))
        sets = []
        for s in meta["sets"]:
            entries = tuple((p, d) for _, p, d in sorted(rows[s["task_id"]], key=lambda x: x[0]))
            sets.append(ExampleSet(s["task_id"], entries, s["capacity"]))
        return cls(tuple(sets), meta["total_cap"])


def encode_pairs(pairs: Sequence[BugFixPair], vocab: Vocabulary,
                 prompt_enabled: bool = True, max_len: int = 512) -> list[EncodedExample]:
    return [encode_example(render_prompt(p, prompt_enabled), vocab, max_len) for p in pairs]


def score_encoded(ckpt: Checkpoint, examples: Sequence[EncodedExample],
                  batch_size: int = 64) -> np.ndarray:
    """Per-token loss of each example under ``ckpt``, dropout off, in float64."""
    if any(len(e.tgt) == 0 for e in examples):
        raise InputError("difficulty needs a nonempty target")
    params = ckpt.params.to(torch.float64)
    out = []
    with torch.no_grad():
        for i in range(0, len(examples), batch_size):
            chunk = examples[i:i + batch_size]
            losses = example_losses(params, ckpt.config, chunk, train_mode=False)
            lens = torch.tensor([len(e.tgt) for e in chunk], dtype=torch.float64)
            out.append((losses / lens).numpy())
    return np.concatenate(out) if out else np.zeros(0)


def difficulty(pair: BugFixPair, ckpt: Checkpoint, vocab: Vocabulary,
               prompt_enabled: bool = True) -> float:
    """Summed target cross-entropy divided by the target length (eos included)."""
    ex = encode_pairs([pair], vocab, prompt_enabled, ckpt.config.max_positions)
    return float(score_encoded(ckpt, ex)[0])


def top_n(scores: Sequence[float], n: int) -> list[int]:
    """Indices of the ``n`` largest scores; ties go to the lower index."""
    order = sorted(range(len(scores)), key=lambda i: (-scores[i], i))
    return order[:max(n, 0)]


def select_examples(dataset: TaskDataset, ckpt: Checkpoint, vocab: Vocabulary, n: int,
                    prompt_enabled: bool = True, batch_size: int = 64) -> ExampleSet:
    train = list(dataset.train)
    if n <= 0 or not train:
        return ExampleSet(dataset.task_id, (), max(n, 0))
    scores = score_encoded(ckpt, encode_pairs(train, vocab, prompt_enabled,
                                              ckpt.config.max_positions), batch_size)
    chosen = top_n(scores.tolist(), n)
    return ExampleSet(dataset.task_id, tuple((train[i], float(scores[i])) for i in chosen), n)


def merge_training_set(current: TaskDataset, store: ReplayStore,
                       oversample: int = 1) -> list[BugFixPair]:
    """Current training split followed by the stored examples (task, then rank)."""
    return list(current.train) + store.pairs() * oversample
