"""Per-task training with early stopping, and the task-stream protocol."""

from __future__ import annotations

import csv
import json
import logging
import zlib
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
import torch

from .corpus import TaskDataset, TaskStream
from .errors import ConfigurationError
from .evaluation import EvalMatrix, evaluate_checkpoint
from .ewc import DEFAULT_LAMBDA, FisherSnapshot, compute_fisher, total_objective
from .generator import GenConfig
from .model import Checkpoint, ModelConfig, example_losses, new_checkpoint, save_checkpoint
from .prompt import render_prompt
from .replay import DEFAULT_TOTAL_CAP, ReplayStore, encode_pairs, merge_training_set, select_examples
from .tokenizer import Vocabulary, build_vocab

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    max_epochs: int = 20
    patience: int = 3
    lr: float = 3e-4
    batch_size: int = 16
    weight_decay: float = 0.01
    lam: float = DEFAULT_LAMBDA
    n_per_task: int = 200  # replay examples selected after each task
    total_cap: int = DEFAULT_TOTAL_CAP
    M: int = 200  # examples sampled for the Fisher estimate
    seed: int = 0
    prompt_enabled: bool = True
    continual_enabled: bool = True
    replay_enabled: bool = True  # only consulted when continual_enabled
    ewc_enabled: bool = True  # likewise
    oversample: int = 1  # copies of the replay set in each epoch's multiset
    ewc_accumulate: bool = False  # keep one penalty per past task boundary

    def __post_init__(self):
        if self.patience > self.max_epochs:
            raise ConfigurationError("patience must not exceed max_epochs")
        if self.lr < 0:
            raise ConfigurationError("lr must be nonnegative")
        if min(self.max_epochs, self.patience, self.batch_size, self.M, self.oversample) < 1:
            raise ConfigurationError("counts must be positive")
        if self.n_per_task < 0 or self.total_cap < 0 or self.lam < 0:
            raise ConfigurationError("replay sizes and lambda must be nonnegative")

    @property
    def uses_replay(self) -> bool:
        return self.continual_enabled and self.replay_enabled

    @property
    def uses_ewc(self) -> bool:
        return self.continual_enabled and self.ewc_enabled


def stage_seed(seed: int, task_id: int, stage: str) -> int:
    """Independent 32-bit seed per (run seed, task, stage)."""
    return zlib.crc32(f"{seed}:{task_id}:{stage}".encode())


def val_loss(params: torch.Tensor, cfg: ModelConfig, examples, batch_size: int = 64) -> float:
    """Mean per-token cross-entropy with dropout off."""
    if not examples:
        return float("nan")
    total, tokens = 0.0, 0
    with torch.no_grad():
        for i in range(0, len(examples), batch_size):
            chunk = examples[i:i + batch_size]
            total += float(example_losses(params, cfg, chunk, train_mode=False).double().sum())
            tokens += sum(len(e.tgt) for e in chunk)
    return total / tokens


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    val_loss: float
    penalty: float


def fit(ckpt: Checkpoint, train, val, cfg: TrainConfig, snaps=None,
        seed: int = 0) -> tuple[Checkpoint, list[EpochRecord]]:
    """Minibatch AdamW on encoded examples; returns the best-validation checkpoint."""
    mcfg = ckpt.config
    theta = ckpt.params.detach().clone().requires_grad_(True)
    opt = torch.optim.AdamW([theta], lr=cfg.lr, weight_decay=cfg.weight_decay)
    rng = np.random.default_rng(seed)
    torch.manual_seed(seed)
    best = val_loss(theta.detach(), mcfg, val)
    best_params = ckpt.params
    history = [EpochRecord(0, float("nan"), best, 0.0)]
    stale = 0
    for epoch in range(1, cfg.max_epochs + 1):
        order = rng.permutation(len(train))
        run_loss, run_pen, n_batches = 0.0, 0.0, 0
        for i in range(0, len(order), cfg.batch_size):
            batch = [train[j] for j in order[i:i + cfg.batch_size]]
            data = example_losses(theta, mcfg, batch, train_mode=True).mean()
            obj = total_objective(data, theta, snaps)
            opt.zero_grad()
            obj.backward()
            opt.step()
            run_loss += float(data.detach())
            run_pen += float(obj.detach()) - float(data.detach())
            n_batches += 1
        v = val_loss(theta.detach(), mcfg, val)
        history.append(EpochRecord(epoch, run_loss / n_batches, v, run_pen / n_batches))
        log.info("epoch %d train %.4f val %.4f penalty %.4f", epoch, run_loss / n_batches, v,
                 run_pen / n_batches)
        if v < best:
            best, best_params, stale = v, theta.detach().clone(), 0
        else:
            stale += 1
            if stale >= cfg.patience:
                break
    return ckpt.replace(params=best_params), history


def train_task(ckpt: Checkpoint, task: TaskDataset, store: ReplayStore,
               snap: FisherSnapshot | Sequence[FisherSnapshot] | None, cfg: TrainConfig,
               vocab: Vocabulary, history: list | None = None
               ) -> tuple[Checkpoint, ReplayStore, FisherSnapshot | None]:
    """Train on one task, then (continual mode) select replay examples and refit Fisher.

    ``history`` receives one :class:`EpochRecord` per epoch, epoch 0 being the
    starting point.
    """
    if not task.train:
        raise ConfigurationError(f"task {task.task_id} has an empty training split")
    max_len = ckpt.config.max_positions
    pairs = merge_training_set(task, store, cfg.oversample) if cfg.uses_replay else list(task.train)
    train = encode_pairs(pairs, vocab, cfg.prompt_enabled, max_len)
    val = encode_pairs(task.val, vocab, cfg.prompt_enabled, max_len)
    active = snap if cfg.uses_ewc else None
    ckpt, hist = fit(ckpt, train, val, cfg, active, stage_seed(cfg.seed, task.task_id, "fit"))
    ckpt = ckpt.replace(task_id=task.task_id)
    if history is not None:
        history.extend(hist)
    if not cfg.continual_enabled:
        return ckpt, store, None
    if cfg.replay_enabled or cfg.ewc_enabled:
        chosen = select_examples(task, ckpt, vocab, cfg.n_per_task, cfg.prompt_enabled)
        store = store.add(chosen)
    new_snap = None
    if cfg.ewc_enabled and len(store):
        new_snap = compute_fisher(ckpt, store, vocab, cfg.M,
                                  stage_seed(cfg.seed, task.task_id, "fisher"), cfg.lam,
                                  cfg.prompt_enabled)
    return ckpt, store, new_snap


def vocab_corpus(task: TaskDataset, prompt_enabled: bool = True) -> list[str]:
    """Rendered source and target texts of a task's training split."""
    out = []
    for p in task.train:
        ex = render_prompt(p, prompt_enabled)
        out += [ex.source_text, ex.target_text]
    return out


@dataclass
class StreamResult:
    vocab: Vocabulary
    checkpoints: list[Checkpoint] = field(default_factory=list)
    stores: list[ReplayStore] = field(default_factory=list)
    snapshots: list[FisherSnapshot | None] = field(default_factory=list)
    histories: list[list[EpochRecord]] = field(default_factory=list)
    matrix: EvalMatrix = field(default_factory=EvalMatrix)


def _write_epochs(path: Path, hist: Sequence[EpochRecord]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["epoch", "train_loss", "val_loss", "penalty"])
        for r in hist:
            w.writerow([r.epoch, repr(r.train_loss), repr(r.val_loss), repr(r.penalty)])


def run_stream(stream: TaskStream, cfg: TrainConfig, model_cfg: ModelConfig | None = None,
               gen_cfg: GenConfig | None = None, out_dir=None, vocab_size: int = 400,
               rerepair_on: bool = True, vocab: Vocabulary | None = None,
               on_task: Callable[[int, StreamResult], None] | None = None) -> StreamResult:
    """Train over the stream, evaluating every seen test split after each task.

    The vocabulary is learned from task 1 unless given. With ``out_dir`` set,
    each task gets ``task_<t>/`` holding its checkpoint, replay store, Fisher
    snapshot, epoch losses, candidate logs and the cumulative matrix.
    """
    tasks = list(stream)
    if not tasks:
        raise ConfigurationError("stream has no tasks")
    gen_cfg = gen_cfg or GenConfig()
    if vocab is None:
        vocab = build_vocab(vocab_corpus(tasks[0], cfg.prompt_enabled), vocab_size)
    model_cfg = replace(model_cfg or ModelConfig(vocab_size=len(vocab)), vocab_size=len(vocab))
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        vocab.save(out / "vocab.txt")
        (out / "config.json").write_text(json.dumps(
            {"train": asdict(cfg), "model": asdict(model_cfg), "gen": asdict(gen_cfg),
             "rerepair": rerepair_on}, indent=1, sort_keys=True) + "\n")
    result = StreamResult(vocab, matrix=EvalMatrix([f"task{t.task_id}-{t.lang}" for t in tasks]))
    ckpt = new_checkpoint(model_cfg, vocab, stage_seed(cfg.seed, 0, "init"))
    store = ReplayStore(total_cap=cfg.total_cap)
    snaps: list[FisherSnapshot] = []
    for t, task in enumerate(tasks, 1):
        hist: list[EpochRecord] = []
        active = snaps if cfg.ewc_accumulate else (snaps[-1] if snaps else None)
        ckpt, store, snap = train_task(ckpt, task, store, active, cfg, vocab, hist)
        if snap is not None:
            snaps.append(snap)
        records: list = []
        benches = [(result.matrix.benchmarks[i], tasks[i].test) for i in range(t)]
        result.matrix.add_row(evaluate_checkpoint(ckpt, benches, vocab, gen_cfg, rerepair_on,
                                                  cfg.prompt_enabled, records))
        result.checkpoints.append(ckpt)
        result.stores.append(store)
        result.snapshots.append(snap)
        result.histories.append(hist)
        if out is not None:
            d = out / f"task_{t}"
            d.mkdir(exist_ok=True)
            save_checkpoint(ckpt, d / "checkpoint.bin")
            store.save(d / "replay")
            if snap is not None:
                snap.save(d / "fisher.bin")
            _write_epochs(d / "epochs.csv", hist)
            with open(d / "candidates.jsonl", "w", encoding="utf-8") as fh:
                for rec in records:
                    fh.write(json.dumps(rec, sort_keys=True) + "\n")
            for target in (d, out):
                (target / "eval_matrix.json").write_text(result.matrix.to_json())
                (target / "eval_matrix.csv").write_text(result.matrix.to_csv())
        if on_task is not None:
            on_task(t, result)
    return result


def prompt_ablation(task: TaskDataset, cfg: TrainConfig, model_cfg: ModelConfig | None = None,
                    vocab_size: int = 400, out_path=None) -> dict:
    """Train one task with and without prompt markers and compare validation losses.

    Both variants share one vocabulary learned from the prompted texts, so
    targets tokenize identically and per-token losses are comparable.
    """
    report = {"task": task.task_id, "lang": task.lang, "variants": {}}
    vocab = build_vocab(vocab_corpus(task, True), vocab_size)
    for label, flag in (("prompt", True), ("no_prompt", False)):
        vc = replace(cfg, prompt_enabled=flag, continual_enabled=False)
        mc = replace(model_cfg or ModelConfig(vocab_size=len(vocab)), vocab_size=len(vocab))
        ckpt = new_checkpoint(mc, vocab, stage_seed(cfg.seed, 0, "init"))
        hist: list[EpochRecord] = []
        train_task(ckpt, task, ReplayStore(total_cap=cfg.total_cap), None, vc, vocab, hist)
        report["variants"][label] = {
            "best_val_loss": min(r.val_loss for r in hist),
            "final_val_loss": hist[-1].val_loss,
            "val_losses": [r.val_loss for r in hist],
            "epochs": len(hist) - 1,
        }
    v = report["variants"]
    report["difference_no_prompt_minus_prompt"] = (v["no_prompt"]["best_val_loss"]
                                                   - v["prompt"]["best_val_loss"])
    if out_path is not None:
        Path(out_path).write_text(json.dumps(report, indent=1, sort_keys=True) + "\n")
    return report
