"""Desk-scale experiment presets: forgetting with continual learning on/off, prompt ablation."""

from __future__ import annotations

import json
import time
from dataclasses import replace
from pathlib import Path
from typing import Sequence

from .corpus import TaskStream, generate_synthetic_corpus
from .evaluation import forgetting_report, render_table
from .generator import GenConfig
from .model import ModelConfig
from .trainer import TrainConfig, prompt_ablation, run_stream

# Toy model; ``vocab_size`` is replaced once the vocabulary is built.
DESK_MODEL = ModelConfig(vocab_size=1, layers=2, heads=4, d_model=64, d_ff=128, dropout=0.1,
                         max_positions=256)
# Default lambda; a shorter schedule than the 20-epoch default to fit one CPU.
DESK_TRAIN = TrainConfig(max_epochs=8, patience=3, lr=1e-3, batch_size=16, n_per_task=200, M=200)
DESK_GEN = GenConfig(beam=4, max_candidates=4, max_len=40)


def two_task_stream(seed: int, n: int = 2000, langs: Sequence[str] = ("python", "java")):
    return TaskStream(tuple(generate_synthetic_corpus(lang, seed, n, task_id=i)
                            for i, lang in enumerate(langs, 1)))


def forgetting_experiment(seeds: Sequence[int] = (0, 1, 2), n: int = 2000,
                          langs: Sequence[str] = ("python", "java"),
                          train: TrainConfig = DESK_TRAIN, model: ModelConfig = DESK_MODEL,
                          gen: GenConfig = DESK_GEN, vocab_size: int = 400,
                          out_dir=None) -> dict:
    """Paired continual/finetuning runs per seed on the same stream.

    Returns per-seed matrices (as JSON text), first-task exact-match rates
    after the last task, and the mean gap in percentage points.
    """
    out = Path(out_dir) if out_dir is not None else None
    runs, t0 = [], time.time()
    for seed in seeds:
        stream = two_task_stream(seed, n, langs)
        rec = {"seed": seed}
        for label, flag in (("continual", True), ("finetuned", False)):
            cfg = replace(train, seed=seed, continual_enabled=flag)
            d = out / f"seed{seed}" / label if out is not None else None
            res = run_stream(stream, cfg, model, gen, d, vocab_size)
            first = res.matrix.benchmarks[0]
            cell = res.matrix.rows[-1][first]
            rec[label] = {
                "matrix": res.matrix.to_json(),
                "first_task_after_stream": cell.fixed / max(cell.total, 1),
                "first_task_row": res.matrix.rows[0][first].to_dict(),
                "first_checkpoint": res.checkpoints[0],
            }
        runs.append(rec)
    on = [r["continual"]["first_task_after_stream"] for r in runs]
    off = [r["finetuned"]["first_task_after_stream"] for r in runs]
    summary = {
        "seeds": list(seeds),
        "continual_first_task": on,
        "finetuned_first_task": off,
        "mean_gap_pp": 100.0 * (sum(on) - sum(off)) / len(runs),
        "seconds": time.time() - t0,
    }
    if out is not None:
        from .evaluation import EvalMatrix
        out.mkdir(parents=True, exist_ok=True)
        tables = []
        for r in runs:
            on_m = EvalMatrix.from_json(r["continual"]["matrix"])
            off_m = EvalMatrix.from_json(r["finetuned"]["matrix"])
            tables.append(f"seed {r['seed']}\n" + render_table(
                {"continual": on_m, "finetuned": off_m}, forgetting_report(on_m, off_m)))
        (out / "forgetting_table.txt").write_text("\n".join(tables))
        (out / "forgetting_summary.json").write_text(json.dumps(summary, indent=1) + "\n")
    return {"runs": runs, **summary}


def prompt_experiment(seed: int = 0, n: int = 2000, lang: str = "python",
                      train: TrainConfig = DESK_TRAIN, model: ModelConfig = DESK_MODEL,
                      vocab_size: int = 400, out_path=None) -> dict:
    task = generate_synthetic_corpus(lang, seed, n)
    return prompt_ablation(task, replace(train, seed=seed), model, vocab_size, out_path)
