"""Train a toy repair model on one synthetic Python task and look at its patches.

Run:  python3 demos/01_quickstart.py      (a couple of minutes on one core)
"""

import torch

from polyrepair import (GenConfig, ModelConfig, TrainConfig, build_vocab, generate_patches,
                        generate_synthetic_corpus, new_checkpoint, render_prompt, rerepair)
from polyrepair.evaluation import exact_match
from polyrepair.replay import encode_pairs
from polyrepair.trainer import fit, vocab_corpus

torch.set_num_threads(1)

# A task is a language-specific set of (buggy line, context, fixed line) triples,
# already split into train/val/test.
task = generate_synthetic_corpus("python", seed=0, n=2000)
print(f"{len(task.train)} train / {len(task.val)} val / {len(task.test)} test pairs")

# The model never sees raw code: it reads a prompt with the buggy line marked
# inside its surrounding function.
pair = task.test[0]
ex = render_prompt(pair)
print("\nprompted input:\n ", ex.source_text[:160], "...")
print("target:\n ", ex.target_text)

vocab = build_vocab(vocab_corpus(task), 400)
cfg = ModelConfig(vocab_size=len(vocab), layers=2, heads=4, d_model=64, d_ff=128,
                  dropout=0.1, max_positions=256)
ckpt = new_checkpoint(cfg, vocab, seed=0)

train = encode_pairs(task.train, vocab, True, cfg.max_positions)
val = encode_pairs(task.val, vocab, True, cfg.max_positions)
ckpt, history = fit(ckpt, train, val, TrainConfig(max_epochs=8, lr=1e-3), seed=0)
for rec in history:
    print(f"epoch {rec.epoch}: train {rec.train_loss:.3f}  val {rec.val_loss:.3f}")

# Beam search plus filtered sampling gives a ranked list; re-repair then cleans
# each candidate before it is compared token by token with the fix.
gen = GenConfig(beam=4, max_candidates=6, max_len=40)
hits = 0
for i, pair in enumerate(task.test[:20]):
    cands = generate_patches(ckpt, pair, vocab, gen)
    final = [c.__class__(rerepair(c.text, pair.lang), c.logprob, c.rank, c.source)
             for c in cands]
    ok, rank = exact_match(final, pair.fixed)
    hits += ok
    if i < 3:
        print(f"\nbug:   {pair.buggy}\nfix:   {pair.fixed}")
        for c in final[:3]:
            print(f"  #{c.rank} [{c.source}] {c.logprob:7.2f}  {c.text}")
print(f"\nexact match on 20 test bugs: {hits}/20")
