"""Does marking the buggy line inside its context help? Compare validation loss.

Both variants use one vocabulary (built from the prompted texts), so per-token
losses are on the same scale.

Run:  python3 demos/03_prompt_ablation.py     (a few minutes)
"""

import json
from pathlib import Path

import torch

from polyrepair.experiments import prompt_experiment

torch.set_num_threads(1)

out = Path(__file__).parent / "output" / "prompt_ablation.json"
out.parent.mkdir(parents=True, exist_ok=True)
res = prompt_experiment(seed=0, n=1000, out_path=out)
for name in ("prompt", "no_prompt"):
    v = res["variants"][name]
    losses = " ".join(f"{x:.3f}" for x in v["val_losses"])
    print(f"{name:>9}: best {v['best_val_loss']:.4f}   per epoch: {losses}")
print(f"no_prompt - prompt = {res['difference_no_prompt_minus_prompt']:+.4f}")
print(f"written to {out}")
