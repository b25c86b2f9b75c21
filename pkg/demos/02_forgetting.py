"""Python then Java: how much Python does the model keep, with and without continual learning?

With continual learning on, the hardest Python pairs are replayed while learning
Java and an EWC penalty anchors the weights that mattered for Python. The plain
baseline simply finetunes on Java.

Run:  python3 demos/02_forgetting.py [--seeds 0 1 2] [--n 2000]
Each seed trains both variants (about 8-10 min per seed on one core).
"""

import argparse
from pathlib import Path

import torch

from polyrepair.experiments import forgetting_experiment

torch.set_num_threads(1)

ap = argparse.ArgumentParser()
ap.add_argument("--seeds", type=int, nargs="+", default=[0])
ap.add_argument("--n", type=int, default=2000)
ap.add_argument("--out", default=str(Path(__file__).parent / "output" / "forgetting"))
args = ap.parse_args()

res = forgetting_experiment(seeds=args.seeds, n=args.n, out_dir=args.out)
print((Path(args.out) / "forgetting_table.txt").read_text())
for seed, on, off in zip(res["seeds"], res["continual_first_task"], res["finetuned_first_task"]):
    print(f"seed {seed}: python exact match after java  continual {on:.3f}  finetuned {off:.3f}")
print(f"mean gap: {res['mean_gap_pp']:.1f} percentage points ({res['seconds'] / 60:.1f} min)")

# Both variants share everything up to the end of the first task, so their
# first rows agree exactly; divergence starts with the second task.
for r in res["runs"]:
    assert r["continual"]["first_task_row"] == r["finetuned"]["first_task_row"]
