"""Exact-match scoring, the task-progress matrix and forgetting analysis."""

from __future__ import annotations

import csv
import io
import json
import re
from dataclasses import dataclass, field
from typing import Sequence

from .corpus import BugFixPair, TaskDataset
from .errors import CompatibilityError
from .generator import CandidatePatch, GenConfig, generate_patches
from .model import Checkpoint
from .rerepair import rerepair
from .tokenizer import Vocabulary

_OPS = sorted("""=== !== **= //= >>= <<= -> ++ -- == != <= >= && || += -= *= /= %= &= |= ^=
<< >> ** // => ::""".split(), key=len, reverse=True)
_CODE_TOKEN = re.compile(
    r"""[A-Za-z_][A-Za-z0-9_]*|\d+(?:\.\d+)?|'(?:\\.|[^'\\])*'|"(?:\\.|[^"\\])*"|"""
    + "|".join(re.escape(o) for o in _OPS) + r"|\S")


def code_tokens(text: str) -> list[str]:
    """Whitespace-insensitive lexical tokens of a code line."""
    return _CODE_TOKEN.findall(text)


def exact_match(candidates: Sequence[CandidatePatch], truth: str) -> tuple[bool, int | None]:
    """First-matching rank of any candidate whose tokens equal the truth's."""
    want = code_tokens(truth)
    for c in sorted(candidates, key=lambda c: c.rank):
        if code_tokens(c.text) == want:
            return True, c.rank
    return False, None


@dataclass
class Cell:
    fixed: int = 0
    total: int = 0
    ranks: dict = field(default_factory=dict)  # bug id -> first matching rank or None

    def to_dict(self):
        return {"fixed": self.fixed, "total": self.total, "ranks": dict(sorted(self.ranks.items()))}

    @classmethod
    def from_dict(cls, d):
        return cls(d["fixed"], d["total"], dict(d["ranks"]))


@dataclass
class EvalMatrix:
    benchmarks: list[str] = field(default_factory=list)  # one per task, in stream order
    rows: list[dict[str, Cell]] = field(default_factory=list)  # checkpoint t -> cells

    def add_row(self, row: dict[str, Cell]) -> None:
        t = len(self.rows) + 1
        expected = self.benchmarks[:t]
        if sorted(row) != sorted(expected):
            raise CompatibilityError(
                f"row {t} must cover benchmarks {expected}, got {sorted(row)}")
        self.rows.append(row)

    def count(self, t: int, bench: str) -> int | None:
        """Fixed count of checkpoint ``t`` (1-based) on ``bench``; None above the diagonal."""
        cell = self.rows[t - 1].get(bench)
        return None if cell is None else cell.fixed

    def to_json(self) -> str:
        data = {"benchmarks": self.benchmarks,
                "rows": [{b: c.to_dict() for b, c in sorted(r.items())} for r in self.rows]}
        return json.dumps(data, indent=1, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "EvalMatrix":
        data = json.loads(text)
        return cls(list(data["benchmarks"]),
                   [{b: Cell.from_dict(c) for b, c in r.items()} for r in data["rows"]])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["checkpoint", "benchmark", "fixed", "total"])
        for t, row in enumerate(self.rows, 1):
            for b in self.benchmarks:
                if b in row:
                    w.writerow([t, b, row[b].fixed, row[b].total])
        return buf.getvalue()


def evaluate_checkpoint(ckpt: Checkpoint, benchmarks: Sequence[tuple[str, Sequence[BugFixPair]]],
                        vocab: Vocabulary, gen_cfg: GenConfig, rerepair_on: bool = True,
                        prompt_enabled: bool = True, log: list | None = None) -> dict[str, Cell]:
    """Generate, optionally re-repair, and exact-match every bug of every benchmark.

    ``log`` receives one record per bug with raw and final candidate texts.
    """
    if ckpt.vocab_ref != vocab.hash():
        raise CompatibilityError("checkpoint and vocabulary do not match")
    row = {}
    for name, bugs in benchmarks:
        cell = Cell()
        for pair in bugs:
            raw = generate_patches(ckpt, pair, vocab, gen_cfg, prompt_enabled)
            final = [CandidatePatch(rerepair(c.text, pair.lang) if rerepair_on else c.text,
                                    c.logprob, c.rank, c.source) for c in raw]
            ok, rank = exact_match(final, pair.fixed)
            cell.total += 1
            cell.fixed += int(ok)
            cell.ranks[pair.id] = rank
            if log is not None:
                log.append({
                    "checkpoint": ckpt.task_id, "benchmark": name, "id": pair.id,
                    "lang": pair.lang, "truth": pair.fixed, "rerepair": rerepair_on,
                    "matched_rank": rank,
                    "candidates": [{"rank": c.rank, "source": c.source,
                                    "logprob": round(c.logprob, 6), "raw": c.text,
                                    "text": f.text} for c, f in zip(raw, final)],
                })
        row[name] = cell
    return row


def recount_logs(records: Sequence[dict]) -> dict[tuple[int, str], int]:
    """Fixed counts per (checkpoint, benchmark) recomputed from candidate logs."""
    out: dict[tuple[int, str], int] = {}
    for rec in records:
        key = (rec["checkpoint"], rec["benchmark"])
        want = code_tokens(rec["truth"])
        hit = any(code_tokens(c["text"]) == want for c in rec["candidates"])
        out[key] = out.get(key, 0) + int(hit)
    return out


@dataclass
class ForgettingReport:
    benchmarks: list[str]
    drops: list[dict[str, int]]  # per checkpoint: best-so-far minus current
    upperbound: list[dict[str, int]]  # per checkpoint: running best (joint with baseline)
    totals: list[int]
    upperbound_totals: list[int]
    delta_vs_baseline: list[dict[str, int]] | None = None

    def to_json(self) -> str:
        return json.dumps(self.__dict__, indent=1, sort_keys=True) + "\n"


def forgetting_report(matrix: EvalMatrix, baseline: EvalMatrix | None = None) -> ForgettingReport:
    if baseline is not None and (baseline.benchmarks != matrix.benchmarks
                                 or len(baseline.rows) != len(matrix.rows)):
        raise CompatibilityError("matrices cover different streams")
    sources = [matrix] + ([baseline] if baseline is not None else [])
    drops, upper, totals, up_totals = [], [], [], []
    best_own: dict[str, int] = {}
    best_all: dict[str, int] = {}
    for t in range(1, len(matrix.rows) + 1):
        d_row, u_row = {}, {}
        for b in matrix.benchmarks[:t]:
            cur = matrix.count(t, b)
            best_own[b] = max(best_own.get(b, cur), cur)
            d_row[b] = best_own[b] - cur
            seen = [m.count(t, b) for m in sources]
            best_all[b] = max([best_all.get(b, 0), *seen])
            u_row[b] = best_all[b]
        drops.append(d_row)
        upper.append(u_row)
        totals.append(sum(matrix.count(t, b) for b in matrix.benchmarks[:t]))
        up_totals.append(sum(u_row.values()))
    delta = None
    if baseline is not None:
        delta = [{b: matrix.count(t, b) - baseline.count(t, b) for b in matrix.benchmarks[:t]}
                 for t in range(1, len(matrix.rows) + 1)]
    return ForgettingReport(list(matrix.benchmarks), drops, upper, totals, up_totals, delta)


def render_table(matrices: dict[str, EvalMatrix], report: ForgettingReport | None = None) -> str:
    """Plain-text progress table: one line per checkpoint and variant.

    Each cell lists ``(x)/(y)``: per-benchmark fixed counts, then their sum.
    """
    names = next(iter(matrices.values())).benchmarks if matrices else []
    lines = ["benchmarks: " + ", ".join(names)]
    width = max([len(k) for k in matrices] + [len("upperbound")])
    n_rows = max((len(m.rows) for m in matrices.values()), default=0)
    for t in range(1, n_rows + 1):
        lines.append(f"after task {t}:")
        for label, m in matrices.items():
            if t > len(m.rows):
                continue
            counts = [m.count(t, b) for b in m.benchmarks[:t]]
            totals = [m.rows[t - 1][b].total for b in m.benchmarks[:t]]
            lines.append(f"  {label:<{width}}  ({', '.join(map(str, counts))})/({sum(counts)})"
                         f"  of ({', '.join(map(str, totals))})")
        if report is not None:
            ub = [report.upperbound[t - 1][b] for b in names[:t]]
            lines.append(f"  {'upperbound':<{width}}  ({', '.join(map(str, ub))})/({sum(ub)})")
    return "\n".join(lines) + "\n"
