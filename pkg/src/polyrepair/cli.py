"""Command-line entry point: ``polyrepair <subcommand> ...``.

Every failure exits nonzero with one line on stderr of the form
``error: <Kind>: <message>``. ``POLYREPAIR_OUTPUT_DIR`` overrides the output
location of ``train-stream``.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from dataclasses import dataclass, fields
from pathlib import Path

import yaml

from . import corpus as corpus_mod
from .corpus import BugFixPair, build_stream, parse_stream
from .errors import ConfigurationError, ParseError, PolyRepairError
from .evaluation import EvalMatrix, evaluate_checkpoint, forgetting_report, render_table
from .ewc import DEFAULT_LAMBDA, compute_fisher
from .generator import GenConfig, generate_patches
from .model import ModelConfig, load_checkpoint
from .replay import ReplayStore, select_examples
from .rerepair import load_table, rerepair, DEFAULT_KEYWORDS, DEFAULT_FILL_RULES
from .tokenizer import Vocabulary
from .trainer import TrainConfig, run_stream

OUTPUT_ENV = "POLYREPAIR_OUTPUT_DIR"
_REPLAY_KEYS = ("n_per_task", "total_cap", "M", "oversample", "replay_enabled", "ewc_enabled",
                "ewc_accumulate")


class UsageError(PolyRepairError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# --- run configuration ---------------------------------------------------------

@dataclass(frozen=True)
class RunConfig:
    stream: tuple
    train: TrainConfig
    model: ModelConfig
    gen: GenConfig
    output_dir: str
    vocab_size: int = 400
    rerepair: bool = True


def _build(cls, section: dict, name: str, **extra):
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(section) - known)
    if unknown:
        raise ConfigurationError(f"unknown {name} key(s): {', '.join(unknown)}")
    try:
        return cls(**{**extra, **section})
    except TypeError as exc:
        raise ConfigurationError(f"bad {name} section: {exc}") from None


def load_run_config(path, seed=None, continual=None, prompt=None, rerepair_on=None,
                    output_dir=None) -> RunConfig:
    """Read a YAML/JSON run file and apply command-line overrides."""
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"{path}: {exc}".replace("\n", " ")) from None
    except OSError as exc:
        raise ConfigurationError(f"cannot read {path}: {exc.strerror}") from None
    if not isinstance(raw, dict):
        raise ConfigurationError(f"{path}: top level must be a mapping")
    allowed = {"stream", "train", "model", "gen", "output_dir", "vocab_size", "rerepair"}
    unknown = sorted(set(raw) - allowed)
    if unknown:
        raise ConfigurationError(f"unknown top-level key(s): {', '.join(unknown)}")
    train = dict(raw.get("train") or {})
    if seed is not None:
        train["seed"] = seed
    if continual is False:
        train["continual_enabled"] = False
    if prompt is False:
        train["prompt_enabled"] = False
    if train.get("continual_enabled") is False:
        clash = [k for k in _REPLAY_KEYS if k in train]
        if clash:
            raise ConfigurationError(
                f"continual learning is off but replay/EWC settings were given: {', '.join(clash)}")
    stream = tuple(parse_stream(raw.get("stream") or [], base_dir=path.parent))
    out = output_dir or os.environ.get(OUTPUT_ENV) or raw.get("output_dir")
    if not out:
        raise ConfigurationError("no output_dir in config, --out or $" + OUTPUT_ENV)
    return RunConfig(
        stream=stream,
        train=_build(TrainConfig, train, "train"),
        model=_build(ModelConfig, dict(raw.get("model") or {}), "model", vocab_size=1),
        gen=_build(GenConfig, dict(raw.get("gen") or {}), "gen"),
        output_dir=str(out),
        vocab_size=int(raw.get("vocab_size", 400)),
        rerepair=bool(raw.get("rerepair", True)) if rerepair_on is None else rerepair_on,
    )


# --- helpers ------------------------------------------------------------------------

def _atomic_write(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def _emit(text: str, out) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        _atomic_write(out, text)


def _read_bugs(path, lang=None) -> list[BugFixPair]:
    """Corpus-format records; ``fixed`` may be absent for bugs to repair."""
    bugs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            if not raw.strip():
                continue
            try:
                rec = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON ({exc.msg})", lineno) from None
            missing = [k for k in ("buggy", "context") if k not in rec]
            if missing or not isinstance(rec, dict):
                raise ParseError(f"missing field(s) {', '.join(missing)}", lineno)
            l = lang or rec.get("lang")
            if l not in corpus_mod.LANGUAGES:
                raise ParseError(f"unsupported lang {l!r}", lineno)
            bugs.append(BugFixPair(str(rec.get("id", f"bug-{lineno}")), l, rec["buggy"],
                                   rec["context"], rec.get("fixed", "")))
    return bugs


def _gen_config(args) -> GenConfig:
    return GenConfig(beam=args.beam, top_k=args.top_k, top_p=args.top_p,
                     max_candidates=max(args.max_candidates, args.beam),
                     max_len=args.max_len, seed=args.seed)


def _add_gen_flags(p):
    p.add_argument("--beam", type=int, default=8)
    p.add_argument("--top-k", type=int, default=10)
    p.add_argument("--top-p", type=float, default=0.95)
    p.add_argument("--max-candidates", type=int, default=32)
    p.add_argument("--max-len", type=int, default=64)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-prompt", action="store_true", help="inputs without prompt markers")


def _load_model(args):
    vocab = Vocabulary.load(args.vocab)
    return vocab, load_checkpoint(args.checkpoint, vocab)


def _table(args):
    if getattr(args, "table", None):
        return load_table(args.table)
    return DEFAULT_KEYWORDS, DEFAULT_FILL_RULES


# --- subcommands ----------------------------------------------------------------------

def cmd_generate_corpus(args) -> None:
    ds = corpus_mod.generate_synthetic_corpus(args.lang, args.seed, args.n)
    _emit("".join(json.dumps(p.to_record()) + "\n" for p in ds.pairs()), args.out)


def cmd_train_stream(args) -> None:
    rc = load_run_config(args.config, seed=args.seed,
                         continual=False if args.no_continual else None,
                         prompt=False if args.no_prompt else None,
                         rerepair_on=False if args.no_rerepair else None,
                         output_dir=args.out)
    stream = build_stream(rc.stream)
    result = run_stream(stream, rc.train, rc.model, rc.gen, rc.output_dir, rc.vocab_size,
                        rc.rerepair)
    sys.stdout.write(render_table({"run": result.matrix}))


def cmd_repair(args) -> None:
    vocab, ckpt = _load_model(args)
    kmap, rules = _table(args)
    cfg = _gen_config(args)
    lines = []
    for bug in _read_bugs(args.input, args.lang):
        for c in generate_patches(ckpt, bug, vocab, cfg, not args.no_prompt):
            text = c.text if args.no_rerepair else rerepair(c.text, bug.lang, kmap, rules)
            lines.append(json.dumps({"id": bug.id, "rank": c.rank, "source": c.source,
                                     "logprob": round(c.logprob, 6), "text": text,
                                     "raw": c.text}) + "\n")
    _emit("".join(lines), args.out)


def cmd_evaluate(args) -> None:
    vocab, ckpt = _load_model(args)
    benches = []
    for path in args.benchmark:
        bugs = _read_bugs(path)
        benches.append((Path(path).stem, bugs))
    records: list = []
    row = evaluate_checkpoint(ckpt, benches, vocab, _gen_config(args), not args.no_rerepair,
                              not args.no_prompt, records)
    out = Path(args.out)
    summary = {name: cell.to_dict() for name, cell in sorted(row.items())}
    _atomic_write(out / "candidates.jsonl",
                  "".join(json.dumps(r, sort_keys=True) + "\n" for r in records))
    _atomic_write(out / "eval_row.json", json.dumps(summary, indent=1, sort_keys=True) + "\n")
    for name, cell in row.items():
        sys.stdout.write(f"{name}: {cell.fixed}/{cell.total}\n")


def cmd_select_examples(args) -> None:
    vocab, ckpt = _load_model(args)
    ds = corpus_mod.load_corpus(args.corpus, task_id=args.task_id)
    chosen = select_examples(ds, ckpt, vocab, args.n, not args.no_prompt)
    store = ReplayStore.load(args.store) if args.store else ReplayStore(total_cap=args.total_cap)
    with tempfile.TemporaryDirectory(dir=Path(args.out).parent if Path(args.out).parent.exists()
                                     else None) as tmp:
        store.add(chosen).save(tmp)
        Path(args.out).mkdir(parents=True, exist_ok=True)
        for name in sorted(os.listdir(tmp)):
            os.replace(Path(tmp) / name, Path(args.out) / name)
    sys.stdout.write(f"selected {len(chosen)} examples\n")


def cmd_compute_fisher(args) -> None:
    vocab, ckpt = _load_model(args)
    store = ReplayStore.load(args.store)
    snap = compute_fisher(ckpt, store, vocab, args.M, args.seed, args.lam, not args.no_prompt)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    tmp = out.with_name(f".{out.name}.tmp")
    snap.save(tmp)
    os.replace(tmp, out)
    sys.stdout.write(f"fisher over {len(snap.sample_ids)} examples, "
                     f"mean {float(snap.fisher.mean()):.6g}\n")


def cmd_report(args) -> None:
    matrix = EvalMatrix.from_json(Path(args.matrix).read_text())
    mats = {args.label: matrix}
    baseline = None
    if args.baseline:
        baseline = EvalMatrix.from_json(Path(args.baseline).read_text())
        mats[args.baseline_label] = baseline
    rep = forgetting_report(matrix, baseline)
    text = render_table(mats, rep)
    if args.out:
        _atomic_write(Path(args.out) / "forgetting.json", rep.to_json())
        _atomic_write(Path(args.out) / "report.txt", text)
    sys.stdout.write(text)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="polyrepair", description="Continual multilingual program repair.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("generate-corpus", help="write a synthetic bug-fix corpus (JSONL)")
    p.add_argument("--lang", required=True, choices=corpus_mod.LANGUAGES)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="-")
    p.set_defaults(fn=cmd_generate_corpus)

    p = sub.add_parser("train-stream", help="train over a task stream and evaluate")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="run directory (overrides config and environment)")
    p.add_argument("--no-continual", action="store_true", help="plain finetuning baseline")
    p.add_argument("--no-prompt", action="store_true")
    p.add_argument("--no-rerepair", action="store_true")
    p.set_defaults(fn=cmd_train_stream)

    for name, fn, help_ in (("repair", cmd_repair, "generate ranked candidate patches"),
                            ("evaluate", cmd_evaluate, "exact-match a checkpoint on corpora")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--checkpoint", required=True)
        p.add_argument("--vocab", required=True)
        _add_gen_flags(p)
        p.add_argument("--no-rerepair", action="store_true")
        if name == "repair":
            p.add_argument("--input", required=True)
            p.add_argument("--lang", choices=corpus_mod.LANGUAGES)
            p.add_argument("--table", help="keyword/fill table file")
            p.add_argument("--out", default="-")
        else:
            p.add_argument("--benchmark", action="append", required=True)
            p.add_argument("--out", required=True)
        p.set_defaults(fn=fn)

    p = sub.add_parser("select-examples", help="pick the hardest training pairs for replay")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--vocab", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--task-id", type=int, default=1)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--store", help="existing store to extend")
    p.add_argument("--total-cap", type=int, default=20000)
    p.add_argument("--no-prompt", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_select_examples)

    p = sub.add_parser("compute-fisher", help="diagonal Fisher snapshot from a replay store")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--vocab", required=True)
    p.add_argument("--store", required=True)
    p.add_argument("--M", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lam", type=float, default=DEFAULT_LAMBDA)
    p.add_argument("--no-prompt", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_compute_fisher)

    p = sub.add_parser("report", help="render a progress table and forgetting report")
    p.add_argument("--matrix", required=True)
    p.add_argument("--label", default="continual")
    p.add_argument("--baseline")
    p.add_argument("--baseline-label", default="finetuned")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_report)
    return ap


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        args.fn(args)
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except PolyRepairError as exc:
        print(f"error: {type(exc).__name__}: {' '.join(str(exc).split())}", file=sys.stderr)
        return 2
    except (OSError, KeyError) as exc:
        print(f"error: {type(exc).__name__}: {' '.join(str(exc).split())}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
