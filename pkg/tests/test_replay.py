import math
import random

import numpy as np
import pytest
import torch

from polyrepair.corpus import BugFixPair, TaskDataset, generate_synthetic_corpus
from polyrepair.errors import InputError
from polyrepair.model import Checkpoint, EncodedExample, forward, init_params, unflatten
from polyrepair.prompt import render_prompt
from polyrepair.replay import (ExampleSet, ReplayStore, difficulty, encode_pairs,
                               merge_training_set, score_encoded, select_examples, top_n)
from polyrepair.tokenizer import encode


def stepwise_difficulty(ckpt, text_src, text_tgt, vocab):
    """Independent oracle: decode token by token and accumulate -log p."""
    src = encode(text_src, vocab)
    gold = encode(text_tgt, vocab) + [vocab.eos_id]
    prefix, total = [vocab.bos_id], 0.0
    ck = ckpt.replace(params=ckpt.params.double())
    for tok in gold:
        logits = forward(ck, src, prefix)[-1]
        total -= float(torch.log_softmax(logits, -1)[tok])
        prefix.append(tok)
    return total / len(gold)


def test_uniform_model_scores_log_v(tiny_cfg, vocab, py_task):
    p = init_params(tiny_cfg, seed=0, dtype=torch.float64)
    unflatten(p, tiny_cfg)["lm_head.weight"].zero_()
    ck = Checkpoint(p, tiny_cfg, vocab.hash())
    for pair in py_task.train[:5]:
        assert difficulty(pair, ck, vocab) == pytest.approx(math.log(len(vocab)), abs=1e-12)


def test_memorised_pair_scores_near_zero(tiny_cfg, vocab, py_task):
    from polyrepair.trainer import TrainConfig, fit
    from polyrepair.model import new_checkpoint
    pair = py_task.train[0]
    ex = encode_pairs([pair], vocab, True, tiny_cfg.max_positions)
    ck, _ = fit(new_checkpoint(tiny_cfg, vocab, 0), ex * 8, ex,
                TrainConfig(max_epochs=60, patience=60, lr=1e-2, batch_size=8, weight_decay=0.0))
    assert difficulty(pair, ck, vocab) < 0.05


def test_scores_match_stepwise_oracle(trained_ckpt, vocab, py_task):
    pairs = list(py_task.train[:50])
    batch = score_encoded(trained_ckpt, encode_pairs(pairs, vocab, True, 160), batch_size=16)
    for pair, got in zip(pairs, batch):
        ex = render_prompt(pair)
        assert got == pytest.approx(stepwise_difficulty(trained_ckpt, ex.source_text,
                                                        ex.target_text, vocab), abs=1e-6)


def test_empty_target_is_input_error(trained_ckpt):
    with pytest.raises(InputError):
        score_encoded(trained_ckpt, [EncodedExample((5,), ())])


def _dataset(pairs):
    return TaskDataset(1, pairs[0].lang, tuple(pairs))


def test_select_examples_edge_cases(trained_ckpt, vocab, py_task):
    ds = _dataset(list(py_task.train[:30]))
    assert len(select_examples(ds, trained_ckpt, vocab, 0)) == 0
    everything = select_examples(ds, trained_ckpt, vocab, 100)
    assert sorted(p.id for p in everything.pairs) == sorted(p.id for p in ds.train)


def test_select_examples_matches_brute_force(trained_ckpt, vocab, py_task):
    train = list(py_task.train[:30])
    got = select_examples(_dataset(train), trained_ckpt, vocab, 5)
    scored = [(-difficulty(p, trained_ckpt, vocab), i) for i, p in enumerate(train)]
    want = [train[i].id for _, i in sorted(scored)[:5]]
    assert [p.id for p in got.pairs] == want
    diffs = [d for _, d in got.entries]
    assert diffs == sorted(diffs, reverse=True)


def test_top_n_ties_go_to_lower_index():
    assert top_n([1.0, 3.0, 3.0, 2.0, 3.0], 2) == [1, 2]
    assert top_n([0.5] * 4, 3) == [0, 1, 2]
    assert top_n([1.0], 0) == []


@pytest.mark.parametrize("scale", [1e-3, 0.5, 7.0, 1e4])
def test_selection_scale_invariance(scale):
    rng = np.random.default_rng(0)
    scores = rng.random(100).round(2)
    assert top_n(scores.tolist(), 10) == top_n((scores * scale).tolist(), 10)


def test_selection_deterministic(trained_ckpt, vocab, py_task):
    ds = _dataset(list(py_task.train[:40]))
    assert select_examples(ds, trained_ckpt, vocab, 7) == select_examples(ds, trained_ckpt, vocab, 7)


def _set(task_id, n, cap=None):
    pairs = [BugFixPair(f"t{task_id}-{i}", "c", "a", "", "b") for i in range(n)]
    return ExampleSet(task_id, tuple((p, float(n - i)) for i, p in enumerate(pairs)), cap or n)


def test_store_caps_split_equally():
    store = ReplayStore(total_cap=12).add(_set(1, 12))
    assert len(store) == 12
    store = store.add(_set(2, 12))
    assert [len(s) for s in store.sets] == [6, 6]
    store = store.add(_set(3, 12))
    assert [len(s) for s in store.sets] == [4, 4, 4]
    assert len(store) <= store.total_cap
    # truncation drops the easiest (bottom-ranked) entries
    assert [p.id for p in store.sets[0].pairs] == [f"t1-{i}" for i in range(4)]


def test_example_set_capacity():
    with pytest.raises(ValueError):
        ExampleSet(1, _set(1, 3).entries, 2)


def test_merge_training_set():
    current = _dataset([BugFixPair(f"cur{i}", "java", "x", "", "y") for i in range(5)])
    assert merge_training_set(current, ReplayStore()) == list(current.train)
    store = ReplayStore(total_cap=100).add(_set(1, 3)).add(_set(2, 2))
    merged = merge_training_set(current, store)
    assert len(merged) == 5 + 3 + 2
    assert [p.id for p in merged] == ([f"cur{i}" for i in range(5)]
                                      + ["t1-0", "t1-1", "t1-2", "t2-0", "t2-1"])
    assert merged[5].lang == "c"  # replayed pairs keep their language


def test_merge_multiset_against_union_oracle():
    rng = random.Random(0)
    for trial in range(20):
        cur = _dataset([BugFixPair(f"c{trial}-{i}", "java", "x", "", "y")
                        for i in range(rng.randint(1, 8))])
        store = ReplayStore(total_cap=rng.randint(1, 20))
        for t in range(1, rng.randint(1, 4) + 1):
            store = store.add(_set(t, rng.randint(0, 6)))
        oracle = sorted([p.id for p in cur.train] + [p.id for s in store.sets for p in s.pairs])
        assert sorted(p.id for p in merge_training_set(cur, store)) == oracle


def test_store_persistence(tmp_path, trained_ckpt, vocab, py_task):
    ds = _dataset(list(py_task.train[:20]))
    store = ReplayStore(total_cap=50).add(select_examples(ds, trained_ckpt, vocab, 6))
    store.save(tmp_path)
    back = ReplayStore.load(tmp_path)
    assert back == store
    header = (tmp_path / "replay_meta.csv").read_text().splitlines()[0]
    assert header == "id,task_id,difficulty,rank,capacity"
