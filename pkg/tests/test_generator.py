import itertools
import math

import numpy as np
import pytest
import torch
from hypothesis import given, settings, strategies as st
from scipy.stats import chisquare

from polyrepair.errors import ConfigurationError
from polyrepair.generator import (CandidatePatch, GenConfig, beam_search, filter_distribution,
                                  filtered_sample, generate_patches, greedy, merge_candidates)
from polyrepair.model import forward

from conftest import micro_model

SRC = [4, 5, 6, 4]


def enumerate_sequences(ckpt, src, max_len, content):
    """All eos-terminated sequences of 1..max_len-1 content tokens, plus
    length-max_len sequences cut off by the bound, scored exactly."""
    out = []
    for L in range(1, max_len + 1):
        for seq in itertools.product(content, repeat=L):
            logp = torch.log_softmax(forward(ckpt, src, [1, *seq]).double(), -1)
            toks = list(seq) + ([2] if L < max_len else [])
            out.append((seq, sum(float(logp[i, t]) for i, t in enumerate(toks))))
    return sorted(out, key=lambda h: (-h[1], h[0]))


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_beam_equals_enumeration_small(seed):
    ck = micro_model(vocab_size=7, seed=seed, scale=5.0)
    res = beam_search(ck, SRC, GenConfig(beam=32, max_candidates=32, max_len=2))
    want = enumerate_sequences(ck, SRC, 2, [3, 4, 5, 6])
    assert [c.ids for c in res] == [s for s, _ in want]
    assert [c.logprob for c in res] == pytest.approx([lp for _, lp in want], abs=1e-9)


@pytest.mark.parametrize("seed", range(5))
def test_beam_one_is_greedy(trained_ckpt, seed):
    rng = np.random.default_rng(seed)
    src = rng.integers(4, trained_ckpt.config.vocab_size, 10).tolist()
    g_ids, g_lp = greedy(trained_ckpt, src, max_len=12)
    res = beam_search(trained_ckpt, src, GenConfig(beam=1, max_candidates=1, max_len=12))
    assert res[0].ids == g_ids
    assert res[0].logprob == pytest.approx(g_lp, abs=1e-9)


def test_beam_sorted_and_deterministic(trained_ckpt):
    cfg = GenConfig(beam=6, max_candidates=6, max_len=10)
    a = beam_search(trained_ckpt, SRC, cfg)
    assert [c.logprob for c in a] == sorted((c.logprob for c in a), reverse=True)
    assert a == beam_search(trained_ckpt, SRC, cfg)
    assert [c.rank for c in a] == list(range(1, len(a) + 1))
    assert all(c.source == "beam" for c in a)


def test_beam_never_emits_control_tokens(trained_ckpt):
    for c in beam_search(trained_ckpt, SRC, GenConfig(beam=5, max_len=8)):
        assert not {0, 1, 2} & set(c.ids) and len(c.ids) >= 1


def test_beam_top1_monotone_in_width(trained64):
    """Wider beams never find a worse best hypothesis on these inputs (not a theorem)."""
    rng = np.random.default_rng(0)
    for _ in range(4):
        src = rng.integers(4, trained64.config.vocab_size, 8).tolist()
        tops = [beam_search(trained64, src, GenConfig(beam=b, max_candidates=b, max_len=6))[0].logprob
                for b in range(1, 7)]
        assert all(b >= a - 1e-9 for a, b in zip(tops, tops[1:])), tops


def test_filtered_unrestricted_matches_softmax():
    ck = micro_model(vocab_size=7, seed=4, scale=2.0)
    cfg = GenConfig(top_k=7, top_p=1.0, max_len=1, min_len=0)
    draws = filtered_sample(ck, SRC, cfg, 100_000, np.random.default_rng(0))
    logits = forward(ck, SRC, [1])[-1].double()
    logits[[0, 1]] = -math.inf  # pad/bos are never emitted
    p = torch.softmax(logits, -1).numpy()
    counts = np.bincount([c.ids[0] if c.ids else 2 for c in draws], minlength=7)
    support = p > 0
    assert counts[~support].sum() == 0
    stat = chisquare(counts[support], 100_000 * p[support])
    assert stat.pvalue > 0.01


@pytest.mark.parametrize("seed", [0, 1, 99])
def test_top_k_one_is_greedy(trained_ckpt, seed):
    want, _ = greedy(trained_ckpt, SRC, max_len=10)
    cfg = GenConfig(top_k=1, max_len=10, seed=seed)
    for c in filtered_sample(trained_ckpt, SRC, cfg, 3, np.random.default_rng(seed)):
        assert c.ids == want


def test_every_token_inside_filter_set(trained_ckpt):
    trace = []
    cfg = GenConfig(top_k=5, top_p=0.8, max_len=12)
    filtered_sample(trained_ckpt, SRC, cfg, 100, np.random.default_rng(3), trace)
    assert len(trace) >= 100
    for _, allowed, chosen in trace:
        assert chosen in allowed and 1 <= len(allowed) <= 5


def test_sampling_seeded(trained_ckpt):
    cfg = GenConfig(top_k=8, top_p=0.9, max_len=8)
    a = filtered_sample(trained_ckpt, SRC, cfg, 10, np.random.default_rng(5))
    b = filtered_sample(trained_ckpt, SRC, cfg, 10, np.random.default_rng(5))
    assert a == b
    assert filtered_sample(trained_ckpt, SRC, cfg, 0) == []


def _nucleus_oracle(p, top_k, top_p):
    order = sorted(range(len(p)), key=lambda i: (-p[i], i))
    order = [i for i in order if p[i] > 0]
    total, keep = 0.0, []
    for i in order:
        keep.append(i)
        total += p[i] / sum(p)
        if total >= top_p - 1e-12:
            break
    return keep[:top_k]


@settings(max_examples=300, deadline=None)
@given(st.lists(st.floats(0.0, 1.0), min_size=2, max_size=12).filter(lambda x: sum(x) > 0.01),
       st.integers(1, 12), st.floats(0.05, 1.0))
def test_filter_set_is_minimal_nucleus(p, top_k, top_p):
    probs = np.array(p)
    ids, q = filter_distribution(probs, top_k, top_p)
    assert ids.tolist() == _nucleus_oracle(p, top_k, top_p)
    assert q.sum() == pytest.approx(1.0)
    assert np.all(np.diff(probs[ids]) <= 0)


def test_gen_config_validation():
    for kw in (dict(beam=0), dict(top_p=0.0), dict(top_p=1.5), dict(top_k=0),
               dict(beam=8, max_candidates=4), dict(max_len=0)):
        with pytest.raises(ConfigurationError):
            GenConfig(**kw)


def test_max_candidates_equal_beam_is_pure_beam(trained_ckpt, vocab, py_task):
    cfg = GenConfig(beam=4, max_candidates=4, max_len=20)
    out = generate_patches(trained_ckpt, py_task.test[0], vocab, cfg)
    assert all(c.source == "beam" for c in out) and 1 <= len(out) <= 4


def test_generate_caps_and_ranks(trained_ckpt, vocab, py_task):
    cfg = GenConfig(beam=3, max_candidates=12, max_len=20, top_k=20, top_p=0.99)
    for pair in py_task.test[:3]:
        out = generate_patches(trained_ckpt, pair, vocab, cfg)
        assert len(out) <= 12
        assert [c.rank for c in out] == list(range(1, len(out) + 1))
        assert len({c.text for c in out}) == len(out)
        sources = [c.source for c in out]
        assert sources == sorted(sources)  # every beam candidate precedes every sample
        beams = [c.logprob for c in out if c.source == "beam"]
        assert beams == sorted(beams, reverse=True)
        assert out == generate_patches(trained_ckpt, pair, vocab, cfg)


def test_duplicate_sample_is_dropped():
    beam = [CandidatePatch("a", -1.0, 1, "beam"), CandidatePatch("b", -2.0, 2, "beam")]
    samples = [CandidatePatch("c", -3.0, 1, "sample"), CandidatePatch("d", -4.0, 2, "sample")]
    base = merge_candidates(beam, samples, 10)
    injected = merge_candidates(beam, samples[:1] + [CandidatePatch("a", -0.5, 9, "sample")]
                                + samples[1:], 10)
    assert injected == base
    assert [c.text for c in base] == ["a", "b", "c", "d"]
    assert len(merge_candidates(beam, samples, 3)) == 3
