import math

import numpy as np
import pytest
import torch

from polyrepair.errors import CompatibilityError, ConfigurationError, FormatError, InputError
from polyrepair.model import (Checkpoint, EncodedExample, ModelConfig, batch_logits,
                              example_losses, forward, init_params, load_checkpoint, loss,
                              new_checkpoint, param_count, param_layout, save_checkpoint,
                              unflatten)
from polyrepair.tokenizer import build_vocab

from conftest import micro_model


def closed_form_count(V, L, d, f, P):
    ln = 2 * d
    attn = 4 * (d * d + d)
    ff = d * f + f + f * d + d
    enc = 2 * ln + attn + ff
    dec = 3 * ln + 2 * attn + ff
    return V * d + 2 * P * d + L * (enc + dec) + 2 * ln + V * d


def test_param_count_closed_form():
    cfg = ModelConfig(vocab_size=50, layers=2, heads=2, d_model=16, d_ff=32, max_positions=64)
    assert param_count(cfg) == closed_form_count(50, 2, 16, 32, 64)
    assert init_params(cfg).numel() == param_count(cfg)


@pytest.mark.parametrize("kw", [dict(d_model=15, heads=2), dict(dropout=1.0), dict(layers=0)])
def test_config_validation(kw):
    with pytest.raises(ConfigurationError):
        ModelConfig(vocab_size=10, **kw)


def test_layout_is_stable():
    cfg = ModelConfig(vocab_size=11, layers=1, heads=2, d_model=8, d_ff=8, max_positions=8)
    assert param_layout(cfg) == param_layout(ModelConfig(**vars(cfg)))
    p = init_params(cfg, seed=5)
    assert torch.equal(p, init_params(cfg, seed=5))
    views = unflatten(p, cfg)
    assert [n for n, _ in param_layout(cfg)] == list(views)


def test_unflatten_rejects_wrong_length():
    cfg = ModelConfig(vocab_size=11, layers=1, heads=2, d_model=8, d_ff=8, max_positions=8)
    with pytest.raises(CompatibilityError):
        unflatten(torch.zeros(3), cfg)
    with pytest.raises(CompatibilityError):
        Checkpoint(torch.zeros(3), cfg, "v")


def test_checkpoint_is_immutable(fresh_ckpt):
    with pytest.raises(AttributeError):
        fresh_ckpt.task_id = 4


def test_zero_head_gives_uniform_loss(tiny_cfg, vocab):
    p = init_params(tiny_cfg, seed=0, dtype=torch.float64)
    unflatten(p, tiny_cfg)["lm_head.weight"].zero_()
    ckpt = Checkpoint(p, tiny_cfg, vocab.hash())
    ex = EncodedExample((5, 6, 7), (8, 9, 2))
    assert loss(ckpt, ex) == pytest.approx(3 * math.log(len(vocab)), rel=0, abs=1e-12)


def test_softmax_rows_and_determinism(trained_ckpt):
    src, tgt = [5, 9, 14, 30], [1, 7, 7, 8]
    a = forward(trained_ckpt, src, tgt)
    b = forward(trained_ckpt, src, tgt)
    assert torch.equal(a, b)
    assert a.shape == (4, trained_ckpt.config.vocab_size)
    sums = torch.softmax(a.double(), -1).sum(-1)
    assert torch.allclose(sums, torch.ones(4, dtype=torch.float64), atol=1e-6)


def test_dropout_only_in_train_mode(vocab):
    cfg = ModelConfig(vocab_size=len(vocab), layers=1, heads=2, d_model=16, d_ff=32,
                      dropout=0.5, max_positions=32)
    ck = new_checkpoint(cfg, vocab, seed=0)
    src, tgt = [5, 6, 7], [1, 8]
    assert torch.equal(forward(ck, src, tgt), forward(ck, src, tgt))
    torch.manual_seed(0)
    assert not torch.equal(forward(ck, src, tgt, train_mode=True), forward(ck, src, tgt))


def test_length_overflow(trained_ckpt):
    P = trained_ckpt.config.max_positions
    with pytest.raises(InputError):
        forward(trained_ckpt, [5] * (P + 1), [1])
    with pytest.raises(InputError):
        forward(trained_ckpt, [5], [1] * (P + 1))


def test_padding_does_not_leak(trained_ckpt):
    """A short source batched with a long one scores as if alone."""
    a = EncodedExample((5, 6, 7), (8, 2))
    b = EncodedExample(tuple(range(4, 40)), (8, 9, 10, 11, 2))
    both = example_losses(trained_ckpt.params, trained_ckpt.config, [a, b])
    alone = example_losses(trained_ckpt.params, trained_ckpt.config, [a])
    assert float(both[0]) == pytest.approx(float(alone[0]), rel=1e-5)


def test_causal_suffix_perturbation(trained_ckpt):
    rng = np.random.default_rng(0)
    V = trained_ckpt.config.vocab_size
    src = rng.integers(4, V, 12).tolist()
    for _ in range(20):
        T = int(rng.integers(2, 15))
        tgt = [1] + rng.integers(4, V, T - 1).tolist()
        t = int(rng.integers(0, T - 1))
        other = tgt[:t + 1] + rng.integers(4, V, T - t - 1).tolist()
        assert torch.equal(forward(trained_ckpt, src, tgt)[:t + 1],
                           forward(trained_ckpt, src, other)[:t + 1])


def test_gradient_matches_finite_differences_sample():
    ck = micro_model(vocab_size=20, scale=1.0)
    cfg = ck.config
    ex = [EncodedExample((4, 9, 11, 5), (7, 12, 2)), EncodedExample((6, 6), (19, 2))]
    theta = ck.params.clone().requires_grad_(True)
    (g,) = torch.autograd.grad(example_losses(theta, cfg, ex).sum(), theta)
    rng = np.random.default_rng(1)
    h = 1e-4
    for i in rng.choice(theta.numel(), 300, replace=False):
        e = torch.zeros_like(theta)
        e[i] = h
        with torch.no_grad():
            num = (example_losses(ck.params + e, cfg, ex).sum()
                   - example_losses(ck.params - e, cfg, ex).sum()) / (2 * h)
        assert abs(float(g[i]) - float(num)) <= 1e-3 * max(abs(float(g[i])), abs(float(num))) + 1e-9


def test_greedy_token_is_positionwise_optimal(trained_ckpt):
    """Each greedy token minimises its own position's loss; the last one the total."""
    src = [5, 9, 14, 30]
    V = trained_ckpt.config.vocab_size
    tgt = []
    for _ in range(4):
        row = forward(trained_ckpt, src, [1] + tgt)[-1]
        tgt.append(int(torch.argmax(row)))
    base = loss(trained_ckpt, EncodedExample(tuple(src), tuple(tgt)))
    for pos in range(len(tgt)):
        logp = torch.log_softmax(forward(trained_ckpt, src, [1] + tgt[:pos])[-1], -1)
        assert int(torch.argmax(logp)) == tgt[pos]
    for v in range(V):
        alt = tgt[:-1] + [v]
        assert loss(trained_ckpt, EncodedExample(tuple(src), tuple(alt))) >= base - 1e-6


def test_loss_nonnegative(trained_ckpt):
    rng = np.random.default_rng(2)
    V = trained_ckpt.config.vocab_size
    exs = [EncodedExample(tuple(rng.integers(4, V, 6).tolist()), tuple(rng.integers(2, V, 3).tolist()))
           for _ in range(20)]
    assert bool((example_losses(trained_ckpt.params, trained_ckpt.config, exs) >= 0).all())


def test_empty_target_rejected(trained_ckpt):
    with pytest.raises(InputError):
        example_losses(trained_ckpt.params, trained_ckpt.config, [EncodedExample((5,), ())])


def test_checkpoint_round_trip(tmp_path, trained_ckpt, vocab):
    path = tmp_path / "c.bin"
    save_checkpoint(trained_ckpt, path)
    back = load_checkpoint(path, vocab)
    assert back == trained_ckpt
    assert load_checkpoint(path) == trained_ckpt
    assert path.read_bytes().startswith(b"#polyrepair-ckpt v1\n")


def test_checkpoint_wrong_vocab(tmp_path, trained_ckpt):
    path = tmp_path / "c.bin"
    save_checkpoint(trained_ckpt, path)
    other = build_vocab(["entirely different text"], 100)
    with pytest.raises(CompatibilityError):
        load_checkpoint(path, other)


def test_checkpoint_bad_file(tmp_path, trained_ckpt):
    path = tmp_path / "c.bin"
    path.write_bytes(b"nope\n")
    with pytest.raises(FormatError):
        load_checkpoint(path)
    save_checkpoint(trained_ckpt, path)
    path.write_bytes(path.read_bytes()[:-4])
    with pytest.raises(FormatError):
        load_checkpoint(path)
