import numpy as np
import pytest
import torch

from polyrepair.corpus import generate_synthetic_corpus
from polyrepair.model import Checkpoint, ModelConfig, init_params, new_checkpoint
from polyrepair.tokenizer import build_vocab
from polyrepair.trainer import TrainConfig, fit, vocab_corpus
from polyrepair.replay import encode_pairs

torch.set_num_threads(1)

TINY = dict(layers=2, heads=2, d_model=16, d_ff=32, dropout=0.0, max_positions=160)


@pytest.fixture(scope="session")
def py_task():
    return generate_synthetic_corpus("python", seed=3, n=200)


@pytest.fixture(scope="session")
def vocab(py_task):
    return build_vocab(vocab_corpus(py_task), 200)


@pytest.fixture(scope="session")
def tiny_cfg(vocab):
    return ModelConfig(vocab_size=len(vocab), **TINY)


@pytest.fixture(scope="session")
def fresh_ckpt(tiny_cfg, vocab):
    return new_checkpoint(tiny_cfg, vocab, seed=0)


@pytest.fixture(scope="session")
def trained_ckpt(py_task, vocab, tiny_cfg):
    """A few epochs on the 200-pair task: far from uniform, not converged."""
    ckpt = new_checkpoint(tiny_cfg, vocab, seed=1)
    train = encode_pairs(py_task.train, vocab, True, tiny_cfg.max_positions)
    val = encode_pairs(py_task.val, vocab, True, tiny_cfg.max_positions)
    cfg = TrainConfig(max_epochs=3, patience=3, lr=3e-3, batch_size=16)
    ckpt, _ = fit(ckpt, train, val, cfg, seed=0)
    return ckpt


@pytest.fixture(scope="session")
def trained64(trained_ckpt):
    """The trained toy model in float64, for finite-difference oracles."""
    return trained_ckpt.replace(params=trained_ckpt.params.double())


def micro_model(vocab_size=7, seed=3, scale=20.0, dtype=torch.float64):
    """A 1-layer model with peaked logits over a tiny vocabulary."""
    cfg = ModelConfig(vocab_size=vocab_size, layers=1, heads=2, d_model=16, d_ff=32,
                      dropout=0.0, max_positions=16)
    return Checkpoint(init_params(cfg, seed, dtype) * scale, cfg, "micro")


ACCEPTANCE: list[str] = []


def record(criterion: str, passed: bool, detail: str) -> bool:
    """Queue one acceptance verdict line for the terminal summary."""
    ACCEPTANCE.append(f"{'PASS' if passed else 'FAIL'}  {criterion}: {detail}")
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
