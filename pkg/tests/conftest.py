"""Shared oracles and tiny-model helpers for the test suite."""

import numpy as np
import pytest

from videoqa.model import ModelConfig, VideoQAModel


def numeric_grad(f, arr, indices=None, eps=1e-5):
    """Central finite differences of scalar f() w.r.t. entries of arr.

    Mutates/restores arr in place; returns {flat_index: derivative}. With
    ``indices`` None, every entry is differentiated.
    """
    flat = arr.reshape(-1)
    if indices is None:
        indices = range(flat.size)
    out = {}
    for i in indices:
        orig = flat[i]
        flat[i] = orig + eps
        hi = f()
        flat[i] = orig - eps
        lo = f()
        flat[i] = orig
        out[i] = (hi - lo) / (2 * eps)
    return out


def rel_err(a, b, floor=1e-6):
    return abs(a - b) / max(abs(a), abs(b), floor)


def max_rel_err(analytic_flat, numeric: dict, floor=1e-6):
    return max(rel_err(analytic_flat[i], fd, floor) for i, fd in numeric.items())


def tiny_config(**overrides) -> ModelConfig:
    base = dict(
        vocab_size=20,
        mode="multi_turn",
        embed_dim=8,
        feature_dim=8,
        raw_feature_dim=10,
        guide_hidden=4,
        question_hidden=4,
        dialogue_hidden=4,
        attention_dim=6,
        gate_hidden=6,
        dropout=0.0,
        max_decode_len=8,
    )
    base.update(overrides)
    return ModelConfig(**base)


def tiny_model(seed=0, **overrides) -> VideoQAModel:
    return VideoQAModel(tiny_config(**overrides), np.random.default_rng(seed))


def random_example(rng, cfg, K=4, L=6, M=5, N=5):
    """Random (question_ids, context_ids, answer_ids, features) for a config."""
    lo, hi = 4, cfg.vocab_size
    q = rng.integers(lo, hi, size=K)
    ctx = rng.integers(lo, hi, size=M)
    answer_core = rng.integers(lo, hi, size=N - 2)
    ans = np.concatenate([[2], answer_core, [3]])
    feats = rng.standard_normal((L, cfg.raw_feature_dim))
    return q, ctx, ans, feats


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
