"""Versioned JSON checkpoints: parameters, optimizer moments, config, vocab."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .nn import ParameterSet
from .optim import AdamState

FORMAT_VERSION = 1


def _pack(arr: np.ndarray) -> dict:
    return {"shape": list(arr.shape), "values": arr.reshape(-1).tolist()}


def _unpack(entry: dict) -> np.ndarray:
    return np.asarray(entry["values"], dtype=float).reshape(entry["shape"])


def save_checkpoint(path, params: ParameterSet, *, config: dict | None = None,
                    vocab_tokens: list[str] | None = None,
                    adam: AdamState | None = None) -> None:
    payload = {
        "format_version": FORMAT_VERSION,
        "config": config or {},
        "vocab": vocab_tokens or [],
        "params": {name: _pack(p.tensor.data) for name, p in params.items()},
        "init_specs": {name: p.init_spec for name, p in params.items()},
    }
    if adam is not None:
        payload["adam"] = {
            "step": adam.step,
            "alpha": adam.alpha,
            "beta1": adam.beta1,
            "beta2": adam.beta2,
            "epsilon": adam.epsilon,
            "first_moment": {k: _pack(v) for k, v in adam.first_moment.items()},
            "second_moment": {k: _pack(v) for k, v in adam.second_moment.items()},
        }
    Path(path).write_text(json.dumps(payload))


def load_checkpoint(path) -> dict:
    payload = json.loads(Path(path).read_text())
    version = payload.get("format_version")
    if version != FORMAT_VERSION:
        raise ValueError(f"unsupported checkpoint format version: {version!r}")
    return payload


def restore_parameters(params: ParameterSet, payload: dict) -> None:
    """Copy checkpoint values into an existing parameter set, validating shapes."""
    stored = payload["params"]
    missing = [n for n in params.names() if n not in stored]
    if missing:
        raise ValueError(f"checkpoint is missing parameters: {missing}")
    for name, p in params.items():
        arr = _unpack(stored[name])
        if arr.shape != p.tensor.data.shape:
            raise ValueError(
                f"checkpoint shape mismatch for '{name}': "
                f"{arr.shape} vs {p.tensor.data.shape}"
            )
        p.tensor.data = arr.astype(p.tensor.data.dtype)


def restore_adam(payload: dict, params: ParameterSet) -> AdamState | None:
    entry = payload.get("adam")
    if not entry:
        return None
    state = AdamState(
        alpha=entry["alpha"], beta1=entry["beta1"], beta2=entry["beta2"],
        epsilon=entry["epsilon"], step=entry["step"],
    )
    for name, p in params.items():
        m = _unpack(entry["first_moment"][name])
        v = _unpack(entry["second_moment"][name])
        if m.shape != p.tensor.data.shape or v.shape != p.tensor.data.shape:
            raise ValueError(f"optimizer moment shape mismatch for '{name}'")
        state.first_moment[name] = m
        state.second_moment[name] = v
    return state
