"""Question-guided video representation.

Given encoded question tokens and projected frame features, build one video
summary per question token by attending over all frames, then select feature
dimensions with a sigmoid gate computed from the sentence-level question
encoding:

    score(k,l)  = w_sim . [x_k ++ r_l ++ (x_k * r_l)]      (trilinear)
    att_k       = softmax(score(k, .))
    v_k         = sum_l att(k,l) r_l
    gate        = sigmoid(W1 relu(W2 x_sen + b2) + b1)
    gated_k     = v_k * gate

Both halves can be ablated: token-level summaries can be replaced by a single
sentence-level summary broadcast to every token, and the gate by exact ones.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .autodiff import (
    ShapeError,
    Tensor,
    add_colvec,
    add_rowvec,
    broadcast_rows,
    matmul,
    mul_rowvec,
    relu,
    sigmoid,
    slice1d,
    softmax,
    take_row,
    transpose,
)
from .nn import affine


@dataclass
class GuidedVideoSummary:
    """Per-token gated video summaries with their attention map and gate."""

    attention: Tensor  # (K, L), rows sum to 1
    summaries: Tensor  # (K, d_f), pre-gate
    gate: Tensor       # (d_f,)
    gated: Tensor      # (K, d_f)


def project_frames(features: Tensor, w_proj: Tensor) -> Tensor:
    """Linear dimensionality reduction of raw frame features; no bias."""
    if features.ndim != 2 or w_proj.ndim != 2:
        raise ShapeError("project_frames expects matrices")
    if features.shape[1] != w_proj.shape[0]:
        raise ShapeError(
            f"feature width {features.shape[1]} does not match projection {w_proj.shape}"
        )
    return matmul(features, w_proj)


def trilinear_scores(x_tok: Tensor, frames: Tensor, w_sim: Tensor) -> Tensor:
    """Similarity of every (token, frame) pair via the trilinear form.

    Decomposes w.[x ++ r ++ x*r] into x.w1 + r.w2 + (x*w3).r, which avoids
    materialising the (K*L, 3d) pair matrix but is exactly the per-pair value.
    """
    d = x_tok.shape[1]
    if frames.ndim != 2 or frames.shape[1] != d:
        raise ShapeError(f"token dim {d} does not match frame dim {frames.shape}")
    if w_sim.shape != (3 * d,):
        raise ShapeError(f"similarity weight must have shape ({3 * d},), got {w_sim.shape}")
    w1 = slice1d(w_sim, 0, d)
    w2 = slice1d(w_sim, d, 2 * d)
    w3 = slice1d(w_sim, 2 * d, 3 * d)
    cross = matmul(mul_rowvec(x_tok, w3), transpose(frames))  # (K, L)
    return add_rowvec(add_colvec(cross, matmul(x_tok, w1)), matmul(frames, w2))


def dot_scores(x_tok: Tensor, frames: Tensor) -> Tensor:
    """Plain dot-product similarity, kept for A/B comparison."""
    if x_tok.shape[1] != frames.shape[1]:
        raise ShapeError(f"token dim {x_tok.shape} does not match frame dim {frames.shape}")
    return matmul(x_tok, transpose(frames))


def summarize_per_token(scores: Tensor, frames: Tensor,
                        frame_mask: np.ndarray | None = None):
    """Row-wise attention over frames and the weighted frame sums.

    Returns ``(attention, summaries)`` of shapes (K,L) and (K,d_f). Masked
    frames receive attention weight exactly 0.
    """
    attention = softmax(scores, mask=frame_mask)
    return attention, matmul(attention, frames)


def compute_gate(x_sen: Tensor, w1: Tensor, b1: Tensor, w2: Tensor, b2: Tensor) -> Tensor:
    """Sigmoid feature-selection gate from the sentence-level question encoding."""
    hidden = relu(affine(x_sen, w2, b2))
    return sigmoid(affine(hidden, w1, b1))


def apply_gate(summaries: Tensor, gate: Tensor) -> Tensor:
    """Multiply the gate into every token's summary."""
    return mul_rowvec(summaries, gate)


def summarize_sentence_level(x_sen: Tensor, frames: Tensor, w_sim: Tensor,
                             frame_mask: np.ndarray | None = None):
    """Single video summary queried by the whole-question encoding.

    Returns ``(attention_row, summary)`` of shapes (L,) and (d_f,).
    """
    scores = trilinear_scores(broadcast_rows(x_sen, 1), frames, w_sim)
    attention, summaries = summarize_per_token(scores, frames, frame_mask)
    return take_row(attention, 0), take_row(summaries, 0)


def build_summary(x_tok: Tensor, x_sen: Tensor, frames: Tensor, *,
                  w_sim: Tensor, gate_w1: Tensor, gate_b1: Tensor,
                  gate_w2: Tensor, gate_b2: Tensor,
                  token_summaries: bool = True, gating: bool = True,
                  similarity: str = "trilinear",
                  frame_mask: np.ndarray | None = None) -> GuidedVideoSummary:
    """Compose scoring, summarization and gating per the configured variant."""
    K = x_tok.shape[0]
    if token_summaries:
        if similarity == "dot":
            scores = dot_scores(x_tok, frames)
        elif similarity == "trilinear":
            scores = trilinear_scores(x_tok, frames, w_sim)
        else:
            raise ValueError(f"unknown similarity kind: {similarity!r}")
        attention, summaries = summarize_per_token(scores, frames, frame_mask)
    else:
        att_row, summary = summarize_sentence_level(x_sen, frames, w_sim, frame_mask)
        attention = broadcast_rows(att_row, K)
        summaries = broadcast_rows(summary, K)

    if gating:
        gate = compute_gate(x_sen, gate_w1, gate_b1, gate_w2, gate_b2)
        gated = apply_gate(summaries, gate)
    else:
        gate = Tensor(np.ones(summaries.shape[1]))
        gated = summaries
    return GuidedVideoSummary(attention=attention, summaries=summaries, gate=gate, gated=gated)


# ---------------------------------------------------------------------------
# attention / gate dumps


def write_attention_csv(path, rows) -> None:
    """Write (question_id, token_index, frame_index, weight) rows with header."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["question_id", "token_index", "frame_index", "weight"])
        for question_id, attention in rows:
            att = np.asarray(attention)
            for k in range(att.shape[0]):
                for l in range(att.shape[1]):
                    writer.writerow([question_id, k, l, repr(float(att[k, l]))])


def write_gate_csv(path, rows) -> None:
    """Write (question_id, dim_index, gate_weight) rows with header."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["question_id", "dim_index", "gate_weight"])
        for question_id, gate in rows:
            for d, value in enumerate(np.asarray(gate)):
                writer.writerow([question_id, d, repr(float(value))])


def read_attention_csv(path) -> dict:
    """Inverse of write_attention_csv: {question_id: (K,L) array}."""
    cells: dict[str, dict] = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            entry = cells.setdefault(row["question_id"], {})
            entry[(int(row["token_index"]), int(row["frame_index"]))] = float(row["weight"])
    out = {}
    for qid, entry in cells.items():
        K = max(k for k, _ in entry) + 1
        L = max(l for _, l in entry) + 1
        arr = np.zeros((K, L))
        for (k, l), v in entry.items():
            arr[k, l] = v
        out[qid] = arr
    return out


def read_gate_csv(path) -> dict:
    """Inverse of write_gate_csv: {question_id: (d_f,) array}."""
    cells: dict[str, dict] = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            cells.setdefault(row["question_id"], {})[int(row["dim_index"])] = float(row["gate_weight"])
    out = {}
    for qid, entry in cells.items():
        arr = np.zeros(max(entry) + 1)
        for d, v in entry.items():
            arr[d] = v
        out[qid] = arr
    return out
