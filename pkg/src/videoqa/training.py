"""Teacher-forced training with clipping, Adam and BLEU-4 early stopping."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .autodiff import NumericError, Tensor, concat, no_grad
from .checkpoint import save_checkpoint
from .data import EOS_ID, PAD_ID, SOS_ID, Batch, TrainingInstance, Vocabulary, batch_stream, make_batch
from .metrics import EvalPair, bleu
from .model import EncoderMemory, VideoQAModel, decode_beam, decode_greedy
from .optim import (
    DEFAULT_ALPHA,
    DEFAULT_BETA1,
    DEFAULT_BETA2,
    DEFAULT_CLIP_NORM,
    DEFAULT_EPSILON,
    AdamState,
    adam_step,
    clip_gradients,
    zero_gradients,
)
from .autodiff import cross_entropy


@dataclass
class TrainingConfig:
    max_steps: int = 100_000
    batch_size: int = 32
    seed: int = 0
    alpha: float = DEFAULT_ALPHA
    beta1: float = DEFAULT_BETA1
    beta2: float = DEFAULT_BETA2
    epsilon: float = DEFAULT_EPSILON
    clip_norm: float = DEFAULT_CLIP_NORM
    eval_every: int = 500
    patience: int = 10          # evaluations without BLEU-4 improvement
    val_beam_width: int = 1


def batch_loss(model: VideoQAModel, batch: Batch, *, training: bool,
               rng: np.random.Generator | None) -> Tensor:
    """Mean token cross-entropy over every answer position in the batch."""
    logits_parts = []
    targets = []
    for q_ids, ctx_ids, ans_ids, features, frame_mask in batch.rows():
        memory, _ = model.encode(
            q_ids, features, frame_mask,
            ctx_ids if model.config.multi_turn else None,
            training=training, rng=rng)
        logits_parts.append(model.answer_logits(memory, ans_ids, training=training, rng=rng))
        targets.append(ans_ids[1:])
    return cross_entropy(concat(logits_parts, axis=0), np.concatenate(targets), pad_id=PAD_ID)


def train_step(model: VideoQAModel, batch: Batch, adam: AdamState,
               rng: np.random.Generator, clip_norm: float = DEFAULT_CLIP_NORM) -> dict:
    """One optimization step; returns the loss and pre-clip gradient norm."""
    loss = batch_loss(model, batch, training=True, rng=rng)
    value = float(loss.data)
    if not np.isfinite(value):
        raise NumericError(
            f"non-finite training loss at optimizer step {adam.step + 1}: {value}")
    loss.backward()
    grad_norm = clip_gradients(model.params, clip_norm)
    adam_step(adam, model.params)
    zero_gradients(model.params)
    return {"loss": value, "grad_norm": grad_norm}


def token_accuracy(model: VideoQAModel, instances: list[TrainingInstance]) -> float:
    """Teacher-forced argmax accuracy over all answer tokens."""
    correct = 0
    total = 0
    with no_grad():
        for inst in instances:
            memory, _ = model.encode(
                inst.question_ids, inst.features, None,
                inst.context_ids if model.config.multi_turn else None)
            logits = model.answer_logits(memory, inst.answer_ids)
            pred = logits.data.argmax(axis=1)
            correct += int((pred == inst.answer_ids[1:]).sum())
            total += len(inst.answer_ids) - 1
    return correct / total if total else 0.0


def decode_instances(model: VideoQAModel, instances: list[TrainingInstance],
                     vocab: Vocabulary, beam_width: int = 1,
                     max_len: int | None = None) -> list[list[str]]:
    """Decoded answers (token lists) for each instance."""
    out = []
    for inst in instances:
        memory, _ = model.encode(
            inst.question_ids, inst.features, None,
            inst.context_ids if model.config.multi_turn else None)
        if beam_width <= 1:
            ids = decode_greedy(model, memory, max_len=max_len)
        else:
            ids = decode_beam(model, memory, width=beam_width, max_len=max_len)
        out.append(vocab.decode(ids))
    return out


def reference_answer(inst: TrainingInstance, vocab: Vocabulary) -> list[str]:
    core = [i for i in inst.answer_ids if i not in (SOS_ID, EOS_ID, PAD_ID)]
    return vocab.decode(core)


def validation_bleu4(model: VideoQAModel, instances: list[TrainingInstance],
                     vocab: Vocabulary, beam_width: int = 1) -> float:
    hyps = decode_instances(model, instances, vocab, beam_width=beam_width)
    corpus = [EvalPair(hypothesis=h, references=[reference_answer(i, vocab)])
              for h, i in zip(hyps, instances)]
    return bleu(corpus, 4)


@dataclass
class FitResult:
    steps_run: int = 0
    best_bleu4: float = float("-inf")
    best_step: int = 0
    stopped_early: bool = False
    history: list = field(default_factory=list)


def fit(model: VideoQAModel, train_instances: list[TrainingInstance],
        val_instances: list[TrainingInstance] | None, vocab: Vocabulary,
        cfg: TrainingConfig, *, log_path=None, checkpoint_path=None,
        config_payload: dict | None = None) -> FitResult:
    """Run the training loop with periodic validation BLEU-4 early stopping."""
    adam = AdamState.for_params(model.params, alpha=cfg.alpha, beta1=cfg.beta1,
                                beta2=cfg.beta2, epsilon=cfg.epsilon)
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 1]))
    stream = batch_stream(train_instances, cfg.batch_size, cfg.seed)
    result = FitResult()
    log_fh = open(log_path, "w") if log_path else None

    def _log(record: dict) -> None:
        result.history.append(record)
        if log_fh:
            log_fh.write(json.dumps(record) + "\n")
            log_fh.flush()

    def _save() -> None:
        if checkpoint_path:
            save_checkpoint(checkpoint_path, model.params,
                            config=config_payload or model.config.to_dict(),
                            vocab_tokens=vocab.tokens, adam=adam)

    try:
        for step in range(1, cfg.max_steps + 1):
            rec = train_step(model, next(stream), adam, rng, cfg.clip_norm)
            record = {"step": step, "loss": rec["loss"], "grad_norm": rec["grad_norm"]}
            evaluate_now = val_instances and cfg.eval_every and step % cfg.eval_every == 0
            if evaluate_now:
                score = validation_bleu4(model, val_instances, vocab, cfg.val_beam_width)
                record["val_bleu4"] = score
                if score > result.best_bleu4:
                    result.best_bleu4 = score
                    result.best_step = step
                    _save()
                elif (step - result.best_step) // cfg.eval_every >= cfg.patience:
                    _log(record)
                    result.stopped_early = True
                    result.steps_run = step
                    break
            _log(record)
            result.steps_run = step
        else:
            pass
    finally:
        if log_fh:
            log_fh.close()
    if not val_instances and checkpoint_path:
        _save()
    if val_instances and result.best_step == 0 and checkpoint_path:
        # never evaluated (eval_every > max_steps): keep the final weights
        _save()
    return result
