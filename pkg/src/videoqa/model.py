"""Encoders, dual-memory answer decoder and beam search.

The question is encoded twice: once as guidance for the video summaries and
once, augmented with its per-token gated summaries, as the decoder's primary
attention memory. In multi-turn mode the concatenated dialogue history is
encoded by its own BiLSTM and attended as a second memory; in single-turn
mode that encoder does not exist at all.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields, replace

import numpy as np

from . import guided_summary as gs
from .autodiff import (
    ShapeError,
    Tensor,
    broadcast_rows,
    concat,
    dropout,
    embedding_lookup,
    lstm_cell,
    matmul,
    no_grad,
    softmax,
    stack,
    take_row,
    tanh,
    transpose,
)
from .data import EOS_ID, SOS_ID
from .nn import LSTMWeights, ParameterSet, add_lstm, affine

SINGLE_TURN = "single_turn"
MULTI_TURN = "multi_turn"


@dataclass
class ModelConfig:
    """Every knob of the model; JSON round-trippable."""

    vocab_size: int
    mode: str = MULTI_TURN
    embed_dim: int = 256
    feature_dim: int = 256
    raw_feature_dim: int = 2048
    guide_hidden: int = 128        # per direction; 2*guide_hidden == feature_dim
    question_hidden: int = 128     # per direction; decoder hidden = 2*question_hidden
    dialogue_hidden: int = 128
    attention_dim: int = 256
    gate_hidden: int = 256
    dropout: float = 0.2
    beam_width: int = 3
    max_decode_len: int = 20
    token_summaries: bool = True
    gating: bool = True
    similarity: str = "trilinear"
    tie_output: bool = True
    beam_length_norm: bool = True

    def __post_init__(self):
        if self.mode not in (SINGLE_TURN, MULTI_TURN):
            raise ValueError(f"unknown mode: {self.mode!r}")
        if self.similarity not in ("trilinear", "dot"):
            raise ValueError(f"unknown similarity: {self.similarity!r}")
        for name in ("vocab_size", "embed_dim", "feature_dim", "raw_feature_dim",
                     "guide_hidden", "question_hidden", "dialogue_hidden",
                     "attention_dim", "gate_hidden", "beam_width", "max_decode_len"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError(f"dropout must be in [0, 1), got {self.dropout}")
        if 2 * self.guide_hidden != self.feature_dim:
            raise ValueError(
                "guide encoder output (2*guide_hidden) must equal feature_dim so the "
                "trilinear form x*r is well-typed: "
                f"2*{self.guide_hidden} != {self.feature_dim}"
            )

    @property
    def decoder_hidden(self) -> int:
        return 2 * self.question_hidden

    @property
    def multi_turn(self) -> bool:
        return self.mode == MULTI_TURN

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, data: dict) -> "ModelConfig":
        return cls(**data)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "ModelConfig":
        return cls.from_dict(json.loads(text))


@dataclass
class EncoderMemory:
    """Attention memories: question token states, sentence state, dialogue states."""

    q_tok: Tensor                 # (K, 2*question_hidden)
    q_sen: Tensor                 # (2*question_hidden,)
    d_tok: Tensor | None = None   # (M, 2*dialogue_hidden), multi-turn only


@dataclass
class DecoderState:
    h: Tensor
    c: Tensor
    step: int = 0


@dataclass
class BeamHypothesis:
    """Partial decoded sequence; finished hypotheses are never extended."""

    tokens: list[int] = field(default_factory=list)
    log_prob: float = 0.0
    state: DecoderState | None = None
    finished: bool = False

    def score(self, length_norm: bool) -> float:
        if length_norm:
            return self.log_prob / max(1, len(self.tokens))
        return self.log_prob


def bahdanau_attend(h_prev: Tensor, memory: Tensor, W: Tensor, v: Tensor):
    """Additive attention: weights and context over the rows of ``memory``.

    score_t = v . tanh(W [h_prev ++ memory_t]); weights = softmax(scores);
    context = weighted sum of memory rows.
    """
    if memory.ndim != 2 or memory.shape[0] < 1:
        raise ShapeError(f"attention memory must be a nonempty matrix, got {memory.shape}")
    T = memory.shape[0]
    pairs = concat([broadcast_rows(h_prev, T), memory], axis=1)
    scores = matmul(tanh(matmul(pairs, W)), v)
    weights = softmax(scores)
    return weights, matmul(weights, memory)


class VideoQAModel:
    """All trainable state plus the forward passes built from it."""

    def __init__(self, config: ModelConfig, rng: np.random.Generator):
        self.config = config
        p = ParameterSet()
        c = config
        self.params = p

        p.matrix("embed", c.vocab_size, c.embed_dim, rng)
        p.matrix("proj.W", c.raw_feature_dim, c.feature_dim, rng)

        self.guide_fw = add_lstm(p, "guide.fw", c.embed_dim, c.guide_hidden, rng)
        self.guide_bw = add_lstm(p, "guide.bw", c.embed_dim, c.guide_hidden, rng)
        p.uniform_vector("sim.w", 3 * c.feature_dim, rng)
        p.matrix("gate.W2", c.feature_dim, c.gate_hidden, rng)
        p.vector("gate.b2", c.gate_hidden)
        p.matrix("gate.W1", c.gate_hidden, c.feature_dim, rng)
        p.vector("gate.b1", c.feature_dim)

        enc_in = c.embed_dim + c.feature_dim
        self.question_fw = add_lstm(p, "qenc.fw", enc_in, c.question_hidden, rng)
        self.question_bw = add_lstm(p, "qenc.bw", enc_in, c.question_hidden, rng)

        dec_in = c.embed_dim + 2 * c.question_hidden
        if c.multi_turn:
            self.dialogue_fw = add_lstm(p, "denc.fw", c.embed_dim, c.dialogue_hidden, rng)
            self.dialogue_bw = add_lstm(p, "denc.bw", c.embed_dim, c.dialogue_hidden, rng)
            p.matrix("att_d.W", c.decoder_hidden + 2 * c.dialogue_hidden, c.attention_dim, rng)
            p.uniform_vector("att_d.v", c.attention_dim, rng)
            dec_in += 2 * c.dialogue_hidden
        p.matrix("att_q.W", c.decoder_hidden + 2 * c.question_hidden, c.attention_dim, rng)
        p.uniform_vector("att_q.v", c.attention_dim, rng)

        self.decoder = add_lstm(p, "dec", dec_in, c.decoder_hidden, rng)
        if c.tie_output:
            if c.decoder_hidden != c.embed_dim:
                p.matrix("out.bridge", c.decoder_hidden, c.embed_dim, rng)
        else:
            p.matrix("out.W", c.decoder_hidden, c.vocab_size, rng)
        p.vector("out.b", c.vocab_size)

    # -- encoding ----------------------------------------------------------

    def encode(self, question_ids, features, frame_mask=None, context_ids=None,
               *, training: bool = False, rng: np.random.Generator | None = None):
        """Full encoder stack for one example.

        ``question_ids``/``context_ids`` are integer id sequences, ``features``
        an (L, raw_feature_dim) array (rows beyond ``frame_mask`` may be
        padding). Returns ``(EncoderMemory, GuidedVideoSummary)``.
        """
        question_ids = np.asarray(question_ids, dtype=np.int64)
        if question_ids.size < 1:
            raise ShapeError("empty question")
        c = self.config
        p = self.params
        rate = c.dropout

        x_emb = embedding_lookup(p["embed"], question_ids)
        x_tok, x_sen = self._run_bilstm(x_emb, self.guide_fw, self.guide_bw, training, rng)

        frames = gs.project_frames(Tensor(np.asarray(features, dtype=float)), p["proj.W"])
        summary = gs.build_summary(
            x_tok, x_sen, frames,
            w_sim=p["sim.w"], gate_w1=p["gate.W1"], gate_b1=p["gate.b1"],
            gate_w2=p["gate.W2"], gate_b2=p["gate.b2"],
            token_summaries=c.token_summaries, gating=c.gating,
            similarity=c.similarity, frame_mask=frame_mask,
        )

        q_in = concat([x_emb, summary.gated], axis=1)
        q_tok, q_sen = self._run_bilstm(q_in, self.question_fw, self.question_bw, training, rng)

        d_tok = None
        if c.multi_turn:
            context_ids = np.asarray(context_ids, dtype=np.int64) if context_ids is not None else None
            if context_ids is None or context_ids.size < 1:
                raise ShapeError("multi-turn mode requires a non-empty dialogue context")
            d_emb = embedding_lookup(p["embed"], context_ids)
            d_tok, _ = self._run_bilstm(d_emb, self.dialogue_fw, self.dialogue_bw, training, rng)

        return EncoderMemory(q_tok=q_tok, q_sen=q_sen, d_tok=d_tok), summary

    def _run_bilstm(self, inputs, fw: LSTMWeights, bw: LSTMWeights, training, rng):
        from .nn import bilstm

        rate = self.config.dropout
        states, sen = bilstm(inputs, fw, bw, dropout_rate=rate, training=training, rng=rng)
        # output dropout on the non-recurrent connections only
        states = dropout(states, rate, training, rng)
        sen = dropout(sen, rate, training, rng)
        return states, sen

    # -- decoding ----------------------------------------------------------

    def initial_state(self, memory: EncoderMemory) -> DecoderState:
        zeros = Tensor(np.zeros(self.config.decoder_hidden))
        return DecoderState(h=memory.q_sen, c=zeros, step=0)

    def decode_cache(self) -> dict:
        """Decoder tensors reusable across the steps of one graph."""
        out = transpose(self.params["embed"]) if self.config.tie_output else self.params["out.W"]
        return {"lstm": self.decoder.fused(), "out": out}

    def decoder_step(self, state: DecoderState, y_prev_embed: Tensor,
                     memory: EncoderMemory, *, training: bool = False,
                     rng: np.random.Generator | None = None, cache: dict | None = None):
        """One decoder step: attend, recur, project to vocabulary logits.

        Returns ``(logits, new_state, attention)`` where attention maps
        memory name to its weight vector (numpy).
        """
        c = self.config
        p = self.params
        if cache is None:
            cache = self.decode_cache()
        w_q, ctx_q = bahdanau_attend(state.h, memory.q_tok, p["att_q.W"], p["att_q.v"])
        parts = [y_prev_embed, ctx_q]
        attention = {"question": w_q.data}
        if c.multi_turn:
            if memory.d_tok is None:
                raise ShapeError("multi-turn decoder needs dialogue memory")
            w_d, ctx_d = bahdanau_attend(state.h, memory.d_tok, p["att_d.W"], p["att_d.v"])
            parts.append(ctx_d)
            attention["dialogue"] = w_d.data
        x = dropout(concat(parts), c.dropout, training, rng)
        W, U, b = cache["lstm"]
        h, cc = lstm_cell(x, state.h, state.c, W, U, b)
        h_out = dropout(h, c.dropout, training, rng)
        logits = self._output_logits(h_out, cache)
        return logits, DecoderState(h=h, c=cc, step=state.step + 1), attention

    def _output_logits(self, h: Tensor, cache: dict) -> Tensor:
        if self.config.tie_output and "out.bridge" in self.params:
            h = matmul(h, self.params["out.bridge"])
        return affine(h, cache["out"], self.params["out.b"])

    def answer_logits(self, memory: EncoderMemory, answer_ids, *,
                      training: bool = False, rng: np.random.Generator | None = None) -> Tensor:
        """Teacher-forced logits, one row per answer position after the start token."""
        answer_ids = np.asarray(answer_ids, dtype=np.int64)
        if answer_ids.size < 2:
            raise ShapeError("answer needs at least start and end tokens")
        prev = embedding_lookup(self.params["embed"], answer_ids[:-1])
        state = self.initial_state(memory)
        cache = self.decode_cache()
        rows = []
        for n in range(answer_ids.size - 1):
            logits, state, _ = self.decoder_step(
                state, take_row(prev, n), memory, training=training, rng=rng, cache=cache)
            rows.append(logits)
        return stack(rows)

    def embed_token(self, token_id: int) -> Tensor:
        return embedding_lookup(self.params["embed"], np.asarray([token_id]))

    # -- embedding tying ----------------------------------------------------

    def tie_embeddings(self, rng: np.random.Generator | None = None) -> None:
        """Share the embedding matrix with the output projection.

        Input embeddings (question, dialogue, decoder) already share one
        table; this drops the free output matrix in favour of its transpose,
        inserting a bridge projection when the decoder width differs from
        the embedding width.
        """
        if self.config.tie_output:
            return
        c = self.config
        if c.decoder_hidden != c.embed_dim and "out.bridge" not in self.params:
            if rng is None:
                raise ValueError("tying with decoder_hidden != embed_dim needs an rng for the bridge")
            self.params.matrix("out.bridge", c.decoder_hidden, c.embed_dim, rng)
        self.params.remove("out.W")
        self.config = replace(c, tie_output=True)

    def parameter_count(self) -> int:
        return self.params.total_size()


# ---------------------------------------------------------------------------
# decoding strategies


def decode_greedy(model: VideoQAModel, memory: EncoderMemory, *,
                  max_len: int | None = None, sos_id: int = SOS_ID,
                  eos_id: int = EOS_ID) -> list[int]:
    """Argmax decoding from the start token until the end token or max_len."""
    max_len = model.config.max_decode_len if max_len is None else max_len
    out: list[int] = []
    with no_grad():
        state = model.initial_state(memory)
        cache = model.decode_cache()
        token = sos_id
        for _ in range(max_len):
            emb = take_row(model.embed_token(token), 0)
            logits, state, _ = model.decoder_step(state, emb, memory, cache=cache)
            token = int(np.argmax(logits.data))
            if token == eos_id:
                break
            out.append(token)
    return out


def beam_search(model: VideoQAModel, memory: EncoderMemory, *,
                width: int | None = None, max_len: int | None = None,
                sos_id: int = SOS_ID, eos_id: int = EOS_ID,
                length_norm: bool | None = None) -> BeamHypothesis:
    """Best hypothesis under beam search; finished beats unfinished.

    Scores are cumulative token log-probabilities, divided by emitted length
    when ``length_norm`` (the default) is on; the end token's probability is
    included and counted. Hypotheses that emit the end token move to a
    retained pool and are never extended or dropped; the beam slots hold the
    top-``width`` unfinished candidates. The best finished hypothesis wins,
    falling back to the best unfinished one at ``max_len``.
    """
    cfg = model.config
    width = cfg.beam_width if width is None else width
    max_len = cfg.max_decode_len if max_len is None else max_len
    if width < 1:
        raise ValueError("beam width must be >= 1")
    norm = cfg.beam_length_norm if length_norm is None else length_norm

    finished: list[BeamHypothesis] = []
    with no_grad():
        beam = [BeamHypothesis(state=model.initial_state(memory))]
        cache = model.decode_cache()
        for _ in range(max_len):
            if not beam:
                break
            candidates = []
            for hyp in beam:
                token = hyp.tokens[-1] if hyp.tokens else sos_id
                emb = take_row(model.embed_token(token), 0)
                logits, new_state, _ = model.decoder_step(hyp.state, emb, memory, cache=cache)
                log_probs = np.log(np.maximum(softmax(logits).data, 1e-300))
                top = np.argsort(log_probs)[::-1][: min(width, log_probs.size)]
                for t in top:
                    t = int(t)
                    extended = BeamHypothesis(
                        tokens=hyp.tokens + [t],
                        log_prob=hyp.log_prob + float(log_probs[t]),
                        state=new_state,
                        finished=(t == eos_id),
                    )
                    if extended.finished:
                        finished.append(extended)
                    else:
                        candidates.append(extended)
            candidates.sort(key=lambda h: h.score(norm), reverse=True)
            beam = candidates[:width]

    pool = finished if finished else beam
    return max(pool, key=lambda h: h.score(norm))


def decode_beam(model: VideoQAModel, memory: EncoderMemory, *,
                width: int | None = None, max_len: int | None = None,
                sos_id: int = SOS_ID, eos_id: int = EOS_ID,
                length_norm: bool | None = None) -> list[int]:
    best = beam_search(model, memory, width=width, max_len=max_len,
                       sos_id=sos_id, eos_id=eos_id, length_norm=length_norm)
    tokens = list(best.tokens)
    if tokens and tokens[-1] == eos_id:
        tokens.pop()
    return tokens
