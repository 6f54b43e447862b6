"""Command line surface: train, evaluate, infer, ablate, dump-attention, benchmark.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.
Relative --data/--features paths resolve against $VIDEOQA_DATA_ROOT when set.
Every command that takes --out echoes its fully resolved configuration into
the output directory.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from .autodiff import NumericError, Tensor, no_grad, set_default_dtype, take_row
from .checkpoint import load_checkpoint, restore_parameters
from .data import (
    DataError,
    SyntheticSpec,
    Vocabulary,
    generate_synthetic,
    load_dialogues,
    make_instances,
    save_corpus,
)
from .guided_summary import summarize_per_token, trilinear_scores, write_attention_csv, write_gate_csv
from .metrics import EvalPair, evaluate_corpus, evaluate_files
from .model import ModelConfig, VideoQAModel, decode_beam, decode_greedy
from .nn import ParameterSet, add_lstm, bilstm
from .training import (
    TrainingConfig,
    decode_instances,
    fit,
    reference_answer,
    token_accuracy,
)

ABLATION_VARIANTS = (
    ("full", True, True),
    ("-TokSumm", False, True),
    ("-Gating", True, False),
    ("-TokSumm-Gating", False, False),
)

BENCHMARK_LENGTHS = (32, 64, 128, 179, 256, 512)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(1)


def _data_path(value):
    if value is None:
        return None
    path = Path(value)
    root = os.environ.get("VIDEOQA_DATA_ROOT")
    if root and not path.is_absolute():
        return Path(root) / path
    return path


def _echo_config(out_dir: Path, payload: dict) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "config.json").write_text(json.dumps(payload, indent=2, sort_keys=True))


def _load_json_file(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read JSON file {path}: {exc}") from exc


# ---------------------------------------------------------------------------
# corpus/model assembly shared by train / ablate / evaluate --multi-run

_MODEL_FLAGS = (
    "embed_dim", "feature_dim", "guide_hidden", "question_hidden",
    "dialogue_hidden", "attention_dim", "gate_hidden", "dropout",
    "beam_width", "max_decode_len", "similarity",
)
_TRAIN_FLAGS = ("batch_size", "eval_every", "patience", "alpha", "clip_norm")


def _add_corpus_args(p) -> None:
    p.add_argument("--data", help="dialogue JSON file")
    p.add_argument("--features", help="directory of per-video feature arrays")
    p.add_argument("--synthetic", action="store_true",
                   help="generate the default synthetic corpus")
    p.add_argument("--synthetic-spec", help="JSON file with synthetic corpus settings")
    p.add_argument("--prepend-caption", action="store_true",
                   help="prepend the dataset caption as a zeroth turn")


def _add_model_args(p) -> None:
    p.add_argument("--config", help="JSON config file ({'model': ..., 'training': ...})")
    p.add_argument("--mode", choices=["single_turn", "multi_turn"])
    p.add_argument("--embed-dim", type=int)
    p.add_argument("--feature-dim", type=int)
    p.add_argument("--guide-hidden", type=int)
    p.add_argument("--question-hidden", type=int)
    p.add_argument("--dialogue-hidden", type=int)
    p.add_argument("--attention-dim", type=int)
    p.add_argument("--gate-hidden", type=int)
    p.add_argument("--dropout", type=float)
    p.add_argument("--beam-width", type=int)
    p.add_argument("--max-decode-len", type=int)
    p.add_argument("--similarity", choices=["trilinear", "dot"])
    p.add_argument("--no-tok-summ", action="store_true",
                   help="ablation: sentence-level video summary")
    p.add_argument("--no-gating", action="store_true", help="ablation: disable the gate")
    p.add_argument("--min-count", type=int, default=2, help="vocabulary frequency cutoff")
    p.add_argument("--float32", action="store_true", help="train in single precision")


def _add_training_args(p) -> None:
    p.add_argument("--steps", type=int, help="max optimizer steps (default 100000)")
    p.add_argument("--batch-size", type=int)
    p.add_argument("--eval-every", type=int)
    p.add_argument("--patience", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--clip-norm", type=float)
    p.add_argument("--val-fraction", type=float, default=0.15)
    p.add_argument("--seed", type=int, default=0)


def _prepare_corpus(args, out_dir):
    """Returns (examples, synthetic_meta_or_None)."""
    if args.synthetic or args.synthetic_spec:
        spec_kwargs = _load_json_file(args.synthetic_spec) if args.synthetic_spec else {}
        if "pattern_words" in spec_kwargs:
            spec_kwargs["pattern_words"] = tuple(spec_kwargs["pattern_words"])
        if "subject_words" in spec_kwargs:
            spec_kwargs["subject_words"] = tuple(spec_kwargs["subject_words"])
        spec_kwargs.setdefault("seed", args.seed)
        spec = SyntheticSpec(**spec_kwargs)
        examples, meta = generate_synthetic(spec)
        if out_dir is not None:
            save_corpus(examples, out_dir / "corpus", meta)
        return examples, meta
    if not args.data or not args.features:
        raise DataError("provide --data and --features, or --synthetic/--synthetic-spec")
    examples = load_dialogues(_data_path(args.data), _data_path(args.features),
                              prepend_caption=args.prepend_caption)
    return examples, None


def _split_examples(examples, val_fraction: float, seed: int):
    if not 0.0 <= val_fraction < 1.0:
        raise DataError("--val-fraction must be in [0, 1)")
    n_val = int(round(len(examples) * val_fraction))
    order = np.random.default_rng(np.random.SeedSequence([seed, 7])).permutation(len(examples))
    val_idx = set(order[:n_val].tolist())
    train = [ex for i, ex in enumerate(examples) if i not in val_idx]
    val = [ex for i, ex in enumerate(examples) if i in val_idx]
    return train, val


def _resolve_configs(args, examples):
    """Merge defaults < config file < explicit flags into model/training dicts."""
    file_cfg = _load_json_file(args.config) if getattr(args, "config", None) else {}
    model_cfg = dict(file_cfg.get("model", {}))
    train_cfg = dict(file_cfg.get("training", {}))

    if getattr(args, "mode", None):
        model_cfg["mode"] = args.mode
    for name in _MODEL_FLAGS:
        value = getattr(args, name, None)
        if value is not None:
            model_cfg[name] = value
    if getattr(args, "no_tok_summ", False):
        model_cfg["token_summaries"] = False
    if getattr(args, "no_gating", False):
        model_cfg["gating"] = False
    model_cfg.setdefault("raw_feature_dim", int(examples[0].features.shape[1]))

    if getattr(args, "steps", None) is not None:
        train_cfg["max_steps"] = args.steps
    for name in _TRAIN_FLAGS:
        value = getattr(args, name, None)
        if value is not None:
            train_cfg[name] = value
    train_cfg["seed"] = args.seed
    return model_cfg, train_cfg


def _build_vocab(examples, min_count: int) -> Vocabulary:
    return Vocabulary.from_corpus(
        (text for ex in examples for q, a in ex.turns for text in (q, a)),
        min_count=min_count)


def _build_model(model_cfg: dict, vocab: Vocabulary, seed: int) -> VideoQAModel:
    cfg = ModelConfig(vocab_size=len(vocab), **model_cfg)
    rng = np.random.default_rng(np.random.SeedSequence([seed, 11]))
    return VideoQAModel(cfg, rng)


def _build_instances(examples, vocab, mode):
    out = []
    for ex in examples:
        out.extend(make_instances(ex, vocab, mode))
    return out


# ---------------------------------------------------------------------------
# train


def cmd_train(args) -> int:
    if args.float32:
        set_default_dtype(np.float32)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    examples, _ = _prepare_corpus(args, out_dir)
    model_cfg, train_cfg = _resolve_configs(args, examples)

    vocab = _build_vocab(examples, args.min_count)
    model = _build_model(model_cfg, vocab, args.seed)
    tcfg = TrainingConfig(**train_cfg)

    train_ex, val_ex = _split_examples(examples, args.val_fraction, args.seed)
    mode = model.config.mode
    train_insts = _build_instances(train_ex, vocab, mode)
    val_insts = _build_instances(val_ex, vocab, mode)
    if not train_insts:
        raise DataError("no training instances after the validation split")

    config_payload = {"model": model.config.to_dict(),
                      "training": tcfg.__dict__,
                      "vocab_size": len(vocab), "seed": args.seed}
    _echo_config(out_dir, config_payload)

    result = fit(model, train_insts, val_insts or None, vocab, tcfg,
                 log_path=out_dir / "log.jsonl",
                 checkpoint_path=out_dir / "checkpoint.json",
                 config_payload=config_payload)
    best = f"{result.best_bleu4:.2f}" if result.best_step else "n/a"
    print(f"trained {result.steps_run} steps; best val BLEU-4 {best} "
          f"at step {result.best_step}" + (" (early stop)" if result.stopped_early else ""))
    return 0


# ---------------------------------------------------------------------------
# evaluate


def cmd_evaluate(args) -> int:
    if args.multi_run:
        return _evaluate_multi_run(args)
    if not args.hyp or not args.ref:
        raise DataError("evaluate needs --hyp and --ref (or --multi-run with a corpus)")
    report = evaluate_files(_data_path(args.hyp), _data_path(args.ref),
                            pretokenized=args.pretokenized)
    text = report.to_json()
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text)
    print(text)
    return 0


def _evaluate_multi_run(args) -> int:
    if not args.out:
        raise DataError("--multi-run needs --out")
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    examples, _ = _prepare_corpus(args, out_dir)
    model_cfg, train_cfg = _resolve_configs(args, examples)
    _echo_config(out_dir, {"model": model_cfg, "training": train_cfg,
                           "multi_run": args.multi_run})

    vocab = _build_vocab(examples, args.min_count)
    train_ex, val_ex = _split_examples(examples, args.val_fraction, args.seed)
    runs = []
    for i in range(args.multi_run):
        seed = args.seed + i
        model = _build_model(model_cfg, vocab, seed)
        run_train = dict(train_cfg)
        run_train["seed"] = seed
        tcfg = TrainingConfig(**run_train)
        train_insts = _build_instances(train_ex, vocab, model.config.mode)
        val_insts = _build_instances(val_ex, vocab, model.config.mode)
        if not train_insts or not val_insts:
            raise DataError("--multi-run needs non-empty train and validation splits")
        fit(model, train_insts, val_insts, vocab, tcfg)
        hyps = decode_instances(model, val_insts, vocab,
                                beam_width=model.config.beam_width)
        corpus = [EvalPair(hypothesis=h, references=[reference_answer(inst, vocab)])
                  for h, inst in zip(hyps, val_insts)]
        report = evaluate_corpus(corpus).to_dict()
        runs.append(report)
        print(f"run {i} (seed {seed}): bleu4 {report['bleu4']:.2f} cider {report['cider']:.2f}")

    metric_names = ("bleu1", "bleu2", "bleu3", "bleu4", "rouge_l", "cider")
    summary = {
        "runs": runs,
        "mean": {m: float(np.mean([r[m] for r in runs])) for m in metric_names},
        "std": {m: float(np.std([r[m] for r in runs])) for m in metric_names},
    }
    if args.reference_scores:
        expected = _load_json_file(args.reference_scores)
        comparison = {}
        for metric, ref_value in expected.items():
            if metric not in summary["mean"] or not ref_value:
                continue
            got = summary["mean"][metric]
            rel = abs(got - ref_value) / abs(ref_value)
            comparison[metric] = {"expected": ref_value, "got": got,
                                  "relative_error": rel, "within_15pct": rel <= 0.15}
        summary["reference_comparison"] = comparison
    (out_dir / "multi_run_report.json").write_text(json.dumps(summary, indent=2))
    print(json.dumps(summary["mean"], indent=2))
    return 0


# ---------------------------------------------------------------------------
# infer


def _load_model_from_checkpoint(path):
    payload = load_checkpoint(_data_path(path))
    cfg_block = payload.get("config", {})
    model_dict = cfg_block.get("model", cfg_block)
    cfg = ModelConfig.from_dict(model_dict)
    vocab = Vocabulary(payload["vocab"])
    model = VideoQAModel(cfg, np.random.default_rng(0))
    restore_parameters(model.params, payload)
    return model, vocab


def _forced_attention(model, memory, ids) -> list[dict]:
    """Per-step attention weights along a decoded sequence."""
    from .data import EOS_ID, SOS_ID

    steps = []
    with no_grad():
        state = model.initial_state(memory)
        for token in [SOS_ID] + list(ids):
            emb = take_row(model.embed_token(token), 0)
            _, state, attention = model.decoder_step(state, emb, memory)
            steps.append({name: weights.tolist() for name, weights in attention.items()})
    return steps


def cmd_infer(args) -> int:
    model, vocab = _load_model_from_checkpoint(args.checkpoint)
    examples = load_dialogues(_data_path(args.data), _data_path(args.features),
                              expected_dim=model.config.raw_feature_dim)
    instances = _build_instances(examples, vocab, model.config.mode)
    if args.limit:
        instances = instances[: args.limit]
    width = args.beam_width if args.beam_width is not None else model.config.beam_width

    answers = []
    attention_dump = []
    for inst in instances:
        memory, _ = model.encode(
            inst.question_ids, inst.features, None,
            inst.context_ids if model.config.multi_turn else None)
        if width <= 1:
            ids = decode_greedy(model, memory)
        else:
            ids = decode_beam(model, memory, width=width)
        answers.append(" ".join(vocab.decode(ids)))
        if args.attention_json:
            attention_dump.append({
                "question_id": inst.question_id,
                "steps": _forced_attention(model, memory, ids),
            })

    out_path = Path(args.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text("\n".join(answers) + ("\n" if answers else ""))
    if args.attention_json:
        Path(args.attention_json).write_text(json.dumps(attention_dump))
    print(f"decoded {len(answers)} answers (beam width {width}) -> {out_path}")
    return 0


# ---------------------------------------------------------------------------
# ablate


def cmd_ablate(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    examples, _ = _prepare_corpus(args, out_dir)
    model_cfg, train_cfg = _resolve_configs(args, examples)
    _echo_config(out_dir, {"model": model_cfg, "training": train_cfg})

    vocab = _build_vocab(examples, args.min_count)
    train_ex, val_ex = _split_examples(examples, args.val_fraction, args.seed)
    eval_ex = val_ex or train_ex

    rows = []
    for label, tok_summ, gating in ABLATION_VARIANTS:
        variant_cfg = dict(model_cfg)
        variant_cfg["token_summaries"] = tok_summ
        variant_cfg["gating"] = gating
        model = _build_model(variant_cfg, vocab, args.seed)
        tcfg = TrainingConfig(**train_cfg)
        train_insts = _build_instances(train_ex, vocab, model.config.mode)
        eval_insts = _build_instances(eval_ex, vocab, model.config.mode)
        fit(model, train_insts, None, vocab, tcfg)
        hyps = decode_instances(model, eval_insts, vocab,
                                beam_width=model.config.beam_width)
        corpus = [EvalPair(hypothesis=h, references=[reference_answer(inst, vocab)])
                  for h, inst in zip(hyps, eval_insts)]
        report = evaluate_corpus(corpus).to_dict()
        accuracy = token_accuracy(model, eval_insts)
        first = eval_insts[0]
        with no_grad():
            _, summary = model.encode(
                first.question_ids, first.features, None,
                first.context_ids if model.config.multi_turn else None)
        rows.append({
            "label": label,
            "token_summaries": tok_summ,
            "gating": gating,
            "token_accuracy": accuracy,
            "metrics": report,
            "gate_sample": summary.gate.data.tolist(),
        })
        print(f"{label:>18}: BLEU-4 {report['bleu4']:6.2f}  ROUGE-L {report['rouge_l']:6.2f}  "
              f"CIDEr {report['cider']:6.2f}  token-acc {accuracy:.3f}")

    (out_dir / "ablation.json").write_text(json.dumps({"variants": rows}, indent=2))
    return 0


# ---------------------------------------------------------------------------
# dump-attention


def cmd_dump_attention(args) -> int:
    model, vocab = _load_model_from_checkpoint(args.checkpoint)
    examples = load_dialogues(_data_path(args.data), _data_path(args.features),
                              expected_dim=model.config.raw_feature_dim)
    instances = _build_instances(examples, vocab, model.config.mode)
    wanted = [x.strip() for x in args.example_ids.split(",") if x.strip()]
    by_question = {inst.question_id: inst for inst in instances}
    by_video = {}
    for inst in instances:
        by_video.setdefault(inst.video_id, []).append(inst)

    selected = []
    for ident in wanted:
        if ident in by_question:
            selected.append(by_question[ident])
        elif ident in by_video:
            selected.extend(by_video[ident])
        else:
            raise DataError(f"unknown example id: {ident!r}")

    att_rows = []
    gate_rows = []
    with no_grad():
        for inst in selected:
            _, summary = model.encode(
                inst.question_ids, inst.features, None,
                inst.context_ids if model.config.multi_turn else None)
            att_rows.append((inst.question_id, summary.attention.data))
            gate_rows.append((inst.question_id, summary.gate.data))

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_attention_csv(out_dir / "token_attention.csv", att_rows)
    write_gate_csv(out_dir / "gate_weights.csv", gate_rows)
    print(f"dumped attention for {len(selected)} questions -> {out_dir}")
    return 0


# ---------------------------------------------------------------------------
# benchmark


def run_benchmark(lengths=BENCHMARK_LENGTHS, tokens: int = 8, trials: int = 100,
                  feature_dim: int = 256, hidden: int = 128, seed: int = 0) -> list[dict]:
    """Wall time of attention summarization vs a frame BiLSTM at various L.

    Both paths run on the same tensor substrate with gradients disabled. The
    baseline is the natural recurrent alternative: a single-layer BiLSTM over
    the frame features, `hidden` units per direction.
    """
    rng = np.random.default_rng(seed)
    params = ParameterSet()
    w_sim = params.add("sim.w", rng.uniform(-0.08, 0.08, 3 * feature_dim), "uniform")
    fw = add_lstm(params, "bench.fw", feature_dim, hidden, rng)
    bw = add_lstm(params, "bench.bw", feature_dim, hidden, rng)

    results = []
    for L in lengths:
        frames = Tensor(rng.standard_normal((L, feature_dim)))
        x_tok = Tensor(rng.standard_normal((tokens, feature_dim)))

        with no_grad():
            # warmup + shape validation before timing
            _, summaries = summarize_per_token(trilinear_scores(x_tok, frames, w_sim), frames)
            states, _ = bilstm(frames, fw, bw)
            if summaries.shape != (tokens, feature_dim):
                raise NumericError(f"summary shape {summaries.shape} wrong in benchmark")
            if states.shape != (L, 2 * hidden):
                raise NumericError(f"BiLSTM shape {states.shape} wrong in benchmark")

            t0 = time.perf_counter()
            for _ in range(trials):
                summarize_per_token(trilinear_scores(x_tok, frames, w_sim), frames)
            attn_ms = (time.perf_counter() - t0) * 1000.0 / trials

            t0 = time.perf_counter()
            for _ in range(trials):
                bilstm(frames, fw, bw)
            lstm_ms = (time.perf_counter() - t0) * 1000.0 / trials

        results.append({"frames": L, "tokens": tokens,
                        "attention_ms": attn_ms, "bilstm_ms": lstm_ms,
                        "speedup": lstm_ms / attn_ms if attn_ms > 0 else float("inf")})
    return results


def cmd_benchmark(args) -> int:
    lengths = tuple(int(x) for x in args.lengths.split(",")) if args.lengths else BENCHMARK_LENGTHS
    results = run_benchmark(lengths=lengths, tokens=args.tokens, trials=args.trials,
                            seed=args.seed)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    _echo_config(out_dir, {"lengths": list(lengths), "tokens": args.tokens,
                           "trials": args.trials, "seed": args.seed})
    with open(out_dir / "benchmark.csv", "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(results[0].keys()))
        writer.writeheader()
        writer.writerows(results)
    print(f"{'frames':>8} {'attention_ms':>14} {'bilstm_ms':>12} {'speedup':>9}")
    for row in results:
        print(f"{row['frames']:>8} {row['attention_ms']:>14.3f} "
              f"{row['bilstm_ms']:>12.3f} {row['speedup']:>8.1f}x")
    return 0


# ---------------------------------------------------------------------------
# parser / entry point


def build_parser() -> _Parser:
    parser = _Parser(prog="videoqa",
                     description="Question-guided video question answering toolkit")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("train", help="train a model")
    _add_corpus_args(p)
    _add_model_args(p)
    _add_training_args(p)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="score hypothesis/reference files, or train+score seeds")
    p.add_argument("--hyp", help="hypothesis file, one answer per line")
    p.add_argument("--ref", help="reference file, aligned line-by-line")
    p.add_argument("--pretokenized", action="store_true",
                   help="split lines on whitespace instead of retokenizing")
    p.add_argument("--multi-run", type=int,
                   help="train and evaluate this many random seeds, report mean/std")
    p.add_argument("--reference-scores",
                   help="JSON of expected metric values; mean compared at 15%% relative tolerance")
    _add_corpus_args(p)
    _add_model_args(p)
    _add_training_args(p)
    p.add_argument("--out", help="report file (plain) or directory (--multi-run)")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("infer", help="decode answers with a trained checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--out", required=True, help="answers file, one per line")
    p.add_argument("--beam-width", type=int, help="default: checkpoint config (3)")
    p.add_argument("--attention-json", help="dump per-step decoder attention here")
    p.add_argument("--limit", type=int, help="decode only the first N instances")
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("ablate", help="train/evaluate the four summary/gating variants")
    _add_corpus_args(p)
    _add_model_args(p)
    _add_training_args(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("dump-attention", help="write per-token attention and gate CSVs")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--example-ids", required=True,
                   help="comma-separated video ids or video_id#turn ids")
    p.set_defaults(func=cmd_dump_attention)

    p = sub.add_parser("benchmark", help="time attention summarization vs a frame BiLSTM")
    p.add_argument("--out", required=True)
    p.add_argument("--lengths", help="comma-separated frame counts "
                                     f"(default {','.join(map(str, BENCHMARK_LENGTHS))})")
    p.add_argument("--tokens", type=int, default=8)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_benchmark)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args) or 0
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
