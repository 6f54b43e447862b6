"""End-to-end CLI surface: every subcommand on a tiny synthetic corpus."""

import csv
import json
from pathlib import Path

import numpy as np
import pytest

from videoqa.cli import main
from videoqa.guided_summary import read_attention_csv, read_gate_csv

SPEC = {"num_videos": 6, "frames_per_video": 12, "feature_dim": 32,
        "num_segments": 3, "seed": 0}

TINY_MODEL_FLAGS = [
    "--embed-dim", "16", "--feature-dim", "16", "--guide-hidden", "8",
    "--question-hidden", "8", "--dialogue-hidden", "8", "--attention-dim", "8",
    "--gate-hidden", "8", "--dropout", "0.0", "--min-count", "1",
    "--max-decode-len", "8",
]


def write_spec(tmp_path, **overrides):
    spec = dict(SPEC)
    spec.update(overrides)
    path = tmp_path / "spec.json"
    path.write_text(json.dumps(spec))
    return path


def train_tiny(tmp_path, out_name="run", extra=()):
    spec = write_spec(tmp_path)
    out = tmp_path / out_name
    code = main(["train", "--synthetic-spec", str(spec), "--out", str(out),
                 "--steps", "3", "--batch-size", "4", "--eval-every", "0",
                 "--val-fraction", "0.2", "--seed", "1", *TINY_MODEL_FLAGS, *extra])
    assert code == 0
    return out


class TestTrain:
    def test_outputs_and_config_echo(self, tmp_path):
        out = train_tiny(tmp_path)
        assert (out / "checkpoint.json").exists()
        assert (out / "log.jsonl").exists()
        config = json.loads((out / "config.json").read_text())
        assert config["model"]["embed_dim"] == 16
        assert config["training"]["max_steps"] == 3
        corpus = out / "corpus"
        assert (corpus / "dialogs.json").exists()
        assert (corpus / "synthetic_meta.json").exists()

    def test_seeded_runs_are_identical(self, tmp_path):
        out1 = train_tiny(tmp_path, "run1")
        out2 = train_tiny(tmp_path, "run2")
        assert (out1 / "log.jsonl").read_text() == (out2 / "log.jsonl").read_text()

    def test_default_max_steps(self, tmp_path, capsys):
        from videoqa.training import TrainingConfig

        assert TrainingConfig().max_steps == 100_000
        assert TrainingConfig().eval_every == 500
        assert TrainingConfig().patience == 10

    def test_config_file_and_flag_precedence(self, tmp_path):
        spec = write_spec(tmp_path)
        cfg_file = tmp_path / "model.json"
        cfg_file.write_text(json.dumps({
            "model": {"embed_dim": 16, "feature_dim": 16, "guide_hidden": 8,
                      "question_hidden": 8, "dialogue_hidden": 8,
                      "attention_dim": 4, "gate_hidden": 4, "dropout": 0.0,
                      "max_decode_len": 8},
            "training": {"max_steps": 2, "batch_size": 2},
        }))
        out = tmp_path / "out"
        code = main(["train", "--synthetic-spec", str(spec), "--out", str(out),
                     "--config", str(cfg_file), "--attention-dim", "6",
                     "--min-count", "1", "--eval-every", "0", "--seed", "0"])
        assert code == 0
        resolved = json.loads((out / "config.json").read_text())
        assert resolved["model"]["attention_dim"] == 6  # flag wins
        assert resolved["model"]["gate_hidden"] == 4    # file wins over default
        assert resolved["training"]["max_steps"] == 2

    def test_does_not_mutate_input_corpus(self, tmp_path):
        out = train_tiny(tmp_path)
        corpus = out / "corpus"
        before = (corpus / "dialogs.json").read_bytes()
        code = main(["train", "--data", str(corpus / "dialogs.json"),
                     "--features", str(corpus / "features"),
                     "--out", str(tmp_path / "second"),
                     "--steps", "2", "--batch-size", "4", "--eval-every", "0",
                     "--val-fraction", "0.0", "--seed", "2", *TINY_MODEL_FLAGS])
        assert code == 0
        assert (corpus / "dialogs.json").read_bytes() == before


class TestInfer:
    def test_answers_file_and_attention_json(self, tmp_path):
        out = train_tiny(tmp_path)
        corpus = out / "corpus"
        answers = tmp_path / "answers.txt"
        att_json = tmp_path / "attention.json"
        code = main(["infer", "--checkpoint", str(out / "checkpoint.json"),
                     "--data", str(corpus / "dialogs.json"),
                     "--features", str(corpus / "features"),
                     "--out", str(answers), "--limit", "4",
                     "--attention-json", str(att_json)])
        assert code == 0
        lines = answers.read_text().splitlines()
        assert len(lines) == 4
        dump = json.loads(att_json.read_text())
        assert len(dump) == 4
        for entry in dump:
            for step in entry["steps"]:
                for weights in step.values():
                    assert abs(sum(weights) - 1.0) < 1e-6

    def test_beam_width_default_is_checkpoint_config(self, tmp_path, capsys):
        out = train_tiny(tmp_path)
        corpus = out / "corpus"
        code = main(["infer", "--checkpoint", str(out / "checkpoint.json"),
                     "--data", str(corpus / "dialogs.json"),
                     "--features", str(corpus / "features"),
                     "--out", str(tmp_path / "a.txt"), "--limit", "1"])
        assert code == 0
        assert "beam width 3" in capsys.readouterr().out


class TestEvaluate:
    def test_file_pair_report(self, tmp_path, capsys):
        (tmp_path / "hyp.txt").write_text("the cat sat down .\na dog runs far away .\n")
        (tmp_path / "ref.txt").write_text("the cat sat down .\na dog runs far away .\n")
        report_path = tmp_path / "report.json"
        code = main(["evaluate", "--hyp", str(tmp_path / "hyp.txt"),
                     "--ref", str(tmp_path / "ref.txt"), "--out", str(report_path)])
        assert code == 0
        report = json.loads(report_path.read_text())
        assert abs(report["bleu4"] - 100.0) < 1e-9
        assert abs(report["rouge_l"] - 100.0) < 1e-9
        # bit-identical to the metrics module called directly
        from videoqa.metrics import evaluate_files

        direct = evaluate_files(tmp_path / "hyp.txt", tmp_path / "ref.txt").to_dict()
        assert report == direct

    def test_misaligned_files_exit_2(self, tmp_path):
        (tmp_path / "hyp.txt").write_text("one line\n")
        (tmp_path / "ref.txt").write_text("one line\nand another\n")
        code = main(["evaluate", "--hyp", str(tmp_path / "hyp.txt"),
                     "--ref", str(tmp_path / "ref.txt")])
        assert code == 2

    def test_multi_run_report(self, tmp_path):
        spec = write_spec(tmp_path)
        out = tmp_path / "multi"
        code = main(["evaluate", "--multi-run", "2", "--synthetic-spec", str(spec),
                     "--out", str(out), "--steps", "3", "--batch-size", "4",
                     "--eval-every", "0", "--val-fraction", "0.34", "--seed", "0",
                     *TINY_MODEL_FLAGS])
        assert code == 0
        report = json.loads((out / "multi_run_report.json").read_text())
        assert len(report["runs"]) == 2
        assert set(report["mean"]) == {"bleu1", "bleu2", "bleu3", "bleu4", "rouge_l", "cider"}
        assert all(v >= 0 for v in report["std"].values())

    def test_multi_run_reference_comparison(self, tmp_path):
        spec = write_spec(tmp_path)
        refs = tmp_path / "expected.json"
        refs.write_text(json.dumps({"bleu4": 50.0}))
        out = tmp_path / "multi2"
        code = main(["evaluate", "--multi-run", "1", "--synthetic-spec", str(spec),
                     "--out", str(out), "--steps", "2", "--batch-size", "4",
                     "--eval-every", "0", "--val-fraction", "0.34", "--seed", "0",
                     "--reference-scores", str(refs), *TINY_MODEL_FLAGS])
        assert code == 0
        report = json.loads((out / "multi_run_report.json").read_text())
        cmp = report["reference_comparison"]["bleu4"]
        assert {"expected", "got", "relative_error", "within_15pct"} <= set(cmp)


class TestDumpAttention:
    def test_csv_shapes_and_round_trip(self, tmp_path):
        out = train_tiny(tmp_path)
        corpus = out / "corpus"
        dump_dir = tmp_path / "dump"
        code = main(["dump-attention", "--checkpoint", str(out / "checkpoint.json"),
                     "--data", str(corpus / "dialogs.json"),
                     "--features", str(corpus / "features"),
                     "--out", str(dump_dir), "--example-ids", "synth0000#0,synth0001"])
        assert code == 0
        attention = read_attention_csv(dump_dir / "token_attention.csv")
        gates = read_gate_csv(dump_dir / "gate_weights.csv")
        assert "synth0000#0" in attention
        # whole-video id expands to every turn of that dialogue
        assert sum(1 for qid in attention if qid.startswith("synth0001#")) == 4
        for qid, att in attention.items():
            assert att.shape[1] == SPEC["frames_per_video"]
            assert np.all(np.abs(att.sum(axis=1) - 1.0) <= 1e-6)
        for qid, gate in gates.items():
            assert gate.shape == (16,)  # feature_dim rows per question
            assert np.all((gate > 0) & (gate < 1))

    def test_unknown_id_exits_2(self, tmp_path):
        out = train_tiny(tmp_path)
        corpus = out / "corpus"
        code = main(["dump-attention", "--checkpoint", str(out / "checkpoint.json"),
                     "--data", str(corpus / "dialogs.json"),
                     "--features", str(corpus / "features"),
                     "--out", str(tmp_path / "d"), "--example-ids", "nosuchvideo"])
        assert code == 2


class TestBenchmark:
    def test_csv_and_ratios(self, tmp_path, capsys):
        out = tmp_path / "bench"
        code = main(["benchmark", "--out", str(out), "--lengths", "16,32",
                     "--tokens", "4", "--trials", "3", "--seed", "0"])
        assert code == 0
        with open(out / "benchmark.csv", newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert [int(r["frames"]) for r in rows] == [16, 32]
        for row in rows:
            assert float(row["attention_ms"]) > 0
            assert float(row["bilstm_ms"]) > 0
            assert float(row["speedup"]) > 0


class TestAblate:
    def test_four_variants_with_labels(self, tmp_path):
        spec = write_spec(tmp_path)
        out = tmp_path / "ablation"
        code = main(["ablate", "--synthetic-spec", str(spec), "--out", str(out),
                     "--steps", "2", "--batch-size", "4", "--eval-every", "0",
                     "--val-fraction", "0.34", "--seed", "0", "--mode", "single_turn",
                     *TINY_MODEL_FLAGS])
        assert code == 0
        table = json.loads((out / "ablation.json").read_text())
        labels = [row["label"] for row in table["variants"]]
        assert labels == ["full", "-TokSumm", "-Gating", "-TokSumm-Gating"]
        by_label = {row["label"]: row for row in table["variants"]}
        assert np.array_equal(by_label["-Gating"]["gate_sample"], np.ones(16))
        assert np.array_equal(by_label["-TokSumm-Gating"]["gate_sample"], np.ones(16))
        for row in table["variants"]:
            assert 0.0 <= row["token_accuracy"] <= 1.0
            assert "bleu4" in row["metrics"]


class TestErrorPaths:
    def test_usage_error_exits_1(self):
        with pytest.raises(SystemExit) as exc:
            main(["train"])  # missing required --out
        assert exc.value.code == 1

    def test_unknown_subcommand_exits_1(self):
        with pytest.raises(SystemExit) as exc:
            main(["frobnicate"])
        assert exc.value.code == 1

    def test_missing_data_exits_2(self, tmp_path):
        code = main(["train", "--data", str(tmp_path / "nope.json"),
                     "--features", str(tmp_path), "--out", str(tmp_path / "o"),
                     "--steps", "1"])
        assert code == 2

    def test_data_root_env_override(self, tmp_path, monkeypatch):
        out = train_tiny(tmp_path)
        corpus = out / "corpus"
        monkeypatch.setenv("VIDEOQA_DATA_ROOT", str(corpus))
        code = main(["infer", "--checkpoint", str(out / "checkpoint.json"),
                     "--data", "dialogs.json", "--features", "features",
                     "--out", str(tmp_path / "env_answers.txt"), "--limit", "1"])
        assert code == 0
