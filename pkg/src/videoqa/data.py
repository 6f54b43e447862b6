"""Dialogue/feature ingestion, vocabulary, batching and the synthetic corpus.

The on-disk dialogue format mirrors the AVSD release: a JSON object with a
"dialogs" list, each entry carrying an "image_id" and a "dialog" list of
{"question", "answer"} turns. Frame features live in a sibling directory,
one array per video, either as <video_id>.npy or as raw little-endian
float32 <video_id>.bin next to a <video_id>.json sidecar {video_id, L, dim}.

The synthetic corpus plants per-segment patterns into the features so that
answers are recoverable only by attending to the right frames; it is saved
in the exact same format, so the rest of the pipeline cannot tell the
difference.
"""

from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class DataError(ValueError):
    """Malformed, missing or inconsistent input data."""


PAD_ID, UNK_ID, SOS_ID, EOS_ID = 0, 1, 2, 3
PAD, UNK, SOS, EOS = "<pad>", "<unk>", "<sos>", "<eos>"
SEP, NO_CONTEXT = "<sep>", "<nocontext>"
_SPECIALS = (PAD, UNK, SOS, EOS, SEP, NO_CONTEXT)

_TOKEN_RE = re.compile(r"[.,?!'\"]|[^\s.,?!'\"]+")


def tokenize(text: str) -> list[str]:
    """Lowercase, split on whitespace, break out .,?!'\" as their own tokens."""
    return _TOKEN_RE.findall(text.lower())


class Vocabulary:
    """token<->id map with fixed reserved ids 0..3 (pad/unk/sos/eos)."""

    def __init__(self, tokens: list[str]):
        if list(tokens[:4]) != [PAD, UNK, SOS, EOS]:
            raise DataError("vocabulary must start with the reserved tokens")
        if len(set(tokens)) != len(tokens):
            raise DataError("vocabulary has duplicate tokens")
        self._tokens = list(tokens)
        self._ids = {t: i for i, t in enumerate(tokens)}

    @classmethod
    def from_corpus(cls, texts, min_count: int = 2) -> "Vocabulary":
        """Frequency-filtered vocabulary; deterministic over corpus ordering.

        Kept tokens are ordered by descending frequency, ties lexicographic.
        """
        counts = Counter()
        n_texts = 0
        for text in texts:
            n_texts += 1
            counts.update(tokenize(text))
        if n_texts == 0:
            raise DataError("empty corpus")
        kept = sorted(
            (t for t, c in counts.items() if c >= min_count and t not in _SPECIALS),
            key=lambda t: (-counts[t], t),
        )
        return cls(list(_SPECIALS) + kept)

    def __len__(self) -> int:
        return len(self._tokens)

    def __contains__(self, token: str) -> bool:
        return token in self._ids

    @property
    def tokens(self) -> list[str]:
        return list(self._tokens)

    @property
    def sep_id(self) -> int:
        return self._ids[SEP]

    @property
    def no_context_id(self) -> int:
        return self._ids[NO_CONTEXT]

    def encode(self, tokens) -> list[int]:
        return [self._ids.get(t, UNK_ID) for t in tokens]

    def decode(self, ids) -> list[str]:
        return [self._tokens[i] for i in ids]

    def encode_text(self, text: str) -> list[int]:
        return self.encode(tokenize(text))


@dataclass
class DialogueExample:
    """One video's features plus its ordered question/answer turns."""

    video_id: str
    features: np.ndarray                    # (L, raw_feature_dim)
    turns: list[tuple[str, str]]

    def __post_init__(self):
        if not self.turns:
            raise DataError(f"dialogue {self.video_id} has no turns")
        for q, a in self.turns:
            if not q.strip() or not a.strip():
                raise DataError(f"dialogue {self.video_id} has an empty question or answer")
        if self.features.ndim != 2 or self.features.shape[0] < 1:
            raise DataError(f"dialogue {self.video_id} has invalid features")


@dataclass
class TrainingInstance:
    """One decoder training example: question, context, answer, features."""

    video_id: str
    turn_index: int
    question_ids: np.ndarray       # (K,)
    context_ids: np.ndarray        # (M,), empty in single-turn mode
    answer_ids: np.ndarray         # (N,), starts with SOS, ends with EOS
    features: np.ndarray           # (L, raw_feature_dim)

    @property
    def question_id(self) -> str:
        return f"{self.video_id}#{self.turn_index}"


def make_instances(example: DialogueExample, vocab: Vocabulary, mode: str) -> list[TrainingInstance]:
    """Expand a dialogue into per-turn instances.

    Multi-turn context is the chronological token stream
    ``q1 <sep> a1 <sep> q2 <sep> a2 <sep> ...`` of all *prior* turns; the
    first turn gets the single no-context sentinel. Single-turn context is
    empty.
    """
    multi = mode == "multi_turn"
    instances = []
    history: list[int] = []
    for t, (q, a) in enumerate(example.turns):
        q_ids = vocab.encode_text(q)
        if not q_ids:
            raise DataError(f"{example.video_id} turn {t}: question tokenizes to nothing")
        a_ids = [SOS_ID] + vocab.encode_text(a) + [EOS_ID]
        if multi:
            ctx = list(history) if history else [vocab.no_context_id]
        else:
            ctx = []
        instances.append(TrainingInstance(
            video_id=example.video_id,
            turn_index=t,
            question_ids=np.asarray(q_ids, dtype=np.int64),
            context_ids=np.asarray(ctx, dtype=np.int64),
            answer_ids=np.asarray(a_ids, dtype=np.int64),
            features=example.features,
        ))
        history.extend(q_ids + [vocab.sep_id] + vocab.encode_text(a) + [vocab.sep_id])
    return instances


# ---------------------------------------------------------------------------
# disk formats


def load_features(features_dir, video_id: str, expected_dim: int | None = None) -> np.ndarray:
    """Load one video's feature array (.npy, or .bin + .json sidecar)."""
    d = Path(features_dir)
    npy = d / f"{video_id}.npy"
    if npy.exists():
        arr = np.load(npy)
    else:
        bin_path = d / f"{video_id}.bin"
        sidecar = d / f"{video_id}.json"
        if not bin_path.exists() or not sidecar.exists():
            raise DataError(f"no feature file for video '{video_id}' in {d}")
        meta = json.loads(sidecar.read_text())
        arr = np.fromfile(bin_path, dtype="<f4").reshape(meta["L"], meta["dim"])
    arr = np.asarray(arr, dtype=np.float64)
    if arr.ndim != 2:
        raise DataError(f"features for '{video_id}' are not 2-D")
    if expected_dim is not None and arr.shape[1] != expected_dim:
        raise DataError(
            f"features for '{video_id}' have dim {arr.shape[1]}, expected {expected_dim}"
        )
    return arr


def load_dialogues(json_path, features_dir, expected_dim: int | None = None,
                   prepend_caption: bool = False) -> list[DialogueExample]:
    """Load an AVSD-format dialogue file and link each dialogue to its features."""
    path = Path(json_path)
    try:
        payload = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read dialogue file {path}: {exc}") from exc
    dialogs = payload.get("dialogs")
    if not isinstance(dialogs, list):
        raise DataError(f"{path} has no top-level 'dialogs' list")
    examples = []
    for entry in dialogs:
        video_id = entry.get("image_id")
        if not video_id:
            raise DataError(f"{path}: dialogue entry without image_id")
        turns = [(t["question"], t["answer"]) for t in entry.get("dialog", [])]
        if prepend_caption and entry.get("caption"):
            turns = [("what is happening ?", entry["caption"])] + turns
        features = load_features(features_dir, video_id, expected_dim)
        examples.append(DialogueExample(video_id=video_id, features=features, turns=turns))
    return examples


def save_corpus(examples: list[DialogueExample], out_dir, meta: dict | None = None) -> tuple[Path, Path]:
    """Persist dialogues + features in the same format load_dialogues reads."""
    out = Path(out_dir)
    feat_dir = out / "features"
    feat_dir.mkdir(parents=True, exist_ok=True)
    dialogs = []
    for ex in examples:
        dialogs.append({
            "image_id": ex.video_id,
            "dialog": [{"question": q, "answer": a} for q, a in ex.turns],
        })
        np.save(feat_dir / f"{ex.video_id}.npy", ex.features.astype(np.float32))
    json_path = out / "dialogs.json"
    json_path.write_text(json.dumps({"dialogs": dialogs}, indent=1))
    if meta is not None:
        (out / "synthetic_meta.json").write_text(json.dumps(meta))
    return json_path, feat_dir


# published AVSD split statistics, used as ingestion sanity checks when the
# real dataset is supplied ("turns" counts utterances: 2 per QA pair)
AVSD_SPLIT_STATS = {
    "train": {"dialogues": 7659, "turn_utterances": 153_180,
              "avg_question_len": 8.5, "avg_feature_len": 179.2},
    "validation": {"dialogues": 732, "turn_utterances": 14_680,
                   "avg_question_len": 8.4, "avg_feature_len": 173.0},
    "test": {"dialogues": 733, "turn_utterances": 14_660,
             "avg_question_len": 8.5, "avg_feature_len": 171.3},
}


def ingestion_stats(examples: list[DialogueExample]) -> dict:
    n_pairs = sum(len(ex.turns) for ex in examples)
    q_lens = [len(tokenize(q)) for ex in examples for q, _ in ex.turns]
    return {
        "dialogues": len(examples),
        "turn_utterances": 2 * n_pairs,
        "avg_question_len": float(np.mean(q_lens)) if q_lens else 0.0,
        "avg_feature_len": float(np.mean([ex.features.shape[0] for ex in examples])),
    }


def check_ingestion(examples: list[DialogueExample], split: str) -> dict:
    """Compare ingestion totals with the published split statistics.

    Counts must match exactly; average lengths are soft (+-1.0 tokens,
    +-10 frames).
    """
    expected = AVSD_SPLIT_STATS[split]
    got = ingestion_stats(examples)
    return {
        "expected": expected,
        "got": got,
        "counts_match": (got["dialogues"] == expected["dialogues"]
                         and got["turn_utterances"] == expected["turn_utterances"]),
        "avg_question_len_ok": abs(got["avg_question_len"] - expected["avg_question_len"]) <= 1.0,
        "avg_feature_len_ok": abs(got["avg_feature_len"] - expected["avg_feature_len"]) <= 10.0,
    }


# ---------------------------------------------------------------------------
# batching


@dataclass
class Batch:
    """Padded arrays for a list of instances, plus the masks to undo padding."""

    instances: list[TrainingInstance]
    questions: np.ndarray      # (B, K_max) int, PAD padded
    question_lens: np.ndarray  # (B,)
    contexts: np.ndarray       # (B, M_max) int, PAD padded (M_max may be 0)
    context_lens: np.ndarray   # (B,)
    answers: np.ndarray        # (B, N_max) int, PAD padded
    answer_lens: np.ndarray    # (B,)
    features: np.ndarray       # (B, L_max, raw_dim), zero padded
    frame_mask: np.ndarray     # (B, L_max) bool

    @property
    def size(self) -> int:
        return len(self.instances)

    def rows(self):
        """Yield per-instance views: (q_ids, ctx_ids, ans_ids, features, frame_mask).

        Token sequences are sliced back to their true lengths; features stay
        padded to the batch maximum and come with their validity mask.
        """
        for b, inst in enumerate(self.instances):
            q = self.questions[b, : self.question_lens[b]]
            ctx = self.contexts[b, : self.context_lens[b]]
            ans = self.answers[b, : self.answer_lens[b]]
            yield q, ctx, ans, self.features[b], self.frame_mask[b]


def _pad_ids(seqs: list[np.ndarray]) -> np.ndarray:
    width = max((len(s) for s in seqs), default=0)
    out = np.full((len(seqs), width), PAD_ID, dtype=np.int64)
    for i, s in enumerate(seqs):
        out[i, : len(s)] = s
    return out


def make_batch(instances: list[TrainingInstance]) -> Batch:
    if not instances:
        raise DataError("empty batch")
    feats = [inst.features for inst in instances]
    l_max = max(f.shape[0] for f in feats)
    dim = feats[0].shape[1]
    features = np.zeros((len(instances), l_max, dim))
    frame_mask = np.zeros((len(instances), l_max), dtype=bool)
    for i, f in enumerate(feats):
        if f.shape[1] != dim:
            raise DataError("instances in one batch have different feature dims")
        features[i, : f.shape[0]] = f
        frame_mask[i, : f.shape[0]] = True
    return Batch(
        instances=list(instances),
        questions=_pad_ids([i.question_ids for i in instances]),
        question_lens=np.asarray([len(i.question_ids) for i in instances]),
        contexts=_pad_ids([i.context_ids for i in instances]),
        context_lens=np.asarray([len(i.context_ids) for i in instances]),
        answers=_pad_ids([i.answer_ids for i in instances]),
        answer_lens=np.asarray([len(i.answer_ids) for i in instances]),
        features=features,
        frame_mask=frame_mask,
    )


def epoch_batches(instances: list[TrainingInstance], batch_size: int,
                  rng: np.random.Generator | None = None):
    """One shuffled epoch of padded batches covering every instance once."""
    if batch_size < 1:
        raise DataError("batch_size must be >= 1")
    order = np.arange(len(instances))
    if rng is not None:
        rng.shuffle(order)
    for lo in range(0, len(order), batch_size):
        chunk = [instances[i] for i in order[lo : lo + batch_size]]
        yield make_batch(chunk)


def batch_stream(instances: list[TrainingInstance], batch_size: int, seed: int):
    """Endless stream of batches, reshuffled every epoch from (seed, epoch)."""
    epoch = 0
    while True:
        rng = np.random.default_rng(np.random.SeedSequence([seed, epoch]))
        yield from epoch_batches(instances, batch_size, rng)
        epoch += 1


# ---------------------------------------------------------------------------
# synthetic planted-pattern corpus

_NUMBER_WORDS = ("one", "two", "three", "four", "five", "six", "seven", "eight",
                 "nine", "ten", "eleven", "twelve")
_DEFAULT_PATTERNS = (
    "walking", "running", "jumping", "sitting", "standing", "waving",
    "eating", "sleeping", "reading", "cooking", "dancing", "drinking",
    "laughing", "stretching", "sweeping", "typing",
)
_DEFAULT_SUBJECTS = ("man", "woman", "boy", "girl", "dog", "cat",
                     "runner", "painter", "chef", "teacher")


@dataclass
class SyntheticSpec:
    """Recipe for a corpus whose answers are functions of localized patterns.

    Each video is split into ``num_segments`` equal segments; every segment
    carries one pattern, distinct within the video. Videos come in pairs
    with identical pattern sets and subjects but rotated segment assignment,
    so no whole-video average can disambiguate which segment shows what.
    Frame features are one-hot blocks: pattern + segment position + subject.
    """

    num_videos: int = 64
    frames_per_video: int = 40
    feature_dim: int = 32
    num_segments: int = 4
    pattern_words: tuple = _DEFAULT_PATTERNS
    subject_words: tuple = _DEFAULT_SUBJECTS
    include_locator_turns: bool = True
    noise: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.num_segments > len(_NUMBER_WORDS):
            raise DataError("too many segments to name")
        if self.num_segments > len(self.pattern_words):
            raise DataError("need at least as many patterns as segments")
        blocks = len(self.pattern_words) + self.num_segments + len(self.subject_words)
        if self.feature_dim < blocks:
            raise DataError(f"feature_dim must be >= {blocks} for the planted blocks")
        if self.frames_per_video < self.num_segments:
            raise DataError("need at least one frame per segment")


def segment_bounds(spec: SyntheticSpec) -> list[tuple[int, int]]:
    """[lo, hi) frame ranges of each segment; remainder goes to the last."""
    size = spec.frames_per_video // spec.num_segments
    bounds = [(s * size, (s + 1) * size) for s in range(spec.num_segments)]
    lo, _ = bounds[-1]
    bounds[-1] = (lo, spec.frames_per_video)
    return bounds


def generate_synthetic(spec: SyntheticSpec):
    """Build the corpus; returns ``(examples, meta)``.

    ``meta`` records, per video, the segment bounds, the pattern assignment,
    the subject and per-turn ground truth (which segment a question asks
    about), for attention-localization checks.
    """
    rng = np.random.default_rng(spec.seed)
    P = len(spec.pattern_words)
    S = spec.num_segments
    n_subj = len(spec.subject_words)
    bounds = segment_bounds(spec)

    examples = []
    meta = {"spec": {"num_segments": S, "frames_per_video": spec.frames_per_video},
            "videos": {}}
    for idx in range(spec.num_videos):
        if idx % 2 == 0:
            subset = rng.choice(P, size=S, replace=False)
            subject_idx = int(rng.integers(n_subj))
            assignment = subset
        else:
            assignment = np.roll(subset, 1)  # same frames, different binding
        video_id = f"synth{idx:04d}"
        features = np.zeros((spec.frames_per_video, spec.feature_dim))
        for s, (lo, hi) in enumerate(bounds):
            features[lo:hi, assignment[s]] = 1.0
            features[lo:hi, P + s] = 1.0
        features[:, P + S + subject_idx] = 1.0
        if spec.noise > 0:
            features += spec.noise * rng.standard_normal(features.shape)

        subject = spec.subject_words[subject_idx]
        turns = []
        turn_meta = []
        for s in range(S):
            pattern = spec.pattern_words[assignment[s]]
            turns.append((
                f"what happens in segment {_NUMBER_WORDS[s]} ?",
                f"the {subject} is {pattern} .",
            ))
            turn_meta.append({"kind": "segment", "segment": s})
        if spec.include_locator_turns:
            s = int(rng.integers(S))
            pattern = spec.pattern_words[assignment[s]]
            turns.append((
                f"which segment shows {pattern} ?",
                f"segment {_NUMBER_WORDS[s]} .",
            ))
            turn_meta.append({"kind": "locator", "segment": s})

        examples.append(DialogueExample(video_id=video_id, features=features, turns=turns))
        meta["videos"][video_id] = {
            "segments": [list(b) for b in bounds],
            "patterns": [spec.pattern_words[i] for i in assignment],
            "subject": subject,
            "turns": turn_meta,
        }
    return examples, meta
