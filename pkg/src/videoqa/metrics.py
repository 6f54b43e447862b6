"""Corpus-level generation metrics: BLEU-1..4, ROUGE-L, CIDEr.

BLEU is the corpus-level clipped n-gram precision with brevity penalty and
uniform weights over orders 1..n. ROUGE-L is the LCS F-measure with the
recall-favouring beta of the reference toolkit, averaged over sentences.
CIDEr is the TF-IDF weighted n-gram cosine (orders 1-4 averaged, scaled by
10) with count clipping and the gaussian length penalty of the reference
toolkit. BLEU and ROUGE-L are reported on a 0-100 scale; CIDEr on its raw
scale, where a corpus of exact matches scores 10.
"""

from __future__ import annotations

import json
import math
from collections import Counter, defaultdict
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .data import DataError, tokenize

ROUGE_BETA = 1.2
CIDER_SIGMA = 6.0
CIDER_MAX_ORDER = 4


@dataclass
class EvalPair:
    """One hypothesis with its (non-empty) reference set, as token lists."""

    hypothesis: list[str]
    references: list[list[str]]

    def __post_init__(self):
        if not self.references:
            raise DataError("EvalPair needs at least one reference")


def _ngram_counts(tokens, n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def bleu(corpus: list[EvalPair], n: int) -> float:
    """Corpus BLEU-n on a 0-100 scale."""
    if not 1 <= n <= 4:
        raise ValueError(f"BLEU order must be 1..4, got {n}")
    if not corpus:
        raise DataError("empty corpus")
    clipped = [0] * n
    totals = [0] * n
    hyp_len = 0
    ref_len = 0
    for pair in corpus:
        hyp = pair.hypothesis
        hyp_len += len(hyp)
        # effective reference length: closest to the hypothesis, shorter on ties
        ref_len += min((abs(len(r) - len(hyp)), len(r)) for r in pair.references)[1]
        for k in range(1, n + 1):
            counts = _ngram_counts(hyp, k)
            max_ref = Counter()
            for ref in pair.references:
                for gram, c in _ngram_counts(ref, k).items():
                    max_ref[gram] = max(max_ref[gram], c)
            clipped[k - 1] += sum(min(c, max_ref[g]) for g, c in counts.items())
            totals[k - 1] += max(0, len(hyp) - k + 1)
    if hyp_len == 0 or any(t == 0 for t in totals):
        return 0.0
    precisions = [c / t for c, t in zip(clipped, totals)]
    if any(p == 0.0 for p in precisions):
        return 0.0
    brevity = 1.0 if hyp_len > ref_len else math.exp(1.0 - ref_len / hyp_len)
    return 100.0 * brevity * math.exp(sum(math.log(p) for p in precisions) / n)


def _lcs_length(a, b) -> int:
    if len(a) < len(b):
        a, b = b, a
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b, 1):
            cur.append(prev[j - 1] + 1 if x == y else max(prev[j], cur[j - 1]))
        prev = cur
    return prev[-1]


def rouge_l(corpus: list[EvalPair], beta: float = ROUGE_BETA) -> float:
    """Mean sentence-level ROUGE-L F-measure on a 0-100 scale."""
    if not corpus:
        raise DataError("empty corpus")
    scores = []
    for pair in corpus:
        hyp = pair.hypothesis
        if not hyp:
            scores.append(0.0)
            continue
        precs, recs = [], []
        for ref in pair.references:
            lcs = _lcs_length(hyp, ref)
            precs.append(lcs / len(hyp))
            recs.append(lcs / len(ref) if ref else 0.0)
        p, r = max(precs), max(recs)
        if p > 0 and r > 0:
            scores.append(((1 + beta ** 2) * p * r) / (r + beta ** 2 * p))
        else:
            scores.append(0.0)
    return 100.0 * float(np.mean(scores))


def _tfidf_vecs(counts: Counter, doc_freq: dict, log_corpus_size: float):
    """Per-order tf-idf vectors, their norms and the unigram length."""
    vecs = [defaultdict(float) for _ in range(CIDER_MAX_ORDER)]
    norms = [0.0] * CIDER_MAX_ORDER
    length = 0
    for gram, tf in counts.items():
        idf = log_corpus_size - math.log(max(1.0, doc_freq.get(gram, 0.0)))
        k = len(gram) - 1
        vecs[k][gram] = tf * idf
        norms[k] += (tf * idf) ** 2
        if k == 0:
            length += tf
    return vecs, [math.sqrt(x) for x in norms], length


def _cider_sim(hyp_vec, ref_vec, hyp_norm, ref_norm, hyp_len, ref_len, sigma):
    delta = float(hyp_len - ref_len)
    out = np.zeros(CIDER_MAX_ORDER)
    for k in range(CIDER_MAX_ORDER):
        acc = 0.0
        for gram, w in hyp_vec[k].items():
            acc += min(w, ref_vec[k][gram]) * ref_vec[k][gram]
        if hyp_norm[k] != 0 and ref_norm[k] != 0:
            acc /= hyp_norm[k] * ref_norm[k]
        out[k] = acc * math.exp(-(delta ** 2) / (2 * sigma ** 2))
    return out


def _ngrams_all_orders(tokens) -> Counter:
    counts = Counter()
    for k in range(1, CIDER_MAX_ORDER + 1):
        counts.update(_ngram_counts(tokens, k))
    return counts


def cider(corpus: list[EvalPair], sigma: float = CIDER_SIGMA) -> float:
    """Corpus-mean CIDEr; needs >= 2 pairs so document frequencies exist."""
    if len(corpus) < 2:
        raise DataError("CIDEr needs a corpus of at least 2 pairs")
    ref_counts = [[_ngrams_all_orders(r) for r in pair.references] for pair in corpus]
    doc_freq: dict = defaultdict(float)
    for refs in ref_counts:
        for gram in set(g for ref in refs for g in ref):
            doc_freq[gram] += 1
    log_size = math.log(len(corpus))

    scores = []
    for pair, refs in zip(corpus, ref_counts):
        hyp_vec, hyp_norm, hyp_len = _tfidf_vecs(
            _ngrams_all_orders(pair.hypothesis), doc_freq, log_size)
        total = np.zeros(CIDER_MAX_ORDER)
        for ref in refs:
            ref_vec, ref_norm, ref_len = _tfidf_vecs(ref, doc_freq, log_size)
            total += _cider_sim(hyp_vec, ref_vec, hyp_norm, ref_norm, hyp_len, ref_len, sigma)
        scores.append(10.0 * float(np.mean(total)) / len(refs))
    return float(np.mean(scores))


@dataclass
class MetricReport:
    """Full metric set for one corpus, plus the constants behind it."""

    bleu1: float
    bleu2: float
    bleu3: float
    bleu4: float
    rouge_l: float
    cider: float
    pairs: int
    rouge_beta: float = ROUGE_BETA
    cider_sigma: float = CIDER_SIGMA

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def evaluate_corpus(corpus: list[EvalPair]) -> MetricReport:
    return MetricReport(
        bleu1=bleu(corpus, 1),
        bleu2=bleu(corpus, 2),
        bleu3=bleu(corpus, 3),
        bleu4=bleu(corpus, 4),
        rouge_l=rouge_l(corpus),
        cider=cider(corpus),
        pairs=len(corpus),
    )


def read_pair_files(hyp_path, ref_path, pretokenized: bool = False) -> list[EvalPair]:
    """Aligned one-sentence-per-line files -> EvalPairs.

    With ``pretokenized`` the lines are split on whitespace as-is; otherwise
    the model's own tokenizer is applied.
    """
    hyp_lines = Path(hyp_path).read_text().splitlines()
    ref_lines = Path(ref_path).read_text().splitlines()
    if len(hyp_lines) != len(ref_lines):
        raise DataError(
            f"hypothesis/reference files have different line counts: "
            f"{len(hyp_lines)} vs {len(ref_lines)}"
        )
    split = str.split if pretokenized else tokenize
    return [EvalPair(hypothesis=split(h), references=[split(r)])
            for h, r in zip(hyp_lines, ref_lines)]


def evaluate_files(hyp_path, ref_path, pretokenized: bool = False) -> MetricReport:
    return evaluate_corpus(read_pair_files(hyp_path, ref_path, pretokenized))
