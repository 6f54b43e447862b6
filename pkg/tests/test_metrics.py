"""Metric oracles: hand-computed BLEU, brute-force LCS, CIDEr recomputation."""

import itertools
import math
from collections import Counter, defaultdict

import numpy as np
import pytest

from videoqa.data import DataError
from videoqa.metrics import (
    EvalPair,
    MetricReport,
    bleu,
    cider,
    evaluate_corpus,
    evaluate_files,
    rouge_l,
)


def pair(hyp: str, *refs: str) -> EvalPair:
    return EvalPair(hypothesis=hyp.split(), references=[r.split() for r in refs])


class TestBleu:
    def test_identity_corpus_scores_100(self):
        corpus = [pair("the cat sat down", "the cat sat down"),
                  pair("a dog ran far away", "a dog ran far away")]
        for n in range(1, 5):
            assert abs(bleu(corpus, n) - 100.0) < 1e-9

    def test_orders_without_ngrams_score_zero(self):
        # a corpus of 3-token sentences has no 4-grams at all
        assert bleu([pair("the cat sat", "the cat sat")], 4) == 0.0

    def test_disjoint_corpus_scores_0(self):
        corpus = [pair("x y z", "a b c")]
        for n in range(1, 5):
            assert bleu(corpus, n) == 0.0

    def test_hand_computed_bleu2(self):
        # hyp "the cat sat" vs ref "the cat sat down":
        # p1 = 3/3, p2 = 2/2, BP = exp(1 - 4/3)
        expected = 100.0 * math.exp(1.0 - 4.0 / 3.0)
        got = bleu([pair("the cat sat", "the cat sat down")], 2)
        assert abs(got - expected) < 1e-9
        assert abs(got - 71.65313105737893) < 1e-9

    def test_clipping(self):
        # "the the the" vs "the cat": clipped unigram matches = 1
        assert bleu([pair("the the the the", "the cat")], 1) < 100.0 / 2

    def test_multiple_references_max_counts(self):
        corpus = [pair("the cat", "the dog", "a cat")]
        assert bleu(corpus, 1) == 100.0  # "the" from ref1, "cat" from ref2

    def test_order_bounds(self):
        with pytest.raises(ValueError):
            bleu([pair("a", "a")], 5)
        with pytest.raises(DataError):
            bleu([], 2)


def brute_force_lcs(hyp, ref):
    """Longest common subsequence by enumerating subsequences of hyp."""
    best = 0
    for k in range(len(hyp), 0, -1):
        for combo in itertools.combinations(range(len(hyp)), k):
            subseq = [hyp[i] for i in combo]
            it = iter(ref)
            if all(tok in it for tok in subseq):
                return k
    return best


class TestRougeL:
    def test_identity_scores_100(self):
        assert abs(rouge_l([pair("a b c", "a b c")]) - 100.0) < 1e-12

    def test_disjoint_scores_0(self):
        assert rouge_l([pair("x y", "a b")]) == 0.0

    def test_hand_case_with_brute_force_oracle(self):
        hyp = "a b c d".split()
        ref = "a c d".split()
        lcs = brute_force_lcs(hyp, ref)
        assert lcs == 3
        p, r = lcs / len(hyp), lcs / len(ref)
        beta = 1.2
        expected = 100.0 * ((1 + beta ** 2) * p * r) / (r + beta ** 2 * p)
        got = rouge_l([EvalPair(hypothesis=hyp, references=[ref])])
        assert abs(got - expected) < 1e-12

    @pytest.mark.parametrize("seed", range(10))
    def test_random_pairs_vs_brute_force(self, seed):
        rng = np.random.default_rng(seed)
        words = list("abcdef")
        hyp = [words[i] for i in rng.integers(0, 6, size=rng.integers(1, 7))]
        ref = [words[i] for i in rng.integers(0, 6, size=rng.integers(1, 7))]
        lcs = brute_force_lcs(hyp, ref)
        p = lcs / len(hyp)
        r = lcs / len(ref)
        beta = 1.2
        expected = 0.0 if (p == 0 or r == 0) else \
            100.0 * ((1 + beta ** 2) * p * r) / (r + beta ** 2 * p)
        got = rouge_l([EvalPair(hypothesis=hyp, references=[ref])])
        assert abs(got - expected) < 1e-12

    def test_multiple_references_take_max_p_and_r(self):
        got = rouge_l([pair("a b", "a b x y", "a b")])
        assert abs(got - 100.0) < 1e-12  # P=1 from ref2, R=1 from ref2


def cider_oracle(corpus, sigma=6.0):
    """Independent CIDEr recomputation straight from the formula."""
    def grams(tokens):
        out = Counter()
        for n in range(1, 5):
            for i in range(len(tokens) - n + 1):
                out[tuple(tokens[i:i + n])] += 1
        return out

    df = defaultdict(float)
    for p in corpus:
        seen = set()
        for r in p.references:
            seen |= set(grams(r))
        for g in seen:
            df[g] += 1
    logN = math.log(len(corpus))

    def vec(tokens):
        c = grams(tokens)
        v = [defaultdict(float) for _ in range(4)]
        norms = [0.0] * 4
        length = 0
        for g, tf in c.items():
            w = tf * (logN - math.log(max(1.0, df[g])))
            v[len(g) - 1][g] = w
            norms[len(g) - 1] += w * w
            if len(g) == 1:
                length += tf
        return v, [math.sqrt(x) for x in norms], length

    scores = []
    for p in corpus:
        hv, hn, hl = vec(p.hypothesis)
        total = np.zeros(4)
        for ref in p.references:
            rv, rn, rl = vec(ref)
            for k in range(4):
                s = sum(min(w, rv[k][g]) * rv[k][g] for g, w in hv[k].items())
                if hn[k] and rn[k]:
                    s /= hn[k] * rn[k]
                total[k] += s * math.exp(-((hl - rl) ** 2) / (2 * sigma ** 2))
        scores.append(10.0 * total.mean() / len(p.references))
    return float(np.mean(scores))


class TestCider:
    def identity_corpus(self):
        # every sentence needs >= 4 tokens so all four n-gram orders exist
        return [pair("the cat sat down", "the cat sat down"),
                pair("a dog ran fast", "a dog ran fast"),
                pair("birds fly very high", "birds fly very high")]

    def test_identity_with_distinct_references_scores_10(self):
        assert abs(cider(self.identity_corpus()) - 10.0) < 1e-9

    def test_disjoint_hypothesis_scores_0(self):
        corpus = [pair("x y z", "a b c"), pair("u v w", "d e f")]
        assert cider(corpus) == 0.0

    def test_corpus_too_small(self):
        with pytest.raises(DataError):
            cider([pair("a", "a")])

    @pytest.mark.parametrize("seed", range(5))
    def test_matches_independent_recomputation(self, seed):
        rng = np.random.default_rng(seed)
        words = ["cat", "dog", "runs", "sits", "fast", "the", "a"]
        corpus = []
        for _ in range(6):
            hyp = " ".join(rng.choice(words, size=rng.integers(2, 6)))
            ref = " ".join(rng.choice(words, size=rng.integers(2, 6)))
            corpus.append(pair(hyp, ref))
        assert abs(cider(corpus) - cider_oracle(corpus)) < 1e-12

    def test_duplication_changes_only_through_idf(self):
        corpus = self.identity_corpus()
        doubled = corpus + [EvalPair(p.hypothesis, p.references) for p in corpus]
        assert abs(cider(doubled) - cider_oracle(doubled)) < 1e-12


class TestInvariants:
    def random_corpus(self, rng, n=8):
        words = ["cat", "dog", "runs", "sits", "fast", "the", "a", "red"]
        out = []
        for _ in range(n):
            hyp = " ".join(rng.choice(words, size=rng.integers(2, 7)))
            ref = " ".join(rng.choice(words, size=rng.integers(2, 7)))
            out.append(pair(hyp, ref))
        return out

    def test_permutation_invariance(self):
        rng = np.random.default_rng(0)
        for trial in range(20):
            corpus = self.random_corpus(rng)
            perm = list(rng.permutation(len(corpus)))
            shuffled = [corpus[i] for i in perm]
            for n in range(1, 5):
                assert abs(bleu(corpus, n) - bleu(shuffled, n)) < 1e-12
            assert abs(rouge_l(corpus) - rouge_l(shuffled)) < 1e-12
            assert abs(cider(corpus) - cider_oracle(shuffled)) < 1e-12
            assert abs(cider(corpus) - cider(shuffled)) < 1e-12

    def test_bleu_monotone_in_order_on_nested_overlaps(self):
        # hypothesis = reference plus junk suffix: precisions strictly
        # decrease with order, so BLEU-n is non-increasing in n
        rng = np.random.default_rng(1)
        words = ["w%d" % i for i in range(10)]
        for trial in range(20):
            ref_tokens = [words[i] for i in rng.integers(0, 10, size=rng.integers(4, 9))]
            junk = ["junk%d" % trial, "junkx%d" % trial]
            corpus = [EvalPair(hypothesis=ref_tokens + junk, references=[ref_tokens])]
            scores = [bleu(corpus, n) for n in range(1, 5)]
            for a, b in zip(scores, scores[1:]):
                assert b <= a + 1e-12

    def test_maximum_on_identity_and_zero_on_disjoint(self):
        rng = np.random.default_rng(2)
        for trial in range(10):
            words = ["w%d" % i for i in range(8)]
            sents = [" ".join(rng.choice(words, size=rng.integers(2, 6)).tolist())
                     for _ in range(4)]
            identity = [pair(s, s) for s in sents]
            for n in range(1, 5):
                assert abs(bleu(identity, n) - 100.0) < 1e-9
            assert abs(rouge_l(identity) - 100.0) < 1e-9
            disjoint = [pair("x y z", s) for s in sents]
            for n in range(1, 5):
                assert bleu(disjoint, n) == 0.0
            assert rouge_l(disjoint) == 0.0
            assert cider(disjoint) == 0.0


class TestReportAndFiles:
    def test_report_fields_complete_and_finite(self, rng):
        corpus = TestInvariants().random_corpus(rng)
        report = evaluate_corpus(corpus)
        values = report.to_dict()
        for key in ("bleu1", "bleu2", "bleu3", "bleu4", "rouge_l", "cider"):
            assert np.isfinite(values[key])
        assert 0 <= values["bleu4"] <= 100
        assert 0 <= values["rouge_l"] <= 100
        assert values["cider"] >= 0
        assert values["rouge_beta"] == 1.2
        assert values["cider_sigma"] == 6.0
        assert values["pairs"] == len(corpus)

    def test_self_evaluation_of_references(self, tmp_path):
        lines = ["the cat sat down .", "a dog ran away .", "birds fly very high ."]
        hyp = tmp_path / "hyp.txt"
        ref = tmp_path / "ref.txt"
        hyp.write_text("\n".join(lines))
        ref.write_text("\n".join(lines))
        report = evaluate_files(hyp, ref)
        assert abs(report.bleu4 - 100.0) < 1e-9
        assert abs(report.rouge_l - 100.0) < 1e-9

    def test_misaligned_files_rejected(self, tmp_path):
        (tmp_path / "h.txt").write_text("one\ntwo\n")
        (tmp_path / "r.txt").write_text("one\n")
        with pytest.raises(DataError):
            evaluate_files(tmp_path / "h.txt", tmp_path / "r.txt")

    def test_tokenizer_flag(self, tmp_path):
        (tmp_path / "h.txt").write_text("Is he walking?\nA dog runs.")
        (tmp_path / "r.txt").write_text("is he walking ?\na dog runs .")
        retok = evaluate_files(tmp_path / "h.txt", tmp_path / "r.txt")
        assert abs(retok.bleu1 - 100.0) < 1e-9  # internal tokenizer splits "?"
        pretok = evaluate_files(tmp_path / "h.txt", tmp_path / "r.txt", pretokenized=True)
        assert pretok.bleu1 < 100.0  # "walking?" stays one token
