"""Metric tests: parity with the reference scorers, pronoun metrics, aggregation."""

import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from ctxprobe.client.base import ScoredSequence
from ctxprobe.deskdata import make_metric_corpus
from ctxprobe.errors import DataError
from ctxprobe.metrics import (
    accuracy,
    bleu,
    chrf,
    cpr,
    external_scores_report,
    gpr,
    load_external_scores,
    round_half_away,
)

from ref_scorer import ref_corpus_bleu, ref_corpus_chrf

# Frozen oracle outputs (computed with ref_scorer on these exact inputs).
MICRO_BLEU = 28.254432923044853  # ["the cat sat"] vs ["the cat on the mat"]
MICRO_CHRF = 38.888888888888886  # ["abc"] vs ["abd"]; by hand: 100*(2/3 + 1/2)/3
DESK_BLEU = 54.19190333293295  # make_metric_corpus(64, seed=13)
DESK_CHRF = 72.78648792436191


class TestBleu:
    def test_identity_is_100(self):
        sents = ["Der Hund lag hinter dem Haus .", "Die Uhr stand neben der Tür ."]
        assert bleu(sents, sents).value == pytest.approx(100.0)

    def test_all_empty_hypotheses_is_zero(self):
        assert bleu(["", ""], ["Der Hund .", "Die Uhr ."]).value == 0.0

    def test_micro_golden(self):
        report = bleu(["the cat sat"], ["the cat on the mat"])
        assert report.value == pytest.approx(MICRO_BLEU, abs=1e-9)

    def test_desk_corpus_matches_reference_scorer(self):
        hyps, refs = make_metric_corpus(64, seed=13)
        report = bleu(hyps, refs)
        assert report.value == pytest.approx(ref_corpus_bleu(hyps, refs), abs=0.05)
        assert report.value == pytest.approx(DESK_BLEU, abs=0.05)
        assert report.n_items == 64

    def test_signature_recorded_verbatim(self):
        report = bleu(["a b c d"], ["a b c d"])
        assert report.signature == "nrefs:1|case:mixed|eff:yes|tok:13a|smooth:exp|version:2.4.0"

    def test_length_mismatch(self):
        with pytest.raises(DataError):
            bleu(["a"], ["a", "b"])

    def test_case_sensitive(self):
        assert bleu(["Der Hund lief ."], ["der hund lief ."]).value < 100.0


class TestChrf:
    def test_identity_is_100(self):
        sents = ["Der Hund lag hinter dem Haus .", "Die Uhr stand neben der Tür ."]
        assert chrf(sents, sents).value == pytest.approx(100.0)

    def test_disjoint_character_sets_is_zero(self):
        assert chrf(["aaaa bbbb"], ["cccc dddd"]).value == pytest.approx(0.0, abs=1e-9)

    def test_micro_golden(self):
        assert chrf(["abc"], ["abd"]).value == pytest.approx(MICRO_CHRF, abs=1e-9)

    def test_desk_corpus_matches_reference_scorer(self):
        hyps, refs = make_metric_corpus(64, seed=13)
        report = chrf(hyps, refs)
        assert report.value == pytest.approx(ref_corpus_chrf(hyps, refs), abs=0.05)
        assert report.value == pytest.approx(DESK_CHRF, abs=0.05)

    def test_signature_recorded_verbatim(self):
        report = chrf(["abcdef"], ["abcdef"])
        assert report.signature == "nrefs:1|case:mixed|eff:yes|nc:6|nw:0|space:no|version:2.4.0"

    def test_whitespace_excluded(self):
        # Only whitespace differs: identical after removal.
        assert chrf(["a b c d e f"], ["ab cd ef"]).value == pytest.approx(100.0)


@given(st.randoms(use_true_random=False))
def test_corpus_metrics_permutation_invariant(rnd):
    hyps, refs = make_metric_corpus(12, seed=5)
    paired = list(zip(hyps, refs))
    rnd.shuffle(paired)
    shuffled_hyps = [h for h, _ in paired]
    shuffled_refs = [r for _, r in paired]
    assert bleu(hyps, refs).value == pytest.approx(bleu(shuffled_hyps, shuffled_refs).value)
    assert chrf(hyps, refs).value == pytest.approx(chrf(shuffled_hyps, shuffled_refs).value)


class TestGpr:
    def test_gold_present(self):
        judgment = gpr("Sie ist alt.", "sie", ["er", "es"])
        assert judgment.correct

    def test_wrong_pronoun(self):
        assert not gpr("Er ist alt.", "sie", ["er", "es"]).correct

    def test_count_rule(self):
        judgment = gpr("Es war da, und es blieb.", "es", ["er", "sie"])
        assert judgment.correct
        assert judgment.detail["counts"]["es"] == 2

    def test_tie_is_incorrect(self):
        assert not gpr("Er und sie gingen.", "sie", ["er"]).correct

    def test_absence_is_incorrect(self):
        assert not gpr("Das Kind schlief.", "sie", ["er"]).correct

    def test_word_boundary_not_substring(self):
        # "er" inside "der"/"Wasser" must not count.
        assert not gpr("Der Hund trank Wasser.", "er", ["sie"]).correct

    def test_detail_rederives_correct(self):
        judgment = gpr("Sie kam. Sie ging. Er blieb.", "sie", ["er", "es"])
        counts = judgment.detail["counts"]
        rederived = counts["sie"] >= 1 and counts["sie"] > max(counts["er"], counts["es"])
        assert judgment.correct == rederived


def _seq(total: float) -> ScoredSequence:
    return ScoredSequence.from_parts(["x"], [0], [total])


class TestCpr:
    def test_gold_wins(self):
        judgment = cpr([("gold", _seq(-5.0)), ("contrastive", _seq(-7.0)), ("contrastive", _seq(-9.0))])
        assert judgment.correct

    def test_tie_is_incorrect(self):
        judgment = cpr([("gold", _seq(-5.0)), ("contrastive", _seq(-5.0))])
        assert not judgment.correct

    def test_gold_loses(self):
        assert not cpr([("gold", _seq(-9.0)), ("contrastive", _seq(-2.0))]).correct

    def test_duplicate_gold_label_is_error(self):
        with pytest.raises(DataError):
            cpr([("gold", _seq(-1.0)), ("gold", _seq(-2.0))])

    def test_needs_two_variants(self):
        with pytest.raises(DataError):
            cpr([("gold", _seq(-1.0))])


class TestAccuracy:
    def test_all_correct(self):
        judgments = [gpr("sie", "sie", ["er"]) for _ in range(4)]
        assert accuracy(judgments) == 100.0

    def test_none_correct(self):
        judgments = [gpr("er", "sie", ["er"]) for _ in range(4)]
        assert accuracy(judgments) == 0.0

    def test_two_of_three_rounds_to_one_decimal(self):
        judgments = [
            gpr("sie kam", "sie", ["er"]),
            gpr("sie kam", "sie", ["er"]),
            gpr("er kam", "sie", ["er"]),
        ]
        assert accuracy(judgments) == 66.7

    def test_round_half_away_from_zero(self):
        assert round_half_away(0.05, 1) == 0.1
        assert round_half_away(33.35, 1) == 33.4


def test_external_scores_roundtrip(tmp_path):
    path = tmp_path / "comet.jsonl"
    path.write_text('{"id": "a", "score": 80.0}\n{"id": "b", "score": 90.0}\n')
    scores = load_external_scores(path)
    report = external_scores_report(scores)
    assert report.name == "comet"
    assert report.value == pytest.approx(85.0)
    assert report.n_items == 2


def test_scored_sequence_invariants():
    seq = ScoredSequence.from_parts(["a", "b"], [1, 2], [-0.5, -1.5])
    assert seq.total_logprob == pytest.approx(-2.0)
    assert seq.probability == pytest.approx(math.exp(-2.0))
    with pytest.raises(ValueError):
        ScoredSequence(tokens=["a"], token_ids=[1, 2], logprobs=[-1.0], total_logprob=-1.0)
    with pytest.raises(ValueError):
        ScoredSequence(tokens=["a"], token_ids=[1], logprobs=[0.5], total_logprob=0.5)
