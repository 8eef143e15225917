"""Context-condition constructors: windowing, size matching, swaps, determinism."""

import pytest
from hypothesis import given
from hypothesis import strategies as st

from ctxprobe.client.mock import ByteTokenizer
from ctxprobe.corpus import AntecedentSpan, GenderLexicon
from ctxprobe.deskdata import make_contrastive, make_documents, make_lexicon
from ctxprobe.errors import CapabilityError, DataError
from ctxprobe.perturb import (
    gold_context,
    no_context,
    perturbed_context,
    random_context,
    swap_antecedents,
    unswap,
)


@pytest.fixture(scope="module")
def corpus():
    return make_documents(4, 10, seed=0)


class TestGoldContext:
    def test_start_of_document_is_empty(self, corpus):
        window = gold_context(corpus["doc-000"], 0, 5)
        assert window.condition == "gold"
        assert window.pairs == []

    def test_full_window_in_order(self, corpus):
        doc = corpus["doc-000"]
        window = gold_context(doc, 7, 5)
        assert window.pairs == list(doc.sentences[2:7])

    def test_truncated_window(self, corpus):
        doc = corpus["doc-000"]
        window = gold_context(doc, 3, 5)
        assert window.pairs == list(doc.sentences[0:3])

    def test_index_out_of_range(self, corpus):
        with pytest.raises(DataError):
            gold_context(corpus["doc-000"], 10, 5)


class TestPerturbedContext:
    def test_size_matches_gold(self, corpus):
        for index in (0, 3, 7):
            gold = gold_context(corpus["doc-000"], index, 5)
            perturbed = perturbed_context(corpus, "doc-000", index, 5, seed=1)
            assert len(perturbed.pairs) == len(gold.pairs)

    def test_donor_is_other_document(self):
        corpus = make_documents(2, 8, seed=2)
        window = perturbed_context(corpus, "doc-000", 6, 5, seed=9)
        donor = window.provenance["donor_doc_id"]
        assert donor == "doc-001"
        offset = window.provenance["offset"]
        assert window.pairs == list(corpus["doc-001"].sentences[offset:offset + 5])

    def test_deterministic(self, corpus):
        a = perturbed_context(corpus, "doc-001", 6, 5, seed=4)
        b = perturbed_context(corpus, "doc-001", 6, 5, seed=4)
        assert a.pairs == b.pairs and a.provenance == b.provenance

    def test_single_document_corpus_is_error(self):
        corpus = make_documents(1, 8, seed=0)
        with pytest.raises(DataError, match="2 documents"):
            perturbed_context(corpus, "doc-000", 5, 3, seed=0)

    def test_no_long_enough_donor(self):
        from ctxprobe.corpus import Document, DocumentCorpus, SentencePair

        corpus = DocumentCorpus(
            [
                Document("long", tuple(SentencePair(f"s{i}", f"t{i}") for i in range(6))),
                Document("short", (SentencePair("s", "t"),)),
            ]
        )
        with pytest.raises(DataError, match="donor"):
            perturbed_context(corpus, "long", 5, 4, seed=0)


class TestRandomContext:
    def test_per_slot_token_length_matches(self, corpus):
        tokenizer = ByteTokenizer()
        gold = gold_context(corpus["doc-000"], 7, 5)
        window = random_context(gold, tokenizer.sampleable_ids, tokenizer, seed=3)
        assert len(window.pairs) == len(gold.pairs)
        for random_pair, gold_pair, ids in zip(
            window.pairs, gold.pairs, window.provenance["token_ids"]
        ):
            assert len(ids["src"]) == len(tokenizer.encode(gold_pair.src))
            assert len(ids["tgt"]) == len(tokenizer.encode(gold_pair.tgt))
            # decoded text re-tokenizes to exactly the sampled ids
            assert tokenizer.encode(random_pair.src) == ids["src"]
            assert tokenizer.encode(random_pair.tgt) == ids["tgt"]

    def test_empty_gold_gives_empty_random(self, corpus):
        tokenizer = ByteTokenizer()
        gold = gold_context(corpus["doc-000"], 0, 5)
        window = random_context(gold, tokenizer.sampleable_ids, tokenizer, seed=3)
        assert window.pairs == []

    def test_requires_tokenizer(self, corpus):
        gold = gold_context(corpus["doc-000"], 3, 2)
        with pytest.raises(CapabilityError):
            random_context(gold, (1, 2, 3), None, seed=0)

    def test_deterministic(self, corpus):
        tokenizer = ByteTokenizer()
        gold = gold_context(corpus["doc-000"], 7, 5)
        a = random_context(gold, tokenizer.sampleable_ids, tokenizer, seed=11)
        b = random_context(gold, tokenizer.sampleable_ids, tokenizer, seed=11)
        assert a.pairs == b.pairs

    def test_garbled_but_printable(self, corpus):
        tokenizer = ByteTokenizer()
        gold = gold_context(corpus["doc-000"], 7, 2)
        window = random_context(gold, tokenizer.sampleable_ids, tokenizer, seed=5)
        for pair in window.pairs:
            assert pair.src.isprintable()
            assert pair.src not in {p.src for p in gold.pairs}


class TestSwapAntecedents:
    def test_forced_single_choice(self):
        examples = [ex for ex in make_contrastive(6, seed=0) if ex.antecedent_gender == "fem"]
        example = examples[0]
        lexicon = GenderLexicon(entries={("NOUN", "masc"): ["Hund"], ("NOUN", "fem"): ["Katze"]})
        window, records = swap_antecedents(example, lexicon, seed=0)
        assert window.condition == "antecedent_swapped"
        target_records = [r for r in records if r.span.side == "target"]
        assert all(r.replacement_word == "Hund" for r in target_records)
        assert all(r.pos_matched for r in records)
        assert all(r.replacement_gender == "masc" for r in records)

    def test_rare_pos_falls_back_any_pos(self, desk_lexicon):
        example = make_contrastive(4, seed=1)[0]
        example.antecedent_pos = "XRARE"
        window, records = swap_antecedents(example, desk_lexicon, seed=2)
        assert all(not r.pos_matched for r in records)
        assert all(r.replacement_gender != example.antecedent_gender for r in records)

    def test_only_spans_change_and_unswap_restores(self, desk_lexicon):
        example = make_contrastive(10, seed=3)[4]
        window, records = swap_antecedents(example, desk_lexicon, seed=7)
        restored = unswap(window, records)
        assert restored == example.context
        # non-span text of the swapped sentence is byte-identical around the swap
        for record in records:
            if record.span.side != "target":
                continue
            original = example.context[record.span.index].tgt
            swapped = window.pairs[record.span.index].tgt
            assert swapped[: record.swapped_range[0]] == original[: record.span.start]
            assert swapped[record.swapped_range[0]:record.swapped_range[1]] == record.replacement_word

    def test_capitalization_preserved(self):
        example = make_contrastive(6, seed=0)[0]
        # Desk antecedents are capitalized nouns; replacement must be too.
        lexicon = make_lexicon()
        _, records = swap_antecedents(example, lexicon, seed=0)
        for record in records:
            if record.span.side == "target":
                assert record.original_word[0].isupper()
                assert record.replacement_word[0].isupper()

    def test_single_gender_lexicon_is_error(self):
        example = make_contrastive(3, seed=0)[0]
        lexicon = GenderLexicon(entries={("NOUN", "masc"): ["Hund", "Tisch"]})
        with pytest.raises(DataError):
            swap_antecedents(example, lexicon, seed=0)

    def test_no_different_gender_word_is_error(self):
        example = make_contrastive(3, seed=0)[0]
        only_own = GenderLexicon(
            entries={("NOUN", example.antecedent_gender): ["Einzig"], ("X", example.antecedent_gender): ["Zwei"]}
        )
        with pytest.raises(DataError):
            swap_antecedents(example, only_own, seed=0)

    def test_overlapping_spans_error(self, desk_lexicon):
        example = make_contrastive(3, seed=0)[0]
        span = example.antecedent_spans[0]
        example.antecedent_spans.append(
            AntecedentSpan(side=span.side, index=span.index, start=span.start + 1, end=span.end + 1)
        )
        with pytest.raises(DataError, match="overlap"):
            swap_antecedents(example, desk_lexicon, seed=0)

    def test_source_side_untouched_by_default(self, desk_lexicon):
        example = make_contrastive(5, seed=4)[0]
        window, records = swap_antecedents(example, desk_lexicon, seed=1)
        assert [p.src for p in window.pairs] == [p.src for p in example.context]
        assert all(r.span.side == "target" for r in records)

    def test_source_side_flag(self, desk_lexicon):
        example = make_contrastive(5, seed=4)[0]
        window, records = swap_antecedents(example, desk_lexicon, seed=1, include_source_side=True)
        sides = {r.span.side for r in records}
        assert sides == {"target", "source"}


@given(st.integers(min_value=0, max_value=10**9), st.integers(min_value=0, max_value=9))
def test_all_constructors_pure_under_seed(seed, index):
    corpus = make_documents(3, 10, seed=1)
    tokenizer = ByteTokenizer()
    gold_a = gold_context(corpus["doc-001"], index, 4)
    gold_b = gold_context(corpus["doc-001"], index, 4)
    assert gold_a.pairs == gold_b.pairs
    pert_a = perturbed_context(corpus, "doc-001", index, 4, seed)
    pert_b = perturbed_context(corpus, "doc-001", index, 4, seed)
    assert pert_a.pairs == pert_b.pairs
    assert len(pert_a.pairs) == len(gold_a.pairs)
    rand_a = random_context(gold_a, tokenizer.sampleable_ids, tokenizer, seed)
    rand_b = random_context(gold_b, tokenizer.sampleable_ids, tokenizer, seed)
    assert rand_a.pairs == rand_b.pairs


def test_no_context_window():
    window = no_context()
    assert window.condition == "none"
    assert len(window) == 0
