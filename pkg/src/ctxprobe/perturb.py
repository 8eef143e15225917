"""Construction of the four context conditions, deterministic under a seed.

All constructors are pure functions of (inputs, seed): gold windows slice the
document, perturbed windows take a contiguous run from a different document,
random windows fill each slot with uniform vocabulary tokens of matching token
length, and antecedent swaps replace annotated mentions with different-gender
lexicon words.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .corpus import AntecedentSpan, ContrastiveExample, Document, DocumentCorpus, GenderLexicon, SentencePair
from .errors import CapabilityError, DataError

CONDITIONS = ("gold", "perturbed", "random", "antecedent_swapped", "none")


@dataclass
class ContextWindow:
    condition: str
    pairs: list[SentencePair]
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.condition not in CONDITIONS:
            raise DataError(f"unknown context condition {self.condition!r}")
        if self.condition == "none" and self.pairs:
            raise DataError("condition=none requires an empty window")
        if self.condition == "random" and self.pairs:
            if "token_ids" not in self.provenance or "seed" not in self.provenance:
                raise DataError("random windows must record sampled token ids and seed")

    def __len__(self) -> int:
        return len(self.pairs)


@dataclass(frozen=True)
class SwapRecord:
    """Audit record for one replaced antecedent mention.

    ``span`` locates the mention in the original context; ``swapped_range``
    is its character range in the swapped sentence (replacement may differ
    in length).
    """

    span: AntecedentSpan
    original_word: str
    replacement_word: str
    original_gender: str
    replacement_gender: str
    pos_matched: bool
    swapped_range: tuple[int, int]

    def __post_init__(self):
        if self.replacement_gender == self.original_gender:
            raise DataError("swap must change gender")


def no_context() -> ContextWindow:
    return ContextWindow(condition="none", pairs=[])


def gold_context(doc: Document, index: int, k: int) -> ContextWindow:
    """The min(k, index) source-target pairs immediately preceding index."""
    if not (0 <= index < len(doc.sentences)):
        raise DataError(f"index {index} out of range for document {doc.doc_id!r} of length {len(doc)}")
    if k < 0:
        raise DataError(f"context size must be >= 0, got {k}")
    pairs = list(doc.sentences[max(0, index - k):index])
    return ContextWindow(
        condition="gold",
        pairs=pairs,
        provenance={"doc_id": doc.doc_id, "index": index, "k": k},
    )


def perturbed_context(
    corpus: DocumentCorpus, doc_id: str, index: int, k: int, seed: int
) -> ContextWindow:
    """Same-sized window drawn as a contiguous run from one other document.

    The donor is chosen uniformly among documents != doc_id that are long
    enough; the run offset is uniform. Provenance records both.
    """
    if corpus.doc_count < 2:
        raise DataError("perturbed context requires a corpus with at least 2 documents")
    gold = gold_context(corpus[doc_id], index, k)
    width = len(gold.pairs)
    donors = [d for d in corpus if d.doc_id != doc_id and len(d) >= width]
    if not donors:
        raise DataError(f"no donor document with at least {width} sentences")
    rng = random.Random(seed)
    donor = donors[rng.randrange(len(donors))]
    offset = rng.randrange(len(donor) - width + 1)
    pairs = list(donor.sentences[offset:offset + width])
    return ContextWindow(
        condition="perturbed",
        pairs=pairs,
        provenance={
            "doc_id": doc_id,
            "index": index,
            "donor_doc_id": donor.doc_id,
            "offset": offset,
            "contiguous": True,
            "seed": seed,
        },
    )


def random_context(gold: ContextWindow, vocab, tokenizer, seed: int) -> ContextWindow:
    """Window of uniform vocabulary tokens, matching gold per-slot token length.

    ``vocab`` is the sequence of sampleable token ids (specials excluded);
    ``tokenizer`` must encode/decode under the target backend's vocabulary.
    """
    if gold.condition != "gold":
        raise DataError(f"random_context starts from a gold window, got {gold.condition!r}")
    if tokenizer is None:
        raise CapabilityError("random context requires a tokenizer to measure gold token lengths")
    vocab = list(vocab)
    if not vocab:
        raise DataError("random context requires a non-empty sampleable vocabulary")
    rng = random.Random(seed)
    pairs = []
    sampled = []
    for pair in gold.pairs:
        slot_ids = {}
        texts = {}
        for slot, text in (("src", pair.src), ("tgt", pair.tgt)):
            if text is None:
                slot_ids[slot] = None
                texts[slot] = None
                continue
            n = len(tokenizer.encode(text))
            ids = [vocab[rng.randrange(len(vocab))] for _ in range(n)]
            slot_ids[slot] = ids
            texts[slot] = tokenizer.decode(ids)
        sampled.append(slot_ids)
        pairs.append(SentencePair(src=texts["src"], tgt=texts["tgt"]))
    return ContextWindow(
        condition="random",
        pairs=pairs,
        provenance={"seed": seed, "token_ids": sampled, "gold": dict(gold.provenance)},
    )


def _match_capitalization(replacement: str, original: str) -> str:
    if original and original[0].isupper():
        return replacement[:1].upper() + replacement[1:]
    return replacement[:1].lower() + replacement[1:]


def swap_antecedents(
    example: ContrastiveExample,
    lexicon: GenderLexicon,
    seed: int,
    include_source_side: bool = False,
) -> tuple[ContextWindow, list[SwapRecord]]:
    """Replace annotated antecedent mentions with a different-gender word.

    One replacement is drawn per example (uniform over same-POS,
    different-gender lexicon words; any-POS fallback when the POS bucket is
    empty) and applied to every selected mention, preserving each mention's
    leading capitalization. Target-side mentions only, unless
    include_source_side is set.
    """
    if len(lexicon.genders()) < 2:
        raise DataError("antecedent swapping requires a lexicon with at least 2 genders")
    sides = ("target", "source") if include_source_side else ("target",)
    spans = [s for s in example.antecedent_spans if s.side in sides]
    if not any(s.side == "target" for s in example.antecedent_spans):
        raise DataError(f"{example.example_id}: no target-side antecedent span")

    by_sentence: dict[tuple[str, int], list[AntecedentSpan]] = {}
    for span in spans:
        by_sentence.setdefault((span.side, span.index), []).append(span)
    for key, group in by_sentence.items():
        group.sort(key=lambda s: s.start)
        for a, b in zip(group, group[1:]):
            if b.start < a.end:
                raise DataError(f"{example.example_id}: overlapping antecedent spans at {key}")

    gender = example.antecedent_gender
    pos = example.antecedent_pos
    candidates = lexicon.candidates(pos, exclude_gender=gender)
    pos_matched = True
    if not candidates:
        candidates = lexicon.candidates_any_pos(exclude_gender=gender)
        pos_matched = False
    if not candidates:
        raise DataError(
            f"{example.example_id}: no word with gender != {gender!r} anywhere in the lexicon"
        )
    rng = random.Random(seed)
    replacement, replacement_gender = candidates[rng.randrange(len(candidates))]

    new_pairs = [SentencePair(src=p.src, tgt=p.tgt) for p in example.context]
    records: list[SwapRecord] = []
    for (side, index), group in sorted(by_sentence.items()):
        pair = new_pairs[index]
        text = pair.src if side == "source" else pair.tgt
        # Splice right-to-left so earlier span offsets stay valid.
        deltas: list[tuple[AntecedentSpan, str, str]] = []
        for span in sorted(group, key=lambda s: s.start, reverse=True):
            original = text[span.start:span.end]
            cased = _match_capitalization(replacement, original)
            text = text[:span.start] + cased + text[span.end:]
            deltas.append((span, original, cased))
        # Recompute final positions left-to-right.
        shift = 0
        for span, original, cased in reversed(deltas):
            start = span.start + shift
            records.append(
                SwapRecord(
                    span=span,
                    original_word=original,
                    replacement_word=cased,
                    original_gender=gender,
                    replacement_gender=replacement_gender,
                    pos_matched=pos_matched,
                    swapped_range=(start, start + len(cased)),
                )
            )
            shift += len(cased) - (span.end - span.start)
        if side == "source":
            new_pairs[index] = SentencePair(src=text, tgt=pair.tgt)
        else:
            new_pairs[index] = SentencePair(src=pair.src, tgt=text)

    window = ContextWindow(
        condition="antecedent_swapped",
        pairs=new_pairs,
        provenance={
            "example_id": example.example_id,
            "seed": seed,
            "replacement": replacement,
            "pos_matched": pos_matched,
            "include_source_side": include_source_side,
        },
    )
    return window, records


def unswap(window: ContextWindow, records: list[SwapRecord]) -> list[SentencePair]:
    """Invert swap_antecedents; used to audit that only the spans changed."""
    pairs = [SentencePair(src=p.src, tgt=p.tgt) for p in window.pairs]
    by_sentence: dict[tuple[str, int], list[SwapRecord]] = {}
    for rec in records:
        by_sentence.setdefault((rec.span.side, rec.span.index), []).append(rec)
    for (side, index), group in by_sentence.items():
        pair = pairs[index]
        text = pair.src if side == "source" else pair.tgt
        for rec in sorted(group, key=lambda r: r.swapped_range[0], reverse=True):
            start, end = rec.swapped_range
            text = text[:start] + rec.original_word + text[end:]
        if side == "source":
            pairs[index] = SentencePair(src=text, tgt=pair.tgt)
        else:
            pairs[index] = SentencePair(src=pair.src, tgt=text)
    return pairs
