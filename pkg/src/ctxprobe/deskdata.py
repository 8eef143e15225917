"""Deterministic synthetic desk data for offline runs and calibration tests.

Everything here is seed-driven: document corpora with pseudo sentences,
contrastive pronoun examples with annotated antecedents, the POS/gender
lexicon, and noisy hypothesis corpora for metric checks.
"""

from __future__ import annotations

import random
from pathlib import Path

from .corpus import AntecedentSpan, ContrastiveExample, Document, DocumentCorpus, GenderLexicon, SentencePair

EN_WORDS = (
    "light garden river window mountain story evening music teacher letter "
    "bridge forest city dream winter morning shadow village harbor meadow"
).split()

DE_WORDS = (
    "Licht Garten Fluss Fenster Berg Geschichte Abend Musik Lehrer Brief "
    "Brücke Wald Stadt Traum Winter Morgen Schatten Dorf Hafen Wiese"
).split()

# (german noun, english gloss) per grammatical gender
NOUNS = {
    "masc": [
        ("Hund", "dog"), ("Tisch", "table"), ("Stuhl", "chair"), ("Baum", "tree"),
        ("Vogel", "bird"), ("Berg", "hill"), ("Spiegel", "mirror"), ("Garten", "yard"),
        ("Brief", "note"), ("Teller", "plate"),
    ],
    "fem": [
        ("Katze", "cat"), ("Lampe", "lamp"), ("Blume", "flower"), ("Tür", "door"),
        ("Wolke", "cloud"), ("Brücke", "span"), ("Uhr", "clock"), ("Tasche", "bag"),
        ("Zeitung", "paper"), ("Kerze", "candle"),
    ],
    "neut": [
        ("Kind", "child"), ("Haus", "house"), ("Auto", "car"), ("Buch", "book"),
        ("Fenster", "pane"), ("Pferd", "horse"), ("Bild", "picture"), ("Messer", "knife"),
        ("Dorf", "hamlet"), ("Boot", "boat"),
    ],
}

FR_NOUNS = {
    "masc": [("chien", "dog"), ("livre", "book"), ("jardin", "garden"), ("pont", "bridge"),
             ("miroir", "mirror"), ("bateau", "boat")],
    "fem": [("maison", "house"), ("fleur", "flower"), ("porte", "door"), ("lampe", "lamp"),
            ("montre", "watch"), ("chaise", "chair")],
}

ARTICLES = {"masc": "Der", "fem": "Die", "neut": "Das"}
FR_ARTICLES = {"masc": "Le", "fem": "La"}
PRONOUNS = {"masc": "er", "fem": "sie", "neut": "es"}
FR_PRONOUNS = {"masc": "il", "fem": "elle"}


def _en_sentence(rng: random.Random) -> str:
    a, b = rng.choice(EN_WORDS), rng.choice(EN_WORDS)
    verb = rng.choice(["was near", "stood by", "moved past", "waited for", "turned into"])
    return f"The {a} {verb} the {b} ."


def _de_sentence(rng: random.Random) -> str:
    a, b = rng.choice(DE_WORDS), rng.choice(DE_WORDS)
    verb = rng.choice(["stand neben", "lag hinter", "wartete auf", "zeigte auf", "wurde zu"])
    return f"Das {a} {verb} dem {b} ."


def make_documents(n_docs: int, sentences_per_doc: int, seed: int = 0) -> DocumentCorpus:
    rng = random.Random(seed)
    documents = []
    for d in range(n_docs):
        sentences = tuple(
            SentencePair(src=_en_sentence(rng), tgt=_de_sentence(rng))
            for _ in range(sentences_per_doc)
        )
        documents.append(Document(doc_id=f"doc-{d:03d}", sentences=sentences))
    return DocumentCorpus(documents)


def make_lexicon(language_pair: str = "en-de") -> GenderLexicon:
    nouns = NOUNS if language_pair == "en-de" else FR_NOUNS
    entries = {("NOUN", gender): [w for w, _ in words] for gender, words in nouns.items()}
    return GenderLexicon(entries=entries)


def write_lexicon_tsv(lexicon: GenderLexicon, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = ["# word\tpos\tgender"]
    for (pos, gender), words in sorted(lexicon.entries.items()):
        for word in words:
            lines.append(f"{word}\t{pos}\t{gender}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def make_contrastive(
    n: int,
    seed: int = 0,
    shape: str = "en-de",
    context_size: int = 5,
    rare_pos_fraction: float = 0.0,
) -> list[ContrastiveExample]:
    """Balanced synthetic contrastive examples with annotated antecedents.

    The antecedent noun sits in one of the two most recent context pairs, on
    both sides (its English gloss in the source, the German/French noun in
    the target). rare_pos_fraction marks that fraction of examples with a POS
    tag absent from the desk lexicon, forcing the any-POS fallback.
    """
    rng = random.Random(seed)
    nouns = NOUNS if shape == "en-de" else FR_NOUNS
    pronouns = PRONOUNS if shape == "en-de" else FR_PRONOUNS
    articles = ARTICLES if shape == "en-de" else FR_ARTICLES
    genders = sorted(nouns)
    n_rare = round(n * rare_pos_fraction)
    examples = []
    for i in range(n):
        gender = genders[i % len(genders)]
        noun, gloss = rng.choice(nouns[gender])
        pairs = []
        ante_index = context_size - 1 - rng.randrange(min(2, context_size))
        for j in range(context_size):
            if j == ante_index:
                src = f"The {gloss} stayed in the {rng.choice(EN_WORDS)} ."
                tgt = f"{articles[gender]} {noun} blieb im {rng.choice(DE_WORDS)} ."
            else:
                src = _en_sentence(rng)
                tgt = _de_sentence(rng)
            pairs.append(SentencePair(src=src, tgt=tgt))
        ante_pair = pairs[ante_index]
        spans = [
            AntecedentSpan(
                side="target",
                index=ante_index,
                start=ante_pair.tgt.index(noun),
                end=ante_pair.tgt.index(noun) + len(noun),
            ),
            AntecedentSpan(
                side="source",
                index=ante_index,
                start=ante_pair.src.index(gloss),
                end=ante_pair.src.index(gloss) + len(gloss),
            ),
        ]
        gold_pronoun = pronouns[gender]
        others = [g for g in genders if g != gender]
        gold_target = f"{gold_pronoun.capitalize()} blieb dort stehen ."
        contrastive_targets = [
            f"{pronouns[g].capitalize()} blieb dort stehen ." for g in others
        ]
        examples.append(
            ContrastiveExample(
                example_id=f"{shape}-ex-{i:05d}",
                src="It stayed right there .",
                gold_target=gold_target,
                contrastive_targets=contrastive_targets,
                gold_pronoun=gold_pronoun,
                contrastive_pronouns=[pronouns[g] for g in others],
                context=pairs,
                antecedent_spans=spans,
                antecedent_pos="XRARE" if i < n_rare else "NOUN",
                antecedent_gender=gender,
            )
        )
    rng.shuffle(examples)
    return examples


def make_metric_corpus(n_pairs: int, seed: int = 0) -> tuple[list[str], list[str]]:
    """References plus noisy hypotheses (seeded edits) for metric checks."""
    rng = random.Random(seed)
    refs, hyps = [], []
    for _ in range(n_pairs):
        ref = _de_sentence(rng) + " " + _de_sentence(rng)
        tokens = ref.split()
        edited = list(tokens)
        for _ in range(rng.randrange(2, 7)):
            op = rng.choice(["drop", "dup", "swap", "sub"])
            if not edited:
                break
            pos = rng.randrange(len(edited))
            if op == "drop":
                edited.pop(pos)
            elif op == "dup":
                edited.insert(pos, edited[pos])
            elif op == "swap" and len(edited) > 1:
                other = rng.randrange(len(edited))
                edited[pos], edited[other] = edited[other], edited[pos]
            else:
                edited[pos] = rng.choice(DE_WORDS)
        refs.append(ref)
        hyps.append(" ".join(edited))
    return hyps, refs
