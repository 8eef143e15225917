"""Loading and validation of document corpora, contrastive sets, and the gender lexicon.

Native formats (all UTF-8, NFC-normalized on load):

* Document corpus: JSONL, one document per line,
  ``{"doc_id": str, "sentences": [{"src": str, "tgt": str}, ...]}``.
* Contrastive set: JSONL, one example per line; antecedent spans are
  ``{"side": "source"|"target", "index": int, "start": int, "end": int}``
  with end-exclusive character offsets into the referenced context sentence.
* Lexicon: TSV ``word <TAB> pos_tag <TAB> gender``; ``#`` starts a comment line.
"""

from __future__ import annotations

import json
import random
import unicodedata
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path

from .errors import DataError


def _nfc(text: str) -> str:
    return unicodedata.normalize("NFC", text)


@dataclass(frozen=True)
class SentencePair:
    """One aligned source-target pair; tgt is None for source-only corpora."""

    src: str
    tgt: str | None = None

    def __post_init__(self):
        if not self.src.strip():
            raise DataError("sentence pair has empty source text")


@dataclass(frozen=True)
class Document:
    doc_id: str
    sentences: tuple[SentencePair, ...]

    def __post_init__(self):
        if not self.sentences:
            raise DataError(f"document {self.doc_id!r} has no sentences")

    def __len__(self) -> int:
        return len(self.sentences)


@dataclass
class DocumentCorpus:
    documents: list[Document]

    def __post_init__(self):
        seen = set()
        for doc in self.documents:
            if doc.doc_id in seen:
                raise DataError(f"duplicate doc_id {doc.doc_id!r}")
            seen.add(doc.doc_id)
        self._by_id = {doc.doc_id: doc for doc in self.documents}

    def __iter__(self):
        return iter(self.documents)

    def __len__(self) -> int:
        return len(self.documents)

    def __getitem__(self, doc_id: str) -> Document:
        try:
            return self._by_id[doc_id]
        except KeyError:
            raise DataError(f"unknown doc_id {doc_id!r}") from None

    @property
    def doc_count(self) -> int:
        return len(self.documents)

    @property
    def sentence_count(self) -> int:
        return sum(len(d) for d in self.documents)

    def sentence_counts(self) -> dict[str, int]:
        return {d.doc_id: len(d) for d in self.documents}


@dataclass(frozen=True)
class AntecedentSpan:
    """Locates one antecedent mention inside a context sentence.

    ``index`` addresses the example's context list (0 = oldest pair);
    ``start``/``end`` are end-exclusive character offsets into that
    sentence's source or target text.
    """

    side: str
    index: int
    start: int
    end: int

    def __post_init__(self):
        if self.side not in ("source", "target"):
            raise DataError(f"antecedent span side must be source|target, got {self.side!r}")
        if self.start < 0 or self.end <= self.start:
            raise DataError(f"antecedent span has invalid range [{self.start}, {self.end})")


@dataclass
class ContrastiveExample:
    example_id: str
    src: str
    gold_target: str
    contrastive_targets: list[str]
    gold_pronoun: str
    contrastive_pronouns: list[str]
    context: list[SentencePair]
    antecedent_spans: list[AntecedentSpan]
    antecedent_pos: str
    antecedent_gender: str

    def validate(self, max_context: int | None = None) -> None:
        if len(self.contrastive_targets) != len(self.contrastive_pronouns):
            raise DataError(
                f"{self.example_id}: {len(self.contrastive_targets)} contrastive targets "
                f"vs {len(self.contrastive_pronouns)} contrastive pronouns"
            )
        if not self.contrastive_targets:
            raise DataError(f"{self.example_id}: needs at least one contrastive target")
        for tgt in self.contrastive_targets:
            if tgt == self.gold_target:
                raise DataError(f"{self.example_id}: contrastive target equals gold target")
        if max_context is not None and len(self.context) > max_context:
            raise DataError(
                f"{self.example_id}: context length {len(self.context)} exceeds maximum {max_context}"
            )
        for span in self.antecedent_spans:
            if not (0 <= span.index < len(self.context)):
                raise DataError(
                    f"{self.example_id}: span context index {span.index} outside context "
                    f"of length {len(self.context)}"
                )
            pair = self.context[span.index]
            text = pair.src if span.side == "source" else pair.tgt
            if text is None or span.end > len(text):
                raise DataError(
                    f"{self.example_id}: span [{span.start}, {span.end}) outside "
                    f"{span.side} sentence of length {len(text) if text else 0}"
                )

    def span_text(self, span: AntecedentSpan) -> str:
        pair = self.context[span.index]
        text = pair.src if span.side == "source" else pair.tgt
        return text[span.start:span.end]


@dataclass
class ContrastiveSet:
    """Accepted examples plus the per-example rejection report."""

    examples: list[ContrastiveExample]
    rejected: list[tuple[str, str]] = field(default_factory=list)

    def __iter__(self):
        return iter(self.examples)

    def __len__(self) -> int:
        return len(self.examples)


@dataclass
class GenderLexicon:
    """Word forms keyed by (pos_tag, gender); each word under exactly one key."""

    entries: dict[tuple[str, str], list[str]]

    def genders(self) -> list[str]:
        return sorted({gender for _, gender in self.entries})

    def bucket_sizes(self) -> dict[tuple[str, str], int]:
        return {key: len(words) for key, words in sorted(self.entries.items())}

    def candidates(self, pos: str, exclude_gender: str) -> list[tuple[str, str]]:
        """All (word, gender) with the given POS and a different gender, sorted."""
        out = []
        for (p, g), words in self.entries.items():
            if p == pos and g != exclude_gender:
                out.extend((w, g) for w in words)
        return sorted(out)

    def candidates_any_pos(self, exclude_gender: str) -> list[tuple[str, str]]:
        out = []
        for (_, g), words in self.entries.items():
            if g != exclude_gender:
                out.extend((w, g) for w in words)
        return sorted(out)


@dataclass(frozen=True)
class PronounClassSet:
    language_pair: str
    classes: tuple[str, ...]

    def __post_init__(self):
        lowered = tuple(c.lower() for c in self.classes)
        if lowered != self.classes:
            raise DataError("pronoun classes must be lowercase-normalized")
        if len(set(self.classes)) != len(self.classes):
            raise DataError("pronoun classes must be distinct")
        if len(self.classes) < 2:
            raise DataError("need at least two pronoun classes")


def _read_jsonl(path: Path):
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                yield lineno, json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: malformed JSON ({exc.msg})") from exc


def load_documents(path: str | Path, format: str = "jsonl") -> DocumentCorpus:
    """Load a document-aligned parallel corpus.

    Malformed records raise DataError naming the line; duplicate doc_ids
    are a hard error.
    """
    path = Path(path)
    if format != "jsonl":
        raise DataError(f"unsupported corpus format {format!r} (supported: jsonl)")
    if not path.exists():
        raise DataError(f"corpus file not found: {path}")
    documents = []
    for lineno, record in _read_jsonl(path):
        try:
            doc_id = record["doc_id"]
            raw_sentences = record["sentences"]
        except (KeyError, TypeError) as exc:
            raise DataError(f"{path}:{lineno}: missing field {exc}") from exc
        try:
            sentences = tuple(
                SentencePair(
                    src=_nfc(s["src"]),
                    tgt=_nfc(s["tgt"]) if s.get("tgt") is not None else None,
                )
                for s in raw_sentences
            )
            documents.append(Document(doc_id=str(doc_id), sentences=sentences))
        except (KeyError, TypeError) as exc:
            raise DataError(f"{path}:{lineno}: malformed sentence record ({exc})") from exc
        except DataError as exc:
            raise DataError(f"{path}:{lineno}: {exc}") from exc
    return DocumentCorpus(documents)


def save_documents(corpus: DocumentCorpus, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for doc in corpus:
            record = {
                "doc_id": doc.doc_id,
                "sentences": [{"src": p.src, "tgt": p.tgt} for p in doc.sentences],
            }
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")


def _example_from_record(record: dict) -> ContrastiveExample:
    context = [
        SentencePair(
            src=_nfc(p["src"]),
            tgt=_nfc(p["tgt"]) if p.get("tgt") is not None else None,
        )
        for p in record.get("context", [])
    ]
    spans = [
        AntecedentSpan(side=s["side"], index=s["index"], start=s["start"], end=s["end"])
        for s in record.get("antecedent_spans", [])
    ]
    return ContrastiveExample(
        example_id=str(record["example_id"]),
        src=_nfc(record["src"]),
        gold_target=_nfc(record["gold_target"]),
        contrastive_targets=[_nfc(t) for t in record["contrastive_targets"]],
        gold_pronoun=_nfc(record["gold_pronoun"]),
        contrastive_pronouns=[_nfc(p) for p in record["contrastive_pronouns"]],
        context=context,
        antecedent_spans=spans,
        antecedent_pos=record.get("antecedent_pos", ""),
        antecedent_gender=record.get("antecedent_gender", ""),
    )


def load_contrastive_set(
    path: str | Path, format: str = "jsonl", max_context: int | None = None
) -> ContrastiveSet:
    """Load a contrastive pronoun test set.

    Examples violating per-example invariants (e.g. a span pointing past the
    end of its context sentence) are rejected individually and reported;
    file-level parse failures raise DataError.
    """
    path = Path(path)
    if format != "jsonl":
        raise DataError(f"unsupported contrastive format {format!r} (supported: jsonl)")
    if not path.exists():
        raise DataError(f"contrastive file not found: {path}")
    accepted: list[ContrastiveExample] = []
    rejected: list[tuple[str, str]] = []
    for lineno, record in _read_jsonl(path):
        example_id = str(record.get("example_id", f"line-{lineno}"))
        try:
            example = _example_from_record(record)
            example.validate(max_context=max_context)
        except (KeyError, TypeError) as exc:
            raise DataError(f"{path}:{lineno}: missing field {exc}") from exc
        except DataError as exc:
            rejected.append((example_id, str(exc)))
            continue
        accepted.append(example)
    return ContrastiveSet(examples=accepted, rejected=rejected)


def save_contrastive_set(examples: list[ContrastiveExample], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for ex in examples:
            record = {
                "example_id": ex.example_id,
                "src": ex.src,
                "gold_target": ex.gold_target,
                "contrastive_targets": ex.contrastive_targets,
                "gold_pronoun": ex.gold_pronoun,
                "contrastive_pronouns": ex.contrastive_pronouns,
                "context": [{"src": p.src, "tgt": p.tgt} for p in ex.context],
                "antecedent_spans": [
                    {"side": s.side, "index": s.index, "start": s.start, "end": s.end}
                    for s in ex.antecedent_spans
                ],
                "antecedent_pos": ex.antecedent_pos,
                "antecedent_gender": ex.antecedent_gender,
            }
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")


def sample_balanced_subset(
    examples: list[ContrastiveExample], n: int, seed: int
) -> list[ContrastiveExample]:
    """Sample exactly n/k examples per gold-pronoun class, for k classes.

    n must be divisible by the class count; a class without enough examples
    is an error naming the class and shortfall. Deterministic under seed.
    """
    by_class: dict[str, list[ContrastiveExample]] = defaultdict(list)
    for ex in examples:
        by_class[ex.gold_pronoun.lower()].append(ex)
    classes = sorted(by_class)
    if not classes:
        raise DataError("no examples to sample from")
    if n % len(classes) != 0:
        raise DataError(
            f"n={n} not divisible by {len(classes)} gold-pronoun classes "
            f"({', '.join(classes)}); pick n as a multiple of the class count"
        )
    per_class = n // len(classes)
    rng = random.Random(seed)
    picked: list[ContrastiveExample] = []
    for cls in classes:
        pool = by_class[cls]
        if len(pool) < per_class:
            raise DataError(
                f"class {cls!r} has only {len(pool)} examples, "
                f"short by {per_class - len(pool)} for {per_class} per class"
            )
        picked.extend(rng.sample(pool, per_class))
    rng.shuffle(picked)
    return picked


def load_lexicon(path: str | Path) -> GenderLexicon:
    """Load the POS/gender word lexicon from TSV."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"lexicon file not found: {path}")
    entries: dict[tuple[str, str], list[str]] = defaultdict(list)
    seen: dict[str, tuple[str, str]] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise DataError(f"{path}:{lineno}: expected 3 tab-separated fields, got {len(parts)}")
            word, pos, gender = (_nfc(p.strip()) for p in parts)
            if word in seen:
                raise DataError(
                    f"{path}:{lineno}: word {word!r} already listed under {seen[word]}"
                )
            seen[word] = (pos, gender)
            entries[(pos, gender)].append(word)
    if not entries:
        raise DataError(f"{path}: lexicon is empty")
    return GenderLexicon(entries=dict(entries))


def class_histogram(examples: list[ContrastiveExample]) -> Counter:
    return Counter(ex.gold_pronoun.lower() for ex in examples)
