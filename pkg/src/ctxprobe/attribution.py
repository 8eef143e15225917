"""Input-erasure attribution and the attribution-percentage statistic.

Erasure deletes one input token (the sequence shortens, no placeholder) and
measures the drop of the forced pronoun's probability; deltas live in
probability space and clamp at zero. The attribution percentage of a token
subset S is the share of total attribution mass falling on S, in percent.

Interchange format (``ap-v1``): JSONL, one vector per line,
``{"schema": "ap-v1", "example_id": str, "tokens": [str], "scores": [float],
"spans": {"context": [int], "antecedent": [int], ...}, "method": str,
"meta": {...}}``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .client.base import Backend
from .client.pool import run_parallel
from .errors import DataError

SCHEMA_VERSION = "ap-v1"

SPAN_CONTEXT = "context"
SPAN_ANTECEDENT = "antecedent"
SPAN_SOURCE_SENTENCE = "source_sentence"


@dataclass
class AttributionVector:
    example_id: str
    input_tokens: list[str]
    scores: list[float]
    spans: dict[str, frozenset[int]]
    method: str = "erasure"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.spans = {k: frozenset(v) for k, v in self.spans.items()}
        self.validate()

    def validate(self) -> None:
        if len(self.scores) != len(self.input_tokens):
            raise DataError(
                f"{self.example_id}: {len(self.scores)} scores for "
                f"{len(self.input_tokens)} input tokens"
            )
        if any(s < 0 for s in self.scores):
            raise DataError(f"{self.example_id}: negative attribution score")
        n = len(self.input_tokens)
        for kind, indices in self.spans.items():
            bad = [i for i in indices if not (0 <= i < n)]
            if bad:
                raise DataError(f"{self.example_id}: span {kind!r} index {bad[0]} outside [0, {n})")
        ante = self.spans.get(SPAN_ANTECEDENT)
        ctx = self.spans.get(SPAN_CONTEXT)
        if ante is not None and ctx is not None and not ante <= ctx:
            raise DataError(f"{self.example_id}: antecedent span not contained in context span")

    @property
    def total(self) -> float:
        return math.fsum(self.scores)

    def has_signal(self) -> bool:
        return self.total > 0.0


@dataclass
class ApAggregate:
    span_kind: str
    mean_ap: float
    n_examples: int
    per_example: list[float]
    no_signal_count: int = 0

    def __post_init__(self):
        if not (0.0 <= self.mean_ap <= 100.0):
            raise DataError(f"mean AP {self.mean_ap} outside [0, 100]")


def attribution_percentage(vec: AttributionVector, span_kind: str) -> float | None:
    """AP(S) in percent; None for the no-signal (all-zero) case."""
    total = vec.total
    if total <= 0.0:
        return None
    if span_kind == "full_input":
        indices = range(len(vec.scores))
    else:
        if span_kind not in vec.spans:
            raise DataError(f"{vec.example_id}: vector has no span {span_kind!r}")
        indices = vec.spans[span_kind]
    share = math.fsum(vec.scores[i] for i in indices)
    return share / total * 100.0


def aggregate_ap(
    vectors: list[AttributionVector], span_kind: str, mode: str = "mean_of_aps"
) -> ApAggregate:
    """Aggregate per-example APs; no-signal vectors are excluded and counted.

    mode "mean_of_aps" averages per-example percentages (default);
    "ratio_of_sums" divides summed span mass by summed total mass.
    """
    if mode not in ("mean_of_aps", "ratio_of_sums"):
        raise DataError(f"unknown AP aggregation mode {mode!r}")
    per_example: list[float] = []
    span_mass = 0.0
    total_mass = 0.0
    no_signal = 0
    for vec in vectors:
        ap = attribution_percentage(vec, span_kind)
        if ap is None:
            no_signal += 1
            continue
        per_example.append(ap)
        if span_kind == "full_input":
            span_mass += vec.total
        else:
            span_mass += math.fsum(vec.scores[i] for i in vec.spans[span_kind])
        total_mass += vec.total
    if not per_example:
        raise DataError(f"all {no_signal} vectors lack attribution signal")
    if mode == "mean_of_aps":
        mean = math.fsum(per_example) / len(per_example)
    else:
        mean = span_mass / total_mass * 100.0
    return ApAggregate(
        span_kind=span_kind,
        mean_ap=min(100.0, max(0.0, mean)),
        n_examples=len(per_example),
        per_example=per_example,
        no_signal_count=no_signal,
    )


@dataclass
class AttributionInstance:
    """A prepared forced-decode instance, ready for the erasure sweep.

    char_spans maps span names to lists of [start, end) character ranges in
    the full input text (prompt plus forced target prefix).
    """

    example_id: str
    prompt_text: str
    forced_prefix: str
    pronoun_text: str
    char_spans: dict[str, list[tuple[int, int]]]

    @property
    def full_input(self) -> str:
        return self.prompt_text + self.forced_prefix


def _spans_to_token_sets(
    char_spans: dict[str, list[tuple[int, int]]], offsets: list[tuple[int, int]]
) -> dict[str, frozenset[int]]:
    out: dict[str, frozenset[int]] = {}
    for kind, ranges in char_spans.items():
        indices = set()
        for start, end in ranges:
            for i, (tok_start, tok_end) in enumerate(offsets):
                if tok_start < end and start < tok_end:
                    indices.add(i)
        out[kind] = frozenset(indices)
    return out


def erasure_attribution(
    instance: AttributionInstance,
    backend: Backend,
    sweep: str = "full_input",
    granularity: str = "token",
    max_parallel: int | None = None,
) -> AttributionVector:
    """Erasure attribution of the forced pronoun over the input tokens.

    p_full is the pronoun's probability given the full input; each swept
    token is deleted in turn and the clamped probability drop becomes its
    score. Tokens outside the sweep scope score zero. granularity "span"
    deletes each annotated contiguous range as a unit and spreads the delta
    evenly over its tokens.
    """
    if sweep not in ("full_input", "context_only"):
        raise DataError(f"unknown sweep scope {sweep!r}")
    if granularity not in ("token", "span"):
        raise DataError(f"unknown erasure granularity {granularity!r}")
    backend.require("score", "tokenize")
    text = instance.full_input
    ids, offsets = backend.tokenizer.encode_with_offsets(text)
    tokens = [text[s:e] for s, e in offsets]
    spans = _spans_to_token_sets(instance.char_spans, offsets)

    p_full = backend.score_continuation(text, instance.pronoun_text).probability

    def prob_without(char_range: tuple[int, int]) -> float:
        start, end = char_range
        reduced = text[:start] + text[end:]
        return backend.score_continuation(reduced, instance.pronoun_text).probability

    scores = [0.0] * len(tokens)
    parallel = max_parallel or backend.config.max_parallel
    if granularity == "token":
        if sweep == "context_only":
            targets = sorted(spans.get(SPAN_CONTEXT, frozenset()))
        else:
            targets = list(range(len(tokens)))
        probs = run_parallel(lambda t: prob_without(offsets[t]), targets, parallel)
        for t, p in zip(targets, probs):
            scores[t] = max(0.0, p_full - p)
    else:
        ranges = []
        if sweep == "context_only":
            ranges = [tuple(r) for r in instance.char_spans.get(SPAN_CONTEXT, [])]
        else:
            covered = sorted(
                {tuple(r) for rs in instance.char_spans.values() for r in rs}
            )
            ranges = covered
        probs = run_parallel(prob_without, ranges, parallel)
        for (start, end), p in zip(ranges, probs):
            delta = max(0.0, p_full - p)
            members = [
                i for i, (ts, te) in enumerate(offsets) if ts < end and start < te
            ]
            for i in members:
                scores[i] += delta / len(members) if members else 0.0

    return AttributionVector(
        example_id=instance.example_id,
        input_tokens=tokens,
        scores=scores,
        spans=spans,
        method="erasure",
        meta={
            "erasure": "token_deletion",
            "p_full": p_full,
            "sweep": sweep,
            "granularity": granularity,
        },
    )


@dataclass
class ImportResult:
    vectors: list[AttributionVector]
    rejected: list[tuple[str, str]] = field(default_factory=list)

    def __iter__(self):
        return iter(self.vectors)

    def __len__(self) -> int:
        return len(self.vectors)


def import_attributions(path: str | Path) -> ImportResult:
    """Read an ap-v1 interchange file; schema mismatch is a hard error,
    per-record violations reject only that record."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"attribution file not found: {path}")
    vectors: list[AttributionVector] = []
    rejected: list[tuple[str, str]] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: malformed JSON ({exc.msg})") from exc
            schema = record.get("schema")
            if schema != SCHEMA_VERSION:
                raise DataError(
                    f"{path}:{lineno}: schema version {schema!r} != {SCHEMA_VERSION!r}"
                )
            example_id = str(record.get("example_id", f"line-{lineno}"))
            try:
                vec = AttributionVector(
                    example_id=example_id,
                    input_tokens=list(record["tokens"]),
                    scores=[float(s) for s in record["scores"]],
                    spans={k: frozenset(v) for k, v in record.get("spans", {}).items()},
                    method=record.get("method", "unknown"),
                    meta=record.get("meta", {}),
                )
            except (KeyError, TypeError, ValueError) as exc:
                rejected.append((example_id, f"bad record: {exc}"))
                continue
            except DataError as exc:
                rejected.append((example_id, str(exc)))
                continue
            vectors.append(vec)
    return ImportResult(vectors=vectors, rejected=rejected)


def export_attributions(vectors: list[AttributionVector], path: str | Path) -> None:
    """Write vectors in the ap-v1 interchange format."""
    with open(path, "w", encoding="utf-8") as fh:
        for vec in vectors:
            record = {
                "schema": SCHEMA_VERSION,
                "example_id": vec.example_id,
                "tokens": vec.input_tokens,
                "scores": vec.scores,
                "spans": {k: sorted(v) for k, v in sorted(vec.spans.items())},
                "method": vec.method,
                "meta": vec.meta,
            }
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")
