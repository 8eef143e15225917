"""Prepared per-example instances: the materialized (prompt x condition) cells.

One JSONL record per instance. ``char_spans`` maps span names ("context",
"antecedent", "source_sentence") to [start, end) character ranges in
``prompt_text`` (for attribution, ranges address prompt_text + forced_prefix,
which only extends the same coordinate space).
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .errors import DataError


@dataclass
class PreparedInstance:
    instance_id: str
    example_id: str
    task: str  # "translate" | "gpr" | "contrast" | "attribute"
    language_pair: str
    prompt_kind: str
    context_condition: str
    prompt_text: str
    anchor: int
    src_sentence: str
    seed: int
    reference: str | None = None
    gold_target: str | None = None
    contrastive_targets: list[str] = field(default_factory=list)
    gold_pronoun: str | None = None
    contrastive_pronouns: list[str] = field(default_factory=list)
    forced_prefix: str | None = None
    pronoun_text: str | None = None
    char_spans: dict[str, list[tuple[int, int]]] = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def to_json(self) -> str:
        record = asdict(self)
        return json.dumps(record, ensure_ascii=False, sort_keys=True)

    @classmethod
    def from_record(cls, record: dict) -> "PreparedInstance":
        known = set(cls.__dataclass_fields__)
        unknown = set(record) - known
        if unknown:
            raise DataError(f"unknown instance fields: {', '.join(sorted(unknown))}")
        record = dict(record)
        record["char_spans"] = {
            k: [tuple(r) for r in v] for k, v in record.get("char_spans", {}).items()
        }
        return cls(**record)


def write_instances(instances: list[PreparedInstance], path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for inst in instances:
            fh.write(inst.to_json() + "\n")


def read_instances(path: str | Path) -> list[PreparedInstance]:
    path = Path(path)
    if not path.exists():
        raise DataError(f"instances file not found: {path}")
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: malformed JSON ({exc.msg})") from exc
            try:
                out.append(PreparedInstance.from_record(record))
            except (TypeError, DataError) as exc:
                raise DataError(f"{path}:{lineno}: bad instance record ({exc})") from exc
    return out


def derive_seed(master_seed: int, *parts) -> int:
    """Stable per-instance seed from the run seed and identifying parts."""
    key = "|".join([str(master_seed), *map(str, parts)])
    digest = hashlib.sha256(key.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def split_at_pronoun(gold_target: str, gold_pronoun: str) -> tuple[str, str]:
    """Split the gold target before its first pronoun occurrence.

    Returns (prefix, pronoun surface as it appears); word-boundary,
    case-insensitive match. Raises DataError when the pronoun is absent.
    """
    pattern = rf"(?<!\w){re.escape(gold_pronoun)}(?!\w)"
    match = re.search(pattern, gold_target, flags=re.IGNORECASE | re.UNICODE)
    if match is None:
        raise DataError(f"gold pronoun {gold_pronoun!r} not found in target {gold_target!r}")
    return gold_target[: match.start()], match.group(0)
