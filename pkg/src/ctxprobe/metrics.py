"""Corpus translation metrics and pronoun-resolution metrics.

BLEU follows the 13a tokenization with exponential smoothing and effective
n-gram order, case-sensitive, single reference; chrF uses character 6-grams,
no word n-grams, whitespace excluded, beta=2, macro-averaged F over effective
orders. Reports embed the corresponding signature strings verbatim so results
are comparable with the standard scorers.
"""

from __future__ import annotations

import json
import math
import re
import sys
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from functools import lru_cache
from pathlib import Path

from .client.base import ScoredSequence
from .errors import DataError

BLEU_SIGNATURE = "nrefs:1|case:mixed|eff:yes|tok:13a|smooth:exp|version:2.4.0"
CHRF_SIGNATURE = "nrefs:1|case:mixed|eff:yes|nc:6|nw:0|space:no|version:2.4.0"
GPR_RULE_VERSION = "wordcount-v1"

BLEU_ORDER = 4
CHRF_ORDER = 6
CHRF_BETA = 2


@dataclass
class MetricReport:
    name: str
    value: float
    signature: str
    n_items: int

    def __post_init__(self):
        if not (0.0 <= self.value <= 100.0):
            raise DataError(f"{self.name} value {self.value} outside [0, 100]")


@dataclass
class PronounJudgment:
    example_id: str
    correct: bool
    detail: dict = field(default_factory=dict)


@lru_cache(maxsize=1)
def _unicode_punct() -> str:
    return "".join(
        chr(cp) for cp in range(sys.maxunicode) if unicodedata.category(chr(cp)).startswith("P")
    )


@lru_cache(maxsize=4)
def _punct_res() -> tuple[re.Pattern, re.Pattern]:
    punct = re.escape(_unicode_punct())
    return (
        re.compile(f"([^0-9])([{punct}])"),
        re.compile(f"([{punct}])([^0-9])"),
    )


def tokenize_13a(line: str) -> list[str]:
    """Minimal WMT-compatible tokenization (13a flavor)."""
    norm = line
    norm = norm.replace("<skipped>", "")
    norm = norm.replace("-\n", "")
    norm = norm.replace("\n", " ")
    norm = norm.replace("&quot;", '"')
    norm = norm.replace("&amp;", "&")
    norm = norm.replace("&lt;", "<")
    norm = norm.replace("&gt;", ">")
    norm = f" {norm} "
    norm = re.sub(r"([\{-\~\[-\` -\&\(-\+\:-\@\/])", r" \1 ", norm)
    norm = re.sub(r"([^0-9])([\.,])", r"\1 \2 ", norm)
    norm = re.sub(r"([\.,])([^0-9])", r" \1 \2", norm)
    norm = re.sub(r"([0-9])(-)", r"\1 \2 ", norm)
    return norm.split()


def _ngram_counts(tokens: list[str], max_order: int) -> Counter:
    counts: Counter = Counter()
    for n in range(1, max_order + 1):
        for i in range(len(tokens) - n + 1):
            counts[tuple(tokens[i:i + n])] += 1
    return counts


def bleu(hypotheses: list[str], references: list[str]) -> MetricReport:
    """Corpus BLEU under the pinned signature."""
    if len(hypotheses) != len(references):
        raise DataError(
            f"hypothesis/reference count mismatch: {len(hypotheses)} vs {len(references)}"
        )
    if not hypotheses:
        raise DataError("bleu needs at least one sentence pair")
    correct = [0] * BLEU_ORDER
    total = [0] * BLEU_ORDER
    sys_len = 0
    ref_len = 0
    for hyp, ref in zip(hypotheses, references):
        hyp_tokens = tokenize_13a(hyp)
        ref_tokens = tokenize_13a(ref)
        sys_len += len(hyp_tokens)
        ref_len += len(ref_tokens)
        hyp_ngrams = _ngram_counts(hyp_tokens, BLEU_ORDER)
        ref_ngrams = _ngram_counts(ref_tokens, BLEU_ORDER)
        for ngram, count in hyp_ngrams.items():
            order = len(ngram)
            total[order - 1] += count
            if ngram in ref_ngrams:
                correct[order - 1] += min(count, ref_ngrams[ngram])

    score = _bleu_from_stats(correct, total, sys_len, ref_len)
    return MetricReport(name="bleu", value=score, signature=BLEU_SIGNATURE, n_items=len(hypotheses))


def _bleu_from_stats(correct: list[int], total: list[int], sys_len: int, ref_len: int) -> float:
    if sum(correct) == 0:
        return 0.0
    precisions = [0.0] * BLEU_ORDER
    smooth_value = 1.0
    effective_order = BLEU_ORDER
    for n in range(1, BLEU_ORDER + 1):
        if total[n - 1] == 0:
            break
        effective_order = n
        if correct[n - 1] == 0:
            smooth_value *= 2.0
            precisions[n - 1] = 100.0 / (smooth_value * total[n - 1])
        else:
            precisions[n - 1] = 100.0 * correct[n - 1] / total[n - 1]
    if sys_len < ref_len:
        brevity = math.exp(1 - ref_len / sys_len) if sys_len > 0 else 0.0
    else:
        brevity = 1.0
    log_sum = 0.0
    for p in precisions[:effective_order]:
        if p == 0.0:
            return 0.0
        log_sum += math.log(p)
    value = brevity * math.exp(log_sum / effective_order)
    return min(100.0, max(0.0, value))


def _char_ngrams(text: str, n: int) -> Counter:
    return Counter(text[i:i + n] for i in range(len(text) - n + 1))


def chrf(hypotheses: list[str], references: list[str]) -> MetricReport:
    """Corpus chrF under the pinned signature."""
    if len(hypotheses) != len(references):
        raise DataError(
            f"hypothesis/reference count mismatch: {len(hypotheses)} vs {len(references)}"
        )
    if not hypotheses:
        raise DataError("chrf needs at least one sentence pair")
    # statistics[order] = [n_hyp, n_ref, n_match], aggregated over segments
    stats = [[0, 0, 0] for _ in range(CHRF_ORDER)]
    for hyp, ref in zip(hypotheses, references):
        hyp_chars = "".join(hyp.split())
        ref_chars = "".join(ref.split())
        for order in range(1, CHRF_ORDER + 1):
            hyp_ngrams = _char_ngrams(hyp_chars, order)
            ref_ngrams = _char_ngrams(ref_chars, order)
            matches = hyp_ngrams & ref_ngrams
            stats[order - 1][0] += sum(hyp_ngrams.values())
            stats[order - 1][1] += sum(ref_ngrams.values())
            stats[order - 1][2] += sum(matches.values())
    value = _chrf_from_stats(stats)
    return MetricReport(name="chrf", value=value, signature=CHRF_SIGNATURE, n_items=len(hypotheses))


def _chrf_from_stats(stats: list[list[int]]) -> float:
    eps = 1e-16
    factor = CHRF_BETA**2
    f_sum = 0.0
    effective_order = 0
    for n_hyp, n_ref, n_match in stats:
        precision = n_match / n_hyp if n_hyp > 0 else eps
        recall = n_match / n_ref if n_ref > 0 else eps
        denom = factor * precision + recall
        f_sum += (1 + factor) * precision * recall / denom if denom > 0 else eps
        if n_hyp > 0 and n_ref > 0:
            effective_order += 1
    if effective_order == 0:
        return 0.0
    return min(100.0, max(0.0, 100.0 * f_sum / effective_order))


def _word_count(text: str, word: str) -> int:
    pattern = rf"(?<!\w){re.escape(word)}(?!\w)"
    return len(re.findall(pattern, text, flags=re.IGNORECASE | re.UNICODE))


def gpr(
    hypothesis: str,
    gold_pronoun: str,
    contrastive_pronouns: list[str],
    example_id: str = "",
) -> PronounJudgment:
    """Generative pronoun judgment: word-boundary count comparison.

    Correct iff the gold pronoun occurs at least once and strictly more often
    than every contrastive pronoun (case-insensitive). Rule id recorded so
    results stay labeled with the matching procedure.
    """
    gold_count = _word_count(hypothesis, gold_pronoun)
    counts = {gold_pronoun: gold_count}
    for p in contrastive_pronouns:
        counts[p] = _word_count(hypothesis, p)
    contrast_max = max((counts[p] for p in contrastive_pronouns), default=0)
    correct = gold_count >= 1 and gold_count > contrast_max
    return PronounJudgment(
        example_id=example_id,
        correct=correct,
        detail={"counts": counts, "rule": GPR_RULE_VERSION},
    )


def cpr(variants: list[tuple[str, ScoredSequence]], example_id: str = "") -> PronounJudgment:
    """Contrastive pronoun judgment over force-decoded variants.

    Exactly one variant is labeled "gold"; correct iff its total log-probability
    is strictly greatest (ties count as incorrect).
    """
    if len(variants) < 2:
        raise DataError("cpr needs at least two scored variants")
    gold_labels = [label for label, _ in variants if label == "gold"]
    if len(gold_labels) != 1:
        raise DataError(f"cpr needs exactly one gold variant, got {len(gold_labels)}")
    totals = {}
    for i, (label, seq) in enumerate(variants):
        key = label if label == "gold" else f"{label}#{i}"
        totals[key] = seq.total_logprob
    gold_total = totals["gold"]
    others = [v for k, v in totals.items() if k != "gold"]
    correct = all(gold_total > v for v in others)
    return PronounJudgment(example_id=example_id, correct=correct, detail={"totals": totals})


def round_half_away(value: float, ndigits: int = 1) -> float:
    quant = Decimal(10) ** -ndigits
    return float(Decimal(repr(value)).quantize(quant, rounding=ROUND_HALF_UP))


def accuracy(judgments: list[PronounJudgment]) -> float:
    """Percentage of correct judgments, one decimal, half away from zero."""
    if not judgments:
        raise DataError("accuracy needs at least one judgment")
    raw = 100.0 * sum(1 for j in judgments if j.correct) / len(judgments)
    return round_half_away(raw, 1)


def load_external_scores(path: str | Path) -> dict[str, float]:
    """Ingest externally computed segment scores (JSONL of {id, score})."""
    path = Path(path)
    scores: dict[str, float] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
                scores[str(record["id"])] = float(record["score"])
            except (ValueError, KeyError) as exc:
                raise DataError(f"{path}:{lineno}: bad external score record ({exc})") from exc
    return scores


def external_scores_report(scores: dict[str, float], name: str = "comet") -> MetricReport:
    if not scores:
        raise DataError("no external scores to aggregate")
    mean = sum(scores.values()) / len(scores)
    return MetricReport(
        name=name, value=min(100.0, max(0.0, mean)), signature="external", n_items=len(scores)
    )
