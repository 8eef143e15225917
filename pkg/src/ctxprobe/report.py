"""Assembly of per-condition results into tables and figure data.

Column order mirrors the presentation convention: the sentence baseline
first, then the generic-prompt group (random, perturbed, gold), then the
explicit-prompt group. Missing cells render as "--". Emission is
deterministic: same inputs, byte-identical files.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .attribution import ApAggregate
from .errors import DataError
from .metrics import MetricReport, round_half_away

TABLE_LAYOUTS = {
    # (prompt_kind, context_condition) column groups, in presentation order
    "table1": (
        ("sentence", "none"),
        ("generic", "random"),
        ("generic", "perturbed"),
        ("generic", "gold"),
        ("explicit", "random"),
        ("explicit", "perturbed"),
        ("explicit", "gold"),
    ),
    "table2": (
        ("sentence", "none"),
        ("generic", "random"),
        ("generic", "perturbed"),
        ("generic", "gold"),
    ),
}

METRIC_ORDER = ("comet", "bleu", "chrf", "gpr", "cpr")


@dataclass(frozen=True)
class ConditionKey:
    model_id: str
    language_pair: str
    prompt_kind: str
    context_condition: str


@dataclass
class ResultsMatrix:
    cells: dict[ConditionKey, list[MetricReport]] = field(default_factory=dict)

    def add(self, key: ConditionKey, reports: list[MetricReport]) -> None:
        if key in self.cells:
            raise DataError(f"duplicate results cell {key}")
        self.cells[key] = list(reports)

    def metric_names(self) -> list[str]:
        present = {r.name for reports in self.cells.values() for r in reports}
        ordered = [m for m in METRIC_ORDER if m in present]
        ordered += sorted(present - set(METRIC_ORDER))
        return ordered

    def rows(self) -> list[tuple[str, str]]:
        return sorted({(k.model_id, k.language_pair) for k in self.cells})

    def lookup(self, model_id: str, language_pair: str, group: tuple[str, str], metric: str):
        key = ConditionKey(model_id, language_pair, group[0], group[1])
        for report in self.cells.get(key, []):
            if report.name == metric:
                return report
        return None


def _format_value(value: float) -> str:
    return f"{round_half_away(value, 1):.1f}"


def emit_table(
    matrix: ResultsMatrix, layout: str, fmt: str, path: str | Path
) -> Path:
    """Write the results table as CSV or markdown; returns the path."""
    if layout not in TABLE_LAYOUTS:
        raise DataError(f"unknown table layout {layout!r} (known: {', '.join(TABLE_LAYOUTS)})")
    if fmt not in ("csv", "markdown"):
        raise DataError(f"unknown table format {fmt!r}")
    if not matrix.cells:
        raise DataError("results matrix is empty")
    groups = TABLE_LAYOUTS[layout]
    metrics = matrix.metric_names()
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    columns = [(group, metric) for group in groups for metric in metrics]
    header = ["model", "language_pair"] + [
        f"{kind}_{cond}_{metric}" for (kind, cond), metric in columns
    ]

    lines: list[str] = []
    if fmt == "csv":
        raw_header = header + [
            f"{kind}_{cond}_{metric}_raw" for (kind, cond), metric in columns
        ]
        lines.append(",".join(raw_header))
        for model_id, language_pair in matrix.rows():
            values, raws = [], []
            for group, metric in columns:
                report = matrix.lookup(model_id, language_pair, group, metric)
                values.append(_format_value(report.value) if report else "--")
                raws.append(repr(report.value) if report else "--")
            lines.append(",".join([model_id, language_pair] + values + raws))
    else:
        lines.append("| " + " | ".join(header) + " |")
        lines.append("|" + "|".join(["---"] * len(header)) + "|")
        for model_id, language_pair in matrix.rows():
            values = []
            for group, metric in columns:
                report = matrix.lookup(model_id, language_pair, group, metric)
                values.append(_format_value(report.value) if report else "--")
            lines.append("| " + " | ".join([model_id, language_pair] + values) + " |")

    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def emit_figure_data(
    aggregates: list[tuple[str, str, ApAggregate]], path: str | Path
) -> Path:
    """Write long-format AP aggregates as CSV rows (model, method, span_kind,
    mean_ap, n); mean_ap keeps full precision so values round-trip exactly."""
    if not aggregates:
        raise DataError("no AP aggregates to emit")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = ["model,method,span_kind,mean_ap,n"]
    for model_id, method, agg in aggregates:
        lines.append(f"{model_id},{method},{agg.span_kind},{agg.mean_ap!r},{agg.n_examples}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def write_run_manifest(path: str | Path, config: dict, seeds: dict, cache_stats: dict,
                       rule_versions: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    manifest = {
        "config": config,
        "seeds": seeds,
        "cache": cache_stats,
        "rules": rule_versions,
    }
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True, ensure_ascii=False) + "\n",
                    encoding="utf-8")
    return path
