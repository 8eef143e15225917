"""End-to-end pipeline stages behind the CLI subcommands.

prepare materializes per-example instances for every requested cell;
translate/contrast/attribute drive the backend with incremental, resumable
outputs; score assembles tables and figure data. Every stage is a pure
function of (config, seed, cache contents).
"""

from __future__ import annotations

import json
from pathlib import Path

from . import attribution as attr
from .client import make_backend
from .client.base import Backend, DecodingParams
from .client.pool import run_parallel
from .config import Cell, RunConfig
from .corpus import (
    ContrastiveExample,
    DocumentCorpus,
    load_contrastive_set,
    load_documents,
    load_lexicon,
    sample_balanced_subset,
)
from .errors import BackendError, DataError
from .instances import PreparedInstance, derive_seed, read_instances, split_at_pronoun, write_instances
from .metrics import (
    GPR_RULE_VERSION,
    MetricReport,
    accuracy,
    bleu,
    chrf,
    cpr,
    external_scores_report,
    gpr,
    load_external_scores,
    round_half_away,
)
from .perturb import ContextWindow, gold_context, no_context, perturbed_context, random_context, swap_antecedents
from .prompt import DEFAULT_TEMPLATES, PromptSpec, RenderedPrompt, Templates, load_templates, render
from .report import ConditionKey, ResultsMatrix, emit_figure_data, emit_table, write_run_manifest

GENERATE_FILE = "instances/generate.jsonl"
CONTRAST_FILE = "instances/contrast.jsonl"
ATTRIBUTE_FILE = "instances/attribute.jsonl"
TRANSLATIONS_FILE = "outputs/translations.jsonl"
CPR_FILE = "judgments/cpr.jsonl"
GPR_FILE = "judgments/gpr.jsonl"
VECTORS_FILE = "attributions/vectors.jsonl"
SWAP_LOG_FILE = "instances/swaps.jsonl"


def _prompt_spec(config: RunConfig, kind: str) -> PromptSpec:
    return PromptSpec(
        kind=kind,
        src_lang_name=config.src_lang_name,
        tgt_lang_name=config.tgt_lang_name,
        chat_wrap=config.chat_wrap,
    )


def _templates(config: RunConfig) -> Templates:
    if config.templates_path:
        return load_templates(config.templates_path)
    return DEFAULT_TEMPLATES


def _char_spans(rendered: RenderedPrompt, antecedent_abs: list[tuple[int, int]]) -> dict:
    spans: dict[str, list[tuple[int, int]]] = {"context": [], "antecedent": antecedent_abs}
    for pair_span in rendered.pair_spans:
        spans["context"].append(pair_span.src)
        if pair_span.tgt is not None:
            spans["context"].append(pair_span.tgt)
    if rendered.src_sentence_span:
        spans["source_sentence"] = [rendered.src_sentence_span]
    return spans


def _context_for_example(
    example: ContrastiveExample,
    cell: Cell,
    k: int,
    seed: int,
    pool: list[ContrastiveExample],
    lexicon,
    backend: Backend | None,
    include_source_side: bool,
) -> tuple[ContextWindow, list[tuple[int, int]], list]:
    """Build the context window for one cell; returns (window,
    antecedent spans relative to the truncated window, swap records)."""
    gold_pairs = example.context[-k:] if k > 0 else []
    offset = len(example.context) - len(gold_pairs)
    window = ContextWindow(condition="gold", pairs=list(gold_pairs))
    # Antecedent spans surviving the truncation, re-indexed to the window.
    ante = [
        (s.index - offset, s.start, s.end)
        for s in example.antecedent_spans
        if s.side == "target" and s.index >= offset
    ]
    swaps: list = []
    if cell.condition == "none":
        return no_context(), [], swaps
    if cell.condition == "gold":
        return window, ante, swaps
    if cell.condition == "perturbed":
        donors = [ex for ex in pool if ex.example_id != example.example_id and len(ex.context) >= len(gold_pairs)]
        if not donors:
            raise DataError(f"{example.example_id}: no donor example with enough context")
        import random as _random

        rng = _random.Random(seed)
        donor = donors[rng.randrange(len(donors))]
        pairs = donor.context[-len(gold_pairs):] if gold_pairs else []
        return (
            ContextWindow(
                condition="perturbed",
                pairs=list(pairs),
                provenance={"donor_example_id": donor.example_id, "seed": seed},
            ),
            [],
            swaps,
        )
    if cell.condition == "random":
        if backend is None:
            raise DataError("random condition requires a backend tokenizer")
        backend.require("tokenize")
        tok = backend.tokenizer
        return random_context(window, tok.sampleable_ids, tok, seed), [], swaps
    if cell.condition == "antecedent_swapped":
        truncated = ContrastiveExample(
            example_id=example.example_id,
            src=example.src,
            gold_target=example.gold_target,
            contrastive_targets=example.contrastive_targets,
            contrastive_pronouns=example.contrastive_pronouns,
            gold_pronoun=example.gold_pronoun,
            context=list(gold_pairs),
            antecedent_spans=[
                type(s)(side=s.side, index=s.index - offset, start=s.start, end=s.end)
                for s in example.antecedent_spans
                if s.index >= offset
            ],
            antecedent_pos=example.antecedent_pos,
            antecedent_gender=example.antecedent_gender,
        )
        swapped, records = swap_antecedents(
            truncated, lexicon, seed, include_source_side=include_source_side
        )
        ante_swapped = [
            (r.span.index, r.swapped_range[0], r.swapped_range[1])
            for r in records
            if r.span.side == "target"
        ]
        return swapped, ante_swapped, records
    raise DataError(f"unsupported condition {cell.condition!r}")


def _abs_antecedent_spans(rendered: RenderedPrompt, ante) -> list[tuple[int, int]]:
    out = []
    for index, start, end in ante:
        if 0 <= index < len(rendered.pair_spans):
            tgt_span = rendered.pair_spans[index].tgt
            if tgt_span is not None:
                out.append((tgt_span[0] + start, tgt_span[0] + end))
    return out


def prepare(config: RunConfig) -> dict[str, int]:
    """Materialize instances for all requested cells; returns per-task counts."""
    out = config.out
    templates = _templates(config)
    needs_tokenizer = any(c.condition == "random" for c in config.cells)
    backend = make_backend(config.backend) if needs_tokenizer else None
    lexicon = load_lexicon(config.lexicon) if config.lexicon else None

    generate: list[PreparedInstance] = []
    contrast: list[PreparedInstance] = []
    attribute: list[PreparedInstance] = []
    swap_rows: list[dict] = []
    skipped_swaps: list[str] = []

    if config.documents:
        corpus = load_documents(config.documents)
        for doc in corpus:
            for index in range(len(doc.sentences)):
                pair = doc.sentences[index]
                for cell in config.cells:
                    seed = derive_seed(config.seed, doc.doc_id, index, cell.label)
                    window = _doc_window(config, corpus, doc.doc_id, index, cell, seed, backend)
                    spec = _prompt_spec(config, cell.prompt_kind)
                    rendered = render(spec, window, pair.src, templates)
                    generate.append(
                        PreparedInstance(
                            instance_id=f"{doc.doc_id}:{index}:{cell.label}",
                            example_id=f"{doc.doc_id}:{index}",
                            task="translate",
                            language_pair=config.language_pair,
                            prompt_kind=cell.prompt_kind,
                            context_condition=cell.condition,
                            prompt_text=rendered.text,
                            anchor=rendered.anchor,
                            src_sentence=pair.src,
                            seed=seed,
                            reference=pair.tgt,
                            meta={"provenance": window.provenance},
                        )
                    )

    if config.contrastive:
        loaded = load_contrastive_set(config.contrastive)
        examples = loaded.examples
        if config.subset_n:
            examples = sample_balanced_subset(
                examples, config.subset_n, derive_seed(config.seed, "subset")
            )
        for example in examples:
            for cell in config.cells:
                seed = derive_seed(config.seed, example.example_id, cell.label)
                try:
                    window, ante, records = _context_for_example(
                        example,
                        cell,
                        config.context_size,
                        seed,
                        examples,
                        lexicon,
                        backend,
                        config.include_source_side_swaps,
                    )
                except DataError:
                    if cell.condition == "antecedent_swapped":
                        # e.g. the antecedent fell outside the truncated window
                        skipped_swaps.append(example.example_id)
                        continue
                    raise
                for rec in records:
                    swap_rows.append(_swap_row(example.example_id, cell, rec))
                spec = _prompt_spec(config, cell.prompt_kind)
                rendered = render(spec, window, example.src, templates)
                base = dict(
                    example_id=example.example_id,
                    language_pair=config.language_pair,
                    prompt_kind=cell.prompt_kind,
                    context_condition=cell.condition,
                    prompt_text=rendered.text,
                    anchor=rendered.anchor,
                    src_sentence=example.src,
                    seed=seed,
                    gold_target=example.gold_target,
                    contrastive_targets=list(example.contrastive_targets),
                    gold_pronoun=example.gold_pronoun,
                    contrastive_pronouns=list(example.contrastive_pronouns),
                )
                generate.append(
                    PreparedInstance(
                        instance_id=f"{example.example_id}:{cell.label}:gpr",
                        task="gpr",
                        char_spans=_char_spans(rendered, _abs_antecedent_spans(rendered, ante)),
                        **base,
                    )
                )
                contrast.append(
                    PreparedInstance(
                        instance_id=f"{example.example_id}:{cell.label}:contrast",
                        task="contrast",
                        char_spans=_char_spans(rendered, _abs_antecedent_spans(rendered, ante)),
                        **base,
                    )
                )
            # Attribution instances: gold condition at the attribution context size.
            for cell in config.cells:
                if cell.condition != "gold":
                    continue
                seed = derive_seed(config.seed, example.example_id, cell.label, "attr")
                window, ante, _ = _context_for_example(
                    example,
                    cell,
                    config.attribution_context_size,
                    seed,
                    examples,
                    lexicon,
                    backend,
                    config.include_source_side_swaps,
                )
                spec = _prompt_spec(config, cell.prompt_kind)
                rendered = render(spec, window, example.src, templates)
                try:
                    prefix, surface = split_at_pronoun(example.gold_target, example.gold_pronoun)
                except DataError:
                    continue
                attribute.append(
                    PreparedInstance(
                        instance_id=f"{example.example_id}:{cell.label}:attr",
                        example_id=example.example_id,
                        task="attribute",
                        language_pair=config.language_pair,
                        prompt_kind=cell.prompt_kind,
                        context_condition=cell.condition,
                        prompt_text=rendered.text,
                        anchor=rendered.anchor,
                        src_sentence=example.src,
                        seed=seed,
                        gold_target=example.gold_target,
                        contrastive_targets=list(example.contrastive_targets),
                        gold_pronoun=example.gold_pronoun,
                        contrastive_pronouns=list(example.contrastive_pronouns),
                        char_spans=_char_spans(rendered, _abs_antecedent_spans(rendered, ante)),
                        forced_prefix=prefix,
                        pronoun_text=surface,
                    )
                )

    write_instances(generate, out / GENERATE_FILE)
    write_instances(contrast, out / CONTRAST_FILE)
    write_instances(attribute, out / ATTRIBUTE_FILE)
    if swap_rows:
        path = out / SWAP_LOG_FILE
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as fh:
            for row in swap_rows:
                fh.write(json.dumps(row, ensure_ascii=False, sort_keys=True) + "\n")
    counts = {"generate": len(generate), "contrast": len(contrast), "attribute": len(attribute)}
    if skipped_swaps:
        counts["skipped_swaps"] = len(skipped_swaps)
    return counts


def _doc_window(config, corpus: DocumentCorpus, doc_id: str, index: int, cell: Cell, seed: int,
                backend: Backend | None) -> ContextWindow:
    k = config.context_size
    if cell.condition == "none":
        return no_context()
    doc = corpus[doc_id]
    if cell.condition == "gold":
        return gold_context(doc, index, k)
    if cell.condition == "perturbed":
        return perturbed_context(corpus, doc_id, index, k, seed)
    if cell.condition == "random":
        if backend is None:
            raise DataError("random condition requires a backend tokenizer")
        backend.require("tokenize")
        tok = backend.tokenizer
        return random_context(gold_context(doc, index, k), tok.sampleable_ids, tok, seed)
    raise DataError(f"condition {cell.condition!r} not applicable to plain documents")


def _swap_row(example_id: str, cell: Cell, rec) -> dict:
    return {
        "example_id": example_id,
        "cell": cell.label,
        "side": rec.span.side,
        "context_index": rec.span.index,
        "start": rec.span.start,
        "end": rec.span.end,
        "original_word": rec.original_word,
        "replacement_word": rec.replacement_word,
        "original_gender": rec.original_gender,
        "replacement_gender": rec.replacement_gender,
        "pos_matched": rec.pos_matched,
    }


def _existing_ids(path: Path, key: str = "instance_id") -> set[str]:
    if not path.exists():
        return set()
    ids = set()
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                ids.add(json.loads(line)[key])
    return ids


def _append_rows(path: Path, rows: list[dict]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "a", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False, sort_keys=True) + "\n")
        fh.flush()


def _run_incremental(instances, out_path: Path, worker, max_parallel: int, chunk: int = 64):
    """Process instances not yet in out_path, appending rows chunk by chunk.

    A backend failure mid-run flushes completed chunks and halts; rerunning
    resumes from the output file without duplicate requests.
    """
    done = _existing_ids(out_path)
    todo = [inst for inst in instances if inst.instance_id not in done]
    processed = 0
    try:
        for start in range(0, len(todo), chunk):
            batch = todo[start:start + chunk]
            rows = run_parallel(worker, batch, max_parallel)
            _append_rows(out_path, rows)
            processed += len(batch)
    except BackendError as exc:
        raise BackendError(
            f"halted after {len(done) + processed} of {len(done) + len(todo)} instances "
            f"({exc}); rerun the same command to resume",
            attempts=exc.attempts,
            status=exc.status,
        ) from exc
    return {"done": len(done) + processed, "skipped": len(done)}


def translate(config: RunConfig) -> dict:
    """Free generation for every generate instance (documents and GPR)."""
    backend = make_backend(config.backend)
    backend.require("generate")
    instances = read_instances(config.out / GENERATE_FILE)
    params = DecodingParams()

    def worker(inst: PreparedInstance) -> dict:
        result = backend.generate(inst.prompt_text, params)
        return {
            "instance_id": inst.instance_id,
            "example_id": inst.example_id,
            "task": inst.task,
            "prompt_kind": inst.prompt_kind,
            "context_condition": inst.context_condition,
            "text": result.text,
            "finish_reason": result.finish_reason,
        }

    return _run_incremental(
        instances, config.out / TRANSLATIONS_FILE, worker, config.backend.max_parallel
    )


def contrast(config: RunConfig) -> dict:
    """Forced-decode scoring of gold vs contrastive targets; CPR judgments."""
    backend = make_backend(config.backend)
    backend.require("score")
    instances = read_instances(config.out / CONTRAST_FILE)

    def worker(inst: PreparedInstance) -> dict:
        variants = [("gold", backend.score_continuation(inst.prompt_text, inst.gold_target))]
        for target in inst.contrastive_targets:
            variants.append(("contrastive", backend.score_continuation(inst.prompt_text, target)))
        judgment = cpr(variants, example_id=inst.example_id)
        return {
            "instance_id": inst.instance_id,
            "example_id": inst.example_id,
            "task": inst.task,
            "prompt_kind": inst.prompt_kind,
            "context_condition": inst.context_condition,
            "correct": judgment.correct,
            "detail": judgment.detail,
            "n_variants": len(variants),
        }

    return _run_incremental(
        instances, config.out / CPR_FILE, worker, config.backend.max_parallel
    )


def attribute(config: RunConfig, import_file: str | None = None) -> dict:
    """Erasure attribution over prepared instances, or ap-v1 ingestion."""
    out_path = config.out / VECTORS_FILE
    if import_file:
        result = attr.import_attributions(import_file)
        out_path.parent.mkdir(parents=True, exist_ok=True)
        attr.export_attributions(result.vectors, out_path)
        return {"done": len(result.vectors), "rejected": len(result.rejected)}

    backend = make_backend(config.backend)
    backend.require("score", "tokenize")
    instances = read_instances(config.out / ATTRIBUTE_FILE)
    done = _existing_ids(out_path, key="example_id")
    todo = [inst for inst in instances if inst.instance_id not in done]
    processed = 0
    try:
        for inst in todo:
            ai = attr.AttributionInstance(
                example_id=inst.instance_id,
                prompt_text=inst.prompt_text,
                forced_prefix=inst.forced_prefix or "",
                pronoun_text=inst.pronoun_text or "",
                char_spans=inst.char_spans,
            )
            vec = attr.erasure_attribution(
                ai,
                backend,
                sweep=config.attribution_sweep,
                granularity=config.attribution_granularity,
                max_parallel=config.backend.max_parallel,
            )
            row = {
                "schema": attr.SCHEMA_VERSION,
                "example_id": vec.example_id,
                "tokens": vec.input_tokens,
                "scores": vec.scores,
                "spans": {k: sorted(v) for k, v in sorted(vec.spans.items())},
                "method": vec.method,
                "meta": vec.meta,
            }
            _append_rows(out_path, [row])
            processed += 1
    except BackendError as exc:
        raise BackendError(
            f"halted after {len(done) + processed} of {len(done) + len(todo)} vectors "
            f"({exc}); rerun the same command to resume"
        ) from exc
    return {"done": len(done) + processed, "skipped": len(done)}


def _read_rows(path: Path) -> list[dict]:
    if not path.exists():
        return []
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                rows.append(json.loads(line))
    return rows


def score(config: RunConfig) -> dict:
    """Aggregate run artifacts into tables, figure data, and the manifest."""
    out = config.out
    model_id = config.backend.model_id or config.backend.kind
    translations = _read_rows(out / TRANSLATIONS_FILE)
    cpr_rows = _read_rows(out / CPR_FILE)
    vectors_path = out / VECTORS_FILE
    if not translations and not cpr_rows and not vectors_path.exists():
        raise DataError(f"run directory {out} has no artifacts to score")

    generate_instances = {
        i.instance_id: i for i in read_instances(out / GENERATE_FILE)
    } if (out / GENERATE_FILE).exists() else {}

    external = (
        load_external_scores(config.external_scores) if config.external_scores else None
    )

    table1 = ResultsMatrix()
    table2 = ResultsMatrix()
    gpr_rows: list[dict] = []
    by_cell_translate: dict[tuple[str, str], list[tuple[str, str, str]]] = {}
    by_cell_gpr: dict[tuple[str, str], list] = {}
    for row in translations:
        inst = generate_instances.get(row["instance_id"])
        if inst is None:
            continue
        cell = (row["prompt_kind"], row["context_condition"])
        if row["task"] == "translate" and inst.reference is not None:
            by_cell_translate.setdefault(cell, []).append(
                (row["instance_id"], row["text"], inst.reference)
            )
        elif row["task"] == "gpr":
            judgment = gpr(
                row["text"], inst.gold_pronoun, inst.contrastive_pronouns, example_id=inst.example_id
            )
            by_cell_gpr.setdefault(cell, []).append(judgment)
            gpr_rows.append(
                {
                    "instance_id": row["instance_id"],
                    "example_id": inst.example_id,
                    "prompt_kind": cell[0],
                    "context_condition": cell[1],
                    "correct": judgment.correct,
                    "detail": judgment.detail,
                }
            )

    for cell, rows in sorted(by_cell_translate.items()):
        hyps = [h for _, h, _ in rows]
        refs = [r for _, _, r in rows]
        reports = [bleu(hyps, refs), chrf(hyps, refs)]
        if external:
            ids = {instance_id for instance_id, _, _ in rows}
            cell_scores = {k: v for k, v in external.items() if k in ids}
            if cell_scores:
                reports.insert(0, external_scores_report(cell_scores))
        table1.add(ConditionKey(model_id, config.language_pair, cell[0], cell[1]), reports)

    by_cell_cpr: dict[tuple[str, str], list[bool]] = {}
    for row in cpr_rows:
        cell = (row["prompt_kind"], row["context_condition"])
        by_cell_cpr.setdefault(cell, []).append(row["correct"])

    pronoun_cells = sorted(set(by_cell_gpr) | set(by_cell_cpr))
    for cell in pronoun_cells:
        reports = []
        if cell in by_cell_gpr:
            judgments = by_cell_gpr[cell]
            reports.append(
                MetricReport(
                    name="gpr",
                    value=accuracy(judgments),
                    signature=f"rule:{GPR_RULE_VERSION}",
                    n_items=len(judgments),
                )
            )
        if cell in by_cell_cpr:
            flags = by_cell_cpr[cell]
            value = 100.0 * sum(flags) / len(flags)
            reports.append(
                MetricReport(
                    name="cpr",
                    value=round_half_away(value, 1),
                    signature="forced-decode:total-logprob",
                    n_items=len(flags),
                )
            )
        table2.add(ConditionKey(model_id, config.language_pair, cell[0], cell[1]), reports)

    produced = {}
    if table1.cells:
        produced["table1_csv"] = str(emit_table(table1, "table1", "csv", out / "tables/table1.csv"))
        produced["table1_md"] = str(emit_table(table1, "table1", "markdown", out / "tables/table1.md"))
    if table2.cells:
        produced["table2_csv"] = str(emit_table(table2, "table2", "csv", out / "tables/table2.csv"))
        produced["table2_md"] = str(emit_table(table2, "table2", "markdown", out / "tables/table2.md"))
    if gpr_rows:
        gpr_path = out / GPR_FILE
        gpr_path.parent.mkdir(parents=True, exist_ok=True)
        with open(gpr_path, "w", encoding="utf-8") as fh:
            for row in gpr_rows:
                fh.write(json.dumps(row, ensure_ascii=False, sort_keys=True) + "\n")
        produced["gpr"] = str(gpr_path)

    if vectors_path.exists():
        imported = attr.import_attributions(vectors_path)
        aggregates = []
        methods = sorted({v.method for v in imported.vectors})
        for method in methods:
            subset = [v for v in imported.vectors if v.method == method]
            for span_kind in (attr.SPAN_CONTEXT, attr.SPAN_ANTECEDENT):
                try:
                    agg = attr.aggregate_ap(subset, span_kind, mode=config.ap_aggregation)
                except DataError:
                    continue
                aggregates.append((model_id, method, agg))
        if aggregates:
            produced["figure"] = str(
                emit_figure_data(aggregates, out / "figures/attribution.csv")
            )

    cache_stats = {}
    if config.backend.cache_dir:
        manifest_path = Path(config.backend.cache_dir) / "manifest.jsonl"
        if manifest_path.exists():
            cache_stats["entries"] = sum(1 for _ in open(manifest_path, encoding="utf-8"))
    write_run_manifest(
        out / "run.json",
        config=config.as_dict(),
        seeds={"master": config.seed},
        cache_stats=cache_stats,
        rule_versions={"gpr": GPR_RULE_VERSION, "ap_aggregation": config.ap_aggregation},
    )
    produced["run_manifest"] = str(out / "run.json")
    return produced
