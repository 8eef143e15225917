#!/usr/bin/env python3
"""Generate a self-contained offline experiment: desk datasets plus a run config.

Usage:
    python scripts/gen_desk_data.py --out desk_run --examples 102 --seed 11
    ctxprobe prepare --config desk_run/config.json
"""

import json
from pathlib import Path

import click

from ctxprobe.corpus import save_contrastive_set, save_documents
from ctxprobe.deskdata import make_contrastive, make_documents, make_lexicon, write_lexicon_tsv

CELLS = [
    {"prompt_kind": "sentence", "condition": "none"},
    {"prompt_kind": "generic", "condition": "random"},
    {"prompt_kind": "generic", "condition": "perturbed"},
    {"prompt_kind": "generic", "condition": "gold"},
    {"prompt_kind": "explicit", "condition": "random"},
    {"prompt_kind": "explicit", "condition": "perturbed"},
    {"prompt_kind": "explicit", "condition": "gold"},
]


@click.command()
@click.option("--out", "out_dir", default="desk_run", type=click.Path())
@click.option("--seed", default=11, type=int)
@click.option("--examples", default=102, type=int, help="Contrastive example count.")
@click.option("--docs", default=3, type=int)
@click.option("--sentences-per-doc", default=8, type=int)
@click.option("--shape", default="en-de", type=click.Choice(["en-de", "en-fr"]))
@click.option("--context-size", default=5, type=int)
def main(out_dir, seed, examples, docs, sentences_per_doc, shape, context_size):
    out = Path(out_dir)
    data = out / "data"
    data.mkdir(parents=True, exist_ok=True)

    save_documents(make_documents(docs, sentences_per_doc, seed=seed), data / "documents.jsonl")
    save_contrastive_set(
        make_contrastive(examples, seed=seed, shape=shape, context_size=context_size),
        data / "contrastive.jsonl",
    )
    write_lexicon_tsv(make_lexicon(shape), data / "lexicon.tsv")

    config = {
        "run_id": "desk",
        "seed": seed,
        "language_pair": shape,
        "src_lang_name": "English",
        "tgt_lang_name": "German" if shape == "en-de" else "French",
        "output_dir": str(out / "runs"),
        "documents": str(data / "documents.jsonl"),
        "contrastive": str(data / "contrastive.jsonl"),
        "lexicon": str(data / "lexicon.tsv"),
        "context_size": context_size,
        "attribution_context_size": 2,
        "cells": CELLS,
        "backend": {
            "kind": "mock",
            "base_url": "mock://desk",
            "model_id": "mock-model",
            "max_parallel": 4,
            "cache_dir": str(out / "cache"),
        },
    }
    config_path = out / "config.json"
    config_path.write_text(json.dumps(config, indent=2), encoding="utf-8")
    click.echo(f"wrote {config_path}")
    click.echo(f"next: ctxprobe prepare --config {config_path}")


if __name__ == "__main__":
    main()
