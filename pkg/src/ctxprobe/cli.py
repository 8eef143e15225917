"""Command-line entry points: prepare | translate | contrast | attribute | score.

Exit codes: 0 ok, 2 config error, 3 backend error, 4 data error.
"""

from __future__ import annotations

import sys

import click

from . import pipelines
from .config import load_config
from .errors import BackendError, CapabilityError, ConfigError, DataError

EXIT_CONFIG = 2
EXIT_BACKEND = 3
EXIT_DATA = 4


def _common_options(fn):
    fn = click.option("--config", "config_path", required=True, type=click.Path())(fn)
    fn = click.option("--seed", type=int, default=None, help="Override the run seed.")(fn)
    fn = click.option("--base-url", default=None, help="Override backend base URL.")(fn)
    fn = click.option("--model", "model_id", default=None, help="Override backend model id.")(fn)
    fn = click.option("--max-parallel", type=int, default=None)(fn)
    fn = click.option("--cache-dir", default=None)(fn)
    return fn


def _load(config_path, seed, base_url, model_id, max_parallel, cache_dir):
    return load_config(
        config_path,
        overrides={
            "seed": seed,
            "base_url": base_url,
            "model_id": model_id,
            "max_parallel": max_parallel,
            "cache_dir": cache_dir,
        },
    )


def _run(stage, *args, **kwargs):
    try:
        result = stage(*args, **kwargs)
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    except (BackendError, CapabilityError) as exc:
        click.echo(f"backend error: {exc}", err=True)
        sys.exit(EXIT_BACKEND)
    except DataError as exc:
        click.echo(f"data error: {exc}", err=True)
        sys.exit(EXIT_DATA)
    return result


@click.group()
def main():
    """Probing harness for context utilization in document-level MT."""


@main.command()
@_common_options
def prepare(config_path, seed, base_url, model_id, max_parallel, cache_dir):
    """Materialize per-example instances for all configured cells."""
    config = _run(_load, config_path, seed, base_url, model_id, max_parallel, cache_dir)
    counts = _run(pipelines.prepare, config)
    for task, count in counts.items():
        click.echo(f"{task}: {count} instances")


@main.command()
@_common_options
def translate(config_path, seed, base_url, model_id, max_parallel, cache_dir):
    """Generate translations for every prepared generation instance."""
    config = _run(_load, config_path, seed, base_url, model_id, max_parallel, cache_dir)
    stats = _run(pipelines.translate, config)
    click.echo(f"translated: {stats['done']} (resumed past {stats['skipped']})")


@main.command()
@_common_options
def contrast(config_path, seed, base_url, model_id, max_parallel, cache_dir):
    """Force-decode gold vs contrastive targets and judge each example."""
    config = _run(_load, config_path, seed, base_url, model_id, max_parallel, cache_dir)
    stats = _run(pipelines.contrast, config)
    click.echo(f"judged: {stats['done']} (resumed past {stats['skipped']})")


@main.command()
@_common_options
@click.option(
    "--import-file",
    default=None,
    type=click.Path(),
    help="Ingest externally computed ap-v1 attributions instead of running erasure.",
)
def attribute(config_path, seed, base_url, model_id, max_parallel, cache_dir, import_file):
    """Compute erasure attribution vectors (or import ap-v1 vectors)."""
    config = _run(_load, config_path, seed, base_url, model_id, max_parallel, cache_dir)
    stats = _run(pipelines.attribute, config, import_file=import_file)
    if "rejected" in stats:
        click.echo(f"imported: {stats['done']} vectors ({stats['rejected']} rejected)")
    else:
        click.echo(f"attributed: {stats['done']} (resumed past {stats['skipped']})")


@main.command()
@_common_options
def score(config_path, seed, base_url, model_id, max_parallel, cache_dir):
    """Aggregate run artifacts into tables and figure data."""
    config = _run(_load, config_path, seed, base_url, model_id, max_parallel, cache_dir)
    produced = _run(pipelines.score, config)
    for name, path in produced.items():
        click.echo(f"{name}: {path}")


if __name__ == "__main__":
    main()
