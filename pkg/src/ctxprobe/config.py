"""Declarative run configuration: one JSON (or TOML on 3.11+) file per run.

CLI flags override individual fields. Validation errors name the offending
field.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .client.base import BackendConfig
from .errors import ConfigError
from .perturb import CONDITIONS
from .prompt import PROMPT_KINDS


@dataclass
class Cell:
    prompt_kind: str
    condition: str

    def __post_init__(self):
        if self.prompt_kind not in PROMPT_KINDS:
            raise ConfigError(f"cells[].prompt_kind: unknown kind {self.prompt_kind!r}")
        if self.condition not in CONDITIONS:
            raise ConfigError(f"cells[].condition: unknown condition {self.condition!r}")
        if self.prompt_kind == "sentence" and self.condition != "none":
            raise ConfigError("cells[]: sentence prompts take condition 'none'")
        if self.prompt_kind != "sentence" and self.condition == "none":
            raise ConfigError("cells[]: context prompts need a non-'none' condition")

    @property
    def label(self) -> str:
        return f"{self.prompt_kind}-{self.condition}"


@dataclass
class RunConfig:
    run_id: str
    seed: int
    language_pair: str
    src_lang_name: str
    tgt_lang_name: str
    output_dir: str
    cells: list[Cell]
    documents: str | None = None
    contrastive: str | None = None
    lexicon: str | None = None
    context_size: int = 5
    attribution_context_size: int = 2
    attribution_sweep: str = "full_input"
    attribution_granularity: str = "token"
    ap_aggregation: str = "mean_of_aps"
    subset_n: int | None = None
    chat_wrap: bool = False
    include_source_side_swaps: bool = False
    templates_path: str | None = None
    external_scores: str | None = None
    backend: BackendConfig = field(default_factory=lambda: BackendConfig(kind="mock"))

    def __post_init__(self):
        if self.context_size < 0:
            raise ConfigError(f"context_size: must be >= 0, got {self.context_size}")
        if self.attribution_context_size < 0:
            raise ConfigError("attribution_context_size: must be >= 0")
        if not self.cells:
            raise ConfigError("cells: at least one (prompt_kind, condition) cell required")
        if self.attribution_sweep not in ("full_input", "context_only"):
            raise ConfigError(f"attribution_sweep: unknown scope {self.attribution_sweep!r}")
        if self.attribution_granularity not in ("token", "span"):
            raise ConfigError(
                f"attribution_granularity: unknown granularity {self.attribution_granularity!r}"
            )
        if any(c.condition == "antecedent_swapped" for c in self.cells) and not self.lexicon:
            raise ConfigError("lexicon: required when an antecedent_swapped cell is requested")

    @property
    def out(self) -> Path:
        return Path(self.output_dir) / self.run_id

    def as_dict(self) -> dict:
        from dataclasses import asdict

        data = asdict(self)
        data["backend"].pop("mock_seed", None)
        return data


def _load_raw(path: Path) -> dict:
    if path.suffix == ".toml":
        try:
            import tomllib
        except ImportError as exc:
            raise ConfigError("TOML configs need Python 3.11+; use JSON") from exc
        return tomllib.loads(path.read_text(encoding="utf-8"))
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc.msg} at line {exc.lineno})") from exc


def load_config(path: str | Path, overrides: dict | None = None) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    raw = _load_raw(path)
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}

    backend_raw = dict(raw.pop("backend", {}))
    for key in ("base_url", "model_id", "max_parallel", "cache_dir"):
        if key in overrides:
            backend_raw[key] = overrides.pop(key)
    raw.update(overrides)

    cells_raw = raw.pop("cells", [])
    try:
        cells = [Cell(**c) for c in cells_raw]
    except TypeError as exc:
        raise ConfigError(f"cells: malformed cell record ({exc})") from exc

    try:
        backend = BackendConfig(**backend_raw)
    except TypeError as exc:
        raise ConfigError(f"backend: {exc}") from exc

    known = set(RunConfig.__dataclass_fields__) - {"cells", "backend"}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown config fields: {', '.join(sorted(unknown))}")
    missing = {"run_id", "seed", "language_pair", "src_lang_name", "tgt_lang_name", "output_dir"} - set(raw)
    if missing:
        raise ConfigError(f"missing config fields: {', '.join(sorted(missing))}")
    try:
        return RunConfig(cells=cells, backend=backend, **raw)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
