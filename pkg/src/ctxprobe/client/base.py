"""Backend abstractions: configuration, scored sequences, tokenizer protocol."""

from __future__ import annotations

import abc
import math
import os
from dataclasses import dataclass, field
from typing import Protocol, runtime_checkable

from ..errors import CapabilityError, ConfigError

# Capabilities a pipeline may require; checked at configuration time.
CAP_GENERATE = "generate"
CAP_SCORE = "score"
CAP_TOKENIZE = "tokenize"


@dataclass
class BackendConfig:
    kind: str = "http"
    base_url: str = ""
    model_id: str = ""
    api_key_env: str = "CTXPROBE_API_KEY"
    request_timeout: float = 60.0
    max_retries: int = 3
    max_parallel: int = 4
    cache_dir: str | None = None
    retry_backoff: float = 0.5
    # http flavor details
    completions_path: str = "/v1/completions"
    tokenize_path: str = "/tokenize"
    detokenize_path: str = "/detokenize"
    vocab_info_path: str = "/vocab_info"
    supports_echo_logprobs: bool = True
    supports_tokenize: bool = True
    # mock flavor details
    mock_seed: int = 0
    mock_score_mode: str = "hash"
    mock_generate_mode: str = "hash_text"

    def __post_init__(self):
        if self.max_parallel < 1:
            raise ConfigError(f"max_parallel must be >= 1, got {self.max_parallel}")
        if self.request_timeout <= 0:
            raise ConfigError(f"request_timeout must be > 0, got {self.request_timeout}")
        if self.kind not in ("http", "mock"):
            raise ConfigError(f"backend.kind must be http|mock, got {self.kind!r}")
        if self.kind == "http" and not self.base_url:
            raise ConfigError("http backend requires base_url")

    @property
    def api_key(self) -> str | None:
        return os.environ.get(self.api_key_env)


@dataclass
class DecodingParams:
    """Greedy decoding is the default for all translation runs."""

    max_tokens: int = 256
    temperature: float = 0.0
    top_p: float = 1.0
    stop: tuple[str, ...] = ("\n",)


@dataclass
class ScoredSequence:
    """Forced-decoded continuation tokens with natural-log probabilities."""

    tokens: list[str]
    token_ids: list[int]
    logprobs: list[float]
    total_logprob: float

    def __post_init__(self):
        if not (len(self.tokens) == len(self.token_ids) == len(self.logprobs)):
            raise ValueError("tokens, token_ids, and logprobs must have the same length")
        if any(lp > 1e-9 for lp in self.logprobs):
            raise ValueError("log-probabilities must be <= 0")
        if abs(self.total_logprob - math.fsum(self.logprobs)) > 1e-9:
            raise ValueError("total_logprob must equal the sum of logprobs")

    @classmethod
    def from_parts(cls, tokens, token_ids, logprobs) -> "ScoredSequence":
        logprobs = [min(0.0, lp) for lp in logprobs]
        return cls(
            tokens=list(tokens),
            token_ids=list(token_ids),
            logprobs=logprobs,
            total_logprob=math.fsum(logprobs),
        )

    @classmethod
    def empty(cls) -> "ScoredSequence":
        return cls(tokens=[], token_ids=[], logprobs=[], total_logprob=0.0)

    @property
    def probability(self) -> float:
        return math.exp(self.total_logprob)


@dataclass
class GenerationResult:
    text: str
    finish_reason: str = "stop"
    tokens_used: int = 0
    cached: bool = False


@runtime_checkable
class Tokenizer(Protocol):
    def encode(self, text: str) -> list[int]: ...

    def decode(self, ids: list[int]) -> str: ...

    def encode_with_offsets(self, text: str) -> tuple[list[int], list[tuple[int, int]]]: ...

    @property
    def vocab_size(self) -> int: ...

    @property
    def sampleable_ids(self) -> tuple[int, ...]: ...


class Backend(abc.ABC):
    """Uniform access to one model for generation and forced-decode scoring."""

    config: BackendConfig

    @property
    @abc.abstractmethod
    def capabilities(self) -> frozenset[str]: ...

    @abc.abstractmethod
    def generate(self, prompt, params: DecodingParams | None = None) -> GenerationResult: ...

    @abc.abstractmethod
    def score_continuation(self, prompt, continuation: str) -> ScoredSequence: ...

    @property
    @abc.abstractmethod
    def tokenizer(self) -> Tokenizer: ...

    def require(self, *capabilities: str) -> None:
        missing = set(capabilities) - self.capabilities
        if missing:
            raise CapabilityError(
                f"backend {self.config.model_id or self.config.kind!r} lacks "
                f"required capabilities: {', '.join(sorted(missing))}"
            )


def prompt_text(prompt) -> str:
    """Accept either a RenderedPrompt or a plain string."""
    return prompt if isinstance(prompt, str) else prompt.text


def build_backend(config: BackendConfig) -> Backend:
    from .cache import CachingBackend, ResponseCache
    from .http import CompletionsBackend
    from .mock import MockBackend

    if config.kind == "mock":
        backend: Backend = MockBackend(
            seed=config.mock_seed,
            score_mode=config.mock_score_mode,
            generate_mode=config.mock_generate_mode,
            config=config,
        )
    else:
        backend = CompletionsBackend(config)
    if config.cache_dir:
        backend = CachingBackend(backend, ResponseCache(config.cache_dir))
    return backend
