"""Backend clients: HTTP completions API, offline mocks, caching, retries."""

from .base import Backend, BackendConfig, DecodingParams, GenerationResult, ScoredSequence, Tokenizer
from .cache import CachingBackend, ResponseCache
from .http import CompletionsBackend
from .mock import ByteTokenizer, MockBackend, SingleDependenceBackend, WordTokenizer
from .pool import run_parallel

__all__ = [
    "Backend",
    "BackendConfig",
    "ByteTokenizer",
    "CachingBackend",
    "CompletionsBackend",
    "DecodingParams",
    "GenerationResult",
    "MockBackend",
    "ResponseCache",
    "ScoredSequence",
    "SingleDependenceBackend",
    "Tokenizer",
    "WordTokenizer",
    "run_parallel",
    "make_backend",
]


def make_backend(config: BackendConfig) -> Backend:
    """Build the configured backend, wrapped with a response cache if set."""
    from .base import build_backend

    return build_backend(config)
