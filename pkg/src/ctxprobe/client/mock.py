"""Deterministic offline backends for tests and mock end-to-end runs."""

from __future__ import annotations

import hashlib
import math
import threading
import time

from ..errors import DataError
from .base import Backend, BackendConfig, DecodingParams, GenerationResult, ScoredSequence, Tokenizer


class ByteTokenizer:
    """UTF-8 byte-level tokenizer; ids are byte values.

    Sampleable ids are the printable ASCII range, so random windows decode to
    text that re-encodes to exactly the sampled ids. Offsets are character
    offsets; every byte of a multi-byte character shares its span.
    """

    @property
    def vocab_size(self) -> int:
        return 256

    @property
    def sampleable_ids(self) -> tuple[int, ...]:
        return tuple(range(32, 127))

    def encode(self, text: str) -> list[int]:
        return list(text.encode("utf-8"))

    def decode(self, ids: list[int]) -> str:
        return bytes(ids).decode("utf-8", errors="replace")

    def encode_with_offsets(self, text: str) -> tuple[list[int], list[tuple[int, int]]]:
        ids: list[int] = []
        offsets: list[tuple[int, int]] = []
        for i, ch in enumerate(text):
            for b in ch.encode("utf-8"):
                ids.append(b)
                offsets.append((i, i + 1))
        return ids, offsets


class WordTokenizer:
    """Closed-vocabulary whitespace tokenizer.

    decode joins with single spaces, so round-trips hold for single-spaced
    text; unknown words are an error (callers control the vocabulary).
    """

    def __init__(self, words: list[str]):
        if len(set(words)) != len(words):
            raise DataError("word tokenizer vocabulary has duplicates")
        self.words = list(words)
        self._ids = {w: i for i, w in enumerate(self.words)}

    @property
    def vocab_size(self) -> int:
        return len(self.words)

    @property
    def sampleable_ids(self) -> tuple[int, ...]:
        return tuple(range(len(self.words)))

    def encode(self, text: str) -> list[int]:
        ids = []
        for word in text.split():
            if word not in self._ids:
                raise DataError(f"word {word!r} not in tokenizer vocabulary")
            ids.append(self._ids[word])
        return ids

    def decode(self, ids: list[int]) -> str:
        return " ".join(self.words[i] for i in ids)

    def encode_with_offsets(self, text: str) -> tuple[list[int], list[tuple[int, int]]]:
        ids: list[int] = []
        offsets: list[tuple[int, int]] = []
        pos = 0
        for word in text.split():
            start = text.index(word, pos)
            end = start + len(word)
            if word not in self._ids:
                raise DataError(f"word {word!r} not in tokenizer vocabulary")
            ids.append(self._ids[word])
            offsets.append((start, end))
            pos = end
        return ids, offsets


def _unit_from_hash(*parts) -> float:
    """Deterministic uniform in (0, 1) from the given parts."""
    digest = hashlib.sha256("|".join(str(p) for p in parts).encode("utf-8")).digest()
    value = int.from_bytes(digest[:8], "big")
    return (value + 1) / (2**64 + 2)


class MockBackend(Backend):
    """In-process deterministic model.

    score_mode:
      * "hash": i.i.d. pseudo-random per-token log-probabilities derived from
        (seed, prompt, continuation) — unbiased across continuations.
      * "uniform": every token scored -ln(vocab_size) (context-independent).
    generate_mode: "echo" returns the prompt; "hash_text" emits deterministic
    pseudo-words.

    Instrumented with call counters and a concurrency high-water mark so
    tests can observe the cache and parallelism contracts.
    """

    def __init__(
        self,
        seed: int = 0,
        score_mode: str = "hash",
        generate_mode: str = "hash_text",
        tokenizer: Tokenizer | None = None,
        score_fn=None,
        latency: float = 0.0,
        config: BackendConfig | None = None,
    ):
        if score_mode not in ("hash", "uniform"):
            raise DataError(f"unknown mock score mode {score_mode!r}")
        if generate_mode not in ("echo", "hash_text"):
            raise DataError(f"unknown mock generate mode {generate_mode!r}")
        self.seed = seed
        self.score_mode = score_mode
        self.generate_mode = generate_mode
        self._tokenizer = tokenizer or ByteTokenizer()
        self.score_fn = score_fn
        self.latency = latency
        self.config = config or BackendConfig(kind="mock", base_url="mock://", model_id="mock")
        self.calls = 0
        self._lock = threading.Lock()
        self._in_flight = 0
        self.max_in_flight = 0

    @property
    def capabilities(self) -> frozenset[str]:
        return frozenset({"generate", "score", "tokenize"})

    @property
    def tokenizer(self) -> Tokenizer:
        return self._tokenizer

    def _enter(self):
        with self._lock:
            self.calls += 1
            self._in_flight += 1
            self.max_in_flight = max(self.max_in_flight, self._in_flight)
        if self.latency:
            time.sleep(self.latency)

    def _exit(self):
        with self._lock:
            self._in_flight -= 1

    def generate(self, prompt, params: DecodingParams | None = None) -> GenerationResult:
        from .base import prompt_text

        text = prompt_text(prompt)
        self._enter()
        try:
            if self.generate_mode == "echo":
                out = text
            else:
                rng_words = []
                for i in range(8):
                    u = _unit_from_hash(self.seed, "gen", text, i)
                    rng_words.append(f"w{int(u * 1e6):06d}")
                out = " ".join(rng_words)
            return GenerationResult(text=out, finish_reason="stop", tokens_used=len(out.split()))
        finally:
            self._exit()

    def score_continuation(self, prompt, continuation: str) -> ScoredSequence:
        from .base import prompt_text

        text = prompt_text(prompt)
        self._enter()
        try:
            if continuation == "":
                return ScoredSequence.empty()
            if self.score_fn is not None:
                return self._from_score_fn(text, continuation)
            ids = self._tokenizer.encode(continuation)
            tokens = [self._tokenizer.decode([i]) for i in ids]
            if self.score_mode == "uniform":
                logprobs = [-math.log(self._tokenizer.vocab_size)] * len(ids)
            else:
                logprobs = [
                    math.log(_unit_from_hash(self.seed, "score", text, continuation, i))
                    for i in range(len(ids))
                ]
            return ScoredSequence.from_parts(tokens, ids, logprobs)
        finally:
            self._exit()

    def _from_score_fn(self, text: str, continuation: str) -> ScoredSequence:
        result = self.score_fn(text, continuation)
        if isinstance(result, (int, float)):
            return ScoredSequence.from_parts([continuation], [0], [float(result)])
        return ScoredSequence.from_parts([continuation] * len(result), list(range(len(result))), result)


class SingleDependenceBackend(MockBackend):
    """Mock whose target-continuation probability depends on one trigger word.

    P(target | input) = p_present when the trigger occurs in the input, else
    p_absent; every other continuation gets a flat low score. Used to give
    erasure attribution a known ground truth.
    """

    def __init__(
        self,
        trigger: str,
        target: str,
        p_present: float = 0.9,
        p_absent: float = 0.1,
        tokenizer: Tokenizer | None = None,
    ):
        super().__init__(seed=0, tokenizer=tokenizer)
        self.trigger = trigger
        self.target = target
        self.p_present = p_present
        self.p_absent = p_absent

    def score_continuation(self, prompt, continuation: str) -> ScoredSequence:
        from .base import prompt_text

        text = prompt_text(prompt)
        self._enter()
        try:
            if continuation == "":
                return ScoredSequence.empty()
            if continuation.strip() == self.target:
                present = self.trigger in text.split()
                p = self.p_present if present else self.p_absent
            else:
                p = 0.01
            return ScoredSequence.from_parts([continuation], [0], [math.log(p)])
        finally:
            self._exit()
