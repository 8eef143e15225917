"""Byte-exact response cache keyed by request hash.

Layout: ``cache_dir/<sha256[:2]>/<sha256>.json`` plus an append-only
``manifest.jsonl``. Writes are atomic (write-temp-then-rename); hits never
consult the network.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
from dataclasses import asdict
from pathlib import Path

from .base import Backend, DecodingParams, GenerationResult, ScoredSequence, prompt_text


def request_key(base_url: str, model_id: str, body: dict) -> str:
    payload = json.dumps(
        {"base_url": base_url, "model": model_id, "body": body},
        sort_keys=True,
        ensure_ascii=False,
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


class ResponseCache:
    def __init__(self, cache_dir: str | Path):
        self.root = Path(cache_dir)
        self.root.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    def _path(self, key: str) -> Path:
        return self.root / key[:2] / f"{key}.json"

    def get(self, key: str) -> bytes | None:
        path = self._path(key)
        with self._lock:
            if path.exists():
                self.hits += 1
                return path.read_bytes()
            self.misses += 1
            return None

    def put(self, key: str, payload: bytes, meta: dict | None = None) -> None:
        path = self._path(key)
        path.parent.mkdir(parents=True, exist_ok=True)
        # Unique temp name per writer: concurrent puts of one key must not race.
        tmp = path.with_name(f"{path.name}.{os.getpid()}.{threading.get_ident()}.tmp")
        tmp.write_bytes(payload)
        os.replace(tmp, path)
        line = json.dumps({"key": key, **(meta or {})}, sort_keys=True, ensure_ascii=False)
        with self._lock:
            with open(self.root / "manifest.jsonl", "a", encoding="utf-8") as fh:
                fh.write(line + "\n")

    def stats(self) -> dict:
        with self._lock:
            return {"hits": self.hits, "misses": self.misses}


class CachingBackend(Backend):
    """Wraps any backend with the response cache; delegates tokenization."""

    def __init__(self, delegate: Backend, cache: ResponseCache):
        self.delegate = delegate
        self.cache = cache
        self.config = delegate.config

    @property
    def capabilities(self) -> frozenset[str]:
        return self.delegate.capabilities

    @property
    def tokenizer(self):
        return self.delegate.tokenizer

    def _roundtrip(self, body: dict, fetch) -> tuple[dict, bool]:
        key = request_key(self.config.base_url, self.config.model_id, body)
        raw = self.cache.get(key)
        if raw is not None:
            return json.loads(raw.decode("utf-8")), True
        response = fetch()
        self.cache.put(
            key,
            json.dumps(response, sort_keys=True, ensure_ascii=False).encode("utf-8"),
            meta={"op": body.get("op", "?")},
        )
        return response, False

    def generate(self, prompt, params: DecodingParams | None = None) -> GenerationResult:
        params = params or DecodingParams()
        body = {"op": "generate", "prompt": prompt_text(prompt), "params": asdict(params)}

        def fetch():
            result = self.delegate.generate(prompt, params)
            return {
                "text": result.text,
                "finish_reason": result.finish_reason,
                "tokens_used": result.tokens_used,
            }

        response, hit = self._roundtrip(body, fetch)
        return GenerationResult(
            text=response["text"],
            finish_reason=response["finish_reason"],
            tokens_used=response["tokens_used"],
            cached=hit,
        )

    def score_continuation(self, prompt, continuation: str) -> ScoredSequence:
        body = {"op": "score", "prompt": prompt_text(prompt), "continuation": continuation}

        def fetch():
            seq = self.delegate.score_continuation(prompt, continuation)
            return {"tokens": seq.tokens, "token_ids": seq.token_ids, "logprobs": seq.logprobs}

        response, _ = self._roundtrip(body, fetch)
        return ScoredSequence.from_parts(
            response["tokens"], response["token_ids"], response["logprobs"]
        )
