"""HTTP backend speaking the de-facto completions wire format.

Forced scoring uses ``echo`` + ``logprobs`` with ``max_tokens=0``; the
prompt/continuation boundary is resolved from the response's per-token text
offsets, i.e. by the backend's own tokenizer. Tokenization goes through the
server's tokenize/detokenize endpoints when available.
"""

from __future__ import annotations

import json
import time

import requests

from ..errors import BackendError, CapabilityError
from .base import Backend, BackendConfig, DecodingParams, GenerationResult, ScoredSequence, Tokenizer, prompt_text

RETRYABLE_STATUSES = {429, 500, 502, 503, 504}


class HttpTokenizer:
    """Tokenizer served by the backend's tokenize/detokenize endpoints."""

    def __init__(self, backend: "CompletionsBackend"):
        self._backend = backend
        self._vocab_info: dict | None = None

    def _info(self) -> dict:
        if self._vocab_info is None:
            self._vocab_info = self._backend._post(
                self._backend.config.vocab_info_path, {"model": self._backend.config.model_id}
            )
        return self._vocab_info

    @property
    def vocab_size(self) -> int:
        return int(self._info()["vocab_size"])

    @property
    def sampleable_ids(self) -> tuple[int, ...]:
        info = self._info()
        if "sampleable_ids" in info:
            return tuple(info["sampleable_ids"])
        special = set(info.get("special_ids", []))
        return tuple(i for i in range(self.vocab_size) if i not in special)

    def encode(self, text: str) -> list[int]:
        response = self._backend._post(
            self._backend.config.tokenize_path,
            {"model": self._backend.config.model_id, "text": text},
        )
        return list(response["ids"])

    def decode(self, ids: list[int]) -> str:
        response = self._backend._post(
            self._backend.config.detokenize_path,
            {"model": self._backend.config.model_id, "ids": list(ids)},
        )
        return response["text"]

    def encode_with_offsets(self, text: str) -> tuple[list[int], list[tuple[int, int]]]:
        response = self._backend._post(
            self._backend.config.tokenize_path,
            {"model": self._backend.config.model_id, "text": text},
        )
        ids = list(response["ids"])
        if "offsets" in response:
            offsets = [tuple(o) for o in response["offsets"]]
        else:
            # Fall back to the scoring endpoint's text offsets.
            offsets = self._backend._echo_offsets(text)
        if len(offsets) != len(ids):
            raise BackendError(
                f"tokenizer returned {len(ids)} ids but {len(offsets)} offsets"
            )
        return ids, offsets


class CompletionsBackend(Backend):
    def __init__(self, config: BackendConfig, session: requests.Session | None = None):
        self.config = config
        self.session = session or requests.Session()
        self._tokenizer = HttpTokenizer(self) if config.supports_tokenize else None

    @property
    def capabilities(self) -> frozenset[str]:
        caps = {"generate"}
        if self.config.supports_echo_logprobs:
            caps.add("score")
        if self.config.supports_tokenize:
            caps.add("tokenize")
        return frozenset(caps)

    @property
    def tokenizer(self) -> Tokenizer:
        if self._tokenizer is None:
            raise CapabilityError("backend has no tokenizer endpoint configured")
        return self._tokenizer

    def _post(self, path: str, payload: dict) -> dict:
        url = self.config.base_url.rstrip("/") + path
        headers = {"Content-Type": "application/json"}
        if self.config.api_key:
            headers["Authorization"] = f"Bearer {self.config.api_key}"
        last_error: str = ""
        attempts = 0
        for attempt in range(self.config.max_retries + 1):
            attempts = attempt + 1
            try:
                response = self.session.post(
                    url,
                    data=json.dumps(payload),
                    headers=headers,
                    timeout=self.config.request_timeout,
                )
            except requests.RequestException as exc:
                last_error = f"transport error: {exc}"
            else:
                if response.status_code == 200:
                    try:
                        return response.json()
                    except ValueError as exc:
                        raise BackendError(
                            f"non-JSON response from {url}: {exc}", attempts=attempts, status=200
                        ) from exc
                if response.status_code not in RETRYABLE_STATUSES:
                    raise BackendError(
                        f"backend refused request to {url}: HTTP {response.status_code}",
                        attempts=attempts,
                        status=response.status_code,
                    )
                last_error = f"HTTP {response.status_code}"
            if attempt < self.config.max_retries:
                time.sleep(self.config.retry_backoff * (2**attempt))
        raise BackendError(
            f"request to {url} failed after {attempts} attempts ({last_error})",
            attempts=attempts,
        )

    def generate(self, prompt, params: DecodingParams | None = None) -> GenerationResult:
        params = params or DecodingParams()
        payload = {
            "model": self.config.model_id,
            "prompt": prompt_text(prompt),
            "max_tokens": params.max_tokens,
            "temperature": params.temperature,
            "top_p": params.top_p,
        }
        if params.stop:
            payload["stop"] = list(params.stop)
        response = self._post(self.config.completions_path, payload)
        choice = response["choices"][0]
        usage = response.get("usage", {})
        return GenerationResult(
            text=choice.get("text", ""),
            finish_reason=choice.get("finish_reason", "stop"),
            tokens_used=int(usage.get("total_tokens", 0)),
            cached=False,
        )

    def _echo_payload(self, text: str) -> dict:
        return {
            "model": self.config.model_id,
            "prompt": text,
            "max_tokens": 0,
            "echo": True,
            "logprobs": 0,
        }

    def _echo_offsets(self, text: str) -> list[tuple[int, int]]:
        response = self._post(self.config.completions_path, self._echo_payload(text))
        logprobs = response["choices"][0]["logprobs"]
        starts = list(logprobs["text_offset"])
        ends = starts[1:] + [len(text)]
        return list(zip(starts, ends))

    def score_continuation(self, prompt, continuation: str) -> ScoredSequence:
        if not self.config.supports_echo_logprobs:
            raise CapabilityError("backend is configured without echo+logprobs scoring")
        if continuation == "":
            return ScoredSequence.empty()
        prompt_str = prompt_text(prompt)
        response = self._post(
            self.config.completions_path, self._echo_payload(prompt_str + continuation)
        )
        logprobs = response["choices"][0]["logprobs"]
        tokens = logprobs["tokens"]
        offsets = logprobs["text_offset"]
        lps = logprobs["token_logprobs"]
        ids = logprobs.get("token_ids", [-1] * len(tokens))
        boundary = len(prompt_str)
        keep = [i for i, off in enumerate(offsets) if off >= boundary]
        return ScoredSequence.from_parts(
            [tokens[i] for i in keep],
            [ids[i] for i in keep],
            [0.0 if lps[i] is None else lps[i] for i in keep],
        )
