"""Model boundary: scoring/generation contract, mock model, HTTP client.

Evaluation code talks to any object with ``score(prompt, continuation)``
and ``generate(prompt, max_tokens, stop)``. Two implementations ship:

- :class:`MockModel`: fully deterministic. ``unigram`` mode scores text
  under a seed-derived smoothed byte distribution (context-free, so
  log-likelihoods add over splits); ``lookup`` mode echoes values from an
  explicit table and fails loudly on misses.
- :class:`HttpAdapter`: JSON-over-HTTP client for an inference service
  exposing ``POST /v1/score`` {prompt, continuation} ->
  {token_logprobs, token_count} and ``POST /v1/generate``
  {prompt, max_tokens, stop} -> {text, finish_reason}. Transient failures
  (network errors, 5xx) are retried with exponential backoff; malformed
  responses are non-retriable.
"""

from __future__ import annotations

import json
import math
import random
import threading
import time
from dataclasses import dataclass, field
from typing import Optional, Protocol, Sequence

import requests


class AdapterError(Exception):
    """Base for all adapter failures."""


class LookupMissError(AdapterError, KeyError):
    """Lookup-mock table has no entry for the requested key."""


class AdapterSchemaError(AdapterError):
    """Response violated the wire contract; retrying cannot help."""


class AdapterUnavailableError(AdapterError):
    """All retry attempts failed."""


@dataclass(frozen=True)
class ScoreResponse:
    token_logprobs: tuple[float, ...]
    token_count: int

    @property
    def total_logprob(self) -> float:
        return sum(self.token_logprobs)


@dataclass(frozen=True)
class GenerateResponse:
    text: str
    finish_reason: str  # "stop" | "length" | "error"


class ModelAdapter(Protocol):
    def score(self, prompt: str, continuation: str) -> ScoreResponse: ...

    def generate(self, prompt: str, max_tokens: int,
                 stop: Sequence[str] = ()) -> GenerateResponse: ...


# ---------------------------------------------------------------------------
# mock model

@dataclass(frozen=True)
class MockModelSpec:
    """Deterministic mock behavior.

    mode "unigram": byte distribution drawn from ``seed`` with additive
    ``smoothing`` (> 0 keeps every byte possible). mode "lookup": exact
    echo of score/generate tables.
    """

    mode: str = "unigram"
    seed: int = 0
    smoothing: float = 0.5
    score_table: dict[tuple[str, str], tuple[float, ...]] = field(default_factory=dict)
    generate_table: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if self.mode not in ("unigram", "lookup"):
            raise ValueError(f"unknown mock mode {self.mode!r}")
        if self.smoothing <= 0:
            raise ValueError("smoothing must be > 0")
        for key, vals in self.score_table.items():
            for lp in vals:
                if lp > 0:
                    raise ValueError(f"score table entry {key!r} has positive logprob {lp}")


def load_mock_table(path: str) -> MockModelSpec:
    """Read a lookup-mock spec from JSON:
    {"score": [{"prompt", "continuation", "token_logprobs"}, ...],
     "generate": [{"prompt", "text"}, ...]}"""
    with open(path, encoding="utf-8") as f:
        raw = json.load(f)
    score = {}
    for row in raw.get("score", []):
        score[(row["prompt"], row["continuation"])] = tuple(float(x) for x in row["token_logprobs"])
    gen = {row["prompt"]: row["text"] for row in raw.get("generate", [])}
    return MockModelSpec(mode="lookup", score_table=score, generate_table=gen)


class MockModel:
    """Deterministic model for tests and offline protocol runs."""

    def __init__(self, spec: MockModelSpec, tokenizer):
        self.spec = spec
        self.tokenizer = tokenizer
        if spec.mode == "unigram":
            rng = random.Random(spec.seed)
            weights = [rng.random() + spec.smoothing for _ in range(256)]
            total = sum(weights)
            self._byte_logp = [math.log(w / total) for w in weights]
        else:
            self._byte_logp = None

    def byte_distribution(self) -> list[float]:
        """Byte probabilities (unigram mode); sums to 1 up to rounding."""
        if self._byte_logp is None:
            raise AdapterError("byte_distribution is only defined in unigram mode")
        return [math.exp(lp) for lp in self._byte_logp]

    def score(self, prompt: str, continuation: str) -> ScoreResponse:
        if self.spec.mode == "lookup":
            key = (prompt, continuation)
            try:
                vals = self.spec.score_table[key]
            except KeyError:
                raise LookupMissError(
                    f"no score entry for prompt={prompt!r} continuation={continuation!r}"
                ) from None
            return ScoreResponse(tuple(vals), len(vals))
        # unigram: per-byte logprobs summed within each tokenizer token,
        # so segmentations differ but totals stay additive.
        ids = self.tokenizer.encode(continuation)
        per_token = []
        for tid in ids:
            piece = self.tokenizer.decode([tid])
            per_token.append(sum(self._byte_logp[b] for b in piece.encode("utf-8")))
        return ScoreResponse(tuple(per_token), len(per_token))

    def generate(self, prompt: str, max_tokens: int,
                 stop: Sequence[str] = ()) -> GenerateResponse:
        if max_tokens < 1:
            raise ValueError("max_tokens must be >= 1")
        if self.spec.mode == "lookup":
            try:
                text = self.spec.generate_table[prompt]
            except KeyError:
                raise LookupMissError(f"no generate entry for prompt={prompt!r}") from None
        else:
            best = max(range(256), key=lambda b: self._byte_logp[b])
            text = bytes([best] * max_tokens).decode("utf-8", errors="replace")
        # earliest stop sequence wins; text before it is returned
        cut = len(text)
        for s in stop:
            if s:
                i = text.find(s)
                if i != -1:
                    cut = min(cut, i)
        text = text[:cut]
        ids = self.tokenizer.encode(text)
        if len(ids) >= max_tokens:
            return GenerateResponse(self.tokenizer.decode(ids[:max_tokens]), "length")
        return GenerateResponse(text, "stop")


# ---------------------------------------------------------------------------
# HTTP adapter

@dataclass(frozen=True)
class HttpConfig:
    base_url: str
    timeout_s: float = 30.0
    max_attempts: int = 3
    backoff_base_s: float = 0.5
    max_inflight: int = 8
    auth_header: Optional[str] = None
    auth_token: Optional[str] = None  # read from env by the CLI, never a file

    def __post_init__(self):
        if self.max_attempts < 1 or self.timeout_s <= 0 or self.max_inflight < 1:
            raise ValueError("bad HTTP config")


def _require(cond: bool, payload, msg: str) -> None:
    if not cond:
        excerpt = json.dumps(payload)[:200]
        raise AdapterSchemaError(f"{msg}; payload: {excerpt}")


class HttpAdapter:
    """Client for the documented score/generate wire protocol.

    Network errors and 5xx responses are retried up to ``max_attempts``
    with exponential backoff; 4xx and schema violations fail immediately.
    An in-flight semaphore caps concurrent requests from this process.
    """

    def __init__(self, config: HttpConfig):
        self.config = config
        self._session = requests.Session()
        if config.auth_header and config.auth_token:
            self._session.headers[config.auth_header] = config.auth_token
        self._gate = threading.BoundedSemaphore(config.max_inflight)

    def _post(self, path: str, body: dict) -> dict:
        url = self.config.base_url.rstrip("/") + path
        last_error = None
        for attempt in range(self.config.max_attempts):
            if attempt:
                time.sleep(self.config.backoff_base_s * 2 ** (attempt - 1))
            try:
                with self._gate:
                    resp = self._session.post(url, json=body, timeout=self.config.timeout_s)
            except requests.RequestException as e:
                last_error = f"network error: {e}"
                continue
            if resp.status_code >= 500:
                last_error = f"server error {resp.status_code}"
                continue
            if resp.status_code != 200:
                raise AdapterSchemaError(
                    f"{url} returned {resp.status_code}: {resp.text[:200]}"
                )
            try:
                return resp.json()
            except ValueError as e:
                raise AdapterSchemaError(f"{url} returned non-JSON body: {resp.text[:200]}") from e
        raise AdapterUnavailableError(
            f"{url} failed after {self.config.max_attempts} attempts: {last_error}"
        )

    def score(self, prompt: str, continuation: str) -> ScoreResponse:
        payload = self._post("/v1/score", {"prompt": prompt, "continuation": continuation})
        _require(isinstance(payload, dict), payload, "score response must be an object")
        lps = payload.get("token_logprobs")
        count = payload.get("token_count")
        _require(isinstance(lps, list) and all(isinstance(x, (int, float)) for x in lps),
                 payload, "token_logprobs must be a list of numbers")
        _require(all(x <= 0 for x in lps), payload, "token_logprobs must be <= 0")
        _require(isinstance(count, int) and count == len(lps),
                 payload, "token_count must equal len(token_logprobs)")
        return ScoreResponse(tuple(float(x) for x in lps), count)

    def generate(self, prompt: str, max_tokens: int,
                 stop: Sequence[str] = ()) -> GenerateResponse:
        payload = self._post(
            "/v1/generate",
            {"prompt": prompt, "max_tokens": max_tokens, "stop": list(stop)},
        )
        _require(isinstance(payload, dict), payload, "generate response must be an object")
        text = payload.get("text")
        reason = payload.get("finish_reason")
        _require(isinstance(text, str), payload, "text must be a string")
        _require(reason in ("stop", "length", "error"), payload,
                 "finish_reason must be stop|length|error")
        return GenerateResponse(text, reason)
