"""HTTP client for chat-completions style endpoints.

Retries transport errors, 429 and 5xx with exponential backoff plus jitter,
and paces requests through a rate limiter that may be shared by several
sessions running in threads.
"""

from __future__ import annotations

import logging
import os
import random
import threading
import time
from collections.abc import Callable
from dataclasses import dataclass, field
from typing import Any

import httpx

from reflectbench.agents.base import AgentTransportError, ChatMessage

log = logging.getLogger(__name__)

API_KEY_ENV = "REFLECTION_API_KEY"


class MalformedResponse(AgentTransportError):
    pass


class RateLimiter:
    """Spaces calls at least ``60 / per_minute`` seconds apart."""

    def __init__(self, per_minute: float = 60.0, clock: Callable[[], float] = time.monotonic,
                 sleep: Callable[[float], None] = time.sleep):
        if per_minute <= 0:
            raise ValueError("per_minute must be positive")
        self.interval = 60.0 / per_minute
        self._clock = clock
        self._sleep = sleep
        self._lock = threading.Lock()
        self._next = 0.0

    def acquire(self) -> None:
        with self._lock:
            now = self._clock()
            slot = max(now, self._next)
            self._next = slot + self.interval
        if slot > now:
            self._sleep(slot - now)


@dataclass
class RemoteEndpoint:
    base_url: str
    model: str
    api_key_env: str = API_KEY_ENV
    timeout: float = 60.0
    max_attempts: int = 3
    requests_per_minute: float = 60.0
    backoff_base: float = 1.0
    backoff_cap: float = 30.0
    extra: dict[str, Any] = field(default_factory=dict)  # e.g. temperature

    def headers(self) -> dict[str, str]:
        token = os.environ.get(self.api_key_env)
        h = {"Content-Type": "application/json"}
        if token:
            h["Authorization"] = f"Bearer {token}"
        return h

    def describe(self) -> dict[str, Any]:
        # never includes the token itself
        return {"base_url": self.base_url, "model": self.model, **self.extra}


class HttpJsonClient:
    def __init__(self, endpoint: RemoteEndpoint, *, transport: httpx.BaseTransport | None = None,
                 limiter: RateLimiter | None = None, sleep: Callable[[float], None] = time.sleep):
        self.endpoint = endpoint
        self.limiter = limiter or RateLimiter(endpoint.requests_per_minute)
        self._sleep = sleep
        self._http = httpx.Client(base_url=endpoint.base_url.rstrip("/") + "/",
                                  timeout=endpoint.timeout, transport=transport)

    def close(self) -> None:
        self._http.close()

    def _backoff(self, attempt: int) -> float:
        base = self.endpoint.backoff_base
        return min(self.endpoint.backoff_cap, base * 2 ** attempt) + random.uniform(0, base)

    def post(self, path: str, payload: dict[str, Any]) -> tuple[dict[str, Any], int]:
        """POST JSON; return (decoded body, retries used)."""
        budget = max(1, self.endpoint.max_attempts)
        last = ""
        for attempt in range(budget):
            if attempt:
                self._sleep(self._backoff(attempt - 1))
            self.limiter.acquire()
            try:
                resp = self._http.post(path.lstrip("/"), json=payload,
                                       headers=self.endpoint.headers())
            except httpx.HTTPError as exc:
                last = f"{type(exc).__name__}: {exc}"
                log.warning("attempt %d/%d failed: %s", attempt + 1, budget, last)
                continue
            if resp.status_code == 429 or resp.status_code >= 500:
                last = f"HTTP {resp.status_code}"
                log.warning("attempt %d/%d failed: %s", attempt + 1, budget, last)
                continue
            if resp.status_code >= 400:
                raise AgentTransportError(f"HTTP {resp.status_code}: {resp.text[:200]}",
                                          attempt + 1)
            try:
                return resp.json(), attempt
            except ValueError as exc:
                raise MalformedResponse(f"response is not JSON: {exc}", attempt + 1) from exc
        raise AgentTransportError(f"gave up after {budget} attempts ({last})", budget)


@dataclass
class ChatResult:
    text: str
    retries_used: int
    latency: float
    usage: dict[str, Any] | None = None


def complete_chat(client: HttpJsonClient, messages: list[ChatMessage]) -> ChatResult:
    payload = {
        "model": client.endpoint.model,
        "messages": [m.to_wire() for m in messages],
        **client.endpoint.extra,
    }
    t0 = time.perf_counter()
    body, retries = client.post("chat/completions", payload)
    latency = time.perf_counter() - t0
    try:
        text = body["choices"][0]["message"]["content"]
    except (KeyError, IndexError, TypeError) as exc:
        raise MalformedResponse(f"no choices[0].message.content in {str(body)[:200]}") from exc
    if not isinstance(text, str):
        raise MalformedResponse("message content is not a string")
    usage = body.get("usage") if isinstance(body, dict) else None
    log.info("chat %s latency=%.3fs retries=%d usage=%s", client.endpoint.model, latency,
             retries, usage)
    return ChatResult(text, retries, latency, usage)


class RemoteAgent:
    def __init__(self, endpoint: RemoteEndpoint, **client_kwargs):
        self.endpoint = endpoint
        self.client = HttpJsonClient(endpoint, **client_kwargs)
        self.name = f"remote:{endpoint.model}"
        self.last_result: ChatResult | None = None

    def reset(self, rng) -> None:
        pass

    def respond(self, messages: list[ChatMessage]) -> str:
        self.last_result = complete_chat(self.client, messages)
        return self.last_result.text
