"""Chat-completions client with retries and bounded concurrency.

The client speaks ``POST {base_url}/v1/chat/completions``.  Any
``httpx.BaseTransport`` can be plugged in, which is how the in-process mock
server (:mod:`cotsynth.mock_server`) is wired for offline runs.
"""

from __future__ import annotations

import json
import logging
import os
import threading
import time
from dataclasses import asdict, dataclass
from typing import Callable, Mapping

import httpx

from .errors import AuthError, ConfigError, ProtocolError, RequestTimeout, TransportError

logger = logging.getLogger(__name__)

DEFAULT_MAX_TOKENS = 350
DEFAULT_REPETITION_PENALTY = 1.175
DEFAULT_TEMPERATURE = 0.9
MAX_TOKENS_BAND = (300, 400)
MAX_BACKOFF_S = 30.0


@dataclass(frozen=True)
class GenerationParams:
    max_tokens: int = DEFAULT_MAX_TOKENS
    repetition_penalty: float = DEFAULT_REPETITION_PENALTY
    temperature: float = DEFAULT_TEMPERATURE
    request_seed: int | None = None
    allow_out_of_band: bool = False

    def __post_init__(self):
        lo, hi = MAX_TOKENS_BAND
        if self.max_tokens < 1:
            raise ConfigError("max_tokens must be positive")
        if not self.allow_out_of_band and not lo <= self.max_tokens <= hi:
            raise ConfigError(
                f"max_tokens={self.max_tokens} outside [{lo}, {hi}]; "
                "set allow_out_of_band to override"
            )
        if not self.repetition_penalty > 0:
            raise ConfigError("repetition_penalty must be > 0")
        if self.temperature < 0:
            raise ConfigError("temperature must be >= 0")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class EndpointConfig:
    base_url: str
    model_name: str
    api_key_source: str = "INFERENCE_API_KEY"
    timeout_s: float = 60.0
    max_retries: int = 3
    backoff_base_ms: float = 500.0

    def __post_init__(self):
        if not self.timeout_s > 0:
            raise ConfigError("timeout_s must be > 0")
        if self.max_retries < 0:
            raise ConfigError("max_retries must be >= 0")
        if self.backoff_base_ms < 0:
            raise ConfigError("backoff_base_ms must be >= 0")

    def url(self, path: str) -> str:
        return self.base_url.rstrip("/") + path


@dataclass(frozen=True)
class ChatExchange:
    system_text: str
    user_text: str
    params: GenerationParams
    response_text: str
    latency_ms: float
    attempt_count: int
    started_at: float = 0.0
    repetition_penalty_sent: bool = True

    def meta(self) -> dict:
        return {
            "params": self.params.to_dict(),
            "started_at": self.started_at,
            "latency_ms": self.latency_ms,
            "attempts": self.attempt_count,
            "repetition_penalty_sent": self.repetition_penalty_sent,
        }


def backoff_delay(cfg: EndpointConfig, retry: int) -> float:
    """Seconds to wait before retry number ``retry`` (1-based)."""
    return min(cfg.backoff_base_ms / 1000.0 * 2 ** (retry - 1), MAX_BACKOFF_S)


def build_request_body(
    cfg: EndpointConfig, system_text: str, user_text: str, params: GenerationParams,
    with_extension: bool = True,
) -> dict:
    body = {
        "model": cfg.model_name,
        "messages": [
            {"role": "system", "content": system_text},
            {"role": "user", "content": user_text},
        ],
        "max_tokens": params.max_tokens,
        "temperature": params.temperature,
    }
    if params.request_seed is not None:
        body["seed"] = params.request_seed
    if with_extension:
        body["repetition_penalty"] = params.repetition_penalty
    return body


def extract_content(payload) -> str:
    try:
        content = payload["choices"][0]["message"]["content"]
    except (KeyError, IndexError, TypeError):
        raise ProtocolError("response has no choices[0].message.content") from None
    if not isinstance(content, str):
        raise ProtocolError("choices[0].message.content is not a string")
    return content


class JsonEndpoint:
    """POSTs JSON to one endpoint with retries and a concurrency bound.

    Transport failures, timeouts, HTTP 429 and 5xx are retried with
    exponential backoff up to ``cfg.max_retries`` times; 401/403 raise
    :class:`AuthError` at once.  Any other response is handed back.
    ``sleep`` is injectable so tests never wait.
    """

    def __init__(
        self,
        cfg: EndpointConfig,
        *,
        transport: httpx.BaseTransport | None = None,
        sleep: Callable[[float], None] = time.sleep,
        max_concurrency: int = 4,
        env: Mapping[str, str] | None = None,
    ):
        if max_concurrency < 1:
            raise ConfigError("max_concurrency must be >= 1")
        self.cfg = cfg
        self.sleep = sleep
        self._gate = threading.BoundedSemaphore(max_concurrency)
        self._http = httpx.Client(transport=transport, timeout=cfg.timeout_s)
        env = os.environ if env is None else env
        self._api_key = env.get(cfg.api_key_source)

    def close(self):
        self._http.close()

    def _headers(self) -> dict:
        headers = {"Content-Type": "application/json"}
        if self._api_key:
            headers["Authorization"] = f"Bearer {self._api_key}"
        return headers

    def post(self, path: str, body: dict) -> tuple[httpx.Response, int]:
        """Returns the final response and the number of attempts made."""
        url = self.cfg.url(path)
        content = json.dumps(body).encode("utf-8")
        attempts = 0
        while True:
            attempts += 1
            try:
                with self._gate:
                    resp = self._http.post(url, content=content, headers=self._headers())
            except httpx.TimeoutException as exc:
                failure: Exception = RequestTimeout(f"{url}: request timed out ({exc})")
            except httpx.TransportError as exc:
                failure = TransportError(f"{url}: {exc}")
            else:
                if resp.status_code in (401, 403):
                    raise AuthError(f"HTTP {resp.status_code} from {url}")
                if resp.status_code != 429 and resp.status_code < 500:
                    return resp, attempts
                failure = TransportError(f"{url}: HTTP {resp.status_code}")
            if attempts > self.cfg.max_retries:
                raise failure
            delay = backoff_delay(self.cfg, attempts)
            logger.info("attempt %d failed (%s); retrying in %.3fs", attempts, failure, delay)
            self.sleep(delay)


def response_json(resp: httpx.Response):
    try:
        return resp.json()
    except ValueError:
        raise ProtocolError("response body is not JSON") from None


class ChatClient:
    """Thread-safe chat-completions client.

    ``clock`` supplies timestamps and latencies; pass a deterministic one to
    get byte-stable provenance under the mock server.
    """

    def __init__(
        self,
        cfg: EndpointConfig,
        *,
        transport: httpx.BaseTransport | None = None,
        sleep: Callable[[float], None] = time.sleep,
        clock: Callable[[], float] = time.time,
        max_concurrency: int = 4,
        env: Mapping[str, str] | None = None,
    ):
        self.cfg = cfg
        self.clock = clock
        self.endpoint = JsonEndpoint(cfg, transport=transport, sleep=sleep,
                                     max_concurrency=max_concurrency, env=env)

    def close(self):
        self.endpoint.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def complete(
        self,
        system_text: str,
        user_text: str,
        params: GenerationParams,
        *,
        clock: Callable[[], float] | None = None,
    ) -> ChatExchange:
        if not user_text:
            raise ConfigError("user_text is empty")
        clock = clock or self.clock
        started = clock()
        body = build_request_body(self.cfg, system_text, user_text, params)
        resp, attempts = self.endpoint.post("/v1/chat/completions", body)
        extension_sent = True
        if resp.status_code in (400, 422):
            # strict servers reject the repetition_penalty extension field
            logger.warning("HTTP %s; resending without repetition_penalty", resp.status_code)
            extension_sent = False
            body = build_request_body(self.cfg, system_text, user_text, params, with_extension=False)
            resp, more = self.endpoint.post("/v1/chat/completions", body)
            attempts += more
        if resp.status_code >= 400:
            raise ProtocolError(f"HTTP {resp.status_code}: {resp.text[:200]}")
        content = extract_content(response_json(resp))
        return ChatExchange(
            system_text=system_text,
            user_text=user_text,
            params=params,
            response_text=content,
            latency_ms=round((clock() - started) * 1000.0, 3),
            attempt_count=attempts,
            started_at=started,
            repetition_penalty_sent=extension_sent,
        )


def complete(
    cfg: EndpointConfig, system_text: str, user_text: str, params: GenerationParams, **client_kw
) -> ChatExchange:
    with ChatClient(cfg, **client_kw) as client:
        return client.complete(system_text, user_text, params)
