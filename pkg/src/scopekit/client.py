"""HTTP client for a text-generation endpoint.

Wire contract: POST JSON {"prompt", "max_new_tokens", "stop", "temperature"}
answered by {"text", "stop_reason"}. Stop sequences are also enforced
client-side, so returned text never contains one regardless of server
behavior.
"""

from __future__ import annotations

import dataclasses
import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from enum import Enum
from typing import Iterable, Sequence

import requests

from .errors import EndpointUnavailableError, GenerationTimeoutError, MalformedResponseError
from .pairs import DEFAULT_EOT_TOKEN

logger = logging.getLogger(__name__)

AUTH_TOKEN_ENV = "SCOPEKIT_AUTH_TOKEN"


class StopReason(str, Enum):
    STOP_SEQUENCE = "stop_sequence"
    MAX_TOKENS = "max_tokens"
    END_OF_STREAM = "end_of_stream"


@dataclasses.dataclass(frozen=True)
class GenerationRequest:
    prompt: str
    max_new_tokens: int = 256
    stop_sequences: tuple[str, ...] = (DEFAULT_EOT_TOKEN,)
    temperature: float = 0.0  # deterministic decoding by default
    timeout: float = 120.0


@dataclasses.dataclass(frozen=True)
class GenerationResult:
    text: str
    latency_s: float
    stop_reason: StopReason


@dataclasses.dataclass(frozen=True)
class PredictionOutcome:
    test_id: str
    result: GenerationResult | None
    error: str | None


def _auth_headers() -> dict[str, str]:
    token = os.environ.get(AUTH_TOKEN_ENV)
    return {"Authorization": f"Bearer {token}"} if token else {}


def _truncate_at_stop(text: str, stops: Sequence[str]) -> tuple[str, bool]:
    cut = len(text)
    for stop in stops:
        if not stop:
            continue
        k = text.find(stop)
        if k >= 0:
            cut = min(cut, k)
    return text[:cut], cut < len(text)


def complete(
    endpoint: str,
    request: GenerationRequest,
    *,
    retries: int = 2,
    session: requests.Session | None = None,
) -> GenerationResult:
    """One generation call with idempotent retries on transport failures.

    Retries cover connection errors, timeouts, and 5xx; a 4xx fails
    immediately. Timeouts surface as GenerationTimeoutError with no partial
    text. Latency is the wall-clock of the successful attempt.
    """
    payload = {
        "prompt": request.prompt,
        "max_new_tokens": request.max_new_tokens,
        "stop": list(request.stop_sequences),
        "temperature": request.temperature,
    }
    post = (session or requests).post
    last_exc: Exception | None = None
    for attempt in range(retries + 1):
        t0 = time.perf_counter()
        try:
            resp = post(endpoint, json=payload, timeout=request.timeout, headers=_auth_headers())
        except requests.Timeout as exc:
            last_exc = GenerationTimeoutError(f"generate call timed out after {request.timeout}s")
            last_exc.__cause__ = exc
        except requests.RequestException as exc:
            last_exc = EndpointUnavailableError(f"generate call failed: {exc}")
            last_exc.__cause__ = exc
        else:
            if resp.status_code >= 500:
                last_exc = EndpointUnavailableError(f"generate endpoint answered {resp.status_code}")
            elif resp.status_code != 200:
                raise EndpointUnavailableError(f"generate endpoint answered {resp.status_code}")
            else:
                latency = time.perf_counter() - t0
                try:
                    body = resp.json()
                    text = body["text"]
                except (ValueError, KeyError, TypeError) as exc:
                    raise MalformedResponseError(f"bad generate response: {exc}") from exc
                if not isinstance(text, str):
                    raise MalformedResponseError("generate response 'text' is not a string")
                text, truncated = _truncate_at_stop(text, request.stop_sequences)
                if truncated:
                    reason = StopReason.STOP_SEQUENCE
                else:
                    raw = body.get("stop_reason", "end_of_stream")
                    if raw == "max_tokens":
                        reason = StopReason.MAX_TOKENS
                    elif raw == "stop_sequence":
                        reason = StopReason.STOP_SEQUENCE
                    else:
                        reason = StopReason.END_OF_STREAM
                return GenerationResult(text=text, latency_s=latency, stop_reason=reason)
        if attempt < retries:
            logger.warning("generate attempt %d failed (%s); retrying", attempt + 1, last_exc)
    raise last_exc


def batch_predict(
    endpoint: str,
    tests: Iterable[tuple[str, str]],
    template: GenerationRequest,
    *,
    max_in_flight: int = 4,
    retries: int = 2,
) -> list[PredictionOutcome]:
    """Run (test_id, prompt) items through the endpoint.

    At most ``max_in_flight`` requests run concurrently; results come back
    in input order. A failing item records its error and does not abort the
    batch.
    """
    items = list(tests)

    def one(item: tuple[str, str]) -> PredictionOutcome:
        test_id, prompt = item
        req = dataclasses.replace(template, prompt=prompt)
        try:
            return PredictionOutcome(test_id, complete(endpoint, req, retries=retries), None)
        except Exception as exc:
            logger.warning("prediction for %s failed: %s", test_id, exc)
            return PredictionOutcome(test_id, None, str(exc))

    if not items:
        return []
    with ThreadPoolExecutor(max_workers=max_in_flight) as pool:
        return list(pool.map(one, items))
