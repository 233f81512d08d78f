"""LLM providers: the live HTTP client and the test doubles.

All providers implement the same single-method protocol. The mock provider
answers from bundled fixture files and is fully deterministic, which makes
end-to-end runs reproducible byte for byte; the scripted provider replays a
prepared response sequence and is how tests inject mid-batch failures.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
from importlib import resources
from typing import Protocol, Sequence, runtime_checkable

from ..errors import ProviderUnavailableError, RateLimitError, TransportError

API_KEY_VAR = "PIXGEN_API_KEY"
BASE_URL_VAR = "PIXGEN_BASE_URL"


@runtime_checkable
class Provider(Protocol):
    """Minimal completion interface the gateway drives."""

    provider_id: str

    def complete(
        self,
        prompt: str,
        *,
        model: str,
        temperature: float,
        top_p: float,
        sampling_seed: int,
        stage: str,
    ) -> str:
        ...


class MockProvider:
    """Deterministic provider answering from per-stage fixture files.

    Each fixture may contain the markers ``@SEED@`` (replaced with the
    decimal sampling seed) and ``@DIGEST@`` (replaced with the first 8 hex
    chars of the prompt's SHA-256), so distinct jobs get distinct yet
    reproducible responses. Per-stage call counts are kept for cache
    soundness assertions: a warm-cache rerun must leave them at zero.
    """

    provider_id = "mock"

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self.calls: dict[str, int] = {}

    @staticmethod
    def _fixture(stage: str) -> str:
        ref = resources.files("pixgen").joinpath(
            "data", "mock_responses", f"{stage}.txt"
        )
        return ref.read_text(encoding="utf-8")

    def complete(
        self,
        prompt: str,
        *,
        model: str,
        temperature: float,
        top_p: float,
        sampling_seed: int,
        stage: str,
    ) -> str:
        with self._lock:
            self.calls[stage] = self.calls.get(stage, 0) + 1
        digest = hashlib.sha256(prompt.encode("utf-8")).hexdigest()[:8]
        text = self._fixture(stage)
        return text.replace("@SEED@", str(sampling_seed)).replace("@DIGEST@", digest)

    def total_calls(self) -> int:
        with self._lock:
            return sum(self.calls.values())


class ScriptedProvider:
    """Replays prepared responses per stage, raising scripted exceptions.

    The script maps a stage tag to a sequence whose items are either
    response strings or exception instances to raise at that call. A stage
    that runs out of script entries raises TransportError, which surfaces
    as a stage failure rather than a hang.
    """

    provider_id = "scripted"

    def __init__(self, script: dict[str, Sequence[str | Exception]]):
        self._lock = threading.Lock()
        self._queues = {stage: list(items) for stage, items in script.items()}

    def complete(
        self,
        prompt: str,
        *,
        model: str,
        temperature: float,
        top_p: float,
        sampling_seed: int,
        stage: str,
    ) -> str:
        with self._lock:
            queue = self._queues.get(stage)
            if not queue:
                raise TransportError(f"scripted provider exhausted for stage {stage}")
            item = queue.pop(0)
        if isinstance(item, Exception):
            raise item
        return item


class HttpProvider:
    """OpenAI-compatible chat completions client.

    Credentials come from the environment only: PIXGEN_API_KEY and
    PIXGEN_BASE_URL. 429 maps to RateLimitError and connection trouble or
    5xx to TransportError so the gateway's retry policy can tell transient
    failures from permanent ones.
    """

    provider_id = "http"

    def __init__(self, timeout: float = 120.0):
        api_key = os.environ.get(API_KEY_VAR)
        base_url = os.environ.get(BASE_URL_VAR)
        if not api_key or not base_url:
            raise ProviderUnavailableError(
                f"set {API_KEY_VAR} and {BASE_URL_VAR} to use the live provider"
            )
        self._api_key = api_key
        self._base_url = base_url.rstrip("/")
        self._timeout = timeout

    def complete(
        self,
        prompt: str,
        *,
        model: str,
        temperature: float,
        top_p: float,
        sampling_seed: int,
        stage: str,
    ) -> str:
        import requests

        payload = {
            "model": model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": temperature,
            "top_p": top_p,
            "seed": sampling_seed,
        }
        try:
            response = requests.post(
                f"{self._base_url}/chat/completions",
                headers={"Authorization": f"Bearer {self._api_key}"},
                json=payload,
                timeout=self._timeout,
            )
        except requests.RequestException as exc:
            raise TransportError(f"request failed: {exc}") from exc
        if response.status_code == 429:
            raise RateLimitError("rate limited (429)")
        if response.status_code >= 500:
            raise TransportError(f"server error {response.status_code}")
        if response.status_code != 200:
            raise TransportError(
                f"unexpected status {response.status_code}: {response.text[:200]}"
            )
        try:
            body = response.json()
            return body["choices"][0]["message"]["content"]
        except (json.JSONDecodeError, LookupError, TypeError) as exc:
            raise TransportError(f"malformed completion response: {exc}") from exc
