"""Gateway tying provider, cache, retry policy and concurrency together.

Callers name a stage and a sampling seed; the gateway picks the model for
that stage, consults the cache, and only on a miss calls the provider under
a global concurrency semaphore with exponential backoff on transient
errors. Responses are cached before being returned, so a rerun with the
same cache directory never touches the provider.
"""

from __future__ import annotations

import logging
import threading
import time
from dataclasses import dataclass, field
from typing import Mapping

from ..errors import RateLimitError, RateLimitExhaustedError, TransportError
from .cache import ResponseCache, cache_key
from .providers import Provider

logger = logging.getLogger(__name__)

_INSTRUCTION_STAGES = frozenset({"instruction"})

# Topic sampling runs hot to spread topics out; instruction generation runs
# cool because the questions must stay grounded in the rendered content.
DEFAULT_TEMPERATURES: Mapping[str, float] = {
    "topic": 1.0,
    "data": 0.7,
    "code": 0.7,
    "instruction": 0.3,
    "point-edit": 0.7,
}


@dataclass(frozen=True)
class GatewayConfig:
    """Sampling and retry knobs for all gateway calls.

    The code model serves the topic, data, code and point-edit stages; the
    instruction stage can run on a cheaper model, mirroring a split between
    a strong code generator and a lighter question writer.
    """

    code_model: str = "code-model"
    instruction_model: str = "instruction-model"
    temperatures: Mapping[str, float] = field(
        default_factory=lambda: dict(DEFAULT_TEMPERATURES)
    )
    top_p: float = 0.95
    max_attempts: int = 4
    backoff_base: float = 0.5
    backoff_cap: float = 8.0
    max_concurrency: int = 8

    def temperature_for(self, stage: str) -> float:
        return self.temperatures.get(stage, 0.7)


@dataclass(frozen=True)
class LlmResponse:
    """One completion: the text plus how it was obtained."""

    text: str
    cached: bool
    latency_ms: float
    attempts: int


class LlmGateway:
    """Stage-aware completion front end with caching and retries."""

    def __init__(
        self,
        provider: Provider,
        cache: ResponseCache | None = None,
        config: GatewayConfig | None = None,
        sleep=time.sleep,
    ):
        self.provider = provider
        self.cache = cache
        self.config = config or GatewayConfig()
        self._sleep = sleep
        self._semaphore = threading.Semaphore(self.config.max_concurrency)

    def model_for_stage(self, stage: str) -> str:
        if stage in _INSTRUCTION_STAGES:
            return self.config.instruction_model
        return self.config.code_model

    def complete(self, stage: str, prompt: str, sampling_seed: int) -> LlmResponse:
        """Return the completion for a prompt, from cache when possible."""
        cfg = self.config
        model = self.model_for_stage(stage)
        key = cache_key(
            self.provider.provider_id,
            model,
            prompt,
            cfg.temperature_for(stage),
            cfg.top_p,
            sampling_seed,
            stage,
        )
        started = time.monotonic()
        if self.cache is not None:
            cached = self.cache.get(key)
            if cached is not None:
                return LlmResponse(
                    text=cached,
                    cached=True,
                    latency_ms=(time.monotonic() - started) * 1000.0,
                    attempts=0,
                )
        text, attempts = self._call_with_retries(stage, prompt, model, sampling_seed)
        if self.cache is not None:
            self.cache.put(key, text)
        return LlmResponse(
            text=text,
            cached=False,
            latency_ms=(time.monotonic() - started) * 1000.0,
            attempts=attempts,
        )

    def _call_with_retries(
        self, stage: str, prompt: str, model: str, sampling_seed: int
    ) -> tuple[str, int]:
        cfg = self.config
        last: Exception | None = None
        for attempt in range(cfg.max_attempts):
            if attempt:
                delay = min(cfg.backoff_base * (2 ** (attempt - 1)), cfg.backoff_cap)
                logger.debug(
                    "retrying %s call (attempt %d) after %.2fs: %s",
                    stage,
                    attempt + 1,
                    delay,
                    last,
                )
                self._sleep(delay)
            try:
                with self._semaphore:
                    text = self.provider.complete(
                        prompt,
                        model=model,
                        temperature=cfg.temperature_for(stage),
                        top_p=cfg.top_p,
                        sampling_seed=sampling_seed,
                        stage=stage,
                    )
                return text, attempt + 1
            except RateLimitError as exc:
                last = exc
            except TransportError as exc:
                last = exc
        if isinstance(last, RateLimitError):
            raise RateLimitExhaustedError(str(last), attempts=cfg.max_attempts)
        raise TransportError(
            f"gave up after {cfg.max_attempts} attempts: {last}",
            attempts=cfg.max_attempts,
        )

    def cache_hit_rate(self) -> float:
        return self.cache.hit_rate() if self.cache is not None else 0.0
