"""Response cache keys, retry behavior, and cache soundness."""

from __future__ import annotations

import random
import threading

import pytest

from pixgen.errors import (
    RateLimitError,
    RateLimitExhaustedError,
    TransportError,
)
from pixgen.gateway.cache import ResponseCache, cache_key
from pixgen.gateway.client import (
    DEFAULT_TEMPERATURES,
    GatewayConfig,
    LlmGateway,
)
from pixgen.gateway.providers import MockProvider, ScriptedProvider


def test_cache_key_sensitive_to_every_field():
    base = dict(
        provider_id="mock",
        model_id="m",
        prompt="p",
        temperature=0.7,
        top_p=0.95,
        sampling_seed=1,
        stage="data",
    )
    reference = cache_key(**base)
    for field, changed in [
        ("provider_id", "other"),
        ("model_id", "m2"),
        ("prompt", "p2"),
        ("temperature", 0.8),
        ("top_p", 0.9),
        ("sampling_seed", 2),
        ("stage", "code"),
    ]:
        variant = dict(base)
        variant[field] = changed
        assert cache_key(**variant) != reference, field


def test_cache_key_no_collisions_over_random_corpus():
    rng = random.Random(0)
    keys = set()
    trials = 200000
    for i in range(trials):
        keys.add(
            cache_key(
                provider_id="mock",
                model_id=f"m{rng.randrange(4)}",
                prompt=f"prompt-{i}",
                temperature=rng.choice((0.3, 0.7, 1.0)),
                top_p=0.95,
                sampling_seed=rng.randrange(2**63),
                stage=rng.choice(("topic", "data", "code")),
            )
        )
    assert len(keys) == trials


def test_cache_key_field_separator_prevents_concatenation_collisions():
    a = cache_key("p", "m", "ab", 0.7, 0.95, 1, "data")
    b = cache_key("p", "ma", "b", 0.7, 0.95, 1, "data")
    assert a != b


def test_cache_round_trip_and_counters(tmp_path):
    cache = ResponseCache(tmp_path / "c")
    assert cache.get("k") is None
    cache.put("k", "value")
    assert cache.get("k") == "value"
    counters = cache.counters()
    assert counters == {"hits": 1, "misses": 1}
    assert cache.hit_rate() == 0.5


def test_cache_survives_reopen(tmp_path):
    ResponseCache(tmp_path / "c").put("k", "v")
    assert ResponseCache(tmp_path / "c").get("k") == "v"


def test_gateway_hit_skips_provider(tmp_path):
    provider = MockProvider()
    gateway = LlmGateway(provider, ResponseCache(tmp_path / "c"), GatewayConfig())
    first = gateway.complete("topic", "same prompt", 7)
    second = gateway.complete("topic", "same prompt", 7)
    assert not first.cached and second.cached
    assert first.text == second.text
    assert second.attempts == 0
    assert provider.total_calls() == 1


def test_distinct_seeds_create_distinct_entries(tmp_path):
    provider = MockProvider()
    gateway = LlmGateway(provider, ResponseCache(tmp_path / "c"), GatewayConfig())
    gateway.complete("topic", "same prompt", 1)
    gateway.complete("topic", "same prompt", 2)
    assert provider.total_calls() == 2


def test_scripted_fail_twice_then_succeed(tmp_path):
    provider = ScriptedProvider(
        {"data": [TransportError("boom"), TransportError("boom"), "fine"]}
    )
    gateway = LlmGateway(
        provider,
        ResponseCache(tmp_path / "c"),
        GatewayConfig(max_attempts=3, backoff_base=0.0),
    )
    response = gateway.complete("data", "p", 0)
    assert response.text == "fine"
    assert response.attempts == 3


def test_transport_errors_exhaust_attempts(tmp_path):
    provider = ScriptedProvider({"data": [TransportError("boom")] * 5})
    gateway = LlmGateway(
        provider,
        ResponseCache(tmp_path / "c"),
        GatewayConfig(max_attempts=4, backoff_base=0.0),
    )
    with pytest.raises(TransportError) as exc_info:
        gateway.complete("data", "p", 0)
    assert exc_info.value.attempts == 4


def test_rate_limit_exhaustion_is_distinct(tmp_path):
    provider = ScriptedProvider({"data": [RateLimitError("slow down")] * 5})
    gateway = LlmGateway(
        provider,
        ResponseCache(tmp_path / "c"),
        GatewayConfig(max_attempts=2, backoff_base=0.0),
    )
    with pytest.raises(RateLimitExhaustedError):
        gateway.complete("data", "p", 0)


def test_backoff_is_exponential_and_capped(tmp_path):
    sleeps = []
    provider = ScriptedProvider({"data": [TransportError("x")] * 6})
    gateway = LlmGateway(
        provider,
        ResponseCache(tmp_path / "c"),
        GatewayConfig(max_attempts=6, backoff_base=0.5, backoff_cap=2.0),
        sleep=sleeps.append,
    )
    with pytest.raises(TransportError):
        gateway.complete("data", "p", 0)
    assert sleeps == [0.5, 1.0, 2.0, 2.0, 2.0]


def test_default_stage_temperatures():
    assert DEFAULT_TEMPERATURES["topic"] == 1.0
    assert DEFAULT_TEMPERATURES["data"] == 0.7
    assert DEFAULT_TEMPERATURES["code"] == 0.7
    assert DEFAULT_TEMPERATURES["instruction"] == 0.3
    assert GatewayConfig().temperature_for("point-edit") == 0.7


def test_warm_cache_never_contacts_provider_under_concurrency(tmp_path):
    provider = MockProvider()
    gateway = LlmGateway(provider, ResponseCache(tmp_path / "c"), GatewayConfig())
    for i in range(5):
        gateway.complete("topic", f"prompt {i}", i)
    warm_calls = provider.total_calls()
    errors = []

    def worker(i):
        try:
            response = gateway.complete("topic", f"prompt {i % 5}", i % 5)
            assert response.cached
        except Exception as exc:  # noqa: BLE001 - surfacing any failure
            errors.append(exc)

    threads = [threading.Thread(target=worker, args=(i,)) for i in range(40)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert not errors
    assert provider.total_calls() == warm_calls
