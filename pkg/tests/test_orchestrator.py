"""Batch orchestration: success paths, failure isolation, and determinism."""

from __future__ import annotations

import json
import threading

import pytest

from pixgen.errors import AllJobsFailedError, TransportError
from pixgen.gateway.cache import ResponseCache
from pixgen.gateway.client import GatewayConfig, LlmGateway
from pixgen.gateway.providers import MockProvider, ScriptedProvider
from pixgen.orchestrator import run_batch, run_point_batch
from pixgen.registry import GenerationQuery, load_registry
from pixgen.shard import load_manifest, validate_shard

from .conftest import make_deps

FAIL_SOURCE = "```fixture\nsize 300 280\nfail injected render fault\n```"


class FailInjectingProvider:
    """Mock provider whose first N code responses render a forced failure."""

    provider_id = "fail-inject"

    def __init__(self, failing_code_calls: int):
        self._mock = MockProvider()
        self._lock = threading.Lock()
        self._remaining = failing_code_calls

    def complete(self, prompt, *, model, temperature, top_p, sampling_seed, stage):
        if stage == "code":
            with self._lock:
                inject = self._remaining > 0
                if inject:
                    self._remaining -= 1
            if inject:
                return FAIL_SOURCE
        return self._mock.complete(
            prompt,
            model=model,
            temperature=temperature,
            top_p=top_p,
            sampling_seed=sampling_seed,
            stage=stage,
        )


def test_batch_produces_complete_records(tmp_path, fixture_deps, registry):
    query = GenerationQuery("line charts of farm yields", "charts", 5, 3)
    shard_path, report = run_batch(
        query, registry, fixture_deps, tmp_path / "shard", workers=2
    )
    assert report.succeeded == 5
    assert report.records_written == 5
    assert validate_shard(shard_path) == []
    records = load_manifest(shard_path)
    personas = {r["persona"] for r in records}
    topics = {r["topic"] for r in records}
    assert len(personas) > 1
    assert len(topics) > 1
    for record in records:
        assert record["query"] == "line charts of farm yields"
        assert record["provenance"]["code_model"] == "code-model"
        assert record["provenance"]["instruction_model"] == "instruction-model"
        assert set(record["provenance"]["prompt_hashes"]) == {
            "topic",
            "data",
            "code",
            "instruction",
        }
        assert isinstance(record["provenance"]["job_seed"], int)
        assert record["qa"]


def test_batch_report_written_inside_shard(tmp_path, fixture_deps, registry):
    query = GenerationQuery("tables", "tables", 4, 0)
    shard_path, _ = run_batch(
        query,
        registry,
        fixture_deps,
        tmp_path / "shard",
        workers=2,
        extra_config_echo={"count": 4},
    )
    payload = json.loads((shard_path / "report.json").read_text(encoding="utf-8"))
    assert payload["total_jobs"] == 4
    assert payload["config"] == {"count": 4}
    stats = json.loads((shard_path / "stats.json").read_text(encoding="utf-8"))
    assert stats["failures_by_stage"] == {}
    assert "cache_hit_rate" in stats


def test_manifest_identical_across_worker_counts(tmp_path, personas, registry):
    query = GenerationQuery("assorted diagrams", "diagrams", 6, 11)
    manifests = []
    for workers, name in ((1, "a"), (4, "b")):
        gateway = LlmGateway(
            MockProvider(), ResponseCache(tmp_path / f"cache-{name}"), GatewayConfig()
        )
        deps = make_deps(gateway, personas)
        shard_path, _ = run_batch(
            query, registry, deps, tmp_path / name, workers=workers
        )
        manifests.append((shard_path / "manifest.jsonl").read_bytes())
    assert manifests[0] == manifests[1]


def test_injected_render_failures_are_isolated(tmp_path, personas, registry):
    baseline_gateway = LlmGateway(
        MockProvider(), ResponseCache(tmp_path / "cache-base"), GatewayConfig()
    )
    query = GenerationQuery("pie charts", "charts", 10, 21)
    baseline_shard, _ = run_batch(
        query,
        registry,
        make_deps(baseline_gateway, personas),
        tmp_path / "baseline",
        workers=1,
    )
    baseline = {r["id"]: r for r in load_manifest(baseline_shard)}

    provider = FailInjectingProvider(failing_code_calls=2 * 3)
    gateway = LlmGateway(
        provider, ResponseCache(tmp_path / "cache-inj"), GatewayConfig()
    )
    shard_path, report = run_batch(
        query,
        registry,
        make_deps(gateway, personas),
        tmp_path / "injected",
        workers=1,
    )
    assert report.failed == 2
    assert report.failures_by_stage == {"code": 2}
    assert report.records_written == 8
    survivors = {r["id"]: r for r in load_manifest(shard_path)}
    assert set(survivors) <= set(baseline)
    assert len(baseline) - len(survivors) == 2
    for rid, record in survivors.items():
        assert record == baseline[rid]


def test_failed_job_workspaces_are_retained(tmp_path, personas, registry):
    provider = FailInjectingProvider(failing_code_calls=3)
    gateway = LlmGateway(
        provider, ResponseCache(tmp_path / "cache"), GatewayConfig()
    )
    query = GenerationQuery("bar charts", "charts", 3, 2)
    out = tmp_path / "out" / "shard"
    _, report = run_batch(
        query, registry, make_deps(gateway, personas), out, workers=1
    )
    assert report.failed == 1
    retained = out.parent / "shard-failures"
    failure_files = list(retained.rglob("failure.json"))
    assert len(failure_files) == 1
    details = json.loads(failure_files[0].read_text(encoding="utf-8"))
    assert details["stage"] == "code"
    assert details["attempts"] == 3
    assert "injected render fault" in details["stderr"]


def test_code_stage_exhaustion_reports_attempts(tmp_path, personas, registry):
    provider = FailInjectingProvider(failing_code_calls=10**6)
    gateway = LlmGateway(
        provider, ResponseCache(tmp_path / "cache"), GatewayConfig()
    )
    query = GenerationQuery("bar charts", "charts", 2, 5)
    with pytest.raises(AllJobsFailedError):
        run_batch(
            query, registry, make_deps(gateway, personas), tmp_path / "s", workers=1
        )


def test_transport_failures_surface_as_topic_stage(tmp_path, personas, registry):
    provider = ScriptedProvider({"topic": [TransportError("down")] * 12})
    gateway = LlmGateway(
        provider,
        ResponseCache(tmp_path / "cache"),
        GatewayConfig(max_attempts=1, backoff_base=0.0),
    )
    query = GenerationQuery("bar charts", "charts", 1, 5)
    with pytest.raises(AllJobsFailedError):
        run_batch(
            query, registry, make_deps(gateway, personas), tmp_path / "s", workers=1
        )


def test_point_batch_derives_records(tmp_path, fixture_deps, registry, personas):
    query = GenerationQuery("html dashboards", "charts", 6, 9)
    shard_path, _ = run_batch(
        query, registry, fixture_deps, tmp_path / "shard", workers=2
    )
    source_records = load_manifest(shard_path)
    eligible = [r for r in source_records if r["tool"] == "html"]
    assert eligible

    gateway = LlmGateway(
        MockProvider(), ResponseCache(tmp_path / "cache-p"), GatewayConfig()
    )
    point_shard, report = run_point_batch(
        shard_path,
        registry,
        make_deps(gateway, personas),
        out_dir=tmp_path / "points",
        tools=("html",),
        workers=2,
    )
    assert report.total_jobs == len(eligible)
    assert report.succeeded == len(eligible)
    assert validate_shard(point_shard) == []
    by_source = {r["id"]: r for r in source_records}
    for record in load_manifest(point_shard):
        assert record["category"] == "pointing"
        assert record["points"]
        source = by_source[record["provenance"]["source_record"]]
        assert record["code"] == source["code"]
        assert record["tool"] == source["tool"]
        assert (record["width"], record["height"]) == (
            source["width"],
            source["height"],
        )
        assert record["provenance"]["marker_color"] == [255, 0, 255]
        for annotation in record["points"]:
            for x, y in annotation["points"]:
                assert 0 <= x <= 100 and 0 <= y <= 100


def test_point_batch_requires_eligible_sources(tmp_path, fixture_deps, registry, personas):
    query = GenerationQuery("sheet music", "sheet-music", 2, 1)
    shard_path, _ = run_batch(
        query, registry, fixture_deps, tmp_path / "shard", workers=1
    )
    gateway = LlmGateway(
        MockProvider(), ResponseCache(tmp_path / "cache-p"), GatewayConfig()
    )
    with pytest.raises(AllJobsFailedError):
        run_point_batch(
            shard_path,
            registry,
            make_deps(gateway, personas),
            out_dir=tmp_path / "points",
            tools=("html",),
            workers=1,
        )


def test_pointing_category_generates_directly(tmp_path, fixture_deps, registry):
    query = GenerationQuery("forms to point at", "pointing", 3, 4)
    shard_path, report = run_batch(
        query, registry, fixture_deps, tmp_path / "shard", workers=2
    )
    assert report.records_written == 3
    assert validate_shard(shard_path) == []
    for record in load_manifest(shard_path):
        assert record["category"] == "pointing"
        assert record["pipeline_id"] == "pointing-html"
        assert record["points"]
        assert record["qa"] == []
        assert set(record["provenance"]["prompt_hashes"]) == {
            "topic",
            "data",
            "code",
            "point-edit",
        }
