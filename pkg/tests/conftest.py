"""Shared fixtures: a hermetic gateway, registry, and batch dependencies.

Everything here runs offline. The mock provider answers from bundled
per-stage fixture files and the fixture renderer rasterizes the tiny
declarative drawing language, so no test needs credentials, network,
or external binaries.
"""

from __future__ import annotations

import pytest

from pixgen.gateway.cache import ResponseCache
from pixgen.gateway.client import GatewayConfig, LlmGateway
from pixgen.gateway.providers import MockProvider
from pixgen.orchestrator import BatchDeps
from pixgen.personas import load_fixture_personas
from pixgen.registry import load_registry
from pixgen.render.adapters import build_adapter_registry
from pixgen.render.engine import ImageConstraints
from pixgen.render.sandbox import SandboxPolicy


@pytest.fixture(scope="session")
def registry():
    return load_registry()


@pytest.fixture(scope="session")
def personas():
    return load_fixture_personas()


@pytest.fixture()
def mock_gateway(tmp_path):
    cache = ResponseCache(tmp_path / "cache")
    return LlmGateway(MockProvider(), cache, GatewayConfig())


def make_deps(gateway, personas, **kwargs) -> BatchDeps:
    defaults = dict(
        gateway=gateway,
        personas=personas,
        adapters=build_adapter_registry(),
        policy=SandboxPolicy(wall_timeout=20.0),
        constraints=ImageConstraints(),
        fixture_renderer=True,
    )
    defaults.update(kwargs)
    return BatchDeps(**defaults)


@pytest.fixture()
def fixture_deps(mock_gateway, personas):
    return make_deps(mock_gateway, personas)
