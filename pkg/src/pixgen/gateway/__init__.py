"""LLM access layer: prompt templates, response cache, providers, parsers."""

from .cache import ResponseCache, cache_key
from .client import DEFAULT_TEMPERATURES, GatewayConfig, LlmGateway, LlmResponse
from .parsers import (
    QaTriplet,
    extract_code_block,
    format_qa_triplets,
    parse_json_payload,
    parse_qa_triplets,
    parse_topics,
)
from .providers import HttpProvider, MockProvider, Provider, ScriptedProvider
from .templates import (
    PLACEHOLDERS,
    STAGES,
    PromptTemplate,
    load_stage_template,
    render_template,
    template_placeholders,
)

__all__ = [
    "DEFAULT_TEMPERATURES",
    "GatewayConfig",
    "HttpProvider",
    "LlmGateway",
    "LlmResponse",
    "MockProvider",
    "PLACEHOLDERS",
    "PromptTemplate",
    "Provider",
    "QaTriplet",
    "ResponseCache",
    "STAGES",
    "ScriptedProvider",
    "cache_key",
    "extract_code_block",
    "format_qa_triplets",
    "load_stage_template",
    "parse_json_payload",
    "parse_qa_triplets",
    "parse_topics",
    "render_template",
    "template_placeholders",
]
