"""Prompt template loading and placeholder substitution.

Templates are plain text files bundled as package data, one per
(stage, category-or-tool) pair. The placeholder vocabulary is fixed: only
the names in PLACEHOLDERS are ever substituted, written as ``{NAME}``.
Any other brace pair in a template (JSON examples, code snippets) passes
through untouched, so templates never need escaping.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources
from typing import Mapping

from ..errors import ConfigError, MissingBindingError
from ..seeds import text_digest

STAGES = ("topic", "data", "code", "instruction", "point-edit")

PLACEHOLDERS = frozenset(
    {"PERSONA", "TOPIC", "FIGURE_TYPE", "DATA", "CODE", "NUM_TOPICS"}
)

_PLACEHOLDER_RE = re.compile(
    r"\{(" + "|".join(sorted(PLACEHOLDERS)) + r")\}"
)


@dataclass(frozen=True)
class PromptTemplate:
    """A stage template with a stable content hash for provenance."""

    stage: str
    body: str
    id: str

    @classmethod
    def of(cls, stage: str, body: str) -> "PromptTemplate":
        return cls(stage=stage, body=body, id=text_digest(body))


def template_placeholders(template: str | PromptTemplate) -> frozenset[str]:
    """Names from the fixed vocabulary that appear in a template."""
    body = template.body if isinstance(template, PromptTemplate) else template
    return frozenset(_PLACEHOLDER_RE.findall(body))


def render_template(
    template: str | PromptTemplate, bindings: Mapping[str, str]
) -> str:
    """Substitute placeholder occurrences with their bound values.

    Every placeholder present in the template must be bound; extra bindings
    are ignored. Bound values are inserted verbatim (no recursive expansion),
    so a value containing ``{DATA}`` stays literal.
    """
    body = template.body if isinstance(template, PromptTemplate) else template
    missing = template_placeholders(body) - set(bindings)
    if missing:
        raise MissingBindingError(sorted(missing)[0])

    def _sub(match: re.Match[str]) -> str:
        return str(bindings[match.group(1)])

    return _PLACEHOLDER_RE.sub(_sub, body)


def _template_resource(name: str):
    return resources.files("pixgen").joinpath("data", "templates", f"{name}.txt")


def load_stage_template(stage: str, key: str | None = None) -> PromptTemplate:
    """Load the template for a pipeline stage.

    topic, data and instruction templates are keyed by category id; code
    templates by tool id; the point-edit stage has a single template and
    takes no key.
    """
    if stage not in STAGES:
        raise ConfigError(f"unknown stage {stage!r}, expected one of {STAGES}")
    if stage == "point-edit":
        name = "point_edit"
    else:
        if not key:
            raise ConfigError(f"stage {stage!r} template needs a key")
        name = f"{stage}_{key}"
    ref = _template_resource(name)
    try:
        body = ref.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ConfigError(f"no template {name}.txt for stage {stage!r}") from None
    return PromptTemplate.of(stage, body)
