"""Prompt template rendering and the bundled template set."""

from __future__ import annotations

import pytest

from pixgen.errors import ConfigError, MissingBindingError
from pixgen.gateway.templates import (
    PLACEHOLDERS,
    STAGES,
    PromptTemplate,
    load_stage_template,
    render_template,
    template_placeholders,
)
from pixgen.registry import load_registry


def test_single_substitution():
    template = PromptTemplate.of("topic", "My persona is: {PERSONA}")
    assert render_template(template, {"PERSONA": "a chef"}) == "My persona is: a chef"


def test_zero_placeholders_is_identity():
    template = PromptTemplate.of("topic", "no holes here")
    assert render_template(template, {}) == "no holes here"


def test_missing_binding_names_the_placeholder():
    template = PromptTemplate.of("data", "{PERSONA} wants {TOPIC}")
    with pytest.raises(MissingBindingError) as exc_info:
        render_template(template, {"PERSONA": "a chef"})
    assert exc_info.value.placeholder == "TOPIC"


def test_substitution_is_verbatim_not_recursive():
    template = PromptTemplate.of("data", "{TOPIC}")
    rendered = render_template(template, {"TOPIC": "{PERSONA} and {TOPIC}"})
    assert rendered == "{PERSONA} and {TOPIC}"


def test_unknown_brace_text_passes_through():
    template = PromptTemplate.of("code", "keep {this} and {DATA}")
    assert render_template(template, {"DATA": "x"}) == "keep {this} and x"


def test_placeholder_set_is_closed():
    assert PLACEHOLDERS == {
        "PERSONA",
        "TOPIC",
        "FIGURE_TYPE",
        "DATA",
        "CODE",
        "NUM_TOPICS",
    }
    assert STAGES == ("topic", "data", "code", "instruction", "point-edit")


def test_template_ids_are_stable_body_hashes():
    a = PromptTemplate.of("topic", "body")
    b = PromptTemplate.of("topic", "body")
    c = PromptTemplate.of("topic", "other body")
    assert a.id == b.id
    assert a.id != c.id


def test_unknown_stage_rejected():
    with pytest.raises(ConfigError):
        load_stage_template("render", "charts")
    with pytest.raises(ConfigError):
        load_stage_template("topic", "no_such_category_xyz")


BINDABLE = {
    "topic": {"PERSONA", "NUM_TOPICS", "FIGURE_TYPE"},
    "data": {"PERSONA", "TOPIC", "FIGURE_TYPE"},
    "code": {"DATA", "TOPIC", "FIGURE_TYPE"},
    "instruction": {"CODE", "DATA"},
    "point-edit": {"CODE", "DATA"},
}


def test_every_bundled_template_loads_and_binds():
    # Each registry spec's templates must exist and use only placeholders
    # the engine actually binds for that stage.
    registry = load_registry()
    for spec in registry.specs:
        for stage, name in spec.templates.items():
            key = None if stage == "point-edit" else name.split("_", 1)[1]
            template = load_stage_template(stage, key)
            used = template_placeholders(template)
            assert used <= BINDABLE[stage], (spec.id, stage, used)
            assert used, (spec.id, stage)
