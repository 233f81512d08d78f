"""Pipeline registry: which (category, tool) pipelines exist and how a
query picks among them.

The shipped registry is a JSONL data file, one pipeline per line, loaded
and validated here. Selection is deterministic: an explicit category wins,
otherwise a keyword table resolves one from the query text, and counts are
split across the category's pipelines by weight with a largest-remainder
rule.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .errors import ConfigError, RegistryError, UnknownCategoryError

QA_CATEGORIES = (
    "charts",
    "documents",
    "tables",
    "diagrams",
    "math",
    "vector-graphics",
    "sheet-music",
    "circuits",
    "chemical-structures",
)
POINTING_CATEGORY = "pointing"

AUTO_CATEGORY = "auto"

# Scanned top to bottom; the first category with a keyword hit wins. A query
# matching nothing falls back to "documents": free-form requests ("book
# cover", "menu", "flyer") are most often document-like.
FALLBACK_CATEGORY = "documents"
_KEYWORD_TABLE: tuple[tuple[str, tuple[str, ...]], ...] = (
    ("charts", ("chart", "plot", "histogram", "scatter", "bar graph", "pie")),
    ("tables", ("table", "spreadsheet", "timetable", "schedule")),
    ("diagrams", ("diagram", "flowchart", "graph", "tree", "network", "mind map")),
    ("math", ("math", "equation", "formula", "theorem", "proof", "calculus")),
    (
        "chemical-structures",
        ("chemical", "molecule", "compound", "chemistry", "reaction"),
    ),
    ("circuits", ("circuit", "schematic", "wiring", "resistor", "amplifier")),
    ("sheet-music", ("music", "sheet", "score", "melody", "song", "notation")),
    ("vector-graphics", ("icon", "logo", "vector", "illustration", "sticker")),
    ("documents", ("document", "letter", "resume", "cover", "report", "form")),
)

_REQUIRED_KEYS = ("id", "category", "tool", "weight", "fence_tag", "templates")
_QA_TEMPLATE_KEYS = frozenset({"topic", "data", "code", "instruction"})
_POINTING_TEMPLATE_KEYS = frozenset({"topic", "data", "code", "point-edit"})


@dataclass(frozen=True)
class GenerationQuery:
    """The user's request: what to make, how many, and the seed."""

    text: str
    category: str = AUTO_CATEGORY
    count: int = 1
    seed: int = 0

    def __post_init__(self):
        if not self.text.strip():
            raise ConfigError("query text must be non-empty")
        if self.count < 1:
            raise ConfigError("query count must be >= 1")


@dataclass(frozen=True)
class PipelineSpec:
    """One generation pipeline: a (category, tool) pair with its prompts."""

    id: str
    category: str
    tool: str
    weight: float
    fence_tag: str
    templates: dict[str, str]
    figure_types: tuple[str, ...]

    @property
    def is_pointing(self) -> bool:
        return self.category == POINTING_CATEGORY

    @property
    def final_stage(self) -> str:
        return "point-edit" if self.is_pointing else "instruction"


@dataclass(frozen=True)
class PipelineRegistry:
    """All loaded specs with a category index."""

    specs: tuple[PipelineSpec, ...]
    category_index: dict[str, tuple[str, ...]] = field(default_factory=dict)

    def __post_init__(self):
        index: dict[str, list[str]] = {}
        for spec in self.specs:
            index.setdefault(spec.category, []).append(spec.id)
        frozen = {cat: tuple(sorted(ids)) for cat, ids in index.items()}
        object.__setattr__(self, "category_index", frozen)

    def by_id(self, spec_id: str) -> PipelineSpec:
        for spec in self.specs:
            if spec.id == spec_id:
                return spec
        raise RegistryError(f"no pipeline with id {spec_id!r}")

    def in_category(self, category: str) -> list[PipelineSpec]:
        if category not in self.category_index:
            raise UnknownCategoryError(f"no pipelines in category {category!r}")
        return [self.by_id(spec_id) for spec_id in self.category_index[category]]

    @property
    def qa_specs(self) -> list[PipelineSpec]:
        return [s for s in self.specs if not s.is_pointing]

    @property
    def pointing_specs(self) -> list[PipelineSpec]:
        return [s for s in self.specs if s.is_pointing]

    @property
    def tools(self) -> frozenset[str]:
        return frozenset(s.tool for s in self.specs)

    @property
    def qa_categories(self) -> frozenset[str]:
        return frozenset(s.category for s in self.qa_specs)


def _validate_spec(raw: dict, line_no: int) -> PipelineSpec:
    for key in _REQUIRED_KEYS:
        if key not in raw:
            raise RegistryError(f"registry line {line_no}: missing key {key!r}")
    category = raw["category"]
    if category not in QA_CATEGORIES and category != POINTING_CATEGORY:
        raise RegistryError(
            f"registry line {line_no}: unknown category {category!r}"
        )
    weight = float(raw["weight"])
    if weight < 0:
        raise RegistryError(f"registry line {line_no}: negative weight")
    template_keys = frozenset(raw["templates"])
    expected = (
        _POINTING_TEMPLATE_KEYS
        if category == POINTING_CATEGORY
        else _QA_TEMPLATE_KEYS
    )
    if template_keys != expected:
        raise RegistryError(
            f"registry line {line_no}: template keys {sorted(template_keys)} "
            f"!= expected {sorted(expected)}"
        )
    figure_types = tuple(raw.get("figure_types", ()))
    if not figure_types:
        raise RegistryError(f"registry line {line_no}: empty figure_types")
    return PipelineSpec(
        id=raw["id"],
        category=category,
        tool=raw["tool"],
        weight=weight,
        fence_tag=raw["fence_tag"],
        templates=dict(raw["templates"]),
        figure_types=figure_types,
    )


def load_registry(path: str | Path | None = None) -> PipelineRegistry:
    """Load and validate a pipeline registry JSONL file.

    With no path, loads the registry bundled with the package.
    """
    if path is None:
        ref = resources.files("pixgen").joinpath("data", "registry.jsonl")
        text = ref.read_text(encoding="utf-8")
    else:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise RegistryError(f"cannot read registry {path}: {exc}") from exc
    specs = []
    seen_ids = set()
    for line_no, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            raw = json.loads(line)
        except json.JSONDecodeError as exc:
            raise RegistryError(f"registry line {line_no}: bad JSON: {exc}") from exc
        spec = _validate_spec(raw, line_no)
        if spec.id in seen_ids:
            raise RegistryError(f"registry line {line_no}: duplicate id {spec.id!r}")
        seen_ids.add(spec.id)
        specs.append(spec)
    if not specs:
        raise RegistryError("registry has no pipelines")
    return PipelineRegistry(specs=tuple(specs))


def resolve_category(query_text: str) -> str:
    """Map free query text onto a category via the keyword table."""
    lowered = query_text.lower()
    for category, keywords in _KEYWORD_TABLE:
        for keyword in keywords:
            # Optional plural "s" so "charts"/"tables" hit; full boundaries
            # otherwise, so "pie" does not hit "piece".
            if re.search(rf"\b{re.escape(keyword)}s?\b", lowered):
                return category
    return FALLBACK_CATEGORY


def select_pipelines(
    query: GenerationQuery, registry: PipelineRegistry
) -> list[tuple[PipelineSpec, int]]:
    """Split query.count across the matching category's pipelines.

    Counts are proportional to spec weights using the largest-remainder
    method; remainder slots go to the largest fractional parts with ties
    broken toward the lexicographically smaller spec id. Specs that end up
    with zero records are dropped from the result.
    """
    category = (
        resolve_category(query.text)
        if query.category == AUTO_CATEGORY
        else query.category
    )
    specs = sorted(registry.in_category(category), key=lambda s: s.id)
    total_weight = sum(s.weight for s in specs)
    if total_weight <= 0:
        raise RegistryError(f"category {category!r} has zero total weight")
    quotas = [query.count * s.weight / total_weight for s in specs]
    counts = [int(q) for q in quotas]
    remainder = query.count - sum(counts)
    order = sorted(
        range(len(specs)),
        key=lambda i: (-(quotas[i] - counts[i]), specs[i].id),
    )
    for i in order[:remainder]:
        counts[i] += 1
    return [(spec, n) for spec, n in zip(specs, counts) if n > 0]
