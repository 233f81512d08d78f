"""Command-line interface.

Subcommands: generate, point, validate, stats, diversity, gallery.
Machine-readable output goes to stdout (or files); diagnostics go to
stderr. Exit codes: 0 success, 1 operation failure, 2 invalid
configuration. Credentials are read from the environment only.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .config import RunConfig, build_config
from .diversity import MockEmbedder, compute_report
from .errors import (
    ConfigError,
    EmbedderUnavailableError,
    PixgenError,
    UnknownCategoryError,
)
from .gallery import write_gallery
from .gateway.cache import ResponseCache
from .gateway.client import GatewayConfig, LlmGateway
from .gateway.providers import HttpProvider, MockProvider
from .orchestrator import BatchDeps, run_batch, run_point_batch
from .personas import load_fixture_personas, load_personas
from .registry import GenerationQuery, load_registry
from .render.adapters import build_adapter_registry
from .render.engine import ImageConstraints
from .render.sandbox import SandboxPolicy
from .shard import compute_stats, load_manifest, validate_shard

logger = logging.getLogger("pixgen")

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2


def _add_config_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="JSON config file; flags override it")
    sub.add_argument("--cache-dir", dest="cache_dir", help="LLM response cache dir")
    sub.add_argument(
        "--mock-provider",
        dest="mock_provider",
        action="store_const",
        const=True,
        default=None,
        help="use the bundled deterministic mock LLM (no network)",
    )
    sub.add_argument(
        "--fixture-renderer",
        dest="fixture_renderer",
        action="store_const",
        const=True,
        default=None,
        help="render all code with the hermetic fixture tool",
    )
    sub.add_argument("--workers", type=int, dest="workers")
    sub.add_argument("--stage-retries", type=int, dest="stage_retries")
    sub.add_argument("--wall-timeout", type=float, dest="wall_timeout")
    sub.add_argument("--registry", dest="registry_path", help="registry JSONL path")
    sub.add_argument("--personas", dest="persona_path", help="persona corpus path")
    sub.add_argument("--code-model", dest="code_model")
    sub.add_argument("--instruction-model", dest="instruction_model")


def _overrides_from(args: argparse.Namespace, *names: str) -> dict:
    overrides = {}
    for name in names:
        value = getattr(args, name, None)
        if value is not None:
            overrides[name] = value
    if getattr(args, "mock_provider", None):
        overrides["provider"] = "mock"
    return overrides


_SHARED_OVERRIDE_KEYS = (
    "cache_dir",
    "fixture_renderer",
    "workers",
    "stage_retries",
    "wall_timeout",
    "registry_path",
    "persona_path",
    "code_model",
    "instruction_model",
)


def _build_deps(config: RunConfig) -> BatchDeps:
    if config.provider == "mock":
        provider = MockProvider()
    else:
        provider = HttpProvider()
    cache = ResponseCache(config.cache_dir) if config.cache_dir else None
    gateway = LlmGateway(
        provider,
        cache,
        GatewayConfig(
            code_model=config.code_model,
            instruction_model=config.instruction_model,
            top_p=config.top_p,
            max_attempts=config.llm_attempts,
            max_concurrency=config.max_concurrency,
        ),
    )
    personas = (
        load_personas(config.persona_path)
        if config.persona_path
        else load_fixture_personas()
    )
    return BatchDeps(
        gateway=gateway,
        personas=personas,
        adapters=build_adapter_registry(),
        policy=SandboxPolicy(
            wall_timeout=config.wall_timeout,
            max_output_bytes=config.max_output_bytes,
            network_disabled=config.network_disabled,
        ),
        constraints=ImageConstraints(
            min_side=config.min_side,
            max_side=config.max_side,
            max_blank_fraction=config.max_blank_fraction,
        ),
        num_topics=config.num_topics,
        stage_retries=config.stage_retries,
        fixture_renderer=config.fixture_renderer,
    )


def cmd_generate(args: argparse.Namespace) -> int:
    overrides = _overrides_from(
        args, "query", "category", "count", "seed", "out_dir", *_SHARED_OVERRIDE_KEYS
    )
    config = build_config(args.config, overrides)
    query = GenerationQuery(
        text=config.query,
        category=config.category,
        count=config.count,
        seed=config.seed,
    )
    registry = load_registry(config.registry_path)
    deps = _build_deps(config)
    shard_path, report = run_batch(
        query,
        registry,
        deps,
        out_dir=config.out_dir,
        workers=config.workers,
        extra_config_echo=config.to_dict(),
    )
    logger.info("wrote shard %s (%d records)", shard_path, report.records_written)
    print(json.dumps(report.to_dict(), indent=2))
    return EXIT_OK


def cmd_point(args: argparse.Namespace) -> int:
    overrides = _overrides_from(args, "out_dir", *_SHARED_OVERRIDE_KEYS)
    overrides.setdefault("query", "pointing")
    config = build_config(args.config, overrides)
    registry = load_registry(config.registry_path)
    deps = _build_deps(config)
    tools = tuple(t.strip() for t in args.tools.split(",") if t.strip())
    if not tools:
        raise ConfigError("--tools must name at least one tool")
    shard_path, report = run_point_batch(
        args.shard,
        registry,
        deps,
        out_dir=config.out_dir,
        tools=tools,
        workers=config.workers,
        extra_config_echo=config.to_dict(),
    )
    logger.info(
        "wrote pointing shard %s (%d records)", shard_path, report.records_written
    )
    print(json.dumps(report.to_dict(), indent=2))
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    violations = validate_shard(args.shard)
    for violation in violations:
        print(
            json.dumps(
                {
                    "kind": violation.kind,
                    "record_id": violation.record_id,
                    "detail": violation.detail,
                }
            )
        )
    if violations:
        logger.error("%d violations in %s", len(violations), args.shard)
        return EXIT_FAILURE
    logger.info("shard %s is valid", args.shard)
    return EXIT_OK


def cmd_stats(args: argparse.Namespace) -> int:
    records = load_manifest(args.shard)
    print(json.dumps(compute_stats(records), indent=2))
    return EXIT_OK


def cmd_diversity(args: argparse.Namespace) -> int:
    if not args.mock_embedder:
        raise EmbedderUnavailableError(
            "no embedding provider is bundled; pass --mock-embedder for the "
            "deterministic fixture embedder"
        )
    records = load_manifest(args.shard)
    report = compute_report(
        records,
        Path(args.shard),
        MockEmbedder(),
        sample_size=args.sample_size,
        seed=args.seed,
    )
    print(json.dumps(report.to_dict(), indent=2))
    return EXIT_OK


def cmd_gallery(args: argparse.Namespace) -> int:
    out = args.out or str(Path(args.shard) / "gallery.html")
    path = write_gallery(
        args.shard, out, sample_size=args.sample_size, seed=args.seed
    )
    logger.info("wrote gallery %s", path)
    print(str(path))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pixgen",
        description="Generate synthetic text-rich image datasets from a text query.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    commands = parser.add_subparsers(dest="command", required=True)

    generate = commands.add_parser(
        "generate", help="run the full pipeline for a query"
    )
    generate.add_argument("-q", "--query", help="what to generate, in plain words")
    generate.add_argument("--category", help="pipeline category, or 'auto'")
    generate.add_argument("-n", "--count", type=int, help="target record count")
    generate.add_argument("--seed", type=int, help="reproducibility seed")
    generate.add_argument("--out", dest="out_dir", help="output shard directory")
    _add_config_flags(generate)
    generate.set_defaults(func=cmd_generate)

    point = commands.add_parser(
        "point", help="derive pointing annotations from an existing shard"
    )
    point.add_argument("shard", help="source shard directory")
    point.add_argument("--out", dest="out_dir", help="output shard directory")
    point.add_argument(
        "--tools",
        default="html",
        help="comma-separated source tools eligible for point edits",
    )
    _add_config_flags(point)
    point.set_defaults(func=cmd_point)

    validate = commands.add_parser("validate", help="check a shard on disk")
    validate.add_argument("shard")
    validate.set_defaults(func=cmd_validate)

    stats = commands.add_parser("stats", help="print manifest-derived counts")
    stats.add_argument("shard")
    stats.set_defaults(func=cmd_stats)

    diversity = commands.add_parser(
        "diversity", help="image/text diversity of a shard sample"
    )
    diversity.add_argument("shard")
    diversity.add_argument("--sample-size", type=int, default=10000)
    diversity.add_argument("--seed", type=int, default=0)
    diversity.add_argument(
        "--mock-embedder",
        action="store_true",
        help="use the deterministic fixture embedder",
    )
    diversity.set_defaults(func=cmd_diversity)

    gallery = commands.add_parser("gallery", help="write a static sample page")
    gallery.add_argument("shard")
    gallery.add_argument("--out", help="output HTML path")
    gallery.add_argument("--sample-size", type=int, default=24)
    gallery.add_argument("--seed", type=int, default=0)
    gallery.set_defaults(func=cmd_gallery)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (ConfigError, UnknownCategoryError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PixgenError as exc:
        print(f"error [{exc.kind}]: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
