"""Batch orchestration: run the staged pipeline per job, in parallel.

Every job walks topic -> data -> code -> instruction (point-edit instead of
instruction for pointing pipelines). A failing stage is retried with a
fresh attempt-derived sampling seed; stages upstream of the failure keep
their values. One job's failure never touches other jobs: results land in
private workspaces and the shard is assembled single-threaded at the end.
"""

from __future__ import annotations

import json
import logging
import shutil
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .errors import (
    AllJobsFailedError,
    MarkerCollisionError,
    ParseError,
    PixgenError,
    ProviderError,
    RegistryError,
    StageExhaustedError,
    RenderError,
    SizeMismatchError,
    ToolMissingError,
    TopicCountMismatchError,
)
from .gateway.client import LlmGateway
from .gateway.parsers import extract_code_block, parse_json_payload, parse_topics
from .gateway.templates import PromptTemplate, load_stage_template, render_template
from .instructions import generate_instructions
from .personas import Persona, PersonaStore
from .pointing import (
    MarkerSpec,
    build_point_annotation,
    choose_marker,
    generate_point_edit,
)
from .registry import GenerationQuery, PipelineRegistry, PipelineSpec, select_pipelines
from .render.adapters import ToolAdapter, build_adapter_registry
from .render.engine import (
    ImageConstraints,
    RenderedImage,
    decode_pixels,
    render_source,
    validate_image,
)
from .render.sandbox import SandboxPolicy
from .seeds import derived_record_id, derived_seed
from .seeds import job_seed as derive_job_seed
from .seeds import pick_index, record_id, stage_seed, text_digest
from .shard import REPORT_NAME, DatasetRecord, dedup, load_manifest, write_shard

logger = logging.getLogger(__name__)

FIXTURE_TOOL = "fixture"

# Deterministic-given-the-inputs failures; retrying with a fresh sampling
# seed cannot change them, so they end the stage immediately.
_NON_RETRYABLE = (ToolMissingError, MarkerCollisionError)

_RETRYABLE = (ParseError, ProviderError, RenderError, SizeMismatchError)


@dataclass(frozen=True)
class StageOutcome:
    """One completed stage of a job's log."""

    stage: str
    attempts: int
    cache_hit: bool
    duration_ms: float


@dataclass(frozen=True)
class JobFailure:
    """A job that produced no record, with the failing stage attached."""

    job_index: int
    pipeline_id: str
    stage: str
    attempts: int
    error_kind: str
    message: str


@dataclass
class JobSuccess:
    record: DatasetRecord
    image_source: Path
    stage_log: list[StageOutcome]
    qa_dropped: int


@dataclass
class BatchReport:
    """Operational summary of one run_batch call.

    Timing fields are genuinely nondeterministic; everything else is stable
    given (query, config, warm cache).
    """

    total_jobs: int = 0
    succeeded: int = 0
    failed: int = 0
    records_written: int = 0
    dedup_dropped: int = 0
    failures_by_stage: dict = field(default_factory=dict)
    failures_by_kind: dict = field(default_factory=dict)
    per_pipeline: dict = field(default_factory=dict)
    qa_count_distribution: dict = field(default_factory=dict)
    dropped_triplet_records: int = 0
    cache_hit_rate: float = 0.0
    wall_time_s: float = 0.0

    def to_dict(self) -> dict:
        return {
            "total_jobs": self.total_jobs,
            "succeeded": self.succeeded,
            "failed": self.failed,
            "records_written": self.records_written,
            "dedup_dropped": self.dedup_dropped,
            "failures_by_stage": dict(sorted(self.failures_by_stage.items())),
            "failures_by_kind": dict(sorted(self.failures_by_kind.items())),
            "per_pipeline": {
                k: dict(v) for k, v in sorted(self.per_pipeline.items())
            },
            "qa_count_distribution": {
                str(k): v for k, v in sorted(self.qa_count_distribution.items())
            },
            "dropped_triplet_records": self.dropped_triplet_records,
            "cache_hit_rate": self.cache_hit_rate,
            "wall_time_s": self.wall_time_s,
        }


@dataclass
class BatchDeps:
    """Shared read-only handles every job uses."""

    gateway: LlmGateway
    personas: PersonaStore
    adapters: dict[str, ToolAdapter]
    policy: SandboxPolicy = SandboxPolicy()
    constraints: ImageConstraints = ImageConstraints()
    num_topics: int = 10
    stage_retries: int = 3
    fixture_renderer: bool = False


def _load_templates(spec: PipelineSpec) -> dict[str, PromptTemplate]:
    """Resolve a spec's template names into loaded templates per stage."""
    templates = {}
    for stage, name in spec.templates.items():
        if stage == "point-edit":
            templates[stage] = load_stage_template("point-edit")
        else:
            # Registry names are "<stage>_<key>"; the loader wants the key.
            prefix = f"{stage}_"
            if not name.startswith(prefix):
                from .errors import RegistryError

                raise RegistryError(
                    f"template ref {name!r} does not match stage {stage!r}"
                )
            templates[stage] = load_stage_template(stage, name[len(prefix):])
    return templates


def run_job(
    job_index: int,
    spec: PipelineSpec,
    query: GenerationQuery,
    deps: BatchDeps,
    workspace_root: Path,
    staging_dir: Path,
) -> JobSuccess | JobFailure:
    """Execute one pipeline job end to end; never raises for job trouble."""
    seed = derive_job_seed(query.seed, job_index)
    persona = deps.personas.sample(seed)
    figure_type = spec.figure_types[
        pick_index(seed, "figure-type", len(spec.figure_types))
    ]
    job_dir = workspace_root / f"job-{job_index:05d}-{spec.id}"
    job_dir.mkdir(parents=True, exist_ok=True)
    try:
        templates = _load_templates(spec)
        success = _run_stages(
            job_index, spec, query, deps, seed, persona, figure_type,
            templates, job_dir, staging_dir,
        )
    except StageExhaustedError as failure:
        _retain_failure(job_dir, workspace_root, failure)
        return JobFailure(
            job_index=job_index,
            pipeline_id=spec.id,
            stage=failure.stage,
            attempts=failure.attempts,
            error_kind=failure.cause.kind,
            message=str(failure.cause),
        )
    shutil.rmtree(job_dir, ignore_errors=True)
    return success


def _retain_failure(job_dir: Path, workspace_root: Path, failure: StageExhaustedError):
    failures_root = workspace_root / "failures"
    failures_root.mkdir(exist_ok=True)
    note = job_dir / "failure.json"
    stderr = getattr(failure.cause, "stderr", "")
    note.write_text(
        json.dumps(
            {
                "stage": failure.stage,
                "attempts": failure.attempts,
                "error_kind": failure.cause.kind,
                "message": str(failure.cause),
                "stderr": stderr,
            },
            indent=2,
        ),
        encoding="utf-8",
    )
    shutil.move(str(job_dir), str(failures_root / job_dir.name))


def _run_stages(
    job_index: int,
    spec: PipelineSpec,
    query: GenerationQuery,
    deps: BatchDeps,
    seed: int,
    persona: Persona,
    figure_type: str,
    templates: dict[str, PromptTemplate],
    job_dir: Path,
    staging_dir: Path,
) -> JobSuccess:
    gateway = deps.gateway
    stage_log: list[StageOutcome] = []
    prompt_hashes: dict[str, str] = {}
    render_tool = FIXTURE_TOOL if deps.fixture_renderer else spec.tool

    def attempt_stage(stage: str, runner) -> object:
        """Retry loop shared by all stages.

        runner(sampling_seed, attempt) -> (value, cache_hit). Retryable
        errors consume an attempt; non-retryable ones end the stage at
        once. Seeds differ per attempt so a retry resamples the model.
        """
        last: PixgenError | None = None
        for attempt in range(deps.stage_retries):
            sampling_seed = stage_seed(seed, stage, attempt)
            started = time.monotonic()
            try:
                value, cache_hit = runner(sampling_seed, attempt)
            except _NON_RETRYABLE as exc:
                raise StageExhaustedError(stage, attempt + 1, exc)
            except _RETRYABLE as exc:
                logger.debug(
                    "job %d stage %s attempt %d failed: %s",
                    job_index, stage, attempt + 1, exc,
                )
                last = exc
                continue
            stage_log.append(
                StageOutcome(
                    stage=stage,
                    attempts=attempt + 1,
                    cache_hit=cache_hit,
                    duration_ms=(time.monotonic() - started) * 1000.0,
                )
            )
            return value
        raise StageExhaustedError(stage, deps.stage_retries, last)

    # --- topic ---------------------------------------------------------
    def run_topic(sampling_seed: int, attempt: int):
        prompt = render_template(
            templates["topic"],
            {
                "PERSONA": persona.text,
                "NUM_TOPICS": str(deps.num_topics),
                "FIGURE_TYPE": figure_type,
            },
        )
        prompt_hashes["topic"] = text_digest(prompt)
        response = gateway.complete("topic", prompt, sampling_seed)
        try:
            topics = parse_topics(response.text, expected=deps.num_topics)
        except TopicCountMismatchError as exc:
            # A short or long list is still usable; only zero topics is a
            # failure, and that raises empty-output before this point.
            topics = exc.parsed
        choice = topics[pick_index(seed, "topic", len(topics))]
        return choice, response.cached

    topic = attempt_stage("topic", run_topic)

    # --- data ----------------------------------------------------------
    def run_data(sampling_seed: int, attempt: int):
        prompt = render_template(
            templates["data"],
            {
                "PERSONA": persona.text,
                "TOPIC": topic,
                "FIGURE_TYPE": figure_type,
            },
        )
        prompt_hashes["data"] = text_digest(prompt)
        response = gateway.complete("data", prompt, sampling_seed)
        payload = parse_json_payload(response.text)
        return json.dumps(payload, indent=2, ensure_ascii=False), response.cached

    data_json = attempt_stage("data", run_data)

    # --- code (generation + render + validation) ------------------------
    def run_code(sampling_seed: int, attempt: int):
        prompt = render_template(
            templates["code"],
            {
                "DATA": data_json,
                "TOPIC": topic,
                "FIGURE_TYPE": figure_type,
            },
        )
        prompt_hashes["code"] = text_digest(prompt)
        response = gateway.complete("code", prompt, sampling_seed)
        code, warning = extract_code_block(response.text, spec.fence_tag)
        if warning:
            logger.debug("job %d: %s", job_index, warning)
        render_dir = job_dir / f"render-{attempt}"
        image = render_source(
            render_tool, code, render_dir, deps.policy, deps.adapters
        )
        failure = validate_image(image, deps.constraints)
        if failure is not None:
            raise RenderError(f"rendered image rejected: {failure}")
        return (code, image), response.cached

    code, image = attempt_stage("code", run_code)

    # --- final stage: instruction or point-edit --------------------------
    qa = ()
    points = ()
    qa_dropped = 0
    marker: MarkerSpec | None = None

    if spec.final_stage == "instruction":

        def run_instruction(sampling_seed: int, attempt: int):
            instruction_set, prompt, cached = generate_instructions(
                gateway,
                templates["instruction"],
                code=code,
                data_json=data_json,
                sampling_seed=sampling_seed,
            )
            prompt_hashes["instruction"] = text_digest(prompt)
            return instruction_set, cached

        instruction_set = attempt_stage("instruction", run_instruction)
        qa = instruction_set.triplets
        qa_dropped = instruction_set.dropped
    else:
        original_pixels = decode_pixels(image.path)

        def run_point_edit(sampling_seed: int, attempt: int):
            nonlocal marker
            marker = choose_marker(original_pixels)
            question, edited, prompt, cached = generate_point_edit(
                gateway,
                templates["point-edit"],
                code=code,
                fence_tag=spec.fence_tag,
                marker=marker,
                sampling_seed=sampling_seed,
            )
            prompt_hashes["point-edit"] = text_digest(prompt)
            edited_dir = job_dir / f"point-render-{attempt}"
            edited_image = render_source(
                render_tool, edited, edited_dir, deps.policy, deps.adapters
            )
            annotation = build_point_annotation(
                question,
                decode_pixels(edited_image.path),
                (image.width, image.height),
                marker,
            )
            return annotation, cached

        annotation = attempt_stage("point-edit", run_point_edit)
        points = (annotation,)

    # --- record assembly --------------------------------------------------
    rid = record_id(query.seed, job_index, spec.id)
    staged = staging_dir / f"{rid}.png"
    shutil.copyfile(image.path, staged)
    provenance = {
        "code_model": gateway.config.code_model,
        "instruction_model": gateway.config.instruction_model,
        "prompt_hashes": {
            stage: prompt_hashes[stage]
            for stage in ("topic", "data", "code", spec.final_stage)
        },
        "job_seed": seed,
    }
    if marker is not None:
        provenance["marker_color"] = list(marker.color)
    record = DatasetRecord(
        id=rid,
        category=spec.category,
        pipeline_id=spec.id,
        tool=spec.tool,
        persona=persona.text,
        topic=topic,
        query=query.text,
        code=code,
        image_path=f"images/{rid}.png",
        width=image.width,
        height=image.height,
        qa=qa,
        points=points,
        provenance=provenance,
    )
    return JobSuccess(
        record=record,
        image_source=staged,
        stage_log=stage_log,
        qa_dropped=qa_dropped,
    )


def run_batch(
    query: GenerationQuery,
    registry: PipelineRegistry,
    deps: BatchDeps,
    out_dir: str | Path,
    workers: int = 4,
    extra_config_echo: dict | None = None,
) -> tuple[Path, BatchReport]:
    """Run all jobs for a query and pack the results into a shard.

    Individual job failures are reported, never raised; only an entirely
    failed batch (zero records) raises AllJobsFailedError. The shard write
    is atomic, so an interrupted run leaves no partial shard behind.
    """
    started = time.monotonic()
    out_dir = Path(out_dir)
    allocation = select_pipelines(query, registry)
    jobs: list[tuple[int, PipelineSpec]] = []
    next_index = 0
    for spec, count in allocation:
        for _ in range(count):
            jobs.append((next_index, spec))
            next_index += 1

    report = BatchReport(total_jobs=len(jobs))
    workspace_root = Path(tempfile.mkdtemp(prefix="pixgen-batch-"))
    staging_dir = workspace_root / "staging"
    staging_dir.mkdir()

    try:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(
                pool.map(
                    lambda item: run_job(
                        item[0], item[1], query, deps, workspace_root, staging_dir
                    ),
                    jobs,
                )
            )

        successes = [o for o in outcomes if isinstance(o, JobSuccess)]
        failures = [o for o in outcomes if isinstance(o, JobFailure)]

        for (job_index, spec), outcome in zip(jobs, outcomes):
            slot = report.per_pipeline.setdefault(
                spec.id, {"succeeded": 0, "failed": 0}
            )
            if isinstance(outcome, JobSuccess):
                slot["succeeded"] += 1
            else:
                slot["failed"] += 1
                report.failures_by_stage[outcome.stage] = (
                    report.failures_by_stage.get(outcome.stage, 0) + 1
                )
                report.failures_by_kind[outcome.error_kind] = (
                    report.failures_by_kind.get(outcome.error_kind, 0) + 1
                )
                logger.warning(
                    "job %d (%s) failed at %s after %d attempts: %s",
                    outcome.job_index, outcome.pipeline_id, outcome.stage,
                    outcome.attempts, outcome.message,
                )

        report.succeeded = len(successes)
        report.failed = len(failures)
        report.dropped_triplet_records = sum(s.qa_dropped for s in successes)
        for success in successes:
            n = len(success.record.qa)
            report.qa_count_distribution[n] = (
                report.qa_count_distribution.get(n, 0) + 1
            )

        if not successes:
            raise AllJobsFailedError(
                f"all {len(jobs)} jobs failed; nothing to write"
            )

        records, dup_dropped = dedup([s.record for s in successes])
        report.dedup_dropped = dup_dropped
        report.cache_hit_rate = deps.gateway.cache_hit_rate()
        image_sources = {s.record.id: s.image_source for s in successes}
        extra_stats = {
            "failures_by_stage": dict(sorted(report.failures_by_stage.items())),
            "cache_hit_rate": report.cache_hit_rate,
            "dedup_dropped": dup_dropped,
        }
        shard_path = write_shard(records, out_dir, image_sources, extra_stats)
        report.records_written = len(records)
        report.wall_time_s = time.monotonic() - started

        payload = report.to_dict()
        if extra_config_echo:
            payload["config"] = extra_config_echo
        with open(shard_path / REPORT_NAME, "w", encoding="utf-8") as handle:
            json.dump(payload, handle, indent=2)
            handle.write("\n")

        has_failures = any((workspace_root / "failures").glob("*"))
        if has_failures:
            retained = out_dir.parent / f"{out_dir.name}-failures"
            if retained.exists():
                shutil.rmtree(retained)
            shutil.move(str(workspace_root / "failures"), str(retained))
            logger.warning("failed job workspaces retained under %s", retained)
        return shard_path, report
    finally:
        shutil.rmtree(workspace_root, ignore_errors=True)


POINT_PURPOSE = "pointing"


def _run_point_job(
    source: dict,
    shard_dir: Path,
    spec: PipelineSpec,
    template: PromptTemplate,
    deps: BatchDeps,
    workspace_root: Path,
    staging_dir: Path,
) -> JobSuccess | JobFailure:
    """Derive one pointing record from an existing QA record."""
    source_id = source["id"]
    seed = derived_seed(source_id, POINT_PURPOSE)
    render_tool = FIXTURE_TOOL if deps.fixture_renderer else source["tool"]
    job_dir = workspace_root / f"point-{source_id}"
    job_dir.mkdir(parents=True, exist_ok=True)
    original_path = shard_dir / source["image_path"]

    last: PixgenError | None = None
    stage = "point-edit"
    try:
        original_pixels = decode_pixels(original_path)
        marker = choose_marker(original_pixels)
        fence_tag = FIXTURE_TOOL if deps.fixture_renderer else source["tool"]
        for attempt in range(deps.stage_retries):
            sampling_seed = stage_seed(seed, stage, attempt)
            started = time.monotonic()
            try:
                question, edited, prompt, cached = generate_point_edit(
                    deps.gateway,
                    template,
                    code=source["code"],
                    fence_tag=fence_tag,
                    marker=marker,
                    sampling_seed=sampling_seed,
                )
                edited_image = render_source(
                    render_tool,
                    edited,
                    job_dir / f"render-{attempt}",
                    deps.policy,
                    deps.adapters,
                )
                annotation = build_point_annotation(
                    question,
                    decode_pixels(edited_image.path),
                    (source["width"], source["height"]),
                    marker,
                )
            except _NON_RETRYABLE as exc:
                raise StageExhaustedError(stage, attempt + 1, exc)
            except _RETRYABLE as exc:
                last = exc
                continue
            rid = derived_record_id(source_id, POINT_PURPOSE)
            staged = staging_dir / f"{rid}.png"
            shutil.copyfile(original_path, staged)
            record = DatasetRecord(
                id=rid,
                category="pointing",
                pipeline_id=spec.id,
                tool=source["tool"],
                persona=source["persona"],
                topic=source["topic"],
                query=source["query"],
                code=source["code"],
                image_path=f"images/{rid}.png",
                width=source["width"],
                height=source["height"],
                qa=(),
                points=(annotation,),
                provenance={
                    "code_model": deps.gateway.config.code_model,
                    "instruction_model": deps.gateway.config.instruction_model,
                    "prompt_hashes": {stage: text_digest(prompt)},
                    "job_seed": seed,
                    "marker_color": list(marker.color),
                    "source_record": source_id,
                },
            )
            shutil.rmtree(job_dir, ignore_errors=True)
            return JobSuccess(
                record=record,
                image_source=staged,
                stage_log=[
                    StageOutcome(
                        stage=stage,
                        attempts=attempt + 1,
                        cache_hit=cached,
                        duration_ms=(time.monotonic() - started) * 1000.0,
                    )
                ],
                qa_dropped=0,
            )
        raise StageExhaustedError(stage, deps.stage_retries, last)
    except StageExhaustedError as failure:
        _retain_failure(job_dir, workspace_root, failure)
        return JobFailure(
            job_index=-1,
            pipeline_id=spec.id,
            stage=failure.stage,
            attempts=failure.attempts,
            error_kind=failure.cause.kind,
            message=f"{source_id}: {failure.cause}",
        )
    except PixgenError as exc:
        # Marker choice or original decode failed before any attempt ran.
        failure = StageExhaustedError(stage, 0, exc)
        _retain_failure(job_dir, workspace_root, failure)
        return JobFailure(
            job_index=-1,
            pipeline_id=spec.id,
            stage=stage,
            attempts=0,
            error_kind=exc.kind,
            message=f"{source_id}: {exc}",
        )


def run_point_batch(
    shard_dir: str | Path,
    registry: PipelineRegistry,
    deps: BatchDeps,
    out_dir: str | Path,
    tools: tuple[str, ...] = ("html",),
    workers: int = 4,
    extra_config_echo: dict | None = None,
) -> tuple[Path, BatchReport]:
    """Derive a pointing shard from an existing QA shard's code artifacts.

    Eligible source records are non-pointing records whose tool is in
    ``tools``; each yields at most one pointing record with the original
    image and the extracted, normalized marker coordinates.
    """
    started = time.monotonic()
    shard_dir = Path(shard_dir)
    out_dir = Path(out_dir)
    pointing_specs = registry.pointing_specs
    if not pointing_specs:
        raise RegistryError("registry has no pointing pipeline")
    spec = pointing_specs[0]
    template = load_stage_template("point-edit")
    sources = [
        r
        for r in load_manifest(shard_dir)
        if r["category"] != "pointing" and r["tool"] in tools
    ]
    if not sources:
        raise AllJobsFailedError(
            f"no records in {shard_dir} match tools {sorted(tools)}"
        )

    report = BatchReport(total_jobs=len(sources))
    workspace_root = Path(tempfile.mkdtemp(prefix="pixgen-point-"))
    staging_dir = workspace_root / "staging"
    staging_dir.mkdir()
    try:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(
                pool.map(
                    lambda source: _run_point_job(
                        source, shard_dir, spec, template, deps,
                        workspace_root, staging_dir,
                    ),
                    sources,
                )
            )
        successes = [o for o in outcomes if isinstance(o, JobSuccess)]
        failures = [o for o in outcomes if isinstance(o, JobFailure)]
        report.succeeded = len(successes)
        report.failed = len(failures)
        for outcome in failures:
            report.failures_by_stage[outcome.stage] = (
                report.failures_by_stage.get(outcome.stage, 0) + 1
            )
            report.failures_by_kind[outcome.error_kind] = (
                report.failures_by_kind.get(outcome.error_kind, 0) + 1
            )
        slot = {"succeeded": report.succeeded, "failed": report.failed}
        report.per_pipeline[spec.id] = slot
        if not successes:
            raise AllJobsFailedError(
                f"all {len(sources)} pointing jobs failed; nothing to write"
            )
        records, dup_dropped = dedup([s.record for s in successes])
        report.dedup_dropped = dup_dropped
        report.cache_hit_rate = deps.gateway.cache_hit_rate()
        image_sources = {s.record.id: s.image_source for s in successes}
        extra_stats = {
            "failures_by_stage": dict(sorted(report.failures_by_stage.items())),
            "cache_hit_rate": report.cache_hit_rate,
            "dedup_dropped": dup_dropped,
        }
        shard_path = write_shard(records, out_dir, image_sources, extra_stats)
        report.records_written = len(records)
        report.wall_time_s = time.monotonic() - started
        payload = report.to_dict()
        if extra_config_echo:
            payload["config"] = extra_config_echo
        with open(shard_path / REPORT_NAME, "w", encoding="utf-8") as handle:
            json.dump(payload, handle, indent=2)
            handle.write("\n")
        return shard_path, report
    finally:
        shutil.rmtree(workspace_root, ignore_errors=True)
