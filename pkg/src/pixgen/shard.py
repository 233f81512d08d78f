"""Shard assembly: deterministic manifest, image files, stats, validation.

A shard is one output directory:

    manifest.jsonl   one record per line, sorted by record id
    images/          one PNG per record, named <record-id>.png
    stats.json       counts derived from the manifest plus batch-level info
    report.json      (written by the batch runner; timing allowed here)

The manifest is the public data contract: fixed key order, compact ASCII
JSON, relative paths only, so identical record sets produce byte-identical
manifests on any machine.
"""

from __future__ import annotations

import json
import os
import shutil
import tempfile
from dataclasses import dataclass
from pathlib import Path

from .errors import (
    DuplicateRecordIdError,
    EmptyShardError,
    OutputExistsError,
    OutputUnwritableError,
    ShardError,
)
from .pointing import PointAnnotation
from .gateway.parsers import QaTriplet
from .seeds import text_digest

FORMAT_VERSION = 1
MANIFEST_NAME = "manifest.jsonl"
IMAGES_DIR = "images"
STATS_NAME = "stats.json"
REPORT_NAME = "report.json"

# The documented manifest schema: exactly these keys, in exactly this order.
RECORD_KEYS = (
    "id",
    "category",
    "pipeline_id",
    "tool",
    "persona",
    "topic",
    "query",
    "code",
    "image_path",
    "width",
    "height",
    "qa",
    "points",
    "provenance",
)


@dataclass(frozen=True)
class DatasetRecord:
    """One complete dataset entry, ready for packing."""

    id: str
    category: str
    pipeline_id: str
    tool: str
    persona: str
    topic: str
    query: str
    code: str
    image_path: str
    width: int
    height: int
    qa: tuple[QaTriplet, ...]
    points: tuple[PointAnnotation, ...]
    provenance: dict

    def code_digest(self) -> str:
        return text_digest(self.code)

    def to_json_dict(self) -> dict:
        qa = [
            {"question": t.question, "explanation": t.explanation, "answer": t.answer}
            for t in self.qa
        ]
        points = [
            {
                "question": p.question,
                "points": [list(xy) for xy in p.points],
                "pixel_points": [list(xy) for xy in p.pixel_points],
                "image_size": list(p.image_size),
            }
            for p in self.points
        ]
        body = {
            "id": self.id,
            "category": self.category,
            "pipeline_id": self.pipeline_id,
            "tool": self.tool,
            "persona": self.persona,
            "topic": self.topic,
            "query": self.query,
            "code": self.code,
            "image_path": self.image_path,
            "width": self.width,
            "height": self.height,
            "qa": qa,
            "points": points,
            "provenance": self.provenance,
        }
        assert tuple(body) == RECORD_KEYS
        return body


def record_line(record: DatasetRecord) -> str:
    return json.dumps(record.to_json_dict(), ensure_ascii=True, separators=(",", ":"))


def dedup(records: list[DatasetRecord]) -> tuple[list[DatasetRecord], int]:
    """Drop records repeating an earlier record's exact code.

    "Earlier" means smaller record id: the result is id-sorted and stable,
    so dedup commutes with any input ordering.
    """
    kept: list[DatasetRecord] = []
    seen_digests: set[str] = set()
    dropped = 0
    for record in sorted(records, key=lambda r: r.id):
        digest = record.code_digest()
        if digest in seen_digests:
            dropped += 1
            continue
        seen_digests.add(digest)
        kept.append(record)
    return kept, dropped


def compute_stats(records: list[DatasetRecord | dict]) -> dict:
    """Manifest-derived counts; input records may be packed or parsed."""
    dicts = [r.to_json_dict() if isinstance(r, DatasetRecord) else r for r in records]
    per_category: dict[str, int] = {}
    per_pipeline: dict[str, int] = {}
    qa_counts = []
    for r in dicts:
        per_category[r["category"]] = per_category.get(r["category"], 0) + 1
        per_pipeline[r["pipeline_id"]] = per_pipeline.get(r["pipeline_id"], 0) + 1
        qa_counts.append(len(r["qa"]))
    total_triplets = sum(qa_counts)
    return {
        "records": len(dicts),
        "per_category": dict(sorted(per_category.items())),
        "per_pipeline": dict(sorted(per_pipeline.items())),
        "qa_triplets": total_triplets,
        "qa_per_image_mean": (total_triplets / len(dicts)) if dicts else 0.0,
    }


def write_shard(
    records: list[DatasetRecord],
    out_dir: str | Path,
    image_sources: dict[str, Path],
    extra_stats: dict | None = None,
) -> Path:
    """Write records as a shard directory; atomic via temp-dir rename.

    image_sources maps record id to the PNG produced for it; files are
    copied under images/. extra_stats carries batch-level fields (failure
    counts, cache-hit rate) that cannot be derived from the records.
    """
    out_dir = Path(out_dir)
    if out_dir.exists() and (not out_dir.is_dir() or any(out_dir.iterdir())):
        raise OutputExistsError(f"output path {out_dir} exists and is not empty")
    if not records:
        raise EmptyShardError("refusing to write a shard with zero records")
    ordered = sorted(records, key=lambda r: r.id)
    ids = [r.id for r in ordered]
    if len(set(ids)) != len(ids):
        dupes = sorted({i for i in ids if ids.count(i) > 1})
        raise DuplicateRecordIdError(f"duplicate record ids: {dupes}")
    missing = [r.id for r in ordered if r.id not in image_sources]
    if missing:
        raise ShardError(f"no image source for records: {missing}")

    parent = out_dir.parent
    parent.mkdir(parents=True, exist_ok=True)
    staging = Path(tempfile.mkdtemp(prefix=f".{out_dir.name}-", dir=parent))
    try:
        (staging / IMAGES_DIR).mkdir()
        with open(staging / MANIFEST_NAME, "w", encoding="utf-8") as manifest:
            for record in ordered:
                shutil.copyfile(
                    image_sources[record.id],
                    staging / IMAGES_DIR / f"{record.id}.png",
                )
                manifest.write(record_line(record) + "\n")
        stats = {"format_version": FORMAT_VERSION}
        stats.update(compute_stats(ordered))
        if extra_stats:
            stats.update(extra_stats)
        with open(staging / STATS_NAME, "w", encoding="utf-8") as handle:
            json.dump(stats, handle, indent=2)
            handle.write("\n")
        if out_dir.exists():
            out_dir.rmdir()
        os.rename(staging, out_dir)
    except OSError as exc:
        shutil.rmtree(staging, ignore_errors=True)
        raise OutputUnwritableError(f"cannot write shard at {out_dir}: {exc}") from exc
    except BaseException:
        shutil.rmtree(staging, ignore_errors=True)
        raise
    return out_dir


def load_manifest(shard_dir: str | Path) -> list[dict]:
    """Parse manifest lines; raises ShardError on structural problems."""
    manifest_path = Path(shard_dir) / MANIFEST_NAME
    try:
        text = manifest_path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ShardError(f"cannot read {manifest_path}: {exc}") from exc
    records = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            records.append(json.loads(line))
        except json.JSONDecodeError as exc:
            raise ShardError(f"manifest line {line_no}: bad JSON: {exc}") from exc
    return records


@dataclass(frozen=True)
class Violation:
    """One validate_shard finding."""

    kind: str
    record_id: str
    detail: str


def validate_shard(shard_dir: str | Path) -> list[Violation]:
    """Check a shard on disk; empty result means the shard passes."""
    from .render.engine import decode_pixels

    shard_dir = Path(shard_dir)
    violations: list[Violation] = []
    try:
        records = load_manifest(shard_dir)
    except ShardError as exc:
        return [Violation("manifest-unreadable", "", str(exc))]
    if not records:
        return [Violation("empty-manifest", "", "manifest has no records")]

    seen_ids: set[str] = set()
    referenced: set[str] = set()
    previous_id = ""
    for record in records:
        rid = str(record.get("id", ""))
        if tuple(record.keys()) != RECORD_KEYS:
            violations.append(
                Violation(
                    "schema-keys",
                    rid,
                    f"keys {list(record.keys())} != documented order",
                )
            )
            continue
        if rid in seen_ids:
            violations.append(Violation("duplicate-id", rid, "id repeats"))
        seen_ids.add(rid)
        if rid < previous_id:
            violations.append(Violation("manifest-order", rid, "ids not sorted"))
        previous_id = rid

        image_path = record["image_path"]
        if Path(image_path).is_absolute() or ".." in Path(image_path).parts:
            violations.append(
                Violation("image-path", rid, f"path escapes shard: {image_path}")
            )
            continue
        full = shard_dir / image_path
        referenced.add(image_path)
        if not full.is_file():
            violations.append(Violation("missing-image", rid, image_path))
        else:
            try:
                pixels = decode_pixels(full)
            except Exception as exc:
                violations.append(Violation("undecodable-image", rid, str(exc)))
            else:
                h, w = pixels.shape[:2]
                if (w, h) != (record["width"], record["height"]):
                    violations.append(
                        Violation(
                            "size-mismatch",
                            rid,
                            f"manifest says {record['width']}x{record['height']}, "
                            f"file is {w}x{h}",
                        )
                    )

        if record["category"] == "pointing":
            if not record["points"]:
                violations.append(Violation("no-points", rid, "pointing record"))
        elif not record["qa"]:
            violations.append(Violation("no-qa", rid, "qa pipeline record"))
        for annotation in record["points"]:
            for x, y in annotation["points"]:
                if not (0 <= x <= 100 and 0 <= y <= 100):
                    violations.append(
                        Violation("coordinate-range", rid, f"({x}, {y})")
                    )

    images_dir = shard_dir / IMAGES_DIR
    if images_dir.is_dir():
        on_disk = {
            str(p.relative_to(shard_dir)) for p in images_dir.iterdir() if p.is_file()
        }
        for stray in sorted(on_disk - referenced):
            violations.append(Violation("unreferenced-image", "", stray))
    return violations
