"""Static gallery page for eyeballing a shard.

Writes one self-contained HTML file (images embedded as base64) showing a
seeded sample of records with their questions and points. Display only:
nothing here feeds back into generation.
"""

from __future__ import annotations

import base64
import html
import random
from pathlib import Path

from .shard import load_manifest

PAGE_STYLE = """
body { font-family: sans-serif; margin: 2em; background: #fafafa; }
.card { background: white; border: 1px solid #ddd; border-radius: 6px;
        padding: 1em; margin-bottom: 1.5em; max-width: 64em; }
.card img { max-width: 24em; max-height: 24em; border: 1px solid #eee; }
.meta { color: #666; font-size: 0.85em; margin-bottom: 0.5em; }
.qa { margin: 0.4em 0; }
.q { font-weight: bold; }
.points { color: #b0b; }
"""


def _image_data_uri(path: Path) -> str:
    encoded = base64.b64encode(path.read_bytes()).decode("ascii")
    return f"data:image/png;base64,{encoded}"


def _record_card(record: dict, shard_dir: Path) -> str:
    image_path = shard_dir / record["image_path"]
    parts = [
        '<div class="card">',
        '<div class="meta">'
        f"{html.escape(record['id'])} · {html.escape(record['category'])} · "
        f"{html.escape(record['pipeline_id'])} · tool {html.escape(record['tool'])}"
        "</div>",
        f"<div class='meta'>persona: {html.escape(record['persona'])}<br>"
        f"topic: {html.escape(record['topic'])}</div>",
    ]
    if image_path.is_file():
        parts.append(f'<img src="{_image_data_uri(image_path)}" alt="render">')
    else:
        parts.append("<p><em>image missing</em></p>")
    for qa in record.get("qa", []):
        parts.append(
            '<div class="qa">'
            f'<span class="q">{html.escape(qa["question"])}</span><br>'
            f"{html.escape(qa['explanation'])}<br>"
            f"<b>Answer:</b> {html.escape(qa['answer'])}"
            "</div>"
        )
    for annotation in record.get("points", []):
        coords = ", ".join(f"({x:.2f}, {y:.2f})" for x, y in annotation["points"])
        parts.append(
            '<div class="qa points">'
            f'<span class="q">{html.escape(annotation["question"])}</span><br>'
            f"points: {html.escape(coords)}"
            "</div>"
        )
    parts.append("</div>")
    return "\n".join(parts)


def write_gallery(
    shard_dir: str | Path,
    out_path: str | Path,
    sample_size: int = 24,
    seed: int = 0,
) -> Path:
    """Render a sample of the shard into a standalone HTML page."""
    shard_dir = Path(shard_dir)
    out_path = Path(out_path)
    records = load_manifest(shard_dir)
    k = min(sample_size, len(records))
    rng = random.Random(seed)
    sample = [records[i] for i in sorted(rng.sample(range(len(records)), k))]
    cards = "\n".join(_record_card(record, shard_dir) for record in sample)
    page = (
        "<!DOCTYPE html>\n<html><head><meta charset='utf-8'>"
        f"<title>shard gallery</title><style>{PAGE_STYLE}</style></head>\n"
        f"<body><h1>Shard gallery</h1>"
        f"<p>{k} of {len(records)} records, sample seed {seed}.</p>\n"
        f"{cards}\n</body></html>\n"
    )
    out_path.write_text(page, encoding="utf-8")
    return out_path
