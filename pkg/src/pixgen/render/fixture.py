"""Deterministic declarative rasterizer used as the hermetic render tool.

Real rendering tools (TeX engines, browsers, Graphviz) are external binaries
that tests cannot rely on. The fixture tool closes that gap: a tiny drawing
language rendered with pure integer/float math, so identical source always
yields pixel-identical PNGs on every platform. It exercises the full
adapter path (subprocess, timeout, stderr capture, validation) without any
third-party binary.

Source format: one directive per line; blank lines and ``#`` comments are
ignored. Coordinates are pixels, colors are 0-255 RGB.

    size W H              canvas size; must precede drawing directives
    background R G B      fill the canvas (default white)
    rect X Y W H R G B    filled axis-aligned rectangle, clipped to canvas
    disk CX CY RAD R G B  filled circle with anti-aliased edge
    frame T R G B         border of thickness T just inside the canvas edge
    bars SEED N           deterministic bar chart filling the canvas
    sleep SECONDS         pause mid-render (timeout tests)
    fail MESSAGE...       abort with MESSAGE (failure-path tests)
"""

from __future__ import annotations

import hashlib
import time

import numpy as np

DEFAULT_SIZE = (320, 240)
MAX_SIDE = 8192
_SUPERSAMPLE = 4

_BAR_PALETTE = (
    (31, 119, 180),
    (255, 127, 14),
    (44, 160, 44),
    (214, 39, 40),
    (148, 103, 189),
    (140, 86, 75),
)


class FixtureFailure(Exception):
    """Raised by the ``fail`` directive; the CLI maps it to a nonzero exit."""


class FixtureSourceError(ValueError):
    """Malformed fixture source (unknown directive, bad arity, bad number)."""


def _unit_hash(seed: int, index: int) -> float:
    """Deterministic pseudo-random float in [0, 1)."""
    digest = hashlib.sha256(f"pixgen:bars:{seed}:{index}".encode()).digest()
    return int.from_bytes(digest[:8], "big") / 2**64


def _parse_numbers(parts: list[str], spec: str, line_no: int) -> list[float]:
    values = []
    for part in parts:
        try:
            values.append(float(part))
        except ValueError:
            raise FixtureSourceError(
                f"line {line_no}: {spec}: bad number {part!r}"
            ) from None
    return values


def _color(values: list[float], line_no: int) -> np.ndarray:
    rgb = np.array(values, dtype=np.float64)
    if np.any(rgb < 0) or np.any(rgb > 255):
        raise FixtureSourceError(f"line {line_no}: color out of 0-255 range")
    return rgb


def _draw_rect(canvas, x, y, w, h, color):
    height, width = canvas.shape[:2]
    x0, y0 = max(int(round(x)), 0), max(int(round(y)), 0)
    x1 = min(int(round(x + w)), width)
    y1 = min(int(round(y + h)), height)
    if x0 < x1 and y0 < y1:
        canvas[y0:y1, x0:x1] = color


def _draw_disk(canvas, cx, cy, radius, color):
    """Coverage blend over a 4x4 subpixel grid; edges come out anti-aliased."""
    height, width = canvas.shape[:2]
    x0 = max(int(np.floor(cx - radius)) - 1, 0)
    y0 = max(int(np.floor(cy - radius)) - 1, 0)
    x1 = min(int(np.ceil(cx + radius)) + 2, width)
    y1 = min(int(np.ceil(cy + radius)) + 2, height)
    if x0 >= x1 or y0 >= y1:
        return
    offsets = (np.arange(_SUPERSAMPLE) + 0.5) / _SUPERSAMPLE
    xs = x0 + np.arange(x1 - x0)
    ys = y0 + np.arange(y1 - y0)
    sub_x = (xs[:, None] + offsets[None, :]).reshape(-1)
    sub_y = (ys[:, None] + offsets[None, :]).reshape(-1)
    inside = (
        (sub_x[None, :] - cx) ** 2 + (sub_y[:, None] - cy) ** 2
    ) <= radius**2
    coverage = (
        inside.reshape(len(ys), _SUPERSAMPLE, len(xs), _SUPERSAMPLE)
        .mean(axis=(1, 3))
    )
    patch = canvas[y0:y1, x0:x1].astype(np.float64)
    blended = patch * (1.0 - coverage[:, :, None]) + color * coverage[:, :, None]
    canvas[y0:y1, x0:x1] = blended


def _draw_frame(canvas, thickness, color):
    t = int(round(thickness))
    if t <= 0:
        return
    canvas[:t, :] = color
    canvas[-t:, :] = color
    canvas[:, :t] = color
    canvas[:, -t:] = color


def _draw_bars(canvas, seed, count):
    """Bar chart with a plot frame; heights come from the seeded hash."""
    height, width = canvas.shape[:2]
    margin_x, margin_y = max(width // 10, 4), max(height // 10, 4)
    plot_w = width - 2 * margin_x
    plot_h = height - 2 * margin_y
    axis_color = np.array((40, 40, 40), dtype=np.float64)
    _draw_rect(canvas, margin_x - 2, margin_y - 2, plot_w + 4, 2, axis_color)
    _draw_rect(canvas, margin_x - 2, height - margin_y, plot_w + 4, 2, axis_color)
    _draw_rect(canvas, margin_x - 2, margin_y - 2, 2, plot_h + 4, axis_color)
    _draw_rect(canvas, width - margin_x, margin_y - 2, 2, plot_h + 4, axis_color)
    slot = plot_w / count
    bar_w = max(slot * 0.7, 1.0)
    for i in range(count):
        frac = 0.15 + 0.8 * _unit_hash(seed, i)
        bar_h = frac * plot_h
        x = margin_x + i * slot + (slot - bar_w) / 2
        y = height - margin_y - bar_h
        color = np.array(_BAR_PALETTE[i % len(_BAR_PALETTE)], dtype=np.float64)
        _draw_rect(canvas, x, y, bar_w, bar_h, color)


def render_fixture_source(source: str) -> np.ndarray:
    """Interpret fixture source into an (H, W, 3) uint8 array."""
    width, height = DEFAULT_SIZE
    canvas: np.ndarray | None = None

    def materialize() -> np.ndarray:
        nonlocal canvas
        if canvas is None:
            canvas = np.full((height, width, 3), 255.0, dtype=np.float64)
        return canvas

    for line_no, raw in enumerate(source.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        op, *parts = line.split()
        op = op.lower()
        if op == "size":
            if canvas is not None:
                raise FixtureSourceError(
                    f"line {line_no}: size must precede drawing directives"
                )
            if len(parts) != 2:
                _bad_arity("size W H", line_no)
            w, h = _parse_numbers(parts, "size", line_no)
            width, height = int(w), int(h)
            if not (1 <= width <= MAX_SIDE and 1 <= height <= MAX_SIDE):
                raise FixtureSourceError(
                    f"line {line_no}: size must be within 1..{MAX_SIDE}"
                )
        elif op == "background":
            if len(parts) != 3:
                _bad_arity("background R G B", line_no)
            materialize()[:, :] = _color(
                _parse_numbers(parts, "background", line_no), line_no
            )
        elif op == "rect":
            if len(parts) != 7:
                _bad_arity("rect X Y W H R G B", line_no)
            nums = _parse_numbers(parts, "rect", line_no)
            _draw_rect(materialize(), *nums[:4], _color(nums[4:], line_no))
        elif op == "disk":
            if len(parts) != 6:
                _bad_arity("disk CX CY RAD R G B", line_no)
            nums = _parse_numbers(parts, "disk", line_no)
            _draw_disk(materialize(), *nums[:3], _color(nums[3:], line_no))
        elif op == "frame":
            if len(parts) != 4:
                _bad_arity("frame T R G B", line_no)
            nums = _parse_numbers(parts, "frame", line_no)
            _draw_frame(materialize(), nums[0], _color(nums[1:], line_no))
        elif op == "bars":
            if len(parts) != 2:
                _bad_arity("bars SEED N", line_no)
            seed, count = (int(v) for v in _parse_numbers(parts, "bars", line_no))
            if count < 1:
                raise FixtureSourceError(f"line {line_no}: bars needs N >= 1")
            _draw_bars(materialize(), seed, count)
        elif op == "sleep":
            if len(parts) != 1:
                _bad_arity("sleep SECONDS", line_no)
            time.sleep(_parse_numbers(parts, "sleep", line_no)[0])
        elif op == "fail":
            raise FixtureFailure(" ".join(parts) or "fail directive reached")
        else:
            raise FixtureSourceError(f"line {line_no}: unknown directive {op!r}")

    return np.clip(np.rint(materialize()), 0, 255).astype(np.uint8)


def _bad_arity(spec: str, line_no: int):
    raise FixtureSourceError(f"line {line_no}: expected '{spec}'")
