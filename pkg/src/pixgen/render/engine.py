"""Render orchestration for one code artifact plus image validation.

Validation failures are values, not exceptions: the caller decides whether
a too-small or blank image fails the job, retries the code stage, or just
gets logged. Only genuinely broken outputs (missing or undecodable files)
raise.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import ConfigError, UndecodableImageError
from .adapters import ToolAdapter, build_adapter_registry
from .sandbox import SandboxPolicy


@dataclass(frozen=True)
class RenderedImage:
    """A decoded render output; format is always PNG."""

    path: Path
    width: int
    height: int


@dataclass(frozen=True)
class ImageConstraints:
    """Usability bounds for rendered images.

    blank_epsilon is the per-channel distance within which a pixel counts
    as "the background": the blank fraction is the share of pixels within
    epsilon of the modal color.
    """

    min_side: int = 256
    max_side: int = 4096
    max_blank_fraction: float = 0.98
    blank_epsilon: int = 8

    def __post_init__(self):
        if not (0 < self.min_side <= self.max_side):
            raise ConfigError("need 0 < min_side <= max_side")
        if not (0.0 < self.max_blank_fraction <= 1.0):
            raise ConfigError("max_blank_fraction must be in (0, 1]")


@dataclass(frozen=True)
class ValidationFailure:
    """Names the violated constraint and the measured value."""

    constraint: str
    measured: float
    limit: float

    def __str__(self) -> str:
        return f"{self.constraint}: measured {self.measured:g}, limit {self.limit:g}"


def decode_pixels(path: str | Path) -> np.ndarray:
    """Decode an image file into an (H, W, 3) uint8 RGB array."""
    from PIL import Image, UnidentifiedImageError

    path = Path(path)
    try:
        with Image.open(path) as img:
            return np.asarray(img.convert("RGB"), dtype=np.uint8)
    except (UnidentifiedImageError, OSError, ValueError) as exc:
        raise UndecodableImageError(f"cannot decode {path.name}: {exc}") from exc


_decode = decode_pixels


def blank_fraction(pixels: np.ndarray, epsilon: int) -> float:
    """Fraction of pixels within epsilon (per channel) of the modal color."""
    flat = pixels.reshape(-1, 3).astype(np.uint32)
    packed = (flat[:, 0] << 16) | (flat[:, 1] << 8) | flat[:, 2]
    values, counts = np.unique(packed, return_counts=True)
    modal = values[int(np.argmax(counts))]
    modal_rgb = np.array(
        [(modal >> 16) & 0xFF, (modal >> 8) & 0xFF, modal & 0xFF], dtype=np.int16
    )
    near = np.abs(flat.astype(np.int16) - modal_rgb).max(axis=1) <= epsilon
    return float(near.mean())


def validate_image(
    img: RenderedImage, constraints: ImageConstraints = ImageConstraints()
) -> ValidationFailure | None:
    """Check usability bounds; None means the image passes."""
    short, long = sorted((img.width, img.height))
    if short < constraints.min_side:
        return ValidationFailure("min-side", short, constraints.min_side)
    if long > constraints.max_side:
        return ValidationFailure("max-side", long, constraints.max_side)
    fraction = blank_fraction(_decode(img.path), constraints.blank_epsilon)
    if fraction > constraints.max_blank_fraction:
        return ValidationFailure(
            "blank-fraction", fraction, constraints.max_blank_fraction
        )
    return None


def validate_image_file(
    path: str | Path, constraints: ImageConstraints = ImageConstraints()
) -> ValidationFailure | None:
    """validate_image for a bare file path."""
    return validate_image(load_rendered(path), constraints)


def load_rendered(path: str | Path) -> RenderedImage:
    """Decode a PNG on disk into a RenderedImage."""
    path = Path(path)
    pixels = _decode(path)
    return RenderedImage(path=path, width=pixels.shape[1], height=pixels.shape[0])


def render_source(
    tool: str,
    source: str,
    workdir: str | Path,
    policy: SandboxPolicy = SandboxPolicy(),
    registry: dict[str, ToolAdapter] | None = None,
) -> RenderedImage:
    """Render source with the named tool inside workdir.

    Raises ToolMissingError / CompileError / RenderTimeoutError /
    NoOutputImageError / UndecodableImageError; validation is separate.
    """
    adapters = registry if registry is not None else build_adapter_registry()
    if tool not in adapters:
        raise ConfigError(f"unknown render tool {tool!r}")
    adapter = adapters[tool]
    adapter.require_available()
    workdir = Path(workdir)
    workdir.mkdir(parents=True, exist_ok=True)
    output = adapter.render(source, workdir, policy)
    return load_rendered(output)
