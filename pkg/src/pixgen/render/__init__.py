"""Sandboxed execution of generated code into validated raster images."""

from .adapters import ToolAdapter, build_adapter_registry
from .engine import (
    ImageConstraints,
    RenderedImage,
    ValidationFailure,
    decode_pixels,
    load_rendered,
    render_source,
    validate_image,
    validate_image_file,
)
from .sandbox import SandboxPolicy, run_sandboxed

__all__ = [
    "ImageConstraints",
    "RenderedImage",
    "SandboxPolicy",
    "ToolAdapter",
    "ValidationFailure",
    "build_adapter_registry",
    "decode_pixels",
    "load_rendered",
    "render_source",
    "run_sandboxed",
    "validate_image",
    "validate_image_file",
]
