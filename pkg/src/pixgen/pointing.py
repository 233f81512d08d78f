"""Pointing annotation synthesis from marker-colored render diffs.

The pipeline asks the LLM to edit working code so it additionally draws
dots of a predefined color, re-renders, and recovers the dot centers from
the pixels. Everything here is the pixel side: marker color choice,
connected-component extraction, and coordinate normalization. The shipped
record keeps the original (marker-free) image; the edited render exists
only to be measured.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    CoordinateRangeError,
    EmptyOutputError,
    MarkerCollisionError,
    SizeMismatchError,
    ZeroMarkersFoundError,
)
from .gateway.client import LlmGateway
from .gateway.parsers import extract_code_block
from .gateway.templates import PromptTemplate, render_template

DEFAULT_MARKER_COLOR = (255, 0, 255)
FALLBACK_MARKER_COLORS = ((0, 255, 255), (255, 128, 0))

NORMALIZED_RANGE = 100.0
COORD_DECIMALS = 2


@dataclass(frozen=True)
class MarkerSpec:
    """What counts as a marker pixel.

    A pixel matches when its Euclidean RGB distance to the marker color is
    at most match_tolerance (boundary inclusive); components smaller than
    min_component_area are anti-aliasing specks, not markers.
    """

    color: tuple[int, int, int] = DEFAULT_MARKER_COLOR
    match_tolerance: float = 30.0
    min_component_area: int = 4

    def __post_init__(self):
        if self.match_tolerance < 0:
            raise ValueError("match_tolerance must be >= 0")
        if any(not (0 <= c <= 255) for c in self.color):
            raise ValueError("marker color channels must be in 0..255")


@dataclass(frozen=True)
class PointAnnotation:
    """A pointing question with its answer coordinates.

    points are normalized to [0, 100] in both axes and rounded to 2
    decimals; pixel_points keep the raw continuous centroids against the
    same image size for debugging and re-derivation.
    """

    question: str
    points: tuple[tuple[float, float], ...]
    pixel_points: tuple[tuple[float, float], ...]
    image_size: tuple[int, int]


def _marker_mask(pixels: np.ndarray, marker: MarkerSpec) -> np.ndarray:
    diff = pixels.astype(np.float64) - np.asarray(marker.color, dtype=np.float64)
    return (diff * diff).sum(axis=2) <= marker.match_tolerance**2


def check_marker_absence(pixels: np.ndarray, marker: MarkerSpec) -> bool:
    """True when the image is free of marker-matching pixels."""
    return not bool(_marker_mask(pixels, marker).any())


def choose_marker(
    pixels: np.ndarray,
    tolerance: float = 30.0,
    min_component_area: int = 4,
) -> MarkerSpec:
    """Pick the first candidate color not already present in the image."""
    candidates = (DEFAULT_MARKER_COLOR, *FALLBACK_MARKER_COLORS)
    for color in candidates:
        marker = MarkerSpec(
            color=color,
            match_tolerance=tolerance,
            min_component_area=min_component_area,
        )
        if check_marker_absence(pixels, marker):
            return marker
    raise MarkerCollisionError(
        f"all candidate marker colors {candidates} occur in the original image"
    )


def _label_components(coords: np.ndarray, shape: tuple[int, int]) -> list[np.ndarray]:
    """Group matched pixel coordinates into 8-connected components.

    Union-find over just the matched pixels: marker dots cover a tiny
    fraction of the image, so this stays linear in matches instead of in
    image area.
    """
    index_of = {(int(r), int(c)): i for i, (r, c) in enumerate(coords)}
    parent = list(range(len(coords)))

    def find(i: int) -> int:
        root = i
        while parent[root] != root:
            root = parent[root]
        while parent[i] != root:
            parent[i], i = root, parent[i]
        return root

    def union(i: int, j: int) -> None:
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[rj] = ri

    # Half the 8-neighborhood suffices: the other half is covered when the
    # neighbor itself scans.
    for i, (r, c) in enumerate(coords):
        for dr, dc in ((-1, -1), (-1, 0), (-1, 1), (0, -1)):
            j = index_of.get((int(r) + dr, int(c) + dc))
            if j is not None:
                union(i, j)

    groups: dict[int, list[int]] = {}
    for i in range(len(coords)):
        groups.setdefault(find(i), []).append(i)
    return [coords[members] for members in groups.values()]


def extract_points(
    pixels: np.ndarray, marker: MarkerSpec
) -> list[tuple[float, float]]:
    """Continuous (x, y) centroids of marker components, sorted by (y, x).

    A centroid is the mean of the member pixels' integer coordinates.
    Raises ZeroMarkersFoundError when no component reaches the minimum
    area (a handful of matching pixels from anti-aliasing does not count).
    """
    mask = _marker_mask(pixels, marker)
    coords = np.argwhere(mask)
    if coords.size == 0:
        raise ZeroMarkersFoundError("no pixels match the marker color")
    centroids = []
    for component in _label_components(coords, mask.shape):
        if len(component) < marker.min_component_area:
            continue
        mean_row = float(component[:, 0].mean())
        mean_col = float(component[:, 1].mean())
        centroids.append((mean_col, mean_row))
    if not centroids:
        raise ZeroMarkersFoundError(
            "marker-colored pixels present but every component is below "
            f"{marker.min_component_area} px"
        )
    centroids.sort(key=lambda point: (point[1], point[0]))
    return centroids


def normalize_coords(
    px: float, py: float, width: int, height: int
) -> tuple[float, float]:
    """Map pixel coordinates onto the [0, 100] square.

    Inputs must already lie inside the image; clamping exists only to soak
    up float rounding at the very edges, never to hide bad inputs.
    """
    if width < 1 or height < 1:
        raise CoordinateRangeError(f"bad image size {width}x{height}")
    if not (0 <= px <= width) or not (0 <= py <= height):
        raise CoordinateRangeError(
            f"pixel point ({px}, {py}) outside {width}x{height} image"
        )
    x = min(max(NORMALIZED_RANGE * px / width, 0.0), NORMALIZED_RANGE)
    y = min(max(NORMALIZED_RANGE * py / height, 0.0), NORMALIZED_RANGE)
    return x, y


def build_point_annotation(
    question: str,
    edited_pixels: np.ndarray,
    original_size: tuple[int, int],
    marker: MarkerSpec,
) -> PointAnnotation:
    """Extract and normalize marker points of an edited render.

    The edited render must match the original's size exactly, otherwise
    coordinates measured on one do not transfer onto the other.
    """
    height, width = edited_pixels.shape[:2]
    if (width, height) != tuple(original_size):
        raise SizeMismatchError(
            f"edited render is {width}x{height}, original is "
            f"{original_size[0]}x{original_size[1]}"
        )
    pixel_points = extract_points(edited_pixels, marker)
    normalized = tuple(
        tuple(
            round(v, COORD_DECIMALS)
            for v in normalize_coords(px, py, width, height)
        )
        for px, py in pixel_points
    )
    return PointAnnotation(
        question=question,
        points=normalized,
        pixel_points=tuple(pixel_points),
        image_size=(width, height),
    )


def generate_point_edit(
    gateway: LlmGateway,
    template: PromptTemplate,
    *,
    code: str,
    fence_tag: str,
    marker: MarkerSpec,
    sampling_seed: int,
) -> tuple[str, str, str, bool]:
    """Run the point-edit stage: ask for a question plus edited source.

    The response format is a question line followed by a fenced block with
    the complete edited source. Returns (question, edited source, rendered
    prompt, cache-hit flag). The marker color is bound through the DATA
    placeholder: the placeholder vocabulary is fixed and DATA is unused by
    this stage otherwise.
    """
    color_text = f"rgb({marker.color[0]}, {marker.color[1]}, {marker.color[2]})"
    prompt = render_template(template, {"CODE": code, "DATA": color_text})
    response = gateway.complete("point-edit", prompt, sampling_seed)
    edited, _warning = extract_code_block(response.text, fence_tag)
    question = _leading_question(response.text)
    return question, edited, prompt, response.cached


def _leading_question(response_text: str) -> str:
    """First non-empty line before the code fence."""
    head = response_text.split("```", 1)[0]
    for line in head.splitlines():
        line = line.strip()
        if line:
            return line
    raise EmptyOutputError("point-edit response has no question line")
