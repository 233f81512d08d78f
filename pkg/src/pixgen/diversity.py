"""Dataset diversity scoring: mean pairwise cosine distance over features.

The score for a set of feature vectors v_1..v_n is

    (1 / (n^2 - n)) * sum_{i != j} (1 - cos(v_i, v_j))

i.e. the average cosine distance over ordered pairs, which by symmetry
equals the average over unordered pairs. Identical vectors score 0; a pair
of orthogonal vectors scores 1; opposed vectors push toward 2.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol, Sequence, runtime_checkable

import numpy as np

from .errors import (
    DimensionMismatchError,
    TooFewRecordsError,
    TooFewVectorsError,
    ZeroNormVectorError,
)

MOCK_EMBEDDING_DIM = 32


def _as_matrix(vectors: Sequence[Sequence[float]] | np.ndarray) -> np.ndarray:
    if isinstance(vectors, np.ndarray):
        if vectors.ndim != 2:
            raise DimensionMismatchError(
                f"expected a 2-d vector array, got {vectors.ndim}-d"
            )
        return vectors.astype(np.float64)
    rows = [np.asarray(v, dtype=np.float64) for v in vectors]
    if not rows:
        return np.zeros((0, 0))
    for row in rows:
        if row.ndim != 1:
            raise DimensionMismatchError("vectors must be 1-d")
        if row.shape != rows[0].shape:
            raise DimensionMismatchError("vectors differ in length")
    return np.stack(rows)


def mean_pairwise_cosine_distance(
    vectors: Sequence[Sequence[float]] | np.ndarray,
) -> float:
    """Average 1 - cos(v_i, v_j) over all ordered pairs i != j.

    Computed through the Gram matrix of the normalized rows: the full
    ordered-pair sum is n^2 - n minus (sum of the Gram matrix less its
    trace), which keeps the arithmetic O(n^2 d) with one matmul and a
    fixed summation order.
    """
    matrix = _as_matrix(vectors)
    n = matrix.shape[0]
    if n < 2:
        raise TooFewVectorsError(f"need at least 2 vectors, got {n}")
    norms = np.linalg.norm(matrix, axis=1)
    if np.any(norms == 0.0):
        bad = int(np.argmin(norms))
        raise ZeroNormVectorError(f"vector {bad} has zero norm")
    unit = matrix / norms[:, None]
    gram = unit @ unit.T
    off_diagonal_sim = float(gram.sum()) - float(np.trace(gram))
    pairs = n * n - n
    return (pairs - off_diagonal_sim) / pairs


@runtime_checkable
class Embedder(Protocol):
    """Feature provider for diversity scoring."""

    def embed_texts(self, texts: list[str]) -> list[list[float]]:
        ...

    def embed_images(self, paths: list[Path]) -> list[list[float]]:
        ...


class MockEmbedder:
    """Deterministic content-hash embedder for hermetic runs.

    Identical inputs map to identical vectors (so duplicates score 0) and
    any content change moves the vector pseudo-randomly. Useless as a
    semantic encoder, exactly right for exercising the metric plumbing.
    """

    def __init__(self, dim: int = MOCK_EMBEDDING_DIM):
        self.dim = dim

    def _vector(self, material: bytes) -> list[float]:
        values: list[float] = []
        counter = 0
        while len(values) < self.dim:
            digest = hashlib.sha256(material + b":" + str(counter).encode()).digest()
            values.extend(b / 255.0 * 2.0 - 1.0 for b in digest)
            counter += 1
        vector = values[: self.dim]
        if not any(vector):
            vector[0] = 1.0
        return vector

    def embed_texts(self, texts: list[str]) -> list[list[float]]:
        return [self._vector(b"text:" + t.encode("utf-8")) for t in texts]

    def embed_images(self, paths: list[Path]) -> list[list[float]]:
        return [self._vector(b"image:" + Path(p).read_bytes()) for p in paths]


@dataclass(frozen=True)
class DiversityReport:
    """Image and text diversity of a shard sample."""

    image_diversity: float
    text_diversity: float
    n: int
    sample_seed: int

    def to_dict(self) -> dict:
        return {
            "image_diversity": self.image_diversity,
            "text_diversity": self.text_diversity,
            "n": self.n,
            "sample_seed": self.sample_seed,
        }


def record_text(record: dict) -> str:
    """Text material of a record: its question-answer pairs, concatenated."""
    parts = [f"{qa['question']} {qa['answer']}" for qa in record.get("qa", [])]
    parts.extend(p["question"] for p in record.get("points", []) or [])
    return "\n".join(parts)


def compute_report(
    records: list[dict],
    images_root: Path,
    embedder: Embedder,
    sample_size: int = 10000,
    seed: int = 0,
) -> DiversityReport:
    """Score a uniform sample of a shard's records.

    Sampling is without replacement, deterministic in the seed; scores are
    computed on the sampled records' images and on their concatenated
    question-answer text.
    """
    if len(records) < 2:
        raise TooFewRecordsError(
            f"diversity needs at least 2 records, shard has {len(records)}"
        )
    k = min(sample_size, len(records))
    rng = random.Random(seed)
    indices = sorted(rng.sample(range(len(records)), k))
    sample = [records[i] for i in indices]
    image_paths = [Path(images_root) / r["image_path"] for r in sample]
    texts = [record_text(r) for r in sample]
    image_vectors = embedder.embed_images(image_paths)
    text_vectors = embedder.embed_texts(texts)
    return DiversityReport(
        image_diversity=mean_pairwise_cosine_distance(image_vectors),
        text_diversity=mean_pairwise_cosine_distance(text_vectors),
        n=k,
        sample_seed=seed,
    )
