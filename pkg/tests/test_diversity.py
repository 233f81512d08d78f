"""Diversity scores against the naive oracle and closed-form cases."""

from __future__ import annotations

import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pixgen.errors import (
    DimensionMismatchError,
    TooFewRecordsError,
    TooFewVectorsError,
    ZeroNormVectorError,
)
from pixgen.diversity import (
    MockEmbedder,
    compute_report,
    mean_pairwise_cosine_distance,
    record_text,
)

from .oracles import naive_mean_pairwise_cosine_distance


def test_identical_vectors_score_zero():
    vectors = [[1.0, 2.0, 3.0]] * 5
    assert mean_pairwise_cosine_distance(vectors) == pytest.approx(0.0, abs=1e-12)


def test_orthogonal_pair_scores_one():
    assert mean_pairwise_cosine_distance([[1.0, 0.0], [0.0, 1.0]]) == pytest.approx(
        1.0, abs=1e-12
    )


def test_opposite_pair_scores_two():
    assert mean_pairwise_cosine_distance([[1.0, 0.0], [-1.0, 0.0]]) == pytest.approx(
        2.0, abs=1e-12
    )


def test_mutually_orthogonal_set_scores_one():
    vectors = np.eye(16) * 3.7
    assert mean_pairwise_cosine_distance(vectors) == pytest.approx(1.0, abs=1e-12)


def test_matches_oracle_on_random_sets():
    rng = random.Random(3)
    for _ in range(25):
        n = rng.randrange(2, 40)
        dim = rng.randrange(2, 24)
        vectors = [
            [rng.gauss(0.0, 1.0) for _ in range(dim)] for _ in range(n)
        ]
        vectors = [v if any(abs(x) > 1e-9 for x in v) else [1.0] * dim for v in vectors]
        ours = mean_pairwise_cosine_distance(vectors)
        oracle = naive_mean_pairwise_cosine_distance(vectors)
        assert ours == pytest.approx(oracle, abs=1e-12)


def test_rejects_degenerate_inputs():
    with pytest.raises(TooFewVectorsError):
        mean_pairwise_cosine_distance([[1.0, 0.0]])
    with pytest.raises(ZeroNormVectorError):
        mean_pairwise_cosine_distance([[1.0, 0.0], [0.0, 0.0]])
    with pytest.raises(DimensionMismatchError):
        mean_pairwise_cosine_distance([[1.0, 0.0], [1.0, 0.0, 0.0]])


@given(
    st.lists(
        st.lists(
            st.floats(min_value=-100, max_value=100, allow_nan=False),
            min_size=4,
            max_size=4,
        ).filter(lambda v: sum(abs(x) for x in v) > 1e-6),
        min_size=2,
        max_size=24,
    )
)
@settings(max_examples=150, deadline=None)
def test_score_in_range_and_permutation_invariant(vectors):
    score = mean_pairwise_cosine_distance(vectors)
    assert -1e-12 <= score <= 2.0 + 1e-12
    shuffled = list(vectors)
    random.Random(0).shuffle(shuffled)
    assert mean_pairwise_cosine_distance(shuffled) == pytest.approx(score, abs=1e-9)


def test_duplicating_the_whole_set_preserves_score():
    # Doubling every vector's multiplicity scales ordered-pair sums so the
    # mean is unchanged; duplicating a single vector can legitimately move
    # the score in either direction, so only this restricted form holds.
    rng = random.Random(9)
    vectors = [[rng.gauss(0, 1) for _ in range(6)] for _ in range(8)]
    single = mean_pairwise_cosine_distance(vectors)
    doubled = mean_pairwise_cosine_distance(vectors + vectors)
    n, m = 8, 16
    # Doubling adds n zero-distance self-pairs per vector; correct for them.
    expected = single * (n * n - n) * 4 / (m * m - m)
    assert doubled == pytest.approx(expected, abs=1e-12)


def test_mock_embedder_is_deterministic_and_distinguishing():
    embedder = MockEmbedder()
    a1, a2 = embedder.embed_texts(["alpha", "alpha"])
    b = embedder.embed_texts(["beta"])[0]
    assert a1 == a2
    assert a1 != b
    assert len(a1) == len(b)


def _records(tmp_path, texts_and_pixels):
    from PIL import Image

    records = []
    images_dir = tmp_path / "images"
    images_dir.mkdir(exist_ok=True)
    for i, (answer, shade) in enumerate(texts_and_pixels):
        name = f"images/r{i}.png"
        pixels = np.full((32, 32, 3), shade, dtype=np.uint8)
        Image.fromarray(pixels).save(tmp_path / name)
        records.append(
            {
                "id": f"r{i}",
                "image_path": name,
                "qa": [{"question": "what?", "explanation": "e", "answer": answer}],
                "points": [],
            }
        )
    return records


def test_degenerate_shard_scores_zero(tmp_path):
    records = _records(tmp_path, [("same", 100), ("same", 100)])
    report = compute_report(records, tmp_path, MockEmbedder(), seed=0)
    assert report.image_diversity == pytest.approx(0.0, abs=1e-12)
    assert report.text_diversity == pytest.approx(0.0, abs=1e-12)
    assert report.n == 2


def test_report_is_deterministic(tmp_path):
    records = _records(
        tmp_path, [("a", 10), ("b", 60), ("c", 110), ("d", 160), ("e", 210)]
    )
    first = compute_report(records, tmp_path, MockEmbedder(), sample_size=3, seed=5)
    second = compute_report(records, tmp_path, MockEmbedder(), sample_size=3, seed=5)
    assert first.to_dict() == second.to_dict()
    assert first.n == 3


def test_report_rejects_tiny_shards(tmp_path):
    records = _records(tmp_path, [("solo", 42)])
    with pytest.raises(TooFewRecordsError):
        compute_report(records, tmp_path, MockEmbedder())


def test_record_text_covers_qa_and_pointing():
    qa_record = {
        "qa": [{"question": "q1", "explanation": "e", "answer": "a1"}],
        "points": [],
    }
    point_record = {"qa": [], "points": [{"question": "where is it"}]}
    assert "q1" in record_text(qa_record) and "a1" in record_text(qa_record)
    assert "where is it" in record_text(point_record)
