"""
Tests for k-means training, codeword assignment and the codebook file
"""

import numpy as np
import pytest

from biasminer.core.exceptions import DimensionMismatch, InsufficientData, InvalidRecord, MalformedCodebook
from biasminer.services.codebook import (
    Codebook,
    CodebookConfig,
    assign_codeword,
    assign_codewords,
    inertia,
    load_codebook,
    read_features,
    save_codebook,
    train_codebook,
    write_features,
)


def _linear_scan(centroids: np.ndarray, feature: np.ndarray) -> int:
    best, best_distance = 0, None
    for index, centroid in enumerate(centroids):
        distance = float(((centroid - feature) ** 2).sum())
        if best_distance is None or distance < best_distance:
            best, best_distance = index, distance
    return best


# ============================================
# TRAINING
# ============================================

def test_two_pure_clusters():
    codebook = train_codebook([[0.0], [0.0], [10.0], [10.0]], CodebookConfig(k=2, seed=0))
    assert codebook.centroids.tolist() == [[0.0], [10.0]]


def test_centroids_ordered_by_first_assignment():
    codebook = train_codebook([[10.0], [0.0], [10.0], [0.0]], CodebookConfig(k=2, seed=3))
    assert codebook.centroids.tolist() == [[10.0], [0.0]]


def test_k_equals_n_gives_zero_inertia(rng):
    points = rng.normal(size=(6, 3))
    codebook = train_codebook(points, CodebookConfig(k=6, seed=1))
    assert inertia(codebook, points) == pytest.approx(0.0, abs=1e-12)
    assert sorted(map(tuple, codebook.centroids.tolist())) == sorted(map(tuple, points.tolist()))


def test_recovers_planted_blobs(rng):
    centers = np.array([[0.0, 0.0], [10.0, 0.0], [0.0, 10.0]])
    labels = np.repeat(np.arange(3), 50)
    points = centers[labels] + rng.normal(scale=0.1, size=(150, 2))
    codebook = train_codebook(points, CodebookConfig(k=3, seed=0))
    assigned = assign_codewords(codebook, points)
    # same partition, whatever the numbering
    for planted in range(3):
        assert len(set(assigned[labels == planted].tolist())) == 1
    assert len(set(assigned.tolist())) == 3


def test_training_is_deterministic(rng):
    points = rng.normal(size=(200, 4))
    config = CodebookConfig(k=5, seed=42)
    assert train_codebook(points, config) == train_codebook(points, config)
    parallel = train_codebook(points, CodebookConfig(k=5, seed=42, workers=4))
    assert np.array_equal(parallel.centroids, train_codebook(points, config).centroids)


def test_inertia_never_increases(rng):
    for run in range(50):
        points = rng.normal(size=(int(rng.integers(20, 80)), 3))
        k = int(rng.integers(1, 8))
        history = train_codebook(points, CodebookConfig(k=k, seed=run, tolerance=0.0, max_iterations=30)).inertia_history
        assert len(history) >= 1
        for previous, current in zip(history, history[1:]):
            assert current <= previous * (1 + 1e-12) + 1e-12


def test_too_few_points():
    with pytest.raises(InsufficientData):
        train_codebook([[1.0], [2.0]], CodebookConfig(k=3))


def test_mixed_dimensions():
    with pytest.raises(DimensionMismatch):
        train_codebook([[1.0, 2.0], [3.0]], CodebookConfig(k=1))


def test_normalized_codebook_assigns_by_direction():
    codebook = train_codebook([[1.0, 0.0], [5.0, 0.0], [0.0, 2.0], [0.0, 9.0]], CodebookConfig(k=2, seed=0, normalize=True))
    assert codebook.normalize
    assert assign_codeword(codebook, [100.0, 1.0]) == assign_codeword(codebook, [3.0, 0.0])


# ============================================
# ASSIGNMENT
# ============================================

def test_assign_exact_centroid(rng):
    centroids = rng.normal(size=(10, 4))
    codebook = Codebook(centroids)
    assert assign_codeword(codebook, centroids[7]) == 7


def test_tie_goes_to_smallest_index():
    centroids = np.zeros((6, 1))
    centroids[:, 0] = [50.0, 40.0, -1.0, 30.0, 20.0, 1.0]
    assert assign_codeword(Codebook(centroids), [0.0]) == 2


def test_engineered_ties(rng):
    for _ in range(200):
        k, d = int(rng.integers(2, 8)), int(rng.integers(1, 5))
        centroids = rng.integers(-3, 4, size=(k, d)).astype(float)
        feature = rng.integers(-3, 4, size=d).astype(float)
        assert assign_codeword(Codebook(centroids), feature) == _linear_scan(centroids, feature)


def test_matches_linear_scan(rng):
    for _ in range(10000):
        k, d = int(rng.integers(1, 12)), int(rng.integers(1, 6))
        centroids = rng.normal(size=(k, d))
        feature = rng.normal(size=d)
        assert assign_codeword(Codebook(centroids), feature) == _linear_scan(centroids, feature)


def test_batch_assignment_matches_single(rng):
    codebook = Codebook(rng.normal(size=(16, 5)))
    features = rng.normal(size=(9000, 5))
    labels = assign_codewords(codebook, features, workers=3)
    assert np.array_equal(labels, assign_codewords(codebook, features, workers=1))
    sample = rng.choice(9000, size=200, replace=False)
    assert [assign_codeword(codebook, features[i]) for i in sample] == labels[sample].tolist()


def test_assign_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        assign_codeword(Codebook(np.zeros((2, 3))), [1.0, 2.0])


def test_inertia_examples():
    codebook = Codebook(np.array([[0.0, 0.0], [10.0, 10.0]]))
    assert inertia(codebook, [[0.0, 0.0], [10.0, 10.0]]) == 0.0
    assert inertia(codebook, [[3.0, 0.0]]) == 9.0


def test_inertia_matches_direct_sum(rng):
    codebook = Codebook(rng.normal(size=(5, 3)))
    features = rng.normal(size=(100, 3))
    direct = sum(((codebook.centroids - f) ** 2).sum(axis=1).min() for f in features)
    assert inertia(codebook, features) == pytest.approx(direct, rel=1e-9)


# ============================================
# FILES
# ============================================

def test_codebook_file_round_trip(tmp_path, rng):
    codebook = Codebook(rng.normal(size=(4, 3)), normalize=True)
    path = tmp_path / "codebook.bin"
    save_codebook(codebook, path)
    data = path.read_bytes()
    assert data[:4] == b"BMCB"
    assert len(data) == 20 + 4 * 3 * 8
    assert load_codebook(path) == codebook


def test_truncated_codebook(tmp_path, rng):
    path = tmp_path / "codebook.bin"
    save_codebook(Codebook(rng.normal(size=(2, 2))), path)
    path.write_bytes(path.read_bytes()[:-3])
    with pytest.raises(MalformedCodebook):
        load_codebook(path)
    path.write_bytes(b"XXXX" + bytes(16))
    with pytest.raises(MalformedCodebook):
        load_codebook(path)


def test_feature_file_round_trip(tmp_path):
    path = tmp_path / "features.jsonl"
    write_features(path, ["a", "b"], [[1.0, 2.0], [3.5, -1.0]])
    ids, matrix = read_features(path)
    assert ids == ["a", "b"]
    assert matrix.tolist() == [[1.0, 2.0], [3.5, -1.0]]


def test_feature_file_with_bad_bytes(tmp_path):
    path = tmp_path / "features.jsonl"
    path.write_bytes(b'{"id": "a", "feature": [1.0]}\n{"id": "\xff", "feature": [2.0]}\n')
    with pytest.raises(InvalidRecord):
        read_features(path)
