"""
Visual Codebook
k-means over region features and 1-NN codeword assignment
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union
import json
import logging
import struct

import numpy as np
from pydantic import BaseModel, Field
from scipy.spatial.distance import cdist
from sklearn.cluster import kmeans_plusplus

from biasminer.core.config import settings
from biasminer.core.exceptions import (
    DimensionMismatch,
    InsufficientData,
    InvalidRecord,
    MalformedCodebook,
    StorageError,
)
from biasminer.utils.helpers import resolve_workers

logger = logging.getLogger(__name__)

CODEBOOK_MAGIC = b"BMCB"
CODEBOOK_VERSION = 1
_HEADER = struct.Struct("<4sIIII")
_FLAG_NORMALIZE = 1
_ASSIGN_CHUNK = 4096

FeatureLike = Union[np.ndarray, Sequence[Sequence[float]]]


class CodebookConfig(BaseModel):
    """k-means settings"""
    k: int = Field(settings.CODEBOOK_K, ge=1)
    seed: int = settings.SEED
    max_iterations: int = Field(settings.CODEBOOK_MAX_ITERATIONS, ge=1)
    tolerance: float = Field(settings.CODEBOOK_TOLERANCE, ge=0.0)
    normalize: bool = settings.CODEBOOK_NORMALIZE
    workers: int = Field(settings.WORKERS, ge=1)


@dataclass(frozen=True, eq=False)
class Codebook:
    """k centroids of dimension d; read-only once built"""
    centroids: np.ndarray
    normalize: bool = False
    inertia_history: Tuple[float, ...] = field(default=())

    def __post_init__(self):
        centroids = np.array(self.centroids, dtype=np.float64)
        if centroids.ndim != 2 or centroids.shape[0] < 1 or centroids.shape[1] < 1:
            raise DimensionMismatch(f"Centroids must form a non-empty k x d matrix, got {centroids.shape}")
        if not np.all(np.isfinite(centroids)):
            raise MalformedCodebook("Centroids must be finite")
        centroids.setflags(write=False)
        object.__setattr__(self, "centroids", centroids)

    @property
    def k(self) -> int:
        return self.centroids.shape[0]

    @property
    def d(self) -> int:
        return self.centroids.shape[1]

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, Codebook)
            and self.normalize == other.normalize
            and np.array_equal(self.centroids, other.centroids)
        )


# ============================================
# FEATURE HANDLING
# ============================================

def as_feature_matrix(features: FeatureLike, normalize: bool = False) -> np.ndarray:
    """Stack features into an n x d float64 matrix, optionally L2-normalized"""
    try:
        matrix = np.asarray(features, dtype=np.float64)
    except ValueError:
        raise DimensionMismatch("Feature vectors have mixed dimensions")
    if matrix.ndim == 1 and matrix.size == 0:
        return matrix.reshape(0, 0)
    if matrix.ndim != 2:
        raise DimensionMismatch("Feature vectors have mixed dimensions")
    if not np.all(np.isfinite(matrix)):
        raise DimensionMismatch("Feature vectors must be finite")
    if normalize and matrix.size:
        norms = np.linalg.norm(matrix, axis=1, keepdims=True)
        matrix = matrix / np.where(norms > 0, norms, 1.0)
    return matrix


def _nearest(centroids: np.ndarray, matrix: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Index and squared distance of the nearest centroid; argmin keeps the smallest index on ties"""
    distances = cdist(matrix, centroids, metric="sqeuclidean")
    labels = np.argmin(distances, axis=1)
    return labels, distances[np.arange(matrix.shape[0]), labels]


def _nearest_chunked(centroids: np.ndarray, matrix: np.ndarray, workers: int) -> Tuple[np.ndarray, np.ndarray]:
    """Chunked nearest-centroid search; results do not depend on worker count"""
    starts = range(0, matrix.shape[0], _ASSIGN_CHUNK)
    if len(starts) <= 1:
        return _nearest(centroids, matrix)

    def run(start: int) -> Tuple[np.ndarray, np.ndarray]:
        return _nearest(centroids, matrix[start:start + _ASSIGN_CHUNK])

    if workers > 1:
        # chunks are independent and concatenated in input order
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, starts))
    else:
        parts = [run(start) for start in starts]
    return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])


# ============================================
# ASSIGNMENT
# ============================================

def assign_codeword(codebook: Codebook, feature: Sequence[float]) -> int:
    """
    Nearest codeword (1-NN, squared Euclidean) for one feature vector

    Ties go to the smallest centroid index.
    """
    vector = np.asarray(feature, dtype=np.float64)
    if vector.ndim != 1 or vector.shape[0] != codebook.d:
        raise DimensionMismatch(f"Feature has dimension {vector.shape}, codebook expects {codebook.d}")
    if not np.all(np.isfinite(vector)):
        raise DimensionMismatch("Feature vector must be finite")
    if codebook.normalize:
        norm = np.linalg.norm(vector)
        vector = vector / norm if norm > 0 else vector
    distances = ((codebook.centroids - vector) ** 2).sum(axis=1)
    return int(np.argmin(distances))


def assign_codewords(codebook: Codebook, features: FeatureLike, workers: int = 1) -> np.ndarray:
    """Batch version of assign_codeword"""
    matrix = as_feature_matrix(features, normalize=codebook.normalize)
    if matrix.shape[0] == 0:
        return np.zeros(0, dtype=np.int64)
    if matrix.shape[1] != codebook.d:
        raise DimensionMismatch(f"Features have dimension {matrix.shape[1]}, codebook expects {codebook.d}")
    labels, _ = _nearest_chunked(codebook.centroids, matrix, resolve_workers(workers))
    return labels.astype(np.int64)


def inertia(codebook: Codebook, features: FeatureLike) -> float:
    """Sum of squared distances from each feature to its assigned centroid"""
    matrix = as_feature_matrix(features, normalize=codebook.normalize)
    if matrix.shape[0] == 0:
        return 0.0
    if matrix.shape[1] != codebook.d:
        raise DimensionMismatch(f"Features have dimension {matrix.shape[1]}, codebook expects {codebook.d}")
    _, distances = _nearest(codebook.centroids, matrix)
    return float(distances.sum())


# ============================================
# TRAINING
# ============================================

def _update_centroids(matrix: np.ndarray, labels: np.ndarray, centroids: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Recompute centroids as cluster means

    Points are reduced in stable label order, so the sum is independent
    of how the assignment step was split across workers.
    """
    k = centroids.shape[0]
    order = np.argsort(labels, kind="stable")
    sorted_labels = labels[order]
    counts = np.bincount(labels, minlength=k)
    updated = centroids.copy()
    present = np.flatnonzero(counts)
    starts = np.searchsorted(sorted_labels, present)
    sums = np.add.reduceat(matrix[order], starts, axis=0)
    updated[present] = sums / counts[present, None]
    return updated, counts


def _reseed_empty(
    matrix: np.ndarray,
    centroids: np.ndarray,
    counts: np.ndarray,
    distances: np.ndarray,
) -> np.ndarray:
    """Move each empty centroid onto the point farthest from its current centroid"""
    empty = np.flatnonzero(counts == 0)
    if empty.size == 0:
        return centroids
    # stable sort on negated distance: farthest first, lowest index on ties
    far_first = np.argsort(-distances, kind="stable")
    reseeded = centroids.copy()
    for cluster, point in zip(empty, far_first):
        reseeded[cluster] = matrix[point]
        logger.debug(f"Reseeded empty cluster {cluster} with point {point}")
    return reseeded


def _order_by_first_assignment(matrix: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    """Renumber centroids by the first training point assigned to each"""
    labels, _ = _nearest(centroids, matrix)
    first_seen: List[int] = []
    for label in labels:
        if label not in first_seen:
            first_seen.append(int(label))
            if len(first_seen) == centroids.shape[0]:
                break
    rest = [j for j in range(centroids.shape[0]) if j not in first_seen]
    return centroids[first_seen + rest]


def train_codebook(features: FeatureLike, config: Optional[CodebookConfig] = None) -> Codebook:
    """
    Lloyd's k-means with seeded k-means++ initialization

    Stops when the relative inertia improvement drops below tolerance or
    after max_iterations. Deterministic for fixed seed and input order.

    Args:
        features: n x d training vectors
        config: k-means settings

    Returns:
        Trained codebook with its inertia history
    """
    config = config or CodebookConfig()
    matrix = as_feature_matrix(features, normalize=config.normalize)
    if matrix.shape[0] < config.k:
        raise InsufficientData(f"Need at least k={config.k} feature vectors, got {matrix.shape[0]}")

    logger.info(f"🔄 Training codebook: n={matrix.shape[0]}, d={matrix.shape[1]}, k={config.k}, seed={config.seed}")
    workers = resolve_workers(config.workers)

    centroids, _ = kmeans_plusplus(matrix, n_clusters=config.k, random_state=config.seed)
    centroids = np.asarray(centroids, dtype=np.float64)

    history: List[float] = []
    for iteration in range(config.max_iterations):
        labels, distances = _nearest_chunked(centroids, matrix, workers)
        current = float(distances.sum())
        history.append(current)

        if len(history) > 1:
            previous = history[-2]
            improvement = (previous - current) / previous if previous > 0 else 0.0
            if improvement < config.tolerance:
                break
        if current == 0.0:
            break

        centroids, counts = _update_centroids(matrix, labels, centroids)
        if np.any(counts == 0):
            centroids = _reseed_empty(matrix, centroids, counts, distances)

    centroids = _order_by_first_assignment(matrix, centroids)
    logger.info(f"✅ Codebook trained in {len(history)} iterations, inertia {history[-1]:.4f}")
    return Codebook(centroids=centroids, normalize=config.normalize, inertia_history=tuple(history))


# ============================================
# PERSISTENCE
# ============================================

def save_codebook(codebook: Codebook, path: Union[str, Path]):
    """
    Write the codebook file

    Layout (little-endian): b"BMCB", uint32 version, uint32 k, uint32 d,
    uint32 flags (bit 0 = normalize), then k*d float64 row-major.
    """
    flags = _FLAG_NORMALIZE if codebook.normalize else 0
    header = _HEADER.pack(CODEBOOK_MAGIC, CODEBOOK_VERSION, codebook.k, codebook.d, flags)
    body = codebook.centroids.astype("<f8").tobytes(order="C")
    try:
        target = Path(path)
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_bytes(header + body)
    except OSError as e:
        raise StorageError(f"Cannot write codebook {path}: {e}")
    logger.info(f"💾 Saved codebook k={codebook.k}, d={codebook.d} -> {path}")


def load_codebook(path: Union[str, Path]) -> Codebook:
    """Read a codebook written by save_codebook"""
    try:
        data = Path(path).read_bytes()
    except OSError as e:
        raise StorageError(f"Cannot read codebook {path}: {e}")

    if len(data) < _HEADER.size:
        raise MalformedCodebook("Codebook file is shorter than its header")
    magic, version, k, d, flags = _HEADER.unpack_from(data)
    if magic != CODEBOOK_MAGIC:
        raise MalformedCodebook("Not a codebook file (bad magic)")
    if version != CODEBOOK_VERSION:
        raise MalformedCodebook(f"Unsupported codebook version {version}")
    if k < 1 or d < 1:
        raise MalformedCodebook(f"Invalid codebook shape k={k}, d={d}")

    expected = _HEADER.size + k * d * 8
    if len(data) != expected:
        raise MalformedCodebook(f"Codebook body has {len(data) - _HEADER.size} bytes, expected {k * d * 8}")

    centroids = np.frombuffer(data, dtype="<f8", offset=_HEADER.size).reshape(k, d)
    return Codebook(centroids=centroids.astype(np.float64), normalize=bool(flags & _FLAG_NORMALIZE))


# ============================================
# FEATURE FILES
# ============================================

def read_features(path: Union[str, Path]) -> Tuple[List[str], np.ndarray]:
    """
    Read a JSON-lines feature file of {"id": str, "feature": [float, ...]}

    Returns:
        (ids, n x d matrix)
    """
    ids: List[str] = []
    rows: List[List[float]] = []
    try:
        handle = open(path, "rb")
    except OSError as e:
        raise StorageError(f"Cannot read feature file {path}: {e}")

    with handle:
        for line_no, raw in enumerate(handle, 1):
            if not raw.strip():
                continue
            try:
                payload = json.loads(raw.decode("utf-8"))
                ids.append(str(payload["id"]))
                rows.append([float(x) for x in payload["feature"]])
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
                raise InvalidRecord(f"Malformed feature line {line_no} in {path}: {e}")

    if not rows:
        return ids, np.zeros((0, 0), dtype=np.float64)
    return ids, as_feature_matrix(rows)


def write_features(path: Union[str, Path], ids: Sequence[str], features: FeatureLike):
    matrix = as_feature_matrix(features)
    try:
        target = Path(path)
        target.parent.mkdir(parents=True, exist_ok=True)
        with open(target, "w", encoding="utf-8") as handle:
            for feature_id, row in zip(ids, matrix):
                handle.write(json.dumps({"id": feature_id, "feature": row.tolist()}) + "\n")
    except OSError as e:
        raise StorageError(f"Cannot write feature file {path}: {e}")
