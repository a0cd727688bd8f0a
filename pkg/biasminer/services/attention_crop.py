"""
Attention Cropping
Smallest box on an attention grid holding at least tau of the total mass
"""

from functools import lru_cache
from typing import Dict, Iterator, List, Optional, Sequence, Tuple, Union
import logging

import numpy as np

from biasminer.core.exceptions import DimensionMismatch, InvalidDimension, ZeroMass
from biasminer.models.crop import BoundingBox, CropConfig

logger = logging.getLogger(__name__)

GridLike = Union[np.ndarray, Sequence[Sequence[float]]]


def as_attention_map(values: GridLike) -> np.ndarray:
    """Validate and convert an attention grid to a float64 array"""
    grid = np.asarray(values, dtype=np.float64)
    if grid.ndim != 2 or grid.shape[0] < 1 or grid.shape[1] < 1:
        raise InvalidDimension(f"Attention map must be a non-empty m x n grid, got shape {grid.shape}")
    if not np.all(np.isfinite(grid)) or np.any(grid < 0):
        raise InvalidDimension("Attention map entries must be finite and non-negative")
    return grid


def num_bboxes(m: int, n: int) -> int:
    """
    Number of distinct boxes on an m x n grid: m*n*(m+1)*(n+1)/4

    Example:
        num_bboxes(14, 14) -> 11025
    """
    if m < 1 or n < 1:
        raise InvalidDimension(f"Grid dimensions must be positive, got {m} x {n}")
    return m * n * (m + 1) * (n + 1) // 4


# ============================================
# SUMMED-AREA TABLE
# ============================================

def integral_image(values: GridLike) -> np.ndarray:
    """
    Summed-area table padded with a zero row and column

    table[i, j] is the sum of grid[:i, :j], so the table has shape (m+1, n+1).
    """
    grid = as_attention_map(values)
    table = np.zeros((grid.shape[0] + 1, grid.shape[1] + 1), dtype=np.float64)
    table[1:, 1:] = grid.cumsum(axis=0).cumsum(axis=1)
    return table


def box_sum(table: np.ndarray, box: BoundingBox) -> float:
    """Mass inside an inclusive box, O(1) from the summed-area table"""
    t, l, b, r = box.top, box.left, box.bottom + 1, box.right + 1
    return float(table[b, r] - table[t, r] - table[b, l] + table[t, l])


# ============================================
# BOX ENUMERATION
# ============================================

@lru_cache(maxsize=64)
def _shapes_by_area(m: int, n: int) -> Tuple[Tuple[int, Tuple[Tuple[int, int], ...]], ...]:
    """(area, ((height, width), ...)) pairs in ascending area"""
    groups: Dict[int, List[Tuple[int, int]]] = {}
    for height in range(1, m + 1):
        for width in range(1, n + 1):
            groups.setdefault(height * width, []).append((height, width))
    return tuple((area, tuple(groups[area])) for area in sorted(groups))


def enumerate_boxes(m: int, n: int) -> Iterator[BoundingBox]:
    """Every box on the grid once, ordered by (area, top, left, bottom, right)"""
    num_bboxes(m, n)
    for _, shapes in _shapes_by_area(m, n):
        boxes = [
            BoundingBox(top, left, top + height - 1, left + width - 1)
            for height, width in shapes
            for top in range(m - height + 1)
            for left in range(n - width + 1)
        ]
        yield from sorted(boxes)


def min_enclosing_box(values: GridLike, config: Optional[CropConfig] = None) -> BoundingBox:
    """
    Smallest-area box B with sum(B) >= tau * sum(grid)

    Ties between equal-area boxes go to the lexicographically smallest
    (top, left, bottom, right). The comparison is exact on computed sums.

    Args:
        values: m x n non-negative attention grid
        config: Crop settings (tau)

    Returns:
        The selected bounding box
    """
    config = config or CropConfig()
    table = integral_image(values)
    m, n = table.shape[0] - 1, table.shape[1] - 1

    total = table[m, n]
    if total <= 0:
        raise ZeroMass("Attention map has zero total mass")
    required = config.tau * total

    for _, shapes in _shapes_by_area(m, n):
        best: Optional[Tuple[int, int, int, int]] = None
        for height, width in shapes:
            # window sums for every top-left corner with this shape
            sums = (
                table[height:, width:]
                - table[:m - height + 1, width:]
                - table[height:, :n - width + 1]
                + table[:m - height + 1, :n - width + 1]
            )
            hits = np.argwhere(sums >= required)
            if hits.size == 0:
                continue
            # argwhere is row-major, so the first hit has the smallest (top, left)
            top, left = int(hits[0, 0]), int(hits[0, 1])
            candidate = (top, left, top + height - 1, left + width - 1)
            if best is None or candidate < best:
                best = candidate
        if best is not None:
            return BoundingBox(*best)

    # unreachable for tau <= 1: the full grid always qualifies
    return BoundingBox(0, 0, m - 1, n - 1)


def region_feature(cell_features: Union[np.ndarray, Sequence], box: BoundingBox) -> np.ndarray:
    """
    Mean of per-cell feature vectors inside a box

    Args:
        cell_features: m x n x d array
        box: Region to pool

    Returns:
        d-dimensional feature vector
    """
    cells = np.asarray(cell_features, dtype=np.float64)
    if cells.ndim != 3:
        raise DimensionMismatch(f"cell_features must be m x n x d, got shape {cells.shape}")
    if box.bottom >= cells.shape[0] or box.right >= cells.shape[1]:
        raise DimensionMismatch("Box lies outside the cell feature grid")
    region = cells[box.top:box.bottom + 1, box.left:box.right + 1]
    return region.reshape(-1, cells.shape[2]).mean(axis=0)
