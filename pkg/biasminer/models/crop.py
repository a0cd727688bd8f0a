"""
Attention Crop Models
"""

from dataclasses import dataclass
from typing import Tuple

from pydantic import BaseModel, Field

from biasminer.core.config import settings


class CropConfig(BaseModel):
    """Fraction of total attention mass a crop must hold"""
    tau: float = Field(settings.CROP_TAU, gt=0.0, le=1.0)


@dataclass(frozen=True, order=True)
class BoundingBox:
    """Inclusive grid box; ordering is (top, left, bottom, right)"""
    top: int
    left: int
    bottom: int
    right: int

    @property
    def height(self) -> int:
        return self.bottom - self.top + 1

    @property
    def width(self) -> int:
        return self.right - self.left + 1

    @property
    def area(self) -> int:
        return self.height * self.width

    def as_tuple(self) -> Tuple[int, int, int, int]:
        return (self.top, self.left, self.bottom, self.right)

    def contains(self, other: "BoundingBox") -> bool:
        return (
            self.top <= other.top and self.left <= other.left
            and self.bottom >= other.bottom and self.right >= other.right
        )
