"""
Pydantic Models for Ingestion
One record per question/attention/answer triplet
"""

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from typing import List, Optional
import math


class TokenizerConfig(BaseModel):
    """Question tokenizer settings"""
    stopwords: bool = Field(False, description="Drop common English stopwords")
    min_length: int = Field(1, ge=1, description="Minimum token length kept")


class IngestRecord(BaseModel):
    """A model response to audit: question, attended region and answer"""

    model_config = ConfigDict(
        extra="forbid",
        json_schema_extra={
            "example": {
                "record_id": "q-000017",
                "question": "What color is the grass?",
                "answer": "green",
                "attention": [[0.0, 0.1], [0.7, 0.2]],
                "codeword": None,
            }
        },
    )

    record_id: str = Field(..., min_length=1)
    question: str
    answer: str
    attention: Optional[List[List[float]]] = None
    feature: Optional[List[float]] = None
    cell_features: Optional[List[List[List[float]]]] = None
    codeword: Optional[int] = Field(None, ge=0)

    @field_validator("record_id")
    @classmethod
    def record_id_single_line(cls, value: str) -> str:
        if "\t" in value or "\n" in value or "\r" in value:
            raise ValueError("record_id must not contain tabs or newlines")
        return value

    @field_validator("attention")
    @classmethod
    def attention_is_grid(cls, value: Optional[List[List[float]]]) -> Optional[List[List[float]]]:
        if value is None:
            return value
        if not value or not value[0]:
            raise ValueError("attention must be a non-empty m x n grid")
        width = len(value[0])
        for row in value:
            if len(row) != width:
                raise ValueError("attention rows must have equal length")
            for cell in row:
                if not math.isfinite(cell) or cell < 0:
                    raise ValueError("attention entries must be finite and non-negative")
        return value

    @field_validator("feature")
    @classmethod
    def feature_is_finite(cls, value: Optional[List[float]]) -> Optional[List[float]]:
        if value is None:
            return value
        if not value:
            raise ValueError("feature must be non-empty")
        if not all(math.isfinite(x) for x in value):
            raise ValueError("feature entries must be finite")
        return value

    @model_validator(mode="after")
    def one_visual_pathway(self) -> "IngestRecord":
        pathways = [p for p in (self.feature, self.cell_features, self.codeword) if p is not None]
        if len(pathways) > 1:
            raise ValueError("at most one of feature, cell_features, codeword may be given")

        if self.cell_features is not None:
            if self.attention is None:
                raise ValueError("cell_features requires an attention grid")
            rows, cols = len(self.attention), len(self.attention[0])
            if len(self.cell_features) != rows or any(len(row) != cols for row in self.cell_features):
                raise ValueError("cell_features must match the attention grid shape")
            dims = {len(vector) for row in self.cell_features for vector in row}
            if len(dims) != 1 or 0 in dims:
                raise ValueError("cell_features vectors must share one non-zero dimension")
            if not all(math.isfinite(x) for row in self.cell_features for vector in row for x in vector):
                raise ValueError("cell_features entries must be finite")
        return self


class RecordFailure(BaseModel):
    """An ingest line that could not be parsed or validated"""
    line: int
    record_id: Optional[str] = None
    reason: str
