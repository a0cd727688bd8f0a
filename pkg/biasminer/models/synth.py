"""
Pydantic Models for Synthetic Datasets
Planted biases with known ground truth
"""

from fractions import Fraction
from typing import List, Literal, Optional, Tuple

from pydantic import BaseModel, Field, model_validator

from biasminer.core.exceptions import InvalidSpec


class PlantedBias(BaseModel):
    """A question template (plus optional visual word) that tends to get one answer"""
    question_template: List[str] = Field(..., min_length=1)
    visual_word: Optional[int] = Field(None, ge=0)
    answer: str = Field(..., min_length=1)
    fire_rate: float = Field(1.0, gt=0.0, le=1.0)
    weight: float = Field(1.0, gt=0.0)


class SynthSpec(BaseModel):
    """Everything needed to generate a dataset deterministically"""

    biases: List[PlantedBias]
    noise_vocab: List[str] = Field(default_factory=list)
    noise_answers: List[str] = Field(default_factory=list)
    record_count: int = Field(..., ge=1)
    seed: int = 0
    attention_mode: Literal["delta", "blob", "uniform"] = "delta"
    feature_dim: int = Field(8, ge=1)
    centroid_layout: float = Field(10.0, gt=0.0, description="Centroid separation in units of sigma")
    sigma: float = Field(1.0, gt=0.0)
    grid_size: int = Field(7, ge=1)
    codebook_size: int = Field(8, ge=1)
    noise_weight: float = Field(0.0, ge=0.0)
    overlap: bool = False
    question_length: Tuple[int, int] = (2, 5)

    model_config = {
        "json_schema_extra": {
            "example": {
                "biases": [{"question_template": ["what", "color", "grass"], "visual_word": 0,
                            "answer": "green", "fire_rate": 1.0, "weight": 1.0}],
                "record_count": 100,
                "seed": 7,
            }
        }
    }

    @model_validator(mode="after")
    def feasible(self) -> "SynthSpec":
        if not self.biases:
            raise InvalidSpec("At least one planted bias is required")
        if self.codebook_size > self.feature_dim:
            raise InvalidSpec(
                f"codebook_size {self.codebook_size} exceeds feature_dim {self.feature_dim}: "
                "centroids are laid out on separate axes"
            )
        for bias in self.biases:
            if bias.visual_word is not None and bias.visual_word >= self.codebook_size:
                raise InvalidSpec(f"Planted visual word {bias.visual_word} is outside codebook_size {self.codebook_size}")
            if bias.fire_rate < 1.0 and not self.noise_answers:
                raise InvalidSpec("fire_rate below 1 needs noise_answers for the misses")
        if self.noise_weight > 0 and (not self.noise_vocab or not self.noise_answers):
            raise InvalidSpec("Distractor records need noise_vocab and noise_answers")
        low, high = self.question_length
        if low < 1 or high < low:
            raise InvalidSpec(f"Invalid question_length range {self.question_length}")
        if self.attention_mode == "blob" and self.grid_size < 3:
            raise InvalidSpec("Blob attention needs grid_size >= 3")
        return self


class GroundTruthRule(BaseModel):
    """Realised counts of one planted bias in the generated records"""
    antecedent: List[str]
    consequent: str
    support: int
    antecedent_count: int
    language_support: int
    language_antecedent_count: int

    @property
    def confidence(self) -> Fraction:
        return Fraction(self.support, self.antecedent_count) if self.antecedent_count else Fraction(0)

    @property
    def language_confidence(self) -> Fraction:
        if not self.language_antecedent_count:
            return Fraction(0)
        return Fraction(self.language_support, self.language_antecedent_count)
