"""
Pydantic Models for Pipeline Runs
"""

from typing import Dict, Optional

from pydantic import BaseModel, Field, field_validator

from biasminer.core.config import settings
from biasminer.models.mining import SupportThreshold


class PipelineConfig(BaseModel):
    """Paths and thresholds for an end-to-end run"""

    # Paths
    input: Optional[str] = Field(None, description="JSON-lines ingest file")
    codebook: Optional[str] = Field(None, description="Codebook file, trained and written here when missing")
    db: Optional[str] = Field(None, description="Where to persist the transaction database")
    out: Optional[str] = Field(None, description="Where to write the structured rule dump")

    # Thresholds
    tau: float = Field(settings.CROP_TAU, gt=0.0, le=1.0)
    k: int = Field(settings.CODEBOOK_K, ge=1)
    seed: int = settings.SEED
    support: str = settings.MINER_SUPPORT
    confidence: float = Field(settings.RULE_MIN_CONFIDENCE, gt=0.0, le=1.0)
    max_consequent: int = Field(settings.RULE_MAX_CONSEQUENT, ge=1)

    # Behaviour
    stopwords: bool = settings.TOKENIZER_STOPWORDS
    normalize: bool = settings.CODEBOOK_NORMALIZE
    language_only: bool = False
    workers: int = Field(settings.WORKERS, ge=1)

    @field_validator("support")
    @classmethod
    def support_parses(cls, value: str) -> str:
        SupportThreshold.parse(value)
        return value

    @property
    def support_threshold(self) -> SupportThreshold:
        return SupportThreshold.parse(self.support)


class PipelineSummary(BaseModel):
    """Counts and stage timings of one run"""
    input_records: int = 0
    processed_records: int = 0
    skipped_records: int = 0
    skip_reasons: Dict[str, int] = Field(default_factory=dict)
    vocabulary: Dict[str, int] = Field(default_factory=dict)
    transactions: int = 0
    support_threshold: Optional[int] = None
    frequent_itemsets: int = 0
    rules_generated: int = 0
    rules_causal: int = 0
    rules_without_visual: int = 0
    language_only: bool = False
    db_fingerprint: Optional[str] = None
    stage_seconds: Dict[str, float] = Field(default_factory=dict)
