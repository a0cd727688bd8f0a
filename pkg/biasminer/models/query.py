"""
Pydantic Models for the Query API
Request and Response models
"""

from pydantic import BaseModel, Field
from typing import Dict, List, Optional


class QueryRequest(BaseModel):
    """Rule query model"""
    terms: str = Field(..., description="Question words every returned antecedent must contain", min_length=1, max_length=500)
    limit: int = Field(20, description="Maximum rules returned", ge=1, le=1000)

    model_config = {
        "json_schema_extra": {
            "example": {
                "terms": "what sport",
                "limit": 10,
            }
        }
    }


class RuleOut(BaseModel):
    """One rule with rendered items and exact counts"""
    antecedent: List[str]
    consequent: List[str]
    support: int
    confidence: float
    confidence_num: int
    confidence_den: int


class QueryResponse(BaseModel):
    """Ranked rules matching a query"""
    success: bool = True
    terms: str
    total: int
    rules: List[RuleOut]

    model_config = {
        "json_schema_extra": {
            "example": {
                "success": True,
                "terms": "what sport",
                "total": 1,
                "rules": [{
                    "antecedent": ["playing", "sport", "what", "v:12"],
                    "consequent": ["tennis*"],
                    "support": 40,
                    "confidence": 0.625,
                    "confidence_num": 40,
                    "confidence_den": 64,
                }],
            }
        }
    }


class HealthResponse(BaseModel):
    status: str
    rules: int
    transactions: int
    vocabulary: Dict[str, int]
    provenance: Optional[Dict] = None
