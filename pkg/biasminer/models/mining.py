"""
Mining Models
Support thresholds, frequent itemsets and association rules
"""

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Tuple
import math
import re

from pydantic import BaseModel, Field, model_validator

from biasminer.core.config import settings
from biasminer.core.exceptions import InvalidThreshold


class SupportThreshold(BaseModel):
    """Absolute count or relative fraction, resolved against a database"""
    count: Optional[int] = None
    fraction: Optional[float] = None

    @model_validator(mode="after")
    def exactly_one(self) -> "SupportThreshold":
        if (self.count is None) == (self.fraction is None):
            raise InvalidThreshold("Give exactly one of count or fraction")
        if self.count is not None and self.count < 1:
            raise InvalidThreshold(f"Support count must be >= 1, got {self.count}")
        if self.fraction is not None and not 0.0 < self.fraction <= 1.0:
            raise InvalidThreshold(f"Support fraction must be in (0, 1], got {self.fraction}")
        return self

    @classmethod
    def absolute(cls, count: int) -> "SupportThreshold":
        return cls(count=count)

    @classmethod
    def relative(cls, fraction: float) -> "SupportThreshold":
        return cls(fraction=fraction)

    @classmethod
    def parse(cls, text: str) -> "SupportThreshold":
        """
        Parse "30" (count), "2.5%" (percent) or "0.05" (fraction)
        """
        text = str(text).strip()
        try:
            if text.endswith("%"):
                return cls(fraction=float(text[:-1]) / 100.0)
            if re.fullmatch(r"[+]?\d+", text):
                return cls(count=int(text))
            return cls(fraction=float(text))
        except ValueError:
            raise InvalidThreshold(f"Cannot parse support threshold {text!r}")

    def resolve(self, transaction_count: int) -> int:
        """Absolute count; relative values round up exactly"""
        if self.count is not None:
            resolved = self.count
        else:
            exact = Fraction(str(self.fraction)) * transaction_count
            resolved = math.ceil(exact)
        if resolved < 1:
            raise InvalidThreshold(
                f"Support threshold {self.describe()} resolves to {resolved} on {transaction_count} transactions"
            )
        return resolved

    def describe(self) -> str:
        return str(self.count) if self.count is not None else f"{self.fraction * 100:g}%"


def default_support() -> SupportThreshold:
    return SupportThreshold.parse(settings.MINER_SUPPORT)


@dataclass(frozen=True)
class Itemset:
    """Sorted item ids and the number of transactions containing them"""
    items: Tuple[int, ...]
    support: int

    @property
    def size(self) -> int:
        return len(self.items)

    def sort_key(self) -> Tuple[int, Tuple[int, ...]]:
        return (len(self.items), self.items)


class RuleConfig(BaseModel):
    """Rule thresholds, applied together"""
    min_confidence: float = Field(settings.RULE_MIN_CONFIDENCE, gt=0.0, le=1.0)
    min_support: SupportThreshold = Field(default_factory=default_support)
    max_consequent_size: int = Field(settings.RULE_MAX_CONSEQUENT, ge=1)

    @property
    def confidence_fraction(self) -> Fraction:
        """Threshold as an exact decimal fraction (0.2 -> 1/5)"""
        return Fraction(str(self.min_confidence))


@dataclass(frozen=True)
class AssociationRule:
    """
    antecedent -> consequent with exact counts

    confidence = support / antecedent_support
    """
    antecedent: Tuple[int, ...]
    consequent: Tuple[int, ...]
    support: int
    antecedent_support: int

    def __post_init__(self):
        if not self.antecedent or not self.consequent:
            raise ValueError("Rule sides must be non-empty")
        if set(self.antecedent) & set(self.consequent):
            raise ValueError("Rule sides must be disjoint")

    @property
    def confidence_exact(self) -> Fraction:
        return Fraction(self.support, self.antecedent_support)

    @property
    def confidence(self) -> float:
        return self.support / self.antecedent_support

    @property
    def key(self) -> Tuple[Tuple[int, ...], Tuple[int, ...]]:
        return (self.antecedent, self.consequent)

    @property
    def itemset(self) -> Tuple[int, ...]:
        return tuple(sorted(self.antecedent + self.consequent))
