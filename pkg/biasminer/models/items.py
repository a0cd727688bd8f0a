"""
Item Models
Tri-modal items and transactions
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Tuple

from biasminer.core.exceptions import InvalidRecord


VISUAL_PREFIX = "v:"
ANSWER_MARKER = "*"


class Modality(str, Enum):
    """Namespace an item belongs to"""
    QUESTION_WORD = "question"
    VISUAL_WORD = "visual"
    ANSWER_WORD = "answer"


@dataclass(frozen=True, order=True)
class Item:
    """A token tagged with its modality"""
    token: str
    modality: Modality

    def __post_init__(self):
        if not self.token:
            raise InvalidRecord("Item token must be non-empty")
        if self.modality is Modality.VISUAL_WORD:
            if not self.token.startswith(VISUAL_PREFIX) or not self.token[len(VISUAL_PREFIX):].isdigit():
                raise InvalidRecord(f"Visual word token must look like 'v:<index>': {self.token!r}")
        elif self.token != self.token.lower():
            raise InvalidRecord(f"Token must be lowercase: {self.token!r}")

    @classmethod
    def question(cls, token: str) -> "Item":
        return cls(token, Modality.QUESTION_WORD)

    @classmethod
    def answer(cls, token: str) -> "Item":
        return cls(token, Modality.ANSWER_WORD)

    @classmethod
    def visual(cls, codeword: int) -> "Item":
        if codeword < 0:
            raise InvalidRecord(f"Codeword index must be non-negative: {codeword}")
        return cls(f"{VISUAL_PREFIX}{codeword}", Modality.VISUAL_WORD)

    @property
    def codeword(self) -> Optional[int]:
        """Codeword index for visual words, None otherwise"""
        if self.modality is Modality.VISUAL_WORD:
            return int(self.token[len(VISUAL_PREFIX):])
        return None

    def render(self) -> str:
        """Human-readable form: answers carry a trailing '*'"""
        if self.modality is Modality.ANSWER_WORD:
            return f"{self.token}{ANSWER_MARKER}"
        return self.token


def render_item(item: Item) -> str:
    return item.render()


def parse_item(text: str) -> Item:
    """
    Invert Item.render

    Question tokens never contain punctuation, so a trailing '*' always
    marks an answer and a 'v:<n>' form always marks a visual word.
    """
    if text.endswith(ANSWER_MARKER) and len(text) > 1:
        return Item.answer(text[:-1])
    if text.startswith(VISUAL_PREFIX) and text[len(VISUAL_PREFIX):].isdigit():
        return Item.visual(int(text[len(VISUAL_PREFIX):]))
    return Item.question(text)


@dataclass(frozen=True)
class Transaction:
    """Sorted, duplicate-free item ids of one question/region/answer triplet"""
    items: Tuple[int, ...]
    source_id: str = field(default="")

    def __post_init__(self):
        if any(b <= a for a, b in zip(self.items, self.items[1:])):
            raise InvalidRecord(f"Transaction ids must be strictly increasing: {self.source_id}")

    def __len__(self) -> int:
        return len(self.items)

    def __contains__(self, item_id: object) -> bool:
        return item_id in self.items
