"""
Text Processing Utilities
Helper functions for question tokenization and answer normalization
"""

import re
import string
from typing import List


# Stripped before splitting; no stemming is applied
_PUNCTUATION_TABLE = str.maketrans("", "", string.punctuation)

STOPWORDS = frozenset({
    'a', 'an', 'and', 'are', 'as', 'at', 'be', 'by', 'do', 'does', 'for',
    'from', 'in', 'into', 'is', 'it', 'of', 'on', 'or', 'that', 'the', 'this',
    'to', 'was', 'were', 'with',
})


def normalize_text(text: str) -> str:
    """
    Normalize text: lowercase, remove extra spaces, trim

    Args:
        text: Input text

    Returns:
        Normalized text
    """
    # Convert to lowercase
    text = text.lower()

    # Remove extra whitespace
    text = re.sub(r'\s+', ' ', text)

    # Trim
    text = text.strip()

    return text


def normalize_answer(answer: str) -> str:
    """
    Normalize an answer string into its answer class

    Multiword answers ("hot dog") stay a single class.
    """
    return normalize_text(answer)


def tokenize(text: str, stopwords: bool = False, min_length: int = 1) -> List[str]:
    """
    Split a question into lowercase tokens

    Args:
        text: Question text
        stopwords: Drop tokens found in STOPWORDS
        min_length: Minimum token length kept

    Returns:
        Tokens in question order, duplicates preserved

    Example:
        tokenize("What sport is he playing?") -> ["what", "sport", "is", "he", "playing"]
    """
    # ASCII punctuation is deleted, so "dog's" -> "dogs"
    cleaned = text.lower().translate(_PUNCTUATION_TABLE)
    tokens = [token for token in cleaned.split() if len(token) >= min_length]

    if stopwords:
        tokens = [token for token in tokens if token not in STOPWORDS]

    return tokens
