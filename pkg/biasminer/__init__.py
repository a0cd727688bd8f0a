"""
biasminer - mine association rules between question words, attended visual words and answers
"""

__version__ = "1.0.0"
