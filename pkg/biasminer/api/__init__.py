"""
API Module
Contains all API endpoints
"""

from . import rules

__all__ = ["rules"]
