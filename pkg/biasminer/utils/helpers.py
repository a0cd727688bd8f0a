"""
Helper Functions
General utility functions used across the toolkit
"""

from typing import Any, Dict, Iterator, List, Optional, TypeVar
from pathlib import Path
from contextlib import contextmanager
import hashlib
import json
import time

from biasminer.core.exceptions import DataError, StorageError

T = TypeVar("T")


def hash_bytes(data: bytes) -> str:
    """SHA-256 hex digest of data"""
    return hashlib.sha256(data).hexdigest()


def dict_to_json(data: Dict[str, Any], pretty: bool = False) -> str:
    """
    Convert dictionary to JSON string with stable key order

    Args:
        data: Dictionary to convert
        pretty: Whether to format JSON prettily

    Returns:
        JSON string
    """
    if pretty:
        return json.dumps(data, indent=2, ensure_ascii=False, sort_keys=True)
    return json.dumps(data, ensure_ascii=False, sort_keys=True, separators=(",", ":"))


def chunks(lst: List[T], n: int) -> Iterator[List[T]]:
    """
    Yield successive n-sized chunks from list

    Args:
        lst: List to chunk
        n: Chunk size

    Yields:
        Chunks of size n

    Example:
        for chunk in chunks([1,2,3,4,5], 2):
            print(chunk)  # [1,2], [3,4], [5]
    """
    for i in range(0, len(lst), n):
        yield lst[i:i + n]


def read_text(path: str) -> str:
    """Read a UTF-8 file, raising StorageError on I/O failure and DataError on bad bytes"""
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise StorageError(f"Cannot read {path}: {e}")
    except UnicodeDecodeError as e:
        raise DataError(f"{path} is not UTF-8: {e}")


def write_text(path: str, content: str):
    """Write a UTF-8 file, creating parent directories"""
    try:
        target = Path(path)
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(content, encoding="utf-8")
    except OSError as e:
        raise StorageError(f"Cannot write {path}: {e}")


@contextmanager
def stage_timer(timings: Dict[str, float], stage: str):
    """
    Record wall-clock time of a block into timings[stage]

    Example:
        with stage_timer(timings, "mine"):
            ...
    """
    start = time.perf_counter()
    try:
        yield
    finally:
        timings[stage] = round(time.perf_counter() - start, 4)


def resolve_workers(workers: Optional[int]) -> int:
    """Worker counts below 1 fall back to a single worker"""
    return max(1, int(workers or 1))
