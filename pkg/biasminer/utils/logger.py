"""
Logging Utility
Configure and manage toolkit logging
"""

import logging
import sys
from pathlib import Path
from typing import Optional, TextIO

from biasminer.core.config import settings


def setup_logger(name: str, level: Optional[str] = None, stream: Optional[TextIO] = None) -> logging.Logger:
    """
    Setup logger with consistent configuration

    Args:
        name: Logger name (usually __name__ or the package name)
        level: Override for settings.LOG_LEVEL
        stream: Console stream (stdout unless given)

    Returns:
        Configured logger instance
    """
    level_name = (level or settings.LOG_LEVEL).upper()
    logger = logging.getLogger(name)
    logger.setLevel(getattr(logging, level_name, logging.INFO))

    # Prevent duplicate handlers; an explicit stream replaces the console handler
    if logger.handlers:
        if stream is not None:
            for handler in list(logger.handlers):
                if type(handler) is logging.StreamHandler:
                    # The old stream may already be closed, so it is never flushed here
                    logger.removeHandler(handler)
                    replacement = logging.StreamHandler(stream)
                    replacement.setLevel(logger.level)
                    replacement.setFormatter(handler.formatter)
                    logger.addHandler(replacement)
        return logger

    # Console handler
    console_handler = logging.StreamHandler(stream or sys.stdout)
    console_handler.setLevel(getattr(logging, level_name, logging.INFO))

    # Formatter
    formatter = logging.Formatter(
        '%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        datefmt='%Y-%m-%d %H:%M:%S'
    )
    console_handler.setFormatter(formatter)

    logger.addHandler(console_handler)

    # File handler (if log file is configured)
    if settings.LOG_FILE:
        log_path = Path(settings.LOG_FILE)
        log_path.parent.mkdir(parents=True, exist_ok=True)

        file_handler = logging.FileHandler(settings.LOG_FILE)
        file_handler.setLevel(logging.INFO)
        file_handler.setFormatter(formatter)
        logger.addHandler(file_handler)

    return logger


def log_stage(logger: logging.Logger, stage: str, seconds: float, **counts: int):
    """
    Log completion of a pipeline stage

    Args:
        logger: Logger instance
        stage: Stage name
        seconds: Wall-clock duration
        counts: Named counts to report
    """
    details = " | ".join(f"{key}: {value}" for key, value in counts.items())
    suffix = f" | {details}" if details else ""
    logger.info(f"Stage {stage} done in {seconds:.2f}s{suffix}")


def log_error(logger: logging.Logger, error: Exception, context: str = ""):
    """
    Log error with context

    Args:
        logger: Logger instance
        error: Exception object
        context: Additional context
    """
    logger.error(f"Error in {context}: {type(error).__name__}: {str(error)}")


def log_skip(logger: logging.Logger, record_id: str, reason: str):
    """Log a record skipped by the pipeline"""
    logger.warning(f"Skipping record {record_id}: {reason}")
