"""
Exception Hierarchy
Every error carries the process exit code the CLI reports for it
"""


class BiasMinerError(Exception):
    """Base class for all toolkit errors"""

    exit_code = 3
    error_code = "BIASMINER_ERROR"

    def __init__(self, message: str = ""):
        super().__init__(message or self.__class__.__name__)
        self.message = message or self.__class__.__name__


# ============================================
# CONFIGURATION ERRORS (exit 1)
# ============================================

class ConfigError(BiasMinerError):
    """Invalid option, threshold or config file"""
    exit_code = 1
    error_code = "CONFIG_ERROR"


class InvalidThreshold(ConfigError):
    error_code = "INVALID_THRESHOLD"


class InvalidFormat(ConfigError):
    error_code = "INVALID_FORMAT"


class InvalidSpec(ConfigError):
    error_code = "INVALID_SPEC"


class OracleTooLarge(ConfigError):
    error_code = "ORACLE_TOO_LARGE"


# ============================================
# STORAGE ERRORS (exit 2)
# ============================================

class StorageError(BiasMinerError):
    """File could not be read or written"""
    exit_code = 2
    error_code = "STORAGE_ERROR"


# ============================================
# DATA ERRORS (exit 3)
# ============================================

class DataError(BiasMinerError):
    """Input data violates a documented contract"""
    exit_code = 3
    error_code = "DATA_ERROR"


class FrozenVocabulary(DataError):
    error_code = "FROZEN_VOCABULARY"


class InvalidRecord(DataError):
    error_code = "INVALID_RECORD"


class MalformedDatabase(DataError):
    error_code = "MALFORMED_DATABASE"


class MalformedCodebook(DataError):
    error_code = "MALFORMED_CODEBOOK"


class MalformedRules(DataError):
    error_code = "MALFORMED_RULES"


class InvalidDimension(DataError):
    error_code = "INVALID_DIMENSION"


class ZeroMass(DataError):
    error_code = "ZERO_MASS"


class InsufficientData(DataError):
    error_code = "INSUFFICIENT_DATA"


class DimensionMismatch(DataError):
    error_code = "DIMENSION_MISMATCH"


class UnknownItem(DataError):
    error_code = "UNKNOWN_ITEM"


class IncompleteLattice(DataError):
    error_code = "INCOMPLETE_LATTICE"
