"""
Configuration Management
Load settings from environment variables using Pydantic
"""

from pydantic_settings import BaseSettings, SettingsConfigDict
from typing import Any, Dict, Optional
from pathlib import Path
import json

from biasminer.core.exceptions import ConfigError


class Settings(BaseSettings):
    """Toolkit settings from environment variables"""

    # Application
    APP_NAME: str = "biasminer"
    APP_VERSION: str = "1.0.0"
    DEBUG: bool = False

    # Query service
    HOST: str = "0.0.0.0"
    PORT: int = 8000
    RULES_PATH: str = "./data/rules.jsonl"
    DB_PATH: str = "./data/transactions.db"

    # Attention cropping
    CROP_TAU: float = 0.3

    # Visual codebook
    CODEBOOK_K: int = 1250
    CODEBOOK_MAX_ITERATIONS: int = 100
    CODEBOOK_TOLERANCE: float = 1e-4
    CODEBOOK_NORMALIZE: bool = False

    # Mining - "30" is only a starting point, support depends on database size
    MINER_SUPPORT: str = "30"
    RULE_MIN_CONFIDENCE: float = 0.2
    RULE_MAX_CONSEQUENT: int = 1
    ORACLE_MAX_ITEMS: int = 20

    # Tokenizer
    TOKENIZER_STOPWORDS: bool = False

    # Execution
    SEED: int = 0
    WORKERS: int = 1

    # Logging
    LOG_LEVEL: str = "INFO"
    LOG_FILE: str = ""

    model_config = SettingsConfigDict(env_file=".env", case_sensitive=True, extra="ignore")


def load_config_file(path: Optional[str]) -> Dict[str, Any]:
    """
    Load a JSON config file used to override settings defaults

    Args:
        path: Path to a JSON object file, or None

    Returns:
        Mapping of option name to value (empty when no path given)
    """
    if not path:
        return {}

    config_path = Path(path)
    try:
        data = json.loads(config_path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"Config file not found: {path}")
    except OSError as e:
        raise ConfigError(f"Cannot read config file {path}: {e}")
    except UnicodeDecodeError as e:
        raise ConfigError(f"Config file is not UTF-8: {path} ({e})")
    except json.JSONDecodeError as e:
        raise ConfigError(f"Config file is not valid JSON: {path} ({e})")

    if not isinstance(data, dict):
        raise ConfigError(f"Config file must contain a JSON object: {path}")

    # Accept both "support" and "--support" spellings
    return {key.lstrip("-").replace("-", "_"): value for key, value in data.items()}


# Create settings instance
settings = Settings()
