import os
import yaml
import logging
from pathlib import Path
from typing import Any, Dict, Optional

from pydantic import ValidationError

from app.modules.config_models import RunConfig
from app.modules.errors import ConfigError

PATH_KEYS = (
    "occupations_file",
    "skills_file",
    "gender_file",
    "taxonomy_file",
    "pairs_file",
    "embeddings_file",
    "precomputed_file",
    "out_dir",
)


def read_config_file(path: Path) -> Dict[str, Any]:
    """Flat YAML document; relative paths inside it resolve against the file's directory."""
    try:
        with open(path, 'r', encoding='utf-8') as f:
            raw = yaml.safe_load(f) or {}
    except OSError as e:
        raise ConfigError(f"Cannot read config file {path}: {e}") from e
    except yaml.YAMLError as e:
        raise ConfigError(f"{path}: invalid YAML: {e}") from e
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: expected a flat key/value document")

    base = Path(path).parent
    for key in PATH_KEYS:
        value = raw.get(key)
        if value is not None and not Path(value).is_absolute():
            raw[key] = str(base / value)
    return raw


def load_run_config(path: Optional[Path] = None, overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
    """File values first, then non-None overrides (CLI flags) on top."""
    raw = read_config_file(path) if path is not None else {}
    for key, value in (overrides or {}).items():
        if value is not None:
            raw[key] = value
    try:
        return RunConfig(**raw)
    except ValidationError as e:
        raise ConfigError(f"Invalid configuration: {e}") from e


def setup_logging(config: RunConfig):
    log_dir = Path(config.out_dir) / "logs"
    os.makedirs(log_dir, exist_ok=True)
    logging.basicConfig(
        level=getattr(logging, config.log_level.upper(), logging.INFO),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers=[
            logging.FileHandler(log_dir / 'skills_audit.log', encoding='utf-8'),
            logging.StreamHandler()
        ],
        force=True,
    )
