"""Utility helper functions."""

import hashlib
import json
import logging
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Optional

from rich.console import Console
from rich.logging import RichHandler

from invasionrisk.utils.exceptions import ConfigurationError

console = Console()

MONTH_NAMES = (
    "Jan", "Feb", "Mar", "Apr", "May", "Jun",
    "Jul", "Aug", "Sep", "Oct", "Nov", "Dec",
)  # fmt: skip


def setup_logging(
    verbose: bool = False, log_file: Optional[str] = None
) -> logging.Logger:
    """Set up logging configuration."""
    level = logging.DEBUG if verbose else logging.INFO

    logger = logging.getLogger("invasionrisk")
    logger.setLevel(level)
    logger.handlers.clear()

    console_handler = RichHandler(
        console=console, show_time=True, show_path=verbose, markup=False
    )
    console_handler.setLevel(level)
    console_handler.setFormatter(logging.Formatter("%(message)s"))
    logger.addHandler(console_handler)

    if log_file:
        file_handler = logging.FileHandler(log_file)
        file_handler.setLevel(logging.DEBUG)
        file_handler.setFormatter(
            logging.Formatter("%(asctime)s - %(name)s - %(levelname)s - %(message)s")
        )
        logger.addHandler(file_handler)

    return logger


def load_config_file(config_path: str) -> Dict[str, Any]:
    """Load configuration from JSON file."""
    try:
        with open(config_path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except FileNotFoundError:
        raise ConfigurationError("Configuration file not found", source=config_path)
    except json.JSONDecodeError as e:
        raise ConfigurationError(
            f"Invalid JSON in configuration file: {e.msg}",
            source=config_path,
            line=e.lineno,
        )

    if not isinstance(data, dict):
        raise ConfigurationError("Configuration root must be an object", config_path)
    return data


def save_json_file(data: Dict[str, Any], path: Path) -> Path:
    """Write a JSON document with stable key order and a trailing newline."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(data, f, indent=2, sort_keys=True, default=str)
        f.write("\n")
    return path


def file_sha256(path: Path) -> str:
    """Hex SHA-256 of a file's content."""
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def params_hash(params: Dict[str, Any], length: int = 12) -> str:
    """Short stable hash of a parameter mapping."""
    payload = json.dumps(params, sort_keys=True, default=str).encode("utf-8")
    return hashlib.sha256(payload).hexdigest()[:length]


def month_index_of(timestamp: float) -> int:
    """Month index year*12 + (month-1) of a UTC epoch timestamp."""
    dt = datetime.fromtimestamp(timestamp, tz=timezone.utc)
    return dt.year * 12 + (dt.month - 1)


def format_month(month_index: int) -> str:
    """Human-readable month label, e.g. 2024-Apr."""
    year, month = divmod(int(month_index), 12)
    return f"{year}-{MONTH_NAMES[month]}"


def format_timestamp(timestamp: float) -> str:
    """ISO-8601 UTC rendering of an epoch timestamp."""
    return (
        datetime.fromtimestamp(timestamp, tz=timezone.utc)
        .strftime("%Y-%m-%dT%H:%M:%SZ")
    )
