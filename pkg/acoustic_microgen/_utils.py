import logging
import os
import re
from pathlib import Path
from typing import Optional

import numpy as np

from acoustic_microgen.exceptions import DomainError

LOG_LEVEL_ENV_VAR = "MICROGEN_LOG_LEVEL"
DATA_PATH = Path(__file__).parent / "data"

_SECTION_PATTERN = re.compile(r"^\s*\[\s*([A-Za-z0-9_.-]+)\s*\]")
_KEY_PATTERN = re.compile(r"^\s*([A-Za-z0-9_-]+)\s*=")


def require_finite(**values: float):
    """
    Raise :class:`~acoustic_microgen.exceptions.DomainError` naming the
    first argument that is NaN or infinite.
    """
    for name, value in values.items():
        if not np.all(np.isfinite(value)):
            raise DomainError(f"'{name}' must be finite (got {value}).")


def require_positive(**values: float):
    for name, value in values.items():
        require_finite(**{name: value})
        if value <= 0:
            raise DomainError(f"'{name}' must be positive (got {value}).")


def find_line(text: str, section: Optional[str] = None, key: Optional[str] = None) -> Optional[int]:
    """
    The 1-based line of ``key`` inside ``[section]`` of a TOML document,
    or of the section header itself when ``key`` is not given.
    """
    current = None
    for number, line in enumerate(text.splitlines(), start=1):
        if match := _SECTION_PATTERN.match(line):
            current = match.group(1)
            if key is None and current == section:
                return number

        elif key is not None and current == section:
            if (match := _KEY_PATTERN.match(line)) and match.group(1) == key:
                return number

    return None


def get_log_level(default: int = logging.WARNING) -> int:
    if not (level := os.getenv(LOG_LEVEL_ENV_VAR)):
        return default

    value = logging.getLevelName(level.upper())
    return value if isinstance(value, int) else default
