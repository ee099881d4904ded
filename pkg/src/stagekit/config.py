"""Run configuration: a TOML-like file of [section] key = value entries
mirroring module names, merged with command-line flags (flags win).

Value coercion: true/false -> bool, integer and float literals -> numbers,
single- or double-quoted strings lose their quotes, anything else stays a
string. Comments start with '#'.
"""

from __future__ import annotations

from pathlib import Path
from typing import Any

from .errors import ConfigurationError

DEFAULT_SEED = 42


def _coerce(raw: str) -> Any:
    s = raw.strip()
    low = s.lower()
    if low == "true":
        return True
    if low == "false":
        return False
    try:
        return int(s)
    except ValueError:
        pass
    try:
        return float(s)
    except ValueError:
        pass
    if len(s) >= 2 and s[0] == s[-1] and s[0] in "\"'":
        return s[1:-1]
    return s


def load_config(path: str | Path) -> dict[str, dict[str, Any]]:
    """Parse a config file into {section: {key: value}}."""
    sections: dict[str, dict[str, Any]] = {}
    current = sections.setdefault("", {})
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if stripped.startswith("[") and stripped.endswith("]"):
            current = sections.setdefault(stripped[1:-1].strip(), {})
            continue
        if "=" not in stripped:
            raise ConfigurationError(f"{path}:{lineno}: expected key = value")
        key, _, value = stripped.partition("=")
        current[key.strip()] = _coerce(value)
    return sections


class RunConfig:
    """Merged configuration with flag-over-file precedence."""

    def __init__(self, file_values: dict[str, dict[str, Any]] | None = None):
        self._file = file_values or {}

    @classmethod
    def from_file(cls, path: str | Path | None) -> "RunConfig":
        return cls(load_config(path) if path else {})

    def get(self, section: str, key: str, flag_value: Any = None,
            default: Any = None) -> Any:
        """Flag value (when not None) beats the file value beats the default."""
        if flag_value is not None:
            return flag_value
        if section in self._file and key in self._file[section]:
            return self._file[section][key]
        if key in self._file.get("", {}):
            return self._file[""][key]
        return default

    def seed(self, flag_value: int | None = None) -> int:
        return int(self.get("", "seed", flag_value, DEFAULT_SEED))
