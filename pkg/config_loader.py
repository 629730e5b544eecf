"""
Run Configuration Loader.
Reads TOML run files and command-line overrides into a RunConfig.
"""
import re
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Any, Dict, List, Optional

from config import CONFIG_KEYS, RunConfig
from validators import ValidationError

_KEY_LINE = re.compile(r"^\s*([A-Za-z_][A-Za-z0-9_\-]*)\s*=")
_TABLE_LINE = re.compile(r"^\s*\[\s*([A-Za-z_][A-Za-z0-9_\-]*)\s*\]")
_DECODE_LINE = re.compile(r"line (\d+)")

# Keys whose TOML spelling uses dashes
_ALIASES = {key.replace("_", "-"): key for key in CONFIG_KEYS}


class ConfigLoader:
    """Builds RunConfig objects from files and overrides."""

    def __init__(self, config_path: Optional[str] = None):
        """
        Initialize the loader.

        Args:
            config_path: Optional path to a TOML run file.
        """
        self.config_path = Path(config_path) if config_path else None
        self.config = self._load_config()

    def _load_config(self) -> RunConfig:
        """Load the run file, or defaults when none was given."""
        if self.config_path is None:
            return RunConfig()
        try:
            text = self.config_path.read_text(encoding="utf-8")
        except OSError as e:
            raise ValidationError(f"Cannot read config file {self.config_path}: {e}")
        return self.parse_text(text)

    @staticmethod
    def parse_text(text: str) -> RunConfig:
        """
        Parse TOML text into a RunConfig.

        Unknown keys are rejected with the line they appear on.
        """
        try:
            data = tomllib.loads(text)
        except tomllib.TOMLDecodeError as e:
            match = _DECODE_LINE.search(str(e))
            line = int(match.group(1)) if match else None
            raise ValidationError(f"Malformed config: {e}", line=line)

        lines = _key_lines(text)
        values = {}
        for raw_key, value in data.items():
            key = _ALIASES.get(raw_key, raw_key)
            if key not in CONFIG_KEYS:
                raise ValidationError(f"Unknown config key '{raw_key}'", line=lines.get(raw_key))
            values[key] = _normalize(key, value)

        config = RunConfig.from_dict(values)
        # A range in the file replaces the default nu list
        if "nu" not in values and any(k in values for k in ("nu_start", "nu_stop", "nu_step")):
            config.nu = None
        config.source_lines = {_ALIASES.get(k, k): n for k, n in lines.items()}
        return config

    def apply_overrides(self, assignments: List[str]) -> RunConfig:
        """
        Apply ``key=value`` overrides, values parsed with TOML rules.

        Args:
            assignments: strings such as ``"nu=[10, 40]"`` or ``"seed=7"``.

        Returns:
            The updated RunConfig.
        """
        for assignment in assignments:
            if "=" not in assignment:
                raise ValidationError(f"Override must look like key=value, got '{assignment}'")
            raw_key, raw_value = assignment.split("=", 1)
            raw_key = raw_key.strip()
            key = _ALIASES.get(raw_key, raw_key)
            if key not in CONFIG_KEYS:
                raise ValidationError(f"Unknown config key '{raw_key}' in override")
            try:
                value = tomllib.loads(f"v = {raw_value.strip()}")["v"]
            except tomllib.TOMLDecodeError:
                # Bare words such as preset names
                value = raw_value.strip()
            self.set_value(key, value)
        return self.config

    def set_value(self, key: str, value: Any):
        """Set a single key, dropping its file line so errors point at the override."""
        setattr(self.config, key, _normalize(key, value))
        if key in ("nu_start", "nu_stop", "nu_step"):
            self.config.nu = None
        self.config.source_lines.pop(key, None)


def _key_lines(text: str) -> Dict[str, int]:
    """Map each top-level key or table name to its 1-based line number."""
    lines = {}
    in_table = False
    for number, line in enumerate(text.splitlines(), start=1):
        table = _TABLE_LINE.match(line)
        if table:
            in_table = True
            lines.setdefault(table.group(1), number)
            continue
        key = _KEY_LINE.match(line)
        if key and not in_table:
            lines.setdefault(key.group(1), number)
    return lines


def _normalize(key: str, value: Any) -> Any:
    """Coerce TOML values into the shapes RunConfig stores."""
    if key in ("captivity_grid", "trapped_grid", "cloud_center", "fit_window", "snapshot_times"):
        return list(value) if isinstance(value, (list, tuple)) else value
    if key in ("psi1", "psi2") and isinstance(value, dict):
        return {str(mode): v for mode, v in value.items()}
    if key == "nu" and isinstance(value, (int, float)) and not isinstance(value, bool):
        return [value]
    return value
