"""
Configuration Handler for finlab
Run configuration: dataclass defaults, then a JSON config file, then
FINLAB_* environment variables, then command-line flags.
Config file location (unless --config or $FINLAB_CONFIG is given):
- Windows: %APPDATA%/finlab/config.json
- macOS: ~/Library/Application Support/finlab/config.json
- Linux: ~/.config/finlab/config.json
"""

import json
import logging
import os
import sys
import tempfile
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Any, Mapping, Optional

# Module logger
log = logging.getLogger("finlab.config")

DEFAULT_SEED = 20190101

# environment variable -> RunConfig field
ENV_OVERRIDES = {
    "FINLAB_SEED": "seed",
    "FINLAB_THREADS": "threads",
    "FINLAB_BUDGET_SPAN": "span_budget",
    "FINLAB_BUDGET_CANDIDATES": "candidate_budget",
    "FINLAB_BUDGET_TUPLES": "tuple_budget",
    "FINLAB_BUDGET_SCAN": "scan_budget",
    "FINLAB_BUDGET_NODES": "node_budget",
}


def get_platform() -> str:
    """Get current platform: 'windows', 'macos', or 'linux'."""
    if sys.platform.startswith('win') or sys.platform in ('cygwin', 'msys'):
        return 'windows'
    elif sys.platform == 'darwin':
        return 'macos'
    else:
        return 'linux'


PLATFORM = get_platform()


@dataclass
class RunConfig:
    """Run configuration data class."""
    # Root of all randomness: hash colourings, sampled suites
    seed: int = DEFAULT_SEED

    # Caps
    span_budget: int = 10 ** 7
    candidate_budget: int = 10 ** 6
    tuple_budget: int = 10 ** 6
    scan_budget: int = 2 ** 20
    node_budget: int = 10 ** 6

    # Worker threads for search, scan and certificate checks
    threads: int = 1

    # Report destination ("" = stdout)
    output_path: str = ""


class ConfigHandler:
    """
    Resolves the run configuration and saves it back to the config file.
    """

    CONFIG_DIR_NAME = "finlab"
    CONFIG_FILE_NAME = "config.json"
    POSITIVE_KEYS = {
        'span_budget',
        'candidate_budget',
        'tuple_budget',
        'scan_budget',
        'node_budget',
        'threads',
    }

    def __init__(self, config_file: Optional[Path] = None,
                 environ: Optional[Mapping[str, str]] = None):
        environ = os.environ if environ is None else environ
        self._config_dir = self._get_config_dir()
        explicit = config_file or environ.get("FINLAB_CONFIG")
        self._config_file = Path(explicit) if explicit else self._config_dir / self.CONFIG_FILE_NAME
        self._config: RunConfig = RunConfig()

        self.load()
        self.apply_environment(environ)

    def _get_config_dir(self) -> Path:
        """Get platform-specific config directory."""
        if PLATFORM == 'windows':
            appdata = os.environ.get('APPDATA')
            if appdata:
                return Path(appdata) / self.CONFIG_DIR_NAME
            return Path.home() / 'AppData' / 'Roaming' / self.CONFIG_DIR_NAME

        elif PLATFORM == 'macos':
            return Path.home() / 'Library' / 'Application Support' / self.CONFIG_DIR_NAME

        else:
            # Linux: XDG config directory
            xdg_config_home = os.environ.get("XDG_CONFIG_HOME")
            if xdg_config_home:
                base = Path(xdg_config_home)
            else:
                base = Path.home() / ".config"
            return base / self.CONFIG_DIR_NAME

    @property
    def config_dir(self) -> Path:
        """Return the configuration directory path."""
        return self._config_dir

    @property
    def config_file(self) -> Path:
        return self._config_file

    @property
    def config(self) -> RunConfig:
        """Return the current configuration."""
        return self._config

    def _validate_loaded_value(self, key: str, value: Any) -> tuple[bool, Any]:
        """Validate and sanitize a value from the config file, environment or flags."""
        if key == 'seed':
            if isinstance(value, bool) or not isinstance(value, int):
                return False, None
            return (-(2 ** 63) <= value < 2 ** 64), value

        if key in self.POSITIVE_KEYS:
            if isinstance(value, bool) or not isinstance(value, int):
                return False, None
            return value > 0, value

        if key == 'output_path':
            return isinstance(value, str), value

        return False, None

    def load(self) -> bool:
        """
        Load configuration from file.
        Returns True if loaded successfully, False otherwise.
        """
        if not self._config_file.exists():
            return False

        try:
            with open(self._config_file, 'r', encoding='utf-8') as f:
                data = json.load(f)

            if not isinstance(data, dict):
                log.warning("Config file is not a valid JSON object")
                return False

            # Keep defaults for missing keys
            for key, value in data.items():
                if hasattr(self._config, key):
                    valid, sanitized = self._validate_loaded_value(key, value)
                    if not valid:
                        log.warning(f"Ignoring invalid config value for '{key}'")
                        continue
                    setattr(self._config, key, sanitized)

            return True
        except (json.JSONDecodeError, IOError, PermissionError, TypeError) as e:
            log.warning(f"Failed to load config: {e}")
            return False

    def apply_environment(self, environ: Mapping[str, str]) -> list[str]:
        """Apply FINLAB_* overrides; returns the keys that were set."""
        applied = []
        for variable, key in ENV_OVERRIDES.items():
            raw = environ.get(variable)
            if raw is None or raw == "":
                continue
            try:
                value = int(raw.strip())
            except ValueError:
                log.warning(f"Ignoring non-integer {variable}='{raw}'")
                continue
            valid, sanitized = self._validate_loaded_value(key, value)
            if not valid:
                log.warning(f"Ignoring invalid {variable}='{raw}'")
                continue
            setattr(self._config, key, sanitized)
            applied.append(key)
        return applied

    def apply_overrides(self, **values: Any) -> None:
        """Apply command-line values; None means 'not given'. Invalid values raise ValueError."""
        for key, value in values.items():
            if value is None:
                continue
            if not hasattr(self._config, key):
                raise ValueError(f"unknown config key '{key}'")
            valid, sanitized = self._validate_loaded_value(key, value)
            if not valid:
                raise ValueError(f"invalid value {value!r} for '{key}'")
            setattr(self._config, key, sanitized)

    def save(self) -> bool:
        """
        Save configuration to file using atomic write.
        Returns True if saved successfully, False otherwise.
        """
        try:
            self._config_file.parent.mkdir(parents=True, exist_ok=True)
            fd, temp_path = tempfile.mkstemp(
                suffix='.json',
                prefix='config_',
                dir=self._config_file.parent
            )
            try:
                with os.fdopen(fd, 'w', encoding='utf-8') as f:
                    json.dump(asdict(self._config), f, indent=2)

                Path(temp_path).replace(self._config_file)
                return True
            except (IOError, OSError, TypeError, ValueError):
                try:
                    os.unlink(temp_path)
                except OSError:
                    pass
                raise
        except (IOError, PermissionError, OSError) as e:
            log.error(f"Failed to save config: {e}")
            return False

    def get(self, key: str, default: Any = None) -> Any:
        """Get a configuration value by key."""
        return getattr(self._config, key, default)

    def set(self, key: str, value: Any) -> None:
        """Set a configuration value and save."""
        if hasattr(self._config, key):
            setattr(self._config, key, value)
            self.save()

    def describe(self) -> str:
        """key=value lines in field order, as printed by `finlab config`."""
        lines = [f"config_file={self._config_file}"]
        for item in fields(self._config):
            lines.append(f"{item.name}={getattr(self._config, item.name)}")
        return "\n".join(lines) + "\n"
